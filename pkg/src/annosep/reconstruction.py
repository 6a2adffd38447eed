"""From power-spectrogram estimates back to time-domain source signals.

Estimates are turned into per-source ratio masks (a Wiener filter in the
power domain), applied to the complex mixture STFT, and inverted; the
mixture phase is reused as-is. Also provides the two reference points the
solvers are measured against: the lazy uniform split and the oracle built
from the true source spectrograms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .annotation import AnnotationSet, TargetValues
from .errors import InputError
from .lownuc import SourceEstimates, lazy_point
from .spectral import ComplexSpectrogram, MixtureSpectrogram, istft

__all__ = [
    "WienerMasks",
    "wiener_masks",
    "synthesize_sources",
    "lazy_estimates",
    "oracle_estimates",
]


@dataclass
class WienerMasks:
    """G masks in [0, 1] that sum to 1 at every bin."""

    masks: list[np.ndarray]

    @property
    def num_sources(self) -> int:
        return len(self.masks)

    @property
    def shape(self) -> tuple[int, int]:
        return self.masks[0].shape


def wiener_masks(est: SourceEstimates) -> WienerMasks:
    """Ratio masks ``est_g / sum_h est_h``.

    Bins where every estimate is zero get the uniform mask 1/G, keeping
    the partition of unity exact. Negative inputs are rejected; project
    estimates before masking.
    """
    for m in est.matrices:
        if np.any(m < 0):
            raise InputError("estimates must be nonnegative; project them first")
    total = est.total()
    num = est.num_sources
    masks = []
    degenerate = total <= 0.0
    safe_total = np.where(degenerate, 1.0, total)
    for m in est.matrices:
        masks.append(np.where(degenerate, 1.0 / num, m / safe_total))
    return WienerMasks(masks)


def synthesize_sources(
    masks: WienerMasks, mixture_stft: ComplexSpectrogram
) -> list[np.ndarray]:
    """Apply each mask to the complex mixture STFT and invert.

    Because the masks sum to one, the returned signals sum to the
    inverse transform of the mixture.
    """
    if masks.shape != mixture_stft.shape:
        raise InputError(
            f"mask shape {masks.shape} does not match spectrogram "
            f"{mixture_stft.shape}"
        )
    signals = []
    for mask in masks.masks:
        masked = ComplexSpectrogram(
            mask * mixture_stft.coeffs,
            mixture_stft.params,
            mixture_stft.original_length,
        )
        signals.append(istft(masked))
    return signals


def lazy_estimates(
    mixture: MixtureSpectrogram,
    ann: AnnotationSet,
    targets: TargetValues,
    num_sources: int,
) -> SourceEstimates:
    """Uninformative baseline: mixture/G projected onto the constraints."""
    return lazy_point(mixture, ann, targets, num_sources)


def oracle_estimates(true_specs: list[MixtureSpectrogram]) -> SourceEstimates:
    """Upper-bound reference: the true source power spectrograms themselves."""
    if not true_specs:
        raise InputError("need at least one source spectrogram")
    return SourceEstimates([spec.values.copy() for spec in true_specs])
