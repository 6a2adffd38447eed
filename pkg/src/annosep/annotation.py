"""Annotated time-frequency regions and per-source masking coefficients.

An annotation set marks a subset of spectrogram bins and assigns each
marked bin a vector of per-source weights that sums to one. Targets are
the annotated share of the mixture at those bins: each source's target
is its weight times the mixture value.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .spectral import MixtureSpectrogram

__all__ = [
    "AnnotationSet",
    "TargetValues",
    "generate_annotations",
    "compute_targets",
    "validate",
    "annotations_to_json",
    "annotations_from_json",
]

MASK_SUM_TOL = 1e-9


@dataclass
class AnnotationSet:
    """Annotated bins with per-source masking coefficients.

    Attributes
    ----------
    bins : np.ndarray
        Integer array of shape (L, 2); each row is an (f, n) index pair.
    masks : np.ndarray
        Float array of shape (L, G); row ``i`` holds the per-source
        weights of bin ``bins[i]`` and sums to 1.
    num_sources : int
    shape : tuple[int, int]
        The (F, N) grid the bins index into.
    """

    bins: np.ndarray
    masks: np.ndarray
    num_sources: int
    shape: tuple[int, int]

    def __post_init__(self):
        self.bins = np.asarray(self.bins, dtype=np.int64).reshape(-1, 2)
        self.masks = np.asarray(self.masks, dtype=np.float64).reshape(
            -1, self.num_sources
        )
        self.shape = (int(self.shape[0]), int(self.shape[1]))
        if self.bins.shape[0] != self.masks.shape[0]:
            raise InputError("bins and masks must have the same length")
        if self.num_sources < 1:
            raise InputError("num_sources must be >= 1")

    def __len__(self) -> int:
        return self.bins.shape[0]

    @classmethod
    def empty(cls, shape: tuple[int, int], num_sources: int) -> "AnnotationSet":
        return cls(
            bins=np.zeros((0, 2), dtype=np.int64),
            masks=np.zeros((0, num_sources)),
            num_sources=num_sources,
            shape=shape,
        )

    def indicator(self) -> np.ndarray:
        """Dense (F, N) 0/1 matrix marking the annotated bins."""
        chi = np.zeros(self.shape)
        if len(self):
            chi[self.bins[:, 0], self.bins[:, 1]] = 1.0
        return chi


@dataclass
class TargetValues:
    """Per-source target values supported on the annotated bins only."""

    bins: np.ndarray
    values: np.ndarray  # shape (L, G)
    num_sources: int
    shape: tuple[int, int]

    def dense(self, g: int) -> np.ndarray:
        """Target matrix of source ``g`` as a dense (F, N) array, zero off the bins."""
        out = np.zeros(self.shape)
        if self.bins.shape[0]:
            out[self.bins[:, 0], self.bins[:, 1]] = self.values[:, g]
        return out


def generate_annotations(
    true_specs: list[MixtureSpectrogram],
    fraction: float,
    seed: int,
    mode: str = "soft",
) -> AnnotationSet:
    """Draw a random annotation set from ground-truth source spectrograms.

    Selects ``round(fraction * F * N)`` distinct bins uniformly at random.
    In ``soft`` mode each annotated bin gets the true energy ratios as
    weights; bins where every source is zero are skipped and replaced by
    fresh draws. In ``binary`` mode the dominant source gets weight 1
    (ties resolved toward the lowest source index).

    Parameters
    ----------
    true_specs : list of MixtureSpectrogram
        One nonnegative (F, N) spectrogram per source, identical shapes.
    fraction : float
        Fraction of the F*N grid to annotate, in [0, 1].
    seed : int
        Seed for the bin draw; identical inputs and seed give identical sets.
    mode : {"soft", "binary"}
    """
    if not 0.0 <= fraction <= 1.0:
        raise InputError(f"fraction must be in [0, 1], got {fraction}")
    if mode not in ("soft", "binary"):
        raise InputError(f"mode must be 'soft' or 'binary', got {mode!r}")
    if not true_specs:
        raise InputError("need at least one source spectrogram")
    shape = true_specs[0].shape
    for spec in true_specs[1:]:
        if spec.shape != shape:
            raise InputError("source spectrograms must share one shape")

    num_sources = len(true_specs)
    stack = np.stack([spec.values for spec in true_specs])  # (G, F, N)
    totals = stack.sum(axis=0)
    f_dim, n_dim = shape
    count = int(round(fraction * f_dim * n_dim))

    rng = np.random.default_rng(seed)
    order = rng.permutation(f_dim * n_dim)
    if mode == "soft":
        # Walking a seeded permutation makes the "skip and redraw" rule
        # for all-zero bins deterministic.
        flat_ok = totals.reshape(-1)[order] > 0.0
        chosen = order[flat_ok][:count]
    else:
        chosen = order[:count]
    chosen = np.sort(chosen)

    rows, cols = np.unravel_index(chosen, shape)
    bins = np.stack([rows, cols], axis=1).astype(np.int64)

    if mode == "soft":
        ratios = stack[:, rows, cols]  # (G, L)
        masks = (ratios / ratios.sum(axis=0, keepdims=True)).T
    else:
        picked = stack[:, rows, cols]  # (G, L)
        winners = np.argmax(picked, axis=0)  # lowest index wins ties
        masks = np.zeros((bins.shape[0], num_sources))
        masks[np.arange(bins.shape[0]), winners] = 1.0

    return AnnotationSet(bins=bins, masks=masks, num_sources=num_sources, shape=shape)


def compute_targets(ann: AnnotationSet, mixture: MixtureSpectrogram) -> TargetValues:
    """Per-source targets: mask weight times the mixture value at each bin."""
    if mixture.shape != ann.shape:
        raise InputError(
            f"mixture shape {mixture.shape} does not match annotations {ann.shape}"
        )
    if len(ann):
        mix_at_bins = mixture.values[ann.bins[:, 0], ann.bins[:, 1]]
        values = ann.masks * mix_at_bins[:, None]
    else:
        values = np.zeros((0, ann.num_sources))
    return TargetValues(
        bins=ann.bins.copy(),
        values=values,
        num_sources=ann.num_sources,
        shape=ann.shape,
    )


def validate(ann: AnnotationSet) -> list[str]:
    """Check the annotation invariants; returns a list of violation messages.

    Never raises: an empty list means the set is well-formed.
    """
    violations = []
    f_dim, n_dim = ann.shape
    seen = set()
    for i in range(len(ann)):
        f, n = int(ann.bins[i, 0]), int(ann.bins[i, 1])
        if not (0 <= f < f_dim and 0 <= n < n_dim):
            violations.append(f"bin ({f}, {n}): out of bounds for shape {ann.shape}")
        if (f, n) in seen:
            violations.append(f"bin ({f}, {n}): duplicate entry")
        seen.add((f, n))
        row = ann.masks[i]
        if np.any(row < 0.0) or np.any(row > 1.0):
            violations.append(f"bin ({f}, {n}): mask values outside [0, 1]")
        total = float(row.sum())
        if abs(total - 1.0) > MASK_SUM_TOL:
            violations.append(
                f"bin ({f}, {n}): mask sum {total!r} differs from 1 by more than "
                f"{MASK_SUM_TOL}"
            )
    return violations


def _format_float(x: float) -> str:
    # 17 significant digits round-trips any float64 exactly.
    return format(float(x), ".17g")


def annotations_to_json(ann: AnnotationSet) -> str:
    """Serialize to the annotation JSON format.

    Schema: ``{"shape": [F, N], "num_sources": G,
    "bins": [[f, n, [m_1, ..., m_G]], ...]}`` with mask values written as
    decimals with 17 significant digits so parsing reproduces them bit-exactly.
    """
    parts = [
        '{"shape": [%d, %d], "num_sources": %d, "bins": ['
        % (ann.shape[0], ann.shape[1], ann.num_sources)
    ]
    rows = []
    for i in range(len(ann)):
        mask_txt = ", ".join(_format_float(m) for m in ann.masks[i])
        rows.append("[%d, %d, [%s]]" % (ann.bins[i, 0], ann.bins[i, 1], mask_txt))
    parts.append(", ".join(rows))
    parts.append("]}")
    return "".join(parts)


def annotations_from_json(text: str) -> AnnotationSet:
    """Parse the annotation JSON format. Raises InputError on malformed input."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed annotation JSON: {exc}") from exc
    try:
        shape = (int(doc["shape"][0]), int(doc["shape"][1]))
        num_sources = int(doc["num_sources"])
        entries = doc["bins"]
        bins = np.array([[e[0], e[1]] for e in entries], dtype=np.int64).reshape(-1, 2)
        masks = np.array([e[2] for e in entries], dtype=np.float64).reshape(
            -1, num_sources
        )
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise InputError(f"annotation JSON missing or malformed field: {exc}") from exc
    return AnnotationSet(bins=bins, masks=masks, num_sources=num_sources, shape=shape)
