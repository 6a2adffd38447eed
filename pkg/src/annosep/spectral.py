"""Time-frequency analysis and synthesis.

Forward/inverse short-time Fourier transform with a periodic Hann window
and weighted overlap-add inversion, plus power-spectrogram extraction.
The inverse divides by the summed squared synthesis window, so
``istft(stft(x))`` reconstructs ``x`` to machine precision for any
window/hop pair where the hop divides the window length.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError

__all__ = [
    "StftParams",
    "ComplexSpectrogram",
    "MixtureSpectrogram",
    "hann_window",
    "stft",
    "istft",
    "power_spectrogram",
]


def hann_window(length: int) -> np.ndarray:
    """Periodic Hann window: ``0.5 * (1 - cos(2*pi*j/length))``.

    Unlike the symmetric variant, the periodic window sums to a constant
    when overlapped at any hop that divides ``length`` at least twice.
    """
    j = np.arange(length)
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * j / length))


@dataclass(frozen=True)
class StftParams:
    """Transform parameters.

    Parameters
    ----------
    window_length : int
        Analysis/synthesis window length in samples.
    hop : int
        Frame advance in samples. Must divide ``window_length``.
    window : str
        Window identifier. Only ``"hann"`` (periodic) is supported.
    sample_rate : int
        Sample rate in Hz, used for axis scaling only.
    """

    window_length: int = 512
    hop: int = 256
    window: str = "hann"
    sample_rate: int = 16000

    def __post_init__(self):
        if self.window_length <= 0 or self.hop <= 0:
            raise InputError("window_length and hop must be positive")
        if self.window_length % self.hop != 0:
            raise InputError(
                f"hop {self.hop} must divide window_length {self.window_length}"
            )
        if self.window_length // self.hop < 2:
            raise InputError("hop must be at most window_length / 2")
        if self.window != "hann":
            raise InputError(f"unsupported window {self.window!r}")

    @property
    def num_bins(self) -> int:
        """Number of frequency rows F = window_length/2 + 1."""
        return self.window_length // 2 + 1

    @property
    def pad(self) -> int:
        """Zero-padding applied at each end of the signal before framing."""
        return self.window_length - self.hop

    def window_values(self) -> np.ndarray:
        return hann_window(self.window_length)

    def cola_error(self) -> float:
        """Max deviation of the overlapped window sum from a constant.

        The periodic Hann window overlapped at hop W/k sums to the constant
        k/2 at every sample; this returns the worst-case absolute deviation,
        which should be at floating-point noise level (< 1e-10).
        """
        w = self.window_values()
        k = self.window_length // self.hop
        acc = np.zeros(self.hop)
        for m in range(k):
            acc += w[m * self.hop : m * self.hop + self.hop]
        return float(np.max(np.abs(acc - k / 2.0)))


@dataclass
class ComplexSpectrogram:
    """Complex STFT coefficients plus the parameters that produced them.

    ``coeffs`` has shape (F, N) with F = window_length/2 + 1.
    ``original_length`` is the sample count of the analyzed signal, kept
    so that the inverse transform can truncate exactly.
    """

    coeffs: np.ndarray
    params: StftParams
    original_length: int

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if self.coeffs.ndim != 2:
            raise InputError("coeffs must be a 2-D array")
        if self.coeffs.shape[0] != self.params.num_bins:
            raise InputError(
                f"expected {self.params.num_bins} frequency rows, "
                f"got {self.coeffs.shape[0]}"
            )
        if self.coeffs.shape[1] < 1:
            raise InputError("spectrogram must have at least one frame")

    @property
    def shape(self) -> tuple[int, int]:
        return self.coeffs.shape

    def copy(self) -> "ComplexSpectrogram":
        return ComplexSpectrogram(self.coeffs.copy(), self.params, self.original_length)


@dataclass
class MixtureSpectrogram:
    """Nonnegative real (F, N) matrix, typically a power spectrogram."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise InputError("values must be a 2-D array")
        if not np.all(np.isfinite(self.values)):
            raise InputError("values must be finite")
        if np.any(self.values < 0):
            raise InputError("values must be nonnegative")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def copy(self) -> "MixtureSpectrogram":
        return MixtureSpectrogram(self.values.copy())


def stft(signal: np.ndarray, params: StftParams | None = None) -> ComplexSpectrogram:
    """Short-time Fourier transform of a real signal.

    The signal is zero-padded by ``window_length - hop`` at both ends, so
    every sample is covered by a full complement of windows; frame ``n``
    then covers padded samples ``[n*hop, n*hop + window_length)``.

    Parameters
    ----------
    signal : np.ndarray
        Real 1-D sample sequence, nonempty and finite.
    params : StftParams, optional
        Transform parameters; defaults to 512/256 Hann at 16 kHz.

    Returns
    -------
    ComplexSpectrogram
        (F, N) coefficients with F = window_length/2 + 1 and
        N = ceil((padded_length - window_length) / hop) + 1.
    """
    if params is None:
        params = StftParams()
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise InputError("signal must be a nonempty 1-D array")
    if not np.all(np.isfinite(x)):
        raise InputError("signal contains non-finite samples")

    w = params.window_values()
    win_len, hop, pad = params.window_length, params.hop, params.pad

    padded_length = x.size + 2 * pad
    num_frames = int(np.ceil((padded_length - win_len) / hop)) + 1
    total = (num_frames - 1) * hop + win_len
    buf = np.zeros(total)
    buf[pad : pad + x.size] = x

    frames = np.lib.stride_tricks.sliding_window_view(buf, win_len)[::hop]
    coeffs = np.fft.rfft(frames * w, axis=1).T
    return ComplexSpectrogram(coeffs, params, x.size)


def istft(spec: ComplexSpectrogram) -> np.ndarray:
    """Inverse STFT via weighted overlap-add.

    Each frame is inverse-transformed, multiplied by the synthesis window,
    overlap-added, and the result is divided by the summed squared window
    before the padding is stripped and the signal truncated to
    ``original_length``.
    """
    params = spec.params
    w = params.window_values()
    win_len, hop, pad = params.window_length, params.hop, params.pad
    num_frames = spec.coeffs.shape[1]

    frames = np.fft.irfft(spec.coeffs.T, n=win_len, axis=1)
    total = (num_frames - 1) * hop + win_len
    acc = np.zeros(total)
    norm = np.zeros(total)
    wsq = w * w
    for m in range(num_frames):
        start = m * hop
        acc[start : start + win_len] += frames[m] * w
        norm[start : start + win_len] += wsq

    out = acc / np.maximum(norm, np.finfo(np.float64).tiny)
    if spec.original_length > total - pad:
        raise InputError("original_length inconsistent with spectrogram shape")
    return out[pad : pad + spec.original_length]


def power_spectrogram(spec: ComplexSpectrogram) -> MixtureSpectrogram:
    """Entrywise squared magnitude of the STFT coefficients."""
    c = spec.coeffs
    return MixtureSpectrogram(c.real * c.real + c.imag * c.imag)
