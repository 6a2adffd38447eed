"""Mono 16-bit PCM WAV I/O and windowed-sinc resampling.

Sample values map to [-1, 1): reading divides the int16 payload by 32768,
writing clips to the representable range and rounds to nearest.
"""

from __future__ import annotations

import wave
from pathlib import Path

import numpy as np

from .errors import InputError

__all__ = ["read_wav", "write_wav", "resample", "load_audio"]


def read_wav(path: str | Path) -> tuple[np.ndarray, int]:
    """Read a mono 16-bit PCM WAV file.

    Returns
    -------
    (signal, sample_rate)
        ``signal`` is float64 in [-1, 1).
    """
    try:
        with wave.open(str(path), "rb") as wf:
            channels = wf.getnchannels()
            width = wf.getsampwidth()
            rate = wf.getframerate()
            frames = wf.readframes(wf.getnframes())
    except (OSError, wave.Error) as exc:
        raise InputError(f"cannot read WAV file {path}: {exc}") from exc
    if channels != 1:
        raise InputError(f"{path}: expected mono audio, got {channels} channels")
    if width != 2:
        raise InputError(f"{path}: expected 16-bit PCM, got {8 * width}-bit")
    samples = np.frombuffer(frames, dtype="<i2").astype(np.float64) / 32768.0
    return samples, rate


def write_wav(path: str | Path, signal: np.ndarray, sample_rate: int) -> None:
    """Write a float signal in [-1, 1) as mono 16-bit PCM."""
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1:
        raise InputError("signal must be 1-D")
    if not np.all(np.isfinite(x)):
        raise InputError("signal contains non-finite samples")
    quantized = np.clip(np.rint(x * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(sample_rate)
        wf.writeframes(quantized.tobytes())


def resample(signal: np.ndarray, rate_in: int, rate_out: int, taps: int = 32) -> np.ndarray:
    """Resample by windowed-sinc interpolation.

    Uses a Hann-windowed sinc kernel with ``taps`` zero crossings per side,
    low-passed at the smaller of the two Nyquist frequencies when
    downsampling.
    """
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise InputError("signal must be a nonempty 1-D array")
    if rate_in <= 0 or rate_out <= 0:
        raise InputError("sample rates must be positive")
    if rate_in == rate_out:
        return x.copy()

    ratio = rate_out / rate_in
    n_out = int(round(x.size * ratio))
    cutoff = min(1.0, ratio)
    half = int(np.ceil(taps / cutoff))
    offsets = np.arange(-half + 1, half + 1)

    out = np.empty(n_out)
    block = 8192
    for start in range(0, n_out, block):
        n = np.arange(start, min(start + block, n_out))
        t = n / ratio
        base = np.floor(t).astype(np.int64)
        idx = base[:, None] + offsets[None, :]
        frac = idx - t[:, None]
        kernel = cutoff * np.sinc(cutoff * frac)
        kernel *= 0.5 * (1.0 + np.cos(np.pi * np.clip(frac / half, -1.0, 1.0)))
        valid = (idx >= 0) & (idx < x.size)
        gathered = np.where(valid, x[np.clip(idx, 0, x.size - 1)], 0.0)
        out[n] = np.sum(gathered * kernel, axis=1)
    return out


def load_audio(path: str | Path, target_rate: int = 16000) -> np.ndarray:
    """Read a WAV file and resample it to ``target_rate``."""
    signal, rate = read_wav(path)
    if signal.size == 0:
        raise InputError(f"{path}: empty audio file")
    if rate != target_rate:
        signal = resample(signal, rate, target_rate)
    return signal
