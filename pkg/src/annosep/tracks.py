"""Track sources for experiments: seeded synthetic mixtures and WAV sets.

The synthetic suite mixes two structurally different sources at equal
l2 norm: a stack of vibrato harmonics (tonal, spectrally sparse) and
band-filtered noise bursts (broadband, temporally sparse). Both are
deterministic functions of the seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio_io import load_audio
from .errors import InputError

__all__ = ["Track", "synthetic_track", "track_from_wav_dir"]


@dataclass
class Track:
    """A mixture plus its reference sources, all at one sample rate."""

    name: str
    sample_rate: int
    mixture: np.ndarray
    sources: list[np.ndarray] = field(default_factory=list)

    @property
    def num_sources(self) -> int:
        return len(self.sources)


def _vibrato_harmonics(
    rng: np.random.Generator, t: np.ndarray, sample_rate: int
) -> np.ndarray:
    """Harmonic stack with vibrato, slight inharmonicity, and tremolo.

    The vibrato is deep enough to smear each partial across neighboring
    frequency bins, so the power spectrogram is structured but not
    trivially low rank.
    """
    f0 = rng.uniform(150.0, 280.0)
    depth = rng.uniform(0.02, 0.035)
    rate = rng.uniform(4.5, 6.5)
    inst_freq = f0 * (1.0 + depth * np.sin(2.0 * np.pi * rate * t))
    phase = 2.0 * np.pi * np.cumsum(inst_freq) / sample_rate

    num_partials = 12
    out = np.zeros_like(t)
    for p in range(1, num_partials + 1):
        stretch = 1.0 + 0.0008 * p * p  # mild inharmonic stretch
        if p * f0 * stretch * (1.0 + depth) >= sample_rate / 2:
            break
        amp = p ** -1.0
        # Independent slow envelope per partial keeps the spectrogram
        # structured without being trivially low rank.
        wobble = 0.7 + 0.3 * np.sin(
            2.0 * np.pi * rng.uniform(0.2, 1.0) * t + rng.uniform(0, 2 * np.pi)
        )
        out += amp * wobble * np.sin(p * stretch * phase + rng.uniform(0, 2 * np.pi))
    tremolo = 0.65 + 0.35 * np.sin(2.0 * np.pi * rng.uniform(0.3, 0.8) * t)
    out = out * tremolo
    # Quiet broadband breath floor (about -26 dB relative).
    breath = rng.standard_normal(t.size)
    out += 0.05 * breath * np.linalg.norm(out) / np.linalg.norm(breath)
    return out


def _noise_bursts(
    rng: np.random.Generator, t: np.ndarray, sample_rate: int
) -> np.ndarray:
    """Noise bursts through a bandpass whose center drifts over the track."""
    n = t.size
    noise = rng.standard_normal(n)

    center_start = rng.uniform(2400.0, 3200.0)
    center_end = rng.uniform(4200.0, 5400.0)
    half_width = rng.uniform(500.0, 900.0)

    # Time-varying band: filter each overlapping block around the center
    # frequency it should have at that moment.
    block = 2048
    hop = block // 2
    window = 0.5 * (1 - np.cos(2 * np.pi * np.arange(block) / block))
    filtered = np.zeros(n)
    norm = np.zeros(n)
    freqs = np.fft.rfftfreq(block, 1.0 / sample_rate)
    pos = 0
    while pos < n:
        seg = noise[pos : pos + block]
        if seg.size < block:
            seg = np.pad(seg, (0, block - seg.size))
        frac = pos / max(n - 1, 1)
        center = center_start + (center_end - center_start) * frac
        band = np.abs(freqs - center) <= half_width
        piece = np.fft.irfft(np.fft.rfft(seg * window) * band, n=block)
        stop = min(pos + block, n)
        filtered[pos:stop] += (piece * window)[: stop - pos]
        norm[pos:stop] += (window * window)[: stop - pos]
        pos += hop
    filtered /= np.maximum(norm, 1e-12)

    envelope = np.zeros(n)
    duration = t[-1]
    pos_s = rng.uniform(0.0, 0.4)
    while pos_s < duration:
        burst_len = rng.uniform(0.25, 0.8)
        gap = rng.uniform(0.2, 0.7)
        start = int(pos_s * sample_rate)
        stop = min(int((pos_s + burst_len) * sample_rate), n)
        if stop > start:
            ramp = min(int(0.02 * sample_rate), (stop - start) // 2)
            seg = np.ones(stop - start)
            if ramp > 0:
                fade = 0.5 * (1 - np.cos(np.pi * np.arange(ramp) / ramp))
                seg[:ramp] = fade
                seg[-ramp:] = fade[::-1]
            envelope[start:stop] = seg
        pos_s += burst_len + gap
    if not np.any(envelope > 0):
        envelope[:] = 1.0
    return filtered * envelope


def synthetic_track(
    seed: int,
    duration_seconds: float = 8.0,
    sample_rate: int = 16000,
    name: str | None = None,
) -> Track:
    """Two-source synthetic track; sources normalized to equal l2 norm."""
    if duration_seconds <= 0:
        raise InputError("duration_seconds must be positive")
    rng = np.random.default_rng(seed)
    n = int(round(duration_seconds * sample_rate))
    t = np.arange(n) / sample_rate

    tonal = _vibrato_harmonics(rng, t, sample_rate)
    bursts = _noise_bursts(rng, t, sample_rate)

    sources = []
    for sig in (tonal, bursts):
        norm = np.linalg.norm(sig)
        if norm == 0:
            raise InputError("degenerate all-zero synthetic source")
        sources.append(sig / norm)

    mixture = sources[0] + sources[1]
    peak = np.max(np.abs(mixture))
    # Headroom so mixture and sources survive a 16-bit WAV round trip.
    gain = 0.9 / peak
    mixture = mixture * gain
    sources = [s * gain for s in sources]
    return Track(
        name=name or f"synthetic-{seed}",
        sample_rate=sample_rate,
        mixture=mixture,
        sources=sources,
    )


def track_from_wav_dir(path: str | Path, sample_rate: int = 16000) -> Track:
    """Load ``mixture.wav`` plus ``source<g>.wav`` references from a directory.

    All files are resampled to ``sample_rate``. Reference sources are
    optional; when present they are truncated/zero-padded to the mixture
    length.
    """
    root = Path(path)
    mix_path = root / "mixture.wav"
    if not mix_path.exists():
        raise InputError(f"{root}: no mixture.wav found")
    mixture = load_audio(mix_path, sample_rate)

    sources = []
    g = 1
    while (root / f"source{g}.wav").exists():
        sig = load_audio(root / f"source{g}.wav", sample_rate)
        if sig.size < mixture.size:
            sig = np.pad(sig, (0, mixture.size - sig.size))
        sources.append(sig[: mixture.size])
        g += 1
    return Track(
        name=root.name, sample_rate=sample_rate, mixture=mixture, sources=sources
    )
