"""Separation quality metrics and the grid-search experiment protocol.

The metrics are the zero-lag (time-invariant gain) variant of the
standard source-separation decomposition: the estimate is split into a
target component along its reference, an interference component inside
the span of all references, and an artifact remainder, and SDR/SIR/SAR
are energy ratios in dB between those parts. Absolute values are not
comparable to toolkits that allow distortion filters, but orderings are.

The experiment protocol runs each method over its hyperparameter grid
with a fixed per-run time budget, selects per track and method the grid
point with the best final average SDR, and emits a per-track summary
plus SDR-over-time curves extracted from the solver snapshots.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .annotation import AnnotationSet, generate_annotations, compute_targets
from .errors import ConfigError, InputError
from .lownuc import (
    LownucConfig,
    SolveTrace,
    SourceEstimates,
    solve,
)
from .nmf import NmfConfig, solve_nmf
from .reconstruction import (
    lazy_estimates,
    oracle_estimates,
    synthesize_sources,
    wiener_masks,
)
from .spectral import ComplexSpectrogram, MixtureSpectrogram, StftParams, power_spectrogram, stft
from .tracks import Track, synthetic_track, track_from_wav_dir

__all__ = [
    "EvalReport",
    "ExperimentConfig",
    "ExperimentReport",
    "bss_eval",
    "sdr_over_time",
    "run_experiment",
    "capped_db",
    "METHODS",
]

log = logging.getLogger(__name__)

METHODS = ("lazy", "nmf", "lownuc", "oracle")

DB_CAP = 300.0

# Energy below this fraction of the signal scale is treated as exactly zero,
# so numerically perfect estimates report +inf instead of ~250 dB.
ZERO_ENERGY_RTOL = 1e-20


def capped_db(value: float, cap: float = DB_CAP) -> float:
    """Clamp a dB value to [-cap, cap] for report output."""
    return float(min(max(value, -cap), cap))


def _safe_db(num: float, den: float, scale: float) -> float:
    tol = ZERO_ENERGY_RTOL * scale
    if num <= tol:
        return -math.inf
    if den <= tol:
        return math.inf
    return 10.0 * math.log10(num / den)


@dataclass
class EvalReport:
    """Per-source SDR/SIR/SAR in dB plus their averages.

    Values may be +inf (perfect estimate) or -inf (null estimate).
    """

    sdr: list[float]
    sir: list[float]
    sar: list[float]
    metadata: dict = field(default_factory=dict)

    @property
    def avg_sdr(self) -> float:
        return float(np.mean(self.sdr))

    @property
    def avg_sir(self) -> float:
        return float(np.mean(self.sir))

    @property
    def avg_sar(self) -> float:
        return float(np.mean(self.sar))

    def to_dict(self) -> dict:
        return {
            "sdr": [capped_db(v) for v in self.sdr],
            "sir": [capped_db(v) for v in self.sir],
            "sar": [capped_db(v) for v in self.sar],
            "avg_sdr": capped_db(self.avg_sdr),
            "avg_sir": capped_db(self.avg_sir),
            "avg_sar": capped_db(self.avg_sar),
            "metadata": self.metadata,
        }


def bss_eval(
    estimates: list[np.ndarray],
    references: list[np.ndarray],
    metadata: Optional[dict] = None,
) -> EvalReport:
    """Zero-lag SDR/SIR/SAR of each estimate against its reference.

    For estimate ``e`` with reference ``s_g``: the target is the
    projection of ``e`` onto ``s_g``, interference is the rest of the
    projection of ``e`` onto the span of all references, and artifacts
    are what remains outside that span. Ratios with a zero denominator
    report +inf; a null estimate reports -inf SDR.

    References must be nonzero, linearly independent, and the same
    length as the estimates; estimates are paired with references by
    index (no permutation search).
    """
    if len(estimates) != len(references):
        raise InputError("need one estimate per reference")
    if not references:
        raise InputError("need at least one reference")
    ref = np.asarray(references, dtype=np.float64)
    est = np.asarray(estimates, dtype=np.float64)
    if ref.ndim != 2 or est.shape != ref.shape:
        raise InputError(
            f"estimates {est.shape} and references {ref.shape} must be equal-length"
            " 1-D signals"
        )
    ref_energy = np.sum(ref * ref, axis=1)
    if np.any(ref_energy == 0.0):
        raise InputError("references must be nonzero")

    gram = ref @ ref.T
    try:
        gram_inv = np.linalg.inv(gram)
    except np.linalg.LinAlgError as exc:
        raise InputError("references must be linearly independent") from exc

    scale = float(np.max(ref_energy))
    sdr_list, sir_list, sar_list = [], [], []
    for g in range(ref.shape[0]):
        e = est[g]
        s = ref[g]
        s_target = (np.dot(e, s) / ref_energy[g]) * s
        coeffs = gram_inv @ (ref @ e)
        p_all = coeffs @ ref
        e_interf = p_all - s_target
        e_artif = e - p_all

        target_energy = float(np.sum(s_target * s_target))
        interf_energy = float(np.sum(e_interf * e_interf))
        artif_energy = float(np.sum(e_artif * e_artif))
        distortion = e_interf + e_artif

        sdr_list.append(
            _safe_db(target_energy, float(np.sum(distortion * distortion)), scale)
        )
        sir_list.append(_safe_db(target_energy, interf_energy, scale))
        filtered = s_target + e_interf
        sar_list.append(
            _safe_db(float(np.sum(filtered * filtered)), artif_energy, scale)
        )
    return EvalReport(sdr_list, sir_list, sar_list, metadata=metadata or {})


def sdr_over_time(
    trace: SolveTrace,
    snapshots: list[tuple[float, SourceEstimates]],
    references: list[np.ndarray],
    mixture_stft: ComplexSpectrogram,
) -> list[tuple[float, float]]:
    """Average SDR of each snapshot, paired with its wall-clock stamp.

    Snapshots must carry strictly increasing timestamps consistent with
    the trace (they are produced alongside trace records).
    """
    if not snapshots:
        raise InputError("need at least one snapshot")
    times = [t for t, _ in snapshots]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise InputError("snapshot timestamps must be strictly increasing")
    if trace.records and times[-1] > trace.records[-1].seconds + 1.0:
        raise InputError("snapshots are not aligned with the trace")

    curve = []
    for seconds, est in snapshots:
        masks = wiener_masks(est)
        signals = synthesize_sources(masks, mixture_stft)
        report = bss_eval(signals, references)
        curve.append((seconds, report.avg_sdr))
    return curve


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings for a full multi-track, multi-method comparison.

    ``tracks`` entries are dicts: ``{"type": "synthetic", "seed": 0,
    "duration_seconds": 8.0}`` or ``{"type": "wav_dir", "path": ...}``.
    Grids for the convex solver are relative: ``lambda_grid`` multiplies
    ``||mixture||_F`` and ``alpha0_grid`` multiplies
    ``||mixture||_F / (F*N)``. The NMF penalty grid is absolute (the
    solver normalizes spectrograms to unit mean). ``budget_seconds`` is
    the per-run time budget shared by both iterative methods.
    """

    tracks: tuple = ()
    methods: tuple = METHODS
    fraction: float = 0.4
    annotation_mode: str = "soft"
    seed: int = 0
    lambda_grid: tuple = (1e-3, 1e-2, 1e-1, 1.0)
    alpha0_grid: tuple = (1e-2, 1e-1, 1.0, 10.0)
    rank_grid: tuple = (2, 4, 8)
    nmf_lambda_grid: tuple = (1.0,)
    nmf_num_starts: int = 8
    nmf_iters_per_start: int = 200
    budget_seconds: float = 180.0
    max_iters: int = 1_000_000
    snapshot_every: int = 25
    stft_params: StftParams = StftParams()

    def __post_init__(self):
        object.__setattr__(self, "tracks", tuple(self.tracks))
        object.__setattr__(self, "methods", tuple(self.methods))
        if not 0.0 <= self.fraction <= 1.0:
            raise ConfigError("fraction must be in [0, 1]")
        if self.budget_seconds <= 0:
            raise ConfigError("budget_seconds must be positive")
        if self.annotation_mode not in ("soft", "binary"):
            raise ConfigError("annotation_mode must be 'soft' or 'binary'")
        for method in self.methods:
            if method not in METHODS:
                raise ConfigError(f"unknown method {method!r}")
        if "lownuc" in self.methods and not (self.lambda_grid and self.alpha0_grid):
            raise ConfigError("lownuc requires nonempty lambda and alpha0 grids")
        if "nmf" in self.methods and not (self.rank_grid and self.nmf_lambda_grid):
            raise ConfigError("nmf requires nonempty rank and lambda grids")

    def to_dict(self) -> dict:
        return {
            "tracks": [dict(t) for t in self.tracks],
            "methods": list(self.methods),
            "fraction": self.fraction,
            "annotation_mode": self.annotation_mode,
            "seed": self.seed,
            "lambda_grid": list(self.lambda_grid),
            "alpha0_grid": list(self.alpha0_grid),
            "rank_grid": list(self.rank_grid),
            "nmf_lambda_grid": list(self.nmf_lambda_grid),
            "nmf_num_starts": self.nmf_num_starts,
            "nmf_iters_per_start": self.nmf_iters_per_start,
            "budget_seconds": self.budget_seconds,
            "max_iters": self.max_iters,
            "snapshot_every": self.snapshot_every,
            "stft": {
                "window_length": self.stft_params.window_length,
                "hop": self.stft_params.hop,
                "window": self.stft_params.window,
                "sample_rate": self.stft_params.sample_rate,
            },
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        kwargs = dict(doc)
        stft_doc = kwargs.pop("stft", None)
        if stft_doc is not None:
            kwargs["stft_params"] = StftParams(**stft_doc)
        for key in ("tracks", "methods", "lambda_grid", "alpha0_grid", "rank_grid",
                    "nmf_lambda_grid"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(f"bad experiment config: {exc}") from exc


@dataclass
class SummaryRow:
    method: str
    track: str
    lam: Optional[float]
    alpha0: Optional[float]
    rank: Optional[int]
    sdr: float
    sir: float
    sar: float


@dataclass
class ExperimentReport:
    """Per-track summary rows, per-method averages, and SDR-time curves."""

    rows: list[SummaryRow]
    averages: dict  # method -> {"sdr": ..., "sir": ..., "sar": ...}
    curves: dict  # (method, track) -> list[(seconds, sdr)]
    metadata: dict

    def summary_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["method", "track", "lambda", "alpha0", "K", "SDR", "SIR", "SAR"])
        for row in self.rows:
            writer.writerow(
                [
                    row.method,
                    row.track,
                    "" if row.lam is None else format(row.lam, ".8g"),
                    "" if row.alpha0 is None else format(row.alpha0, ".8g"),
                    "" if row.rank is None else row.rank,
                    format(capped_db(row.sdr), ".4f"),
                    format(capped_db(row.sir), ".4f"),
                    format(capped_db(row.sar), ".4f"),
                ]
            )
        return buf.getvalue()

    def curves_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["method", "track", "seconds", "sdr"])
        for (method, track), curve in self.curves.items():
            for seconds, sdr in curve:
                writer.writerow(
                    [method, track, format(seconds, ".6f"),
                     format(capped_db(sdr), ".4f")]
                )
        return buf.getvalue()

    def metadata_json(self) -> str:
        return json.dumps(self.metadata, indent=2, sort_keys=True)

    def summary_table(self) -> str:
        """Plain-text per-method average table."""
        lines = [f"{'method':<8} {'SDR':>9} {'SIR':>9} {'SAR':>9}"]
        for method, vals in self.averages.items():
            lines.append(
                f"{method:<8} {capped_db(vals['sdr']):>9.4f} "
                f"{capped_db(vals['sir']):>9.4f} {capped_db(vals['sar']):>9.4f}"
            )
        return "\n".join(lines)


def _load_track(spec: dict, params: StftParams) -> Track:
    kind = spec.get("type", "synthetic")
    if kind == "synthetic":
        return synthetic_track(
            seed=int(spec.get("seed", 0)),
            duration_seconds=float(spec.get("duration_seconds", 8.0)),
            sample_rate=params.sample_rate,
            name=spec.get("name"),
        )
    if kind == "wav_dir":
        return track_from_wav_dir(spec["path"], params.sample_rate)
    raise ConfigError(f"unknown track type {kind!r}")


@dataclass
class _PreparedTrack:
    track: Track
    mixture_stft: ComplexSpectrogram
    mixture_spec: MixtureSpectrogram
    true_specs: list[MixtureSpectrogram]
    ann: AnnotationSet


def _prepare(track: Track, config: ExperimentConfig, seed: int) -> _PreparedTrack:
    mixture_stft = stft(track.mixture, config.stft_params)
    mixture_spec = power_spectrogram(mixture_stft)
    true_specs = [
        power_spectrogram(stft(s, config.stft_params)) for s in track.sources
    ]
    ann = generate_annotations(
        true_specs, config.fraction, seed, config.annotation_mode
    )
    return _PreparedTrack(track, mixture_stft, mixture_spec, true_specs, ann)


def _evaluate(est: SourceEstimates, prep: _PreparedTrack) -> EvalReport:
    masks = wiener_masks(est)
    signals = synthesize_sources(masks, prep.mixture_stft)
    return bss_eval(signals, prep.track.sources)


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Run every configured method on every track and assemble the report.

    For each track and iterative method, every grid point runs under the
    per-run time budget; the point with the best final average SDR wins
    (ties toward the earlier grid point) and contributes the summary row
    and the SDR-over-time curve. Tracks without reference sources are
    skipped with a warning. All randomness flows from ``config.seed``.
    """
    if not config.tracks:
        raise ConfigError("no tracks configured")

    rows: list[SummaryRow] = []
    curves: dict[tuple[str, str], list[tuple[float, float]]] = {}
    selected: dict[str, list[dict]] = {m: [] for m in config.methods}

    for index, track_spec in enumerate(config.tracks):
        track = _load_track(dict(track_spec), config.stft_params)
        if len(track.sources) < 2:
            log.warning("skipping track %s: no reference sources", track.name)
            continue
        seed = config.seed + index
        prep = _prepare(track, config, seed)
        norm = float(np.linalg.norm(prep.mixture_spec.values))
        f_dim, n_dim = prep.mixture_spec.shape
        targets = compute_targets(prep.ann, prep.mixture_spec)

        for method in config.methods:
            if method == "lazy":
                est = lazy_estimates(
                    prep.mixture_spec, prep.ann, targets, track.num_sources
                )
                report = _evaluate(est, prep)
                rows.append(
                    SummaryRow("lazy", track.name, None, None, None,
                               report.avg_sdr, report.avg_sir, report.avg_sar)
                )
                curves[("lazy", track.name)] = [(0.0, report.avg_sdr)]
                selected[method].append({"track": track.name})
            elif method == "oracle":
                est = oracle_estimates(prep.true_specs)
                report = _evaluate(est, prep)
                rows.append(
                    SummaryRow("oracle", track.name, None, None, None,
                               report.avg_sdr, report.avg_sir, report.avg_sar)
                )
                curves[("oracle", track.name)] = [(0.0, report.avg_sdr)]
                selected[method].append({"track": track.name})
            elif method == "lownuc":
                best = None
                for lam_mult in config.lambda_grid:
                    for alpha_mult in config.alpha0_grid:
                        cfg = LownucConfig(
                            lam=lam_mult * norm,
                            alpha0=alpha_mult * norm / (f_dim * n_dim),
                            max_iters=config.max_iters,
                            time_budget=config.budget_seconds,
                            snapshot_every=config.snapshot_every,
                        )
                        est, trace = solve(prep.mixture_spec, prep.ann, cfg)
                        report = _evaluate(est, prep)
                        if best is None or report.avg_sdr > best["report"].avg_sdr:
                            best = {
                                "report": report,
                                "trace": trace,
                                "lam": cfg.lam,
                                "alpha0": cfg.alpha0,
                            }
                report = best["report"]
                rows.append(
                    SummaryRow("lownuc", track.name, best["lam"], best["alpha0"],
                               None, report.avg_sdr, report.avg_sir, report.avg_sar)
                )
                curves[("lownuc", track.name)] = sdr_over_time(
                    best["trace"], best["trace"].snapshots,
                    track.sources, prep.mixture_stft,
                )
                selected[method].append(
                    {"track": track.name, "lambda": best["lam"],
                     "alpha0": best["alpha0"]}
                )
            elif method == "nmf":
                best = None
                for rank in config.rank_grid:
                    for lam in config.nmf_lambda_grid:
                        cfg = NmfConfig(
                            lam=lam,
                            rank=rank,
                            iters_per_start=config.nmf_iters_per_start,
                            num_starts=config.nmf_num_starts,
                            seed=seed,
                            time_budget=config.budget_seconds,
                            snapshot_every=config.snapshot_every,
                        )
                        est, trace = solve_nmf(
                            prep.mixture_spec, prep.ann, targets, cfg,
                            num_sources=track.num_sources,
                        )
                        report = _evaluate(est, prep)
                        if best is None or report.avg_sdr > best["report"].avg_sdr:
                            best = {
                                "report": report,
                                "trace": trace,
                                "lam": lam,
                                "rank": rank,
                            }
                report = best["report"]
                rows.append(
                    SummaryRow("nmf", track.name, best["lam"], None, best["rank"],
                               report.avg_sdr, report.avg_sir, report.avg_sar)
                )
                curves[("nmf", track.name)] = sdr_over_time(
                    best["trace"], best["trace"].snapshots,
                    track.sources, prep.mixture_stft,
                )
                selected[method].append(
                    {"track": track.name, "lambda": best["lam"],
                     "rank": best["rank"]}
                )

    if not rows:
        raise ConfigError("no track produced results (missing references?)")

    averages = {}
    for method in config.methods:
        method_rows = [r for r in rows if r.method == method]
        if method_rows:
            averages[method] = {
                "sdr": float(np.mean([r.sdr for r in method_rows])),
                "sir": float(np.mean([r.sir for r in method_rows])),
                "sar": float(np.mean([r.sar for r in method_rows])),
            }

    metadata = {
        "config": config.to_dict(),
        "selected": selected,
        "averages": {
            m: {k: capped_db(v) for k, v in vals.items()}
            for m, vals in averages.items()
        },
        "metric_variant": (
            "zero-lag time-invariant-gain decomposition; absolute dB values are "
            "not comparable to filter-based variants"
        ),
    }
    return ExperimentReport(rows=rows, averages=averages, curves=curves,
                            metadata=metadata)
