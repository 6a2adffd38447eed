"""Convex low-rank source estimation by projected subgradient descent.

Minimizes, over G nonnegative source spectrograms constrained to equal
the annotation targets on the annotated bins,

    || mixture - sum_g est_g ||_F^2 + lambda * sum_g ||est_g||_*

where ||.||_* is the nuclear norm (sum of singular values). The feasible
set is an entrywise product of points and half-lines, so the Euclidean
projection is a clamp-and-overwrite; a subgradient of each nuclear term
costs one thin SVD. Steps follow the diminishing rule
``alpha_t = alpha0 / (1 + t)``, and since the iteration is not monotone
the best feasible iterate found is the one returned.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .annotation import AnnotationSet, TargetValues, compute_targets
from .errors import ConfigError, InputError, NumericalError
from .spectral import MixtureSpectrogram

__all__ = [
    "SourceEstimates",
    "LownucConfig",
    "SolveTrace",
    "TraceRecord",
    "nuclear_norm",
    "objective",
    "subgradient",
    "project",
    "solve",
    "default_alpha0",
    "default_lambda_grid",
    "default_alpha0_grid",
]

SV_SUPPORT_RTOL = 1e-12


@dataclass
class SourceEstimates:
    """G nonnegative (F, N) source spectrogram estimates."""

    matrices: list[np.ndarray]

    def __post_init__(self):
        self.matrices = [np.asarray(m, dtype=np.float64) for m in self.matrices]
        if not self.matrices:
            raise InputError("need at least one source matrix")
        shape = self.matrices[0].shape
        for m in self.matrices:
            if m.ndim != 2 or m.shape != shape:
                raise InputError("all source matrices must share one 2-D shape")
            if not np.all(np.isfinite(m)):
                raise InputError("source matrices must be finite")

    @property
    def num_sources(self) -> int:
        return len(self.matrices)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrices[0].shape

    def copy(self) -> "SourceEstimates":
        return SourceEstimates([m.copy() for m in self.matrices])

    def total(self) -> np.ndarray:
        """Entrywise sum over sources."""
        return np.sum(self.matrices, axis=0)


@dataclass(frozen=True)
class LownucConfig:
    """Solver settings.

    ``alpha0`` is the initial step size of the diminishing rule
    ``alpha_t = alpha0 / (1 + t)``; ``snapshot_every`` controls how often
    a copy of the best iterate is kept for quality-vs-time curves
    (0 disables snapshots).
    """

    lam: float = 0.0
    alpha0: float = 1.0
    max_iters: int = 1000
    time_budget: Optional[float] = None
    snapshot_every: int = 25

    def __post_init__(self):
        if self.lam < 0:
            raise ConfigError("lam must be nonnegative")
        if self.alpha0 <= 0:
            raise ConfigError("alpha0 must be positive")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be >= 1")
        if self.time_budget is not None and self.time_budget < 0:
            raise ConfigError("time_budget must be nonnegative")
        if self.snapshot_every < 0:
            raise ConfigError("snapshot_every must be nonnegative")


@dataclass
class TraceRecord:
    iteration: int
    seconds: float
    objective: float
    best_objective: float


@dataclass
class SolveTrace:
    """Per-iteration objective history plus periodic best-iterate snapshots."""

    records: list[TraceRecord] = field(default_factory=list)
    snapshots: list[tuple[float, SourceEstimates]] = field(default_factory=list)

    def append(self, iteration: int, seconds: float, obj: float, best: float) -> None:
        self.records.append(TraceRecord(iteration, seconds, obj, best))

    def to_csv(self) -> str:
        """CSV with columns iter, seconds, objective, best_objective."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["iter", "seconds", "objective", "best_objective"])
        for rec in self.records:
            writer.writerow(
                [
                    rec.iteration,
                    format(rec.seconds, ".6f"),
                    format(rec.objective, ".12g"),
                    format(rec.best_objective, ".12g"),
                ]
            )
        return buf.getvalue()


def nuclear_norm(matrix: np.ndarray) -> float:
    """Sum of singular values."""
    x = np.asarray(matrix, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise InputError("matrix must be finite")
    return float(np.linalg.svd(x, compute_uv=False).sum())


def objective(
    est: SourceEstimates, mixture: MixtureSpectrogram, lam: float
) -> float:
    """Squared Frobenius misfit plus ``lam`` times the summed nuclear norms."""
    if est.shape != mixture.shape:
        raise InputError(
            f"estimate shape {est.shape} does not match mixture {mixture.shape}"
        )
    residual = mixture.values - est.total()
    value = float(np.sum(residual * residual))
    if lam != 0.0:
        value += lam * sum(nuclear_norm(m) for m in est.matrices)
    return value


def subgradient(
    est: SourceEstimates, mixture: MixtureSpectrogram, lam: float
) -> list[np.ndarray]:
    """One subgradient of the objective at ``est``, per source.

    The misfit term contributes ``2 * (sum_h est_h - mixture)`` to every
    source; each nuclear term contributes ``lam * U @ Vt`` computed from a
    thin SVD restricted to singular values above ``max_sv * 1e-12``, which
    is a valid subgradient (and the gradient wherever the matrix has full
    rank with distinct singular values).
    """
    if est.shape != mixture.shape:
        raise InputError(
            f"estimate shape {est.shape} does not match mixture {mixture.shape}"
        )
    smooth = 2.0 * (est.total() - mixture.values)
    grads = []
    for g, matrix in enumerate(est.matrices):
        grad = smooth.copy()
        if lam != 0.0:
            try:
                u, s, vt = np.linalg.svd(matrix, full_matrices=False)
            except np.linalg.LinAlgError as exc:
                raise NumericalError(f"SVD failed for source {g}: {exc}") from exc
            if s.size and s[0] > 0.0:
                support = s > s[0] * SV_SUPPORT_RTOL
                grad += lam * (u[:, support] @ vt[support, :])
        grads.append(grad)
    return grads


def project(
    est: SourceEstimates, ann: AnnotationSet, targets: TargetValues
) -> SourceEstimates:
    """Euclidean projection onto the feasible set.

    Annotated entries are overwritten with their targets; all other
    entries are clamped to be nonnegative. The constraint set is an
    entrywise product of intervals and points, so this is exact.
    """
    if est.shape != ann.shape:
        raise InputError(
            f"estimate shape {est.shape} does not match annotations {ann.shape}"
        )
    rows, cols = ann.bins[:, 0], ann.bins[:, 1]
    projected = []
    for g, matrix in enumerate(est.matrices):
        out = np.maximum(matrix, 0.0)
        if rows.size:
            out[rows, cols] = targets.values[:, g]
        projected.append(out)
    return SourceEstimates(projected)


def lazy_point(
    mixture: MixtureSpectrogram,
    ann: AnnotationSet,
    targets: TargetValues,
    num_sources: int,
) -> SourceEstimates:
    """Uniform split of the mixture projected onto the constraints."""
    even = SourceEstimates([mixture.values / num_sources for _ in range(num_sources)])
    return project(even, ann, targets)


def default_alpha0(mixture: MixtureSpectrogram, scale: float = 0.1) -> float:
    """Scale-aware initial step: ``scale * ||mixture||_F / (F * N)``."""
    f_dim, n_dim = mixture.shape
    norm = float(np.linalg.norm(mixture.values))
    if norm == 0.0:
        return scale
    return scale * norm / (f_dim * n_dim)


def default_lambda_grid(mixture: MixtureSpectrogram) -> list[float]:
    """Penalty grid {1e-3, 1e-2, 1e-1, 1} * ||mixture||_F."""
    norm = float(np.linalg.norm(mixture.values))
    return [m * norm for m in (1e-3, 1e-2, 1e-1, 1.0)]


def default_alpha0_grid(mixture: MixtureSpectrogram) -> list[float]:
    """Step grid {1e-2, 1e-1, 1, 10} * ||mixture||_F / (F * N)."""
    return [default_alpha0(mixture, scale) for scale in (1e-2, 1e-1, 1.0, 10.0)]


def solve(
    mixture: MixtureSpectrogram,
    ann: AnnotationSet,
    config: LownucConfig,
    num_sources: Optional[int] = None,
    on_record: Optional[Callable[[TraceRecord], None]] = None,
) -> tuple[SourceEstimates, SolveTrace]:
    """Run the projected subgradient iteration from the lazy point.

    Iterates ``est <- project(est - alpha_t * subgradient(est))`` with
    ``alpha_t = alpha0 / (1 + t)``, recording the objective each
    iteration, and returns the best feasible iterate by objective value
    (not the last). Stops after ``max_iters`` steps or once
    ``time_budget`` seconds have elapsed, whichever comes first; a budget
    of 0 returns the initial point.

    Parameters
    ----------
    num_sources : int, optional
        Number of sources; defaults to ``ann.num_sources``.
    on_record : callable, optional
        Invoked with each TraceRecord as it is appended (progress hook).
    """
    G = num_sources if num_sources is not None else ann.num_sources
    if G < 1:
        raise ConfigError("num_sources must be >= 1")
    targets = compute_targets(ann, mixture)

    start = time.perf_counter()
    est = lazy_point(mixture, ann, targets, G)
    best = est.copy()
    best_obj = np.inf

    trace = SolveTrace()

    def record(iteration: int, obj: float) -> None:
        rec = TraceRecord(
            iteration, time.perf_counter() - start, obj, best_obj
        )
        trace.records.append(rec)
        if on_record is not None:
            on_record(rec)

    def snapshot() -> None:
        trace.snapshots.append((time.perf_counter() - start, best.copy()))

    def out_of_time() -> bool:
        return (
            config.time_budget is not None
            and time.perf_counter() - start >= config.time_budget
        )

    # Each iteration needs the SVD of every source both for the objective
    # (sum of singular values) and for the subgradient (U @ Vt), so the
    # loop computes it once and shares it.
    for t in range(config.max_iters + 1):
        total = est.total()
        residual = mixture.values - total
        obj = float(np.sum(residual * residual))
        svds = []
        if config.lam != 0.0:
            for g, matrix in enumerate(est.matrices):
                try:
                    u, s, vt = np.linalg.svd(matrix, full_matrices=False)
                except np.linalg.LinAlgError as exc:
                    raise NumericalError(
                        f"SVD failed for source {g}: {exc}"
                    ) from exc
                svds.append((u, s, vt))
                obj += config.lam * float(s.sum())
        if obj < best_obj:
            best_obj = obj
            best = est.copy()
        record(t, obj)
        if config.snapshot_every and t % config.snapshot_every == 0:
            snapshot()
        if t == config.max_iters or out_of_time():
            break

        step = config.alpha0 / (1.0 + t)
        smooth = -2.0 * residual
        moved = []
        for g, matrix in enumerate(est.matrices):
            grad = smooth
            if config.lam != 0.0:
                u, s, vt = svds[g]
                if s.size and s[0] > 0.0:
                    support = s > s[0] * SV_SUPPORT_RTOL
                    grad = smooth + config.lam * (u[:, support] @ vt[support, :])
            moved.append(matrix - step * grad)
        est = project(SourceEstimates(moved), ann, targets)

    if config.snapshot_every and (
        not trace.snapshots
        or trace.snapshots[-1][0] < trace.records[-1].seconds
    ):
        snapshot()
    return best, trace
