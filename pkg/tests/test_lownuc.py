import numpy as np
import pytest

from annosep.annotation import AnnotationSet, compute_targets, generate_annotations
from annosep.errors import ConfigError, InputError
from annosep.lownuc import (
    LownucConfig,
    SourceEstimates,
    nuclear_norm,
    objective,
    project,
    solve,
    subgradient,
)
from annosep.spectral import MixtureSpectrogram

from conftest import random_instance


def eig_nuclear_oracle(x):
    """Independent oracle: sum of sqrt of the Gram matrix eigenvalues.

    Uses the smaller-side Gram so the product has no spurious zero
    eigenvalues (their square roots would sit at sqrt(eps) noise level).
    """
    gram = x.T @ x if x.shape[1] <= x.shape[0] else x @ x.T
    eigs = np.linalg.eigvalsh(gram)
    return float(np.sum(np.sqrt(np.clip(eigs, 0.0, None))))


class TestNuclearNorm:
    def test_zero_matrix(self):
        assert nuclear_norm(np.zeros((4, 6))) == 0.0

    def test_diagonal(self):
        assert nuclear_norm(np.diag([3.0, 4.0])) == pytest.approx(7.0)

    def test_matches_eigen_oracle(self, rng):
        x = rng.standard_normal((5, 7))
        expected = eig_nuclear_oracle(x)
        assert nuclear_norm(x) == pytest.approx(expected, rel=1e-8)

    def test_rejects_nonfinite(self):
        with pytest.raises(InputError):
            nuclear_norm(np.array([[np.nan, 1.0]]))


class TestObjective:
    def test_exact_split_zero_lambda(self, rng):
        v = np.abs(rng.standard_normal((6, 6)))
        mixture = MixtureSpectrogram(v)
        est = SourceEstimates([0.3 * v, 0.7 * v])
        assert objective(est, mixture, 0.0) == pytest.approx(0.0, abs=1e-20)

    def test_zero_estimates(self, rng):
        v = np.abs(rng.standard_normal((6, 6)))
        mixture = MixtureSpectrogram(v)
        est = SourceEstimates([np.zeros_like(v), np.zeros_like(v)])
        assert objective(est, mixture, 0.0) == pytest.approx(np.sum(v * v))

    def test_hand_computed_single_source(self):
        mixture = MixtureSpectrogram(np.diag([2.0, 2.0]))
        est = SourceEstimates([np.diag([1.0, 1.0])])
        # misfit (1 + 1) plus nuclear penalty 1 * (1 + 1)
        assert objective(est, mixture, 1.0) == pytest.approx(4.0)

    def test_shape_mismatch(self):
        with pytest.raises(InputError):
            objective(
                SourceEstimates([np.ones((2, 2))]),
                MixtureSpectrogram(np.ones((3, 3))),
                0.0,
            )

    def test_convexity(self, rng):
        mixture, _, ann, targets = random_instance(3, shape=(8, 8))
        for _ in range(10):
            a = project(
                SourceEstimates([rng.standard_normal((8, 8)) for _ in range(2)]),
                ann, targets,
            )
            b = project(
                SourceEstimates([rng.standard_normal((8, 8)) for _ in range(2)]),
                ann, targets,
            )
            theta = rng.random()
            mid = SourceEstimates(
                [theta * ma + (1 - theta) * mb
                 for ma, mb in zip(a.matrices, b.matrices)]
            )
            lam = 0.5
            assert objective(mid, mixture, lam) <= (
                theta * objective(a, mixture, lam)
                + (1 - theta) * objective(b, mixture, lam)
                + 1e-9
            )


class TestSubgradient:
    def test_zero_at_smooth_optimum(self, rng):
        v = np.abs(rng.standard_normal((5, 5)))
        mixture = MixtureSpectrogram(v)
        est = SourceEstimates([0.5 * v, 0.5 * v])
        grads = subgradient(est, mixture, 0.0)
        for g in grads:
            np.testing.assert_allclose(g, 0.0, atol=1e-12)

    def test_positive_diagonal_hand_example(self):
        est = SourceEstimates([np.diag([3.0, 4.0])])
        mixture = MixtureSpectrogram(np.zeros((2, 2)))
        (grad,) = subgradient(est, mixture, 1.0)
        # smooth part 2*diag(3,4) plus U @ Vt = identity for a positive diagonal
        np.testing.assert_allclose(grad, np.diag([7.0, 9.0]), atol=1e-12)

    def test_matches_directional_finite_differences(self, rng):
        # Full-rank points with distinct singular values, where the nuclear
        # norm is differentiable and the finite-difference oracle is valid.
        for trial in range(20):
            f_dim, n_dim = 6, 7
            mats = []
            for _ in range(2):
                m = rng.standard_normal((f_dim, n_dim))
                u, s, vt = np.linalg.svd(m, full_matrices=False)
                s = np.linspace(3.0, 1.0, s.size)  # distinct, well separated
                mats.append(u @ np.diag(s) @ vt)
            est = SourceEstimates(mats)
            mixture = MixtureSpectrogram(np.abs(rng.standard_normal((f_dim, n_dim))))
            lam = 0.7
            grads = subgradient(est, mixture, lam)
            direction = [rng.standard_normal((f_dim, n_dim)) for _ in range(2)]
            h = 1e-6
            plus = SourceEstimates(
                [m + h * d for m, d in zip(mats, direction)]
            )
            minus = SourceEstimates(
                [m - h * d for m, d in zip(mats, direction)]
            )
            fd = (objective(plus, mixture, lam) - objective(minus, mixture, lam)) / (
                2 * h
            )
            inner = sum(float(np.sum(g * d)) for g, d in zip(grads, direction))
            assert abs(fd - inner) <= 1e-4 * max(abs(fd), 1e-12)


class TestProject:
    def test_feasible_point_unchanged(self):
        mixture, _, ann, targets = random_instance(1, shape=(8, 8))
        est = project(
            SourceEstimates([mixture.values / 2, mixture.values / 2]), ann, targets
        )
        again = project(est, ann, targets)
        for a, b in zip(est.matrices, again.matrices):
            np.testing.assert_array_equal(a, b)

    def test_clamps_negative_unannotated(self):
        ann = AnnotationSet.empty((2, 2), 1)
        targets = compute_targets(ann, MixtureSpectrogram(np.ones((2, 2))))
        est = SourceEstimates([np.array([[-0.5, 1.0], [0.25, -2.0]])])
        out = project(est, ann, targets)
        np.testing.assert_array_equal(
            out.matrices[0], [[0.0, 1.0], [0.25, 0.0]]
        )

    def test_annotated_bin_forced_to_target(self):
        ann = AnnotationSet(
            bins=[[0, 1]], masks=[[0.5, 0.5]], num_sources=2, shape=(2, 2)
        )
        mixture = MixtureSpectrogram(np.full((2, 2), 5.0))
        targets = compute_targets(ann, mixture)
        est = SourceEstimates([np.full((2, 2), 9.0), np.full((2, 2), 9.0)])
        out = project(est, ann, targets)
        assert out.matrices[0][0, 1] == 2.5
        assert out.matrices[1][0, 1] == 2.5

    def test_idempotent_and_feasible_on_random_inputs(self, rng):
        mixture, _, ann, targets = random_instance(5, shape=(10, 10))
        rows, cols = ann.bins[:, 0], ann.bins[:, 1]
        for _ in range(100):
            est = SourceEstimates(
                [5 * rng.standard_normal((10, 10)) for _ in range(2)]
            )
            once = project(est, ann, targets)
            twice = project(once, ann, targets)
            for g in range(2):
                np.testing.assert_array_equal(once.matrices[g], twice.matrices[g])
                assert np.all(once.matrices[g] >= 0)
                np.testing.assert_array_equal(
                    once.matrices[g][rows, cols], targets.values[:, g]
                )


class TestSolve:
    def test_fully_annotated_problem_is_pinned(self):
        mixture, _, ann, targets = random_instance(2, shape=(6, 6), fraction=1.0)
        cfg = LownucConfig(lam=0.3, alpha0=0.1, max_iters=20, snapshot_every=0)
        est, trace = solve(mixture, ann, cfg)
        rows, cols = ann.bins[:, 0], ann.bins[:, 1]
        for g in range(2):
            np.testing.assert_array_equal(
                est.matrices[g][rows, cols], targets.values[:, g]
            )
        objectives = [r.objective for r in trace.records]
        np.testing.assert_allclose(objectives, objectives[0], rtol=1e-12)

    def test_unconstrained_zero_lambda_reaches_optimum(self):
        rng = np.random.default_rng(0)
        v = np.abs(rng.standard_normal((8, 8))) ** 2
        mixture = MixtureSpectrogram(v)
        ann = AnnotationSet.empty((8, 8), 2)
        norm_sq = float(np.sum(v * v))
        cfg = LownucConfig(
            lam=0.0, alpha0=np.linalg.norm(v) / 64, max_iters=2000, snapshot_every=0
        )
        est, trace = solve(mixture, ann, cfg)
        assert trace.records[-1].best_objective <= 1e-3 * norm_sq

    def test_matches_long_run_reference(self):
        mixture, _, ann, _ = random_instance(7, shape=(16, 16))
        norm = float(np.linalg.norm(mixture.values))
        lam = 0.1 * norm
        alpha0 = 60.0 * norm / 256
        base, _ = solve(
            mixture, ann, LownucConfig(lam=lam, alpha0=alpha0, max_iters=2000,
                                       snapshot_every=0)
        )
        ref, _ = solve(
            mixture, ann, LownucConfig(lam=lam, alpha0=alpha0 / 10,
                                       max_iters=20000, snapshot_every=0)
        )
        ob = objective(base, mixture, lam)
        orf = objective(ref, mixture, lam)
        assert abs(ob - orf) <= 1e-3 * abs(orf)

    def test_returned_iterate_feasible(self):
        mixture, _, ann, targets = random_instance(4, shape=(12, 12))
        cfg = LownucConfig(lam=1.0, alpha0=0.5, max_iters=50, snapshot_every=0)
        est, _ = solve(mixture, ann, cfg)
        rows, cols = ann.bins[:, 0], ann.bins[:, 1]
        for g in range(2):
            assert np.all(est.matrices[g] >= 0)
            np.testing.assert_array_equal(
                est.matrices[g][rows, cols], targets.values[:, g]
            )

    def test_best_objective_nonincreasing_and_times_nondecreasing(self):
        mixture, _, ann, _ = random_instance(6, shape=(10, 10))
        cfg = LownucConfig(lam=2.0, alpha0=1.0, max_iters=100, snapshot_every=0)
        _, trace = solve(mixture, ann, cfg)
        bests = [r.best_objective for r in trace.records]
        assert all(b <= a for a, b in zip(bests, bests[1:]))
        times = [r.seconds for r in trace.records]
        assert all(b >= a for a, b in zip(times, times[1:]))

    def test_zero_budget_returns_initial_point(self):
        mixture, _, ann, targets = random_instance(8, shape=(8, 8))
        cfg = LownucConfig(lam=1.0, alpha0=1.0, max_iters=100, time_budget=0.0)
        est, trace = solve(mixture, ann, cfg)
        assert len(trace.records) == 1
        from annosep.lownuc import lazy_point

        expected = lazy_point(mixture, ann, targets, 2)
        for a, b in zip(est.matrices, expected.matrices):
            np.testing.assert_array_equal(a, b)

    def test_doubling_lambda_never_decreases_shrinkage(self):
        # Monotone regularization path at long-run solver settings.
        mixture, _, ann, _ = random_instance(9, shape=(12, 12))
        norm = float(np.linalg.norm(mixture.values))
        alpha0 = 60.0 * norm / 144
        totals = []
        for lam in (0.05 * norm, 0.1 * norm, 0.2 * norm):
            est, _ = solve(
                mixture, ann,
                LownucConfig(lam=lam, alpha0=alpha0, max_iters=6000,
                             snapshot_every=0),
            )
            totals.append(sum(nuclear_norm(m) for m in est.matrices))
        assert totals[1] <= totals[0] * (1 + 1e-6)
        assert totals[2] <= totals[1] * (1 + 1e-6)

    def test_trace_csv_schema(self):
        mixture, _, ann, _ = random_instance(1, shape=(6, 6))
        cfg = LownucConfig(lam=0.1, alpha0=0.2, max_iters=5, snapshot_every=0)
        _, trace = solve(mixture, ann, cfg)
        lines = trace.to_csv().strip().split("\n")
        assert lines[0] == "iter,seconds,objective,best_objective"
        assert len(lines) == 1 + len(trace.records)

    def test_snapshots_recorded(self):
        mixture, _, ann, _ = random_instance(2, shape=(6, 6))
        cfg = LownucConfig(lam=0.1, alpha0=0.2, max_iters=20, snapshot_every=5)
        _, trace = solve(mixture, ann, cfg)
        assert len(trace.snapshots) >= 4
        times = [t for t, _ in trace.snapshots]
        assert all(b > a for a, b in zip(times, times[1:]))

    def test_rejects_bad_config(self):
        with pytest.raises(ConfigError):
            LownucConfig(lam=-1.0)
        with pytest.raises(ConfigError):
            LownucConfig(alpha0=0.0)
        with pytest.raises(ConfigError):
            LownucConfig(max_iters=0)
