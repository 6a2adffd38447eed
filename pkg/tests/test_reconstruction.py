import numpy as np
import pytest

from annosep.annotation import AnnotationSet, compute_targets, generate_annotations
from annosep.errors import InputError
from annosep.lownuc import SourceEstimates, project
from annosep.reconstruction import (
    lazy_estimates,
    oracle_estimates,
    synthesize_sources,
    wiener_masks,
)
from annosep.spectral import MixtureSpectrogram, istft, power_spectrogram, stft


class TestWienerMasks:
    def test_equal_estimates_give_half(self, rng):
        v = np.abs(rng.standard_normal((5, 5))) + 0.1
        masks = wiener_masks(SourceEstimates([v, v.copy()]))
        for m in masks.masks:
            np.testing.assert_allclose(m, 0.5)

    def test_three_to_one_ratio(self):
        est = SourceEstimates([np.full((2, 2), 3.0), np.full((2, 2), 1.0)])
        masks = wiener_masks(est)
        np.testing.assert_allclose(masks.masks[0], 0.75)
        np.testing.assert_allclose(masks.masks[1], 0.25)

    def test_partition_of_unity(self, rng):
        est = SourceEstimates(
            [np.abs(rng.standard_normal((8, 8))) for _ in range(3)]
        )
        masks = wiener_masks(est)
        total = np.sum(masks.masks, axis=0)
        np.testing.assert_allclose(total, 1.0, atol=1e-12)

    def test_degenerate_bins_get_uniform(self):
        est = SourceEstimates([np.zeros((3, 3)), np.zeros((3, 3))])
        masks = wiener_masks(est)
        for m in masks.masks:
            np.testing.assert_array_equal(m, 0.5)

    def test_rejects_negative(self):
        with pytest.raises(InputError):
            wiener_masks(SourceEstimates([np.array([[-1.0]]), np.array([[1.0]])]))


class TestSynthesizeSources:
    def test_all_mass_to_one_source(self, rng):
        x = rng.standard_normal(3000)
        spec = stft(x)
        est = SourceEstimates(
            [np.ones(spec.shape), np.zeros(spec.shape)]
        )
        signals = synthesize_sources(wiener_masks(est), spec)
        np.testing.assert_allclose(signals[0], istft(spec), atol=1e-12)
        np.testing.assert_allclose(signals[1], 0.0, atol=1e-12)

    def test_uniform_masks_split_evenly(self, rng):
        x = rng.standard_normal(3000)
        spec = stft(x)
        est = SourceEstimates([np.ones(spec.shape), np.ones(spec.shape)])
        signals = synthesize_sources(wiener_masks(est), spec)
        for sig in signals:
            np.testing.assert_allclose(sig, x / 2, atol=1e-6)

    def test_outputs_sum_to_mixture(self, rng):
        x = rng.standard_normal(4000)
        spec = stft(x)
        est = SourceEstimates(
            [np.abs(rng.standard_normal(spec.shape)) for _ in range(2)]
        )
        signals = synthesize_sources(wiener_masks(est), spec)
        total = signals[0] + signals[1]
        assert np.linalg.norm(total - x) / np.linalg.norm(x) <= 1e-6

    def test_shape_mismatch(self, rng):
        spec = stft(rng.standard_normal(2000))
        est = SourceEstimates([np.ones((4, 4)), np.ones((4, 4))])
        with pytest.raises(InputError):
            synthesize_sources(wiener_masks(est), spec)


class TestLazyEstimates:
    def test_even_split_without_annotations(self):
        mixture = MixtureSpectrogram(np.full((3, 3), 4.0))
        ann = AnnotationSet.empty((3, 3), 2)
        targets = compute_targets(ann, mixture)
        est = lazy_estimates(mixture, ann, targets, 2)
        for m in est.matrices:
            np.testing.assert_array_equal(m, 2.0)

    def test_annotated_bins_forced(self):
        mixture = MixtureSpectrogram(np.full((3, 3), 7.0))
        ann = AnnotationSet(
            bins=[[1, 2]], masks=[[1.0, 0.0]], num_sources=2, shape=(3, 3)
        )
        targets = compute_targets(ann, mixture)
        est = lazy_estimates(mixture, ann, targets, 2)
        assert est.matrices[0][1, 2] == 7.0
        assert est.matrices[1][1, 2] == 0.0

    def test_feasible_for_constraints(self, rng):
        true = [
            MixtureSpectrogram(np.abs(rng.standard_normal((6, 6))))
            for _ in range(2)
        ]
        mixture = MixtureSpectrogram(true[0].values + true[1].values)
        ann = generate_annotations(true, 0.5, seed=3)
        targets = compute_targets(ann, mixture)
        est = lazy_estimates(mixture, ann, targets, 2)
        reprojected = project(est, ann, targets)
        for a, b in zip(est.matrices, reprojected.matrices):
            np.testing.assert_array_equal(a, b)


class TestOracleEstimates:
    def test_passthrough(self, rng):
        true = [
            MixtureSpectrogram(np.abs(rng.standard_normal((4, 4))))
            for _ in range(2)
        ]
        est = oracle_estimates(true)
        for m, spec in zip(est.matrices, true):
            np.testing.assert_array_equal(m, spec.values)
        # copies, not views
        est.matrices[0][0, 0] = -1
        assert true[0].values[0, 0] >= 0

    def test_disjoint_support_gives_binary_masks(self):
        a = np.zeros((4, 4))
        b = np.zeros((4, 4))
        a[:2] = 1.0
        b[2:] = 1.0
        masks = wiener_masks(oracle_estimates(
            [MixtureSpectrogram(a), MixtureSpectrogram(b)]
        ))
        assert set(np.unique(masks.masks[0])) <= {0.0, 1.0}
        assert set(np.unique(masks.masks[1])) <= {0.0, 1.0}
