import numpy as np
import pytest

from annosep.annotation import (
    AnnotationSet,
    annotations_from_json,
    annotations_to_json,
    compute_targets,
    generate_annotations,
    validate,
)
from annosep.errors import InputError
from annosep.spectral import MixtureSpectrogram


def two_specs(shape=(10, 10), seed=0):
    rng = np.random.default_rng(seed)
    return [
        MixtureSpectrogram(np.abs(rng.standard_normal(shape)) + 0.1)
        for _ in range(2)
    ]


class TestGenerateAnnotations:
    def test_fraction_zero_gives_empty_set(self):
        ann = generate_annotations(two_specs(), 0.0, seed=1)
        assert len(ann) == 0

    def test_fraction_one_equal_sources_gives_half_masks(self):
        rng = np.random.default_rng(3)
        base = np.abs(rng.standard_normal((6, 6))) + 0.5
        specs = [MixtureSpectrogram(base), MixtureSpectrogram(base.copy())]
        ann = generate_annotations(specs, 1.0, seed=0, mode="soft")
        assert len(ann) == 36
        np.testing.assert_allclose(ann.masks, 0.5)

    def test_count_and_determinism(self):
        specs = two_specs()
        ann1 = generate_annotations(specs, 0.4, seed=7)
        ann2 = generate_annotations(specs, 0.4, seed=7)
        assert len(ann1) == 40
        assert np.array_equal(ann1.bins, ann2.bins)
        np.testing.assert_array_equal(ann1.masks, ann2.masks)

    def test_different_seeds_differ(self):
        specs = two_specs()
        ann1 = generate_annotations(specs, 0.3, seed=1)
        ann2 = generate_annotations(specs, 0.3, seed=2)
        assert not np.array_equal(ann1.bins, ann2.bins)

    def test_soft_mode_skips_all_zero_bins(self):
        values = np.ones((5, 5))
        values[0, :] = 0.0  # a whole silent row in every source
        specs = [MixtureSpectrogram(values), MixtureSpectrogram(values.copy())]
        ann = generate_annotations(specs, 0.8, seed=0, mode="soft")
        assert len(ann) == 20
        assert not np.any(ann.bins[:, 0] == 0)

    def test_binary_mode_one_hot(self):
        specs = two_specs(seed=5)
        ann = generate_annotations(specs, 0.5, seed=5, mode="binary")
        assert np.all(np.isin(ann.masks, (0.0, 1.0)))
        np.testing.assert_array_equal(ann.masks.sum(axis=1), 1.0)

    def test_binary_ties_pick_lowest_index(self):
        base = np.ones((4, 4))
        specs = [MixtureSpectrogram(base), MixtureSpectrogram(base.copy())]
        ann = generate_annotations(specs, 1.0, seed=0, mode="binary")
        np.testing.assert_array_equal(ann.masks[:, 0], 1.0)

    def test_rejects_bad_fraction_and_shapes(self):
        specs = two_specs()
        with pytest.raises(InputError):
            generate_annotations(specs, 1.5, seed=0)
        mismatched = [specs[0], MixtureSpectrogram(np.ones((3, 3)))]
        with pytest.raises(InputError):
            generate_annotations(mismatched, 0.2, seed=0)


class TestComputeTargets:
    def test_hard_mask(self):
        ann = AnnotationSet(
            bins=[[2, 3]], masks=[[1.0, 0.0]], num_sources=2, shape=(5, 5)
        )
        values = np.zeros((5, 5))
        values[2, 3] = 7.0
        targets = compute_targets(ann, MixtureSpectrogram(values))
        assert targets.values[0, 0] == 7.0
        assert targets.values[0, 1] == 0.0

    def test_fractional_mask(self):
        ann = AnnotationSet(
            bins=[[0, 0]], masks=[[0.25, 0.75]], num_sources=2, shape=(2, 2)
        )
        values = np.full((2, 2), 4.0)
        targets = compute_targets(ann, MixtureSpectrogram(values))
        assert targets.values[0, 0] == pytest.approx(1.0)
        assert targets.values[0, 1] == pytest.approx(3.0)

    def test_targets_sum_to_mixture_on_annotated_bins(self, rng):
        specs = two_specs(seed=9)
        mixture = MixtureSpectrogram(specs[0].values + specs[1].values)
        ann = generate_annotations(specs, 0.5, seed=9, mode="soft")
        targets = compute_targets(ann, mixture)
        mix_at = mixture.values[ann.bins[:, 0], ann.bins[:, 1]]
        np.testing.assert_allclose(targets.values.sum(axis=1), mix_at, rtol=1e-9)

    def test_shape_mismatch(self):
        ann = AnnotationSet.empty((4, 4), 2)
        with pytest.raises(InputError):
            compute_targets(ann, MixtureSpectrogram(np.ones((3, 3))))

    def test_dense_support(self):
        ann = AnnotationSet(
            bins=[[1, 1]], masks=[[0.5, 0.5]], num_sources=2, shape=(3, 3)
        )
        targets = compute_targets(ann, MixtureSpectrogram(np.full((3, 3), 2.0)))
        dense = targets.dense(0)
        assert dense[1, 1] == 1.0
        assert dense.sum() == 1.0


class TestValidate:
    def test_well_formed_is_clean(self):
        specs = two_specs()
        ann = generate_annotations(specs, 0.4, seed=0)
        assert validate(ann) == []

    def test_sum_violation_names_bin(self):
        ann = AnnotationSet(
            bins=[[2, 5]], masks=[[0.6, 0.6]], num_sources=2, shape=(8, 8)
        )
        problems = validate(ann)
        assert len(problems) == 1
        assert "(2, 5)" in problems[0]
        assert "sum" in problems[0]

    def test_duplicate_bin(self):
        ann = AnnotationSet(
            bins=[[1, 1], [1, 1]],
            masks=[[0.5, 0.5], [0.5, 0.5]],
            num_sources=2,
            shape=(4, 4),
        )
        problems = validate(ann)
        assert any("duplicate" in p for p in problems)

    def test_out_of_bounds_and_range(self):
        ann = AnnotationSet(
            bins=[[9, 0]], masks=[[1.5, -0.5]], num_sources=2, shape=(4, 4)
        )
        problems = validate(ann)
        assert any("out of bounds" in p for p in problems)
        assert any("outside [0, 1]" in p for p in problems)


class TestJsonFormat:
    def test_round_trip_bit_exact(self):
        specs = two_specs(seed=11)
        ann = generate_annotations(specs, 0.4, seed=11, mode="soft")
        text = annotations_to_json(ann)
        back = annotations_from_json(text)
        assert back.shape == ann.shape
        assert back.num_sources == ann.num_sources
        assert np.array_equal(back.bins, ann.bins)
        assert np.array_equal(back.masks, ann.masks)  # bit exact
        # serializing again reproduces the same bytes
        assert annotations_to_json(back) == text

    def test_empty_set(self):
        ann = AnnotationSet.empty((3, 4), 2)
        back = annotations_from_json(annotations_to_json(ann))
        assert len(back) == 0
        assert back.shape == (3, 4)

    def test_malformed_json_raises(self):
        with pytest.raises(InputError):
            annotations_from_json("{not json")
        with pytest.raises(InputError):
            annotations_from_json('{"shape": [2, 2]}')
