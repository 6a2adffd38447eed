import numpy as np
import pytest

from annosep.annotation import generate_annotations, compute_targets
from annosep.spectral import MixtureSpectrogram


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_instance(seed, shape=(16, 16), num_sources=2, fraction=0.4, mode="soft"):
    """Seeded mixture with known true split and annotations drawn from it."""
    gen = np.random.default_rng(seed)
    true = [
        MixtureSpectrogram(np.abs(gen.standard_normal(shape)) ** 2)
        for _ in range(num_sources)
    ]
    mixture = MixtureSpectrogram(np.sum([t.values for t in true], axis=0))
    ann = generate_annotations(true, fraction, seed, mode)
    targets = compute_targets(ann, mixture)
    return mixture, true, ann, targets
