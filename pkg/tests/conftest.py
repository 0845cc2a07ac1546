import numpy as np
import pytest

from mpshrink import RawExample, build_dataset
from mpshrink.synth import make_separable


@pytest.fixture
def toy_dataset():
    """Two patterns [1, 1] and [1, -1] after augmentation/reflection."""
    return build_dataset(
        [RawExample(1, ((1, 1.0),)), RawExample(-1, ((1, -1.0),))],
        rho=1.0, delta=0.0)


def random_separable(rng: np.random.Generator, m=None, d=None, margin=None):
    m = m if m is not None else int(rng.integers(10, 80))
    d = d if d is not None else int(rng.integers(2, 8))
    margin = margin if margin is not None else float(rng.uniform(0.1, 0.3))
    return build_dataset(make_separable(m, d, margin, rng), rho=1.0, delta=0.0)
