import numpy as np
import pytest

from despeckle import ImageGrid


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(1234))


def random_positive_grid(rng, height, width, lo=20.0, hi=240.0, spacing=1.0):
    return ImageGrid(rng.uniform(lo, hi, size=(height, width)), spacing)
