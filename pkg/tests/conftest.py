import sys
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gridpersist.cli import random_module
from gridpersist.core import interval_module


def rect(a, b, p=65521):
    """Interval module on the 2-d box [a, b)."""
    return interval_module(tuple(map(Fraction, a)), tuple(map(Fraction, b)), p=p)


def random_rect(rng, span=8, side_max=4, p=65521):
    """A seeded random 2-d interval module with integer corners."""
    lo = rng.integers(0, span, size=2)
    side = rng.integers(1, side_max + 1, size=2)
    return rect(tuple(int(x) for x in lo),
                tuple(int(a + s) for a, s in zip(lo, side)), p=p)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def small_random_modules(count, seed0=0, n=2, size=3, max_dim=2):
    return [random_module(n, size, max_dim, seed=seed0 + i)
            for i in range(count)]
