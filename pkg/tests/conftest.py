"""Shared builders for the test suite."""

import numpy as np
import pytest

from ifs_lab.spaces import circle_space, grid_space, interval_space, sphere_space
from ifs_lab.stochastic import GOLDEN_ANGLE
from ifs_lab.systems import CircleRotation, GridPermutation, IntervalAffine, uniform_system


@pytest.fixture
def two_rotation_system():
    """Minimal circle pair: golden-angle rotation and rotation by 1.0 rad."""
    return uniform_system(circle_space(), (CircleRotation(GOLDEN_ANGLE), CircleRotation(1.0)))


@pytest.fixture
def halving_system():
    """Single contraction t -> t/2 on the interval."""
    return uniform_system(interval_space(), (IntervalAffine(0.5, 0.0),))


def identity_grid_system(n):
    return uniform_system(grid_space(n), (GridPermutation(tuple(range(n))),))


ALL_SPACES = (circle_space(), sphere_space(), interval_space(), grid_space(7))


def space_ids():
    return [s.kind for s in ALL_SPACES]


@pytest.fixture(params=ALL_SPACES, ids=space_ids())
def any_space(request):
    return request.param


def rng(seed=0):
    return np.random.default_rng(seed)
