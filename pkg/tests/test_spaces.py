"""Metrics, nets, basis balls, and point serialization."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ifs_lab.errors import OutOfRangeError, SpaceMismatchError, TooFineError
from ifs_lab.spaces import (
    ball_contains,
    basis_ball,
    chord_radius,
    circle_point,
    circle_space,
    coord_distance,
    coords_to_points,
    diameter,
    distance,
    epsilon_net,
    grid_point,
    grid_space,
    interval_point,
    interval_space,
    point_from_text,
    point_text,
    points_to_coords,
    random_point,
    sample_in_ball,
    sphere_point,
    sphere_space,
)
from ifs_lab.chains import ball_around
from ifs_lab.symbolic import philox_generator

from conftest import ALL_SPACES


def _random_points(space, n, seed=0):
    gen = philox_generator(seed)
    return [random_point(space, gen) for _ in range(n)]


class TestMetric:
    def test_circle_antipodal_arc(self):
        assert distance(circle_space(), circle_point(0.0), circle_point(math.pi)) == pytest.approx(
            math.pi
        )

    def test_sphere_pole_to_pole(self):
        north = sphere_point(0.0, 0.0, 1.0)
        south = sphere_point(0.0, 0.0, -1.0)
        assert distance(sphere_space(), north, south) == pytest.approx(math.pi)

    def test_grid_metric_is_discrete(self):
        g = grid_space(4)
        assert distance(g, grid_point(0), grid_point(3)) == 1.0
        assert distance(g, grid_point(2), grid_point(2)) == 0.0

    @pytest.mark.parametrize("space", ALL_SPACES, ids=[s.kind for s in ALL_SPACES])
    def test_axioms_on_random_points(self, space):
        pts = _random_points(space, 25, seed=3)
        for x in pts[:8]:
            assert distance(space, x, x) == 0.0
        for x, y, z in zip(pts, pts[8:], pts[16:]):
            dxy = distance(space, x, y)
            assert dxy == pytest.approx(distance(space, y, x))
            assert dxy >= 0.0
            assert dxy <= distance(space, x, z) + distance(space, z, y) + 1e-12
            assert dxy <= diameter(space) + 1e-12

    def test_mismatched_kinds_are_rejected(self):
        with pytest.raises(SpaceMismatchError):
            distance(circle_space(), circle_point(0.0), interval_point(0.5))


class TestEpsilonNet:
    def test_interval_half(self):
        net = epsilon_net(interval_space(), 0.5)
        values = sorted(p.value for p in net)
        assert values == pytest.approx([0.0, 0.5, 1.0])

    def test_grid_net_is_every_node(self):
        net = epsilon_net(grid_space(6), 0.9)
        assert sorted(p.value for p in net) == list(range(6))

    def test_circle_net_size_and_coverage(self):
        eps = 0.01
        space = circle_space()
        net = epsilon_net(space, eps)
        assert len(net) == math.ceil(2 * math.pi / eps)
        angles = np.sort(points_to_coords(space, net))
        gen = philox_generator(12)
        thetas = gen.random(10000) * 2 * math.pi
        idx = np.searchsorted(angles, thetas)
        lo = angles[np.maximum(idx - 1, 0)]
        hi = angles[np.minimum(idx, len(angles) - 1)]
        arc = np.minimum(
            np.minimum(np.abs(thetas - lo), np.abs(thetas - hi)),
            2 * math.pi - np.maximum(np.abs(thetas - lo), np.abs(thetas - hi)),
        )
        assert float(arc.max()) <= eps

    def test_sphere_net_covers_samples(self):
        eps = 0.35
        space = sphere_space()
        coords = points_to_coords(space, epsilon_net(space, eps))
        gen = philox_generator(5)
        for _ in range(500):
            x = random_point(space, gen)
            v = points_to_coords(space, [x])[0]
            best = coord_distance(space, coords, np.broadcast_to(v, coords.shape)).min()
            assert best <= eps

    def test_cap_raises_too_fine(self):
        with pytest.raises(TooFineError):
            epsilon_net(circle_space(), 1e-9, cap=1000)


class TestBasisBalls:
    def test_first_ball_is_level_one(self):
        b = basis_ball(interval_space(), 1)
        assert b.index == 1
        assert b.radius == pytest.approx(0.5)
        assert b.center == epsilon_net(interval_space(), 0.5)[0]

    def test_index_zero_rejected(self):
        with pytest.raises(OutOfRangeError):
            basis_ball(interval_space(), 0)

    def test_interval_point_gets_a_small_ball(self):
        space = interval_space()
        x = interval_point(0.3)
        found = False
        for i in range(1, 201):
            b = basis_ball(space, i)
            if b.radius < 0.1 and ball_contains(space, b, x):
                found = True
                break
        assert found

    def test_one_point_grid_balls_cover_everything(self):
        space = grid_space(1)
        for i in range(1, 10):
            assert ball_contains(space, basis_ball(space, i), grid_point(0))

    def test_ball_around_is_usable_as_membership_test(self):
        space = circle_space()
        ball = ball_around(circle_point(1.0), 0.25)
        assert ball_contains(space, ball, circle_point(1.2))
        assert not ball_contains(space, ball, circle_point(2.0))


class TestChordRadius:
    def test_interval_chord_is_identity(self):
        assert chord_radius(interval_space(), 0.3) == pytest.approx(0.3)

    def test_circle_chord_shrinks_arc(self):
        r = 0.5
        assert chord_radius(circle_space(), r) == pytest.approx(2 * math.sin(r / 2))


class TestPointText:
    @pytest.mark.parametrize("space", ALL_SPACES, ids=[s.kind for s in ALL_SPACES])
    def test_round_trip_random_points(self, space):
        for x in _random_points(space, 20, seed=8):
            back = point_from_text(space, point_text(space, x))
            assert distance(space, x, back) <= 1e-12

    def test_bad_text_raises(self):
        from ifs_lab.errors import IfsLabError

        with pytest.raises(IfsLabError):
            point_from_text(circle_space(), "i=3")


class TestSampling:
    @pytest.mark.parametrize("space", ALL_SPACES, ids=[s.kind for s in ALL_SPACES])
    def test_random_points_lie_in_space(self, space):
        for x in _random_points(space, 30, seed=2):
            # check_point is called inside distance; self distance 0 suffices
            assert distance(space, x, x) == 0.0

    @pytest.mark.parametrize("space", ALL_SPACES, ids=[s.kind for s in ALL_SPACES])
    def test_ball_samples_stay_in_ball(self, space):
        gen = philox_generator(19)
        center = random_point(space, gen)
        r = 0.4
        for _ in range(40):
            u = sample_in_ball(space, center, r, gen)
            assert distance(space, center, u) <= r + 1e-12


class TestCoords:
    @pytest.mark.parametrize("space", ALL_SPACES, ids=[s.kind for s in ALL_SPACES])
    def test_coord_distance_matches_point_distance(self, space):
        pts = _random_points(space, 12, seed=4)
        coords = points_to_coords(space, pts)
        back = coords_to_points(space, coords)
        for a, b in zip(pts, back):
            assert distance(space, a, b) <= 1e-12
        half = len(pts) // 2
        ca, cb = coords[:half], coords[half : 2 * half]
        vec = coord_distance(space, ca, cb)
        for i in range(half):
            assert vec[i] == pytest.approx(distance(space, pts[i], pts[half + i]), abs=1e-12)
