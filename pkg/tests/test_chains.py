"""Relations, chain certificates, hit sets, and delta-chain machinery."""

import math

import numpy as np
import pytest

from ifs_lab.chains import (
    BallTarget,
    ChainCertificate,
    DeltaImage,
    ExactImage,
    HitSet,
    InBall,
    LabeledNetGraph,
    PairExactImage,
    PointSetTarget,
    WholeSpace,
    ball_around,
    chain_recurrent_set,
    check_stable_connection,
    delta_chain_reachable,
    find_chain_connection,
    is_chain_transitive,
    relation_holds,
    replay_delta_witness,
    step_holds,
    step_image,
    syndetic_max_gap,
    target_contains,
    verify_chain,
)
from ifs_lab.errors import InvalidParameterError
from ifs_lab.spaces import (
    circle_point,
    circle_space,
    distance,
    epsilon_net,
    grid_point,
    grid_space,
    interval_point,
    interval_space,
)
from ifs_lab.stochastic import GOLDEN_ANGLE
from ifs_lab.symbolic import FiniteWord, WordStream, sample_word
from ifs_lab.systems import (
    CircleRotation,
    GridPermutation,
    IntervalAffine,
    apply_map,
    iterate_forward,
    uniform_system,
)

from conftest import identity_grid_system
from oracles import net_adjacency, reachable, recurrent_nodes

CIRCLE = circle_space()


def _rotations():
    return uniform_system(CIRCLE, (CircleRotation(GOLDEN_ANGLE), CircleRotation(1.0)))


class TestRelations:
    def test_exact_image_definition(self):
        sys = _rotations()
        x = circle_point(0.3)
        y = apply_map(sys.maps[0], x)
        assert relation_holds(sys, ExactImage(1e-9), 1, x, y)
        assert not relation_holds(sys, ExactImage(1e-9), 2, x, y)

    def test_delta_image_holds_at_distance_zero(self):
        sys = _rotations()
        x = circle_point(0.3)
        for letter in (1, 2):
            y = apply_map(sys.maps[letter - 1], x)
            assert relation_holds(sys, DeltaImage(1e-15), letter, x, y)

    def test_in_ball_needs_both_points(self):
        sys = _rotations()
        ball = ball_around(circle_point(0.0), 0.5)
        inside, outside = circle_point(0.1), circle_point(2.0)
        assert not relation_holds(sys, InBall(ball), 1, inside, outside)
        assert relation_holds(sys, InBall(ball), 1, inside, circle_point(0.2))

    def test_step_holds_pre_applies_map_for_membership_kinds(self):
        sys = _rotations()
        ball = ball_around(circle_point(1.0), 0.05)
        x = circle_point(0.0)
        # f_2(x) = 1.0 sits at the ball center even though x itself is far out
        assert step_holds(sys, InBall(ball), 2, x, circle_point(1.01))
        assert not relation_holds(sys, InBall(ball), 2, x, circle_point(1.01))

    def test_pair_exact_image_checks_both_coordinates(self):
        sys = _rotations()
        x = (circle_point(0.1), circle_point(0.9))
        y = step_image(sys, 1, x)
        assert relation_holds(sys, PairExactImage(1e-9), 1, x, y)
        assert not relation_holds(sys, PairExactImage(1e-9), 1, x, (y[0], circle_point(0.0)))


class TestVerifyChain:
    def test_zero_length_chain(self):
        sys = _rotations()
        x = circle_point(0.0)
        y = apply_map(sys.maps[0], x)
        cert = ChainCertificate(
            direction=FiniteWord((1,)),
            points=(x, y),
            relation=ExactImage(),
            tilde_relation=ExactImage(),
            target=WholeSpace(),
        )
        assert verify_chain(sys, cert)

    def _orbit_cert(self, sys, x, word, target):
        seg = iterate_forward(sys, word, x, len(word))
        return ChainCertificate(
            direction=word,
            points=seg.points,
            relation=ExactImage(),
            tilde_relation=ExactImage(),
            target=target,
        )

    def test_exact_orbit_is_a_chain(self):
        sys = _rotations()
        cert = self._orbit_cert(sys, circle_point(0.2), FiniteWord((1, 2, 2, 1)), WholeSpace())
        assert verify_chain(sys, cert)

    def test_perturbed_interior_point_breaks_delta_chain(self):
        sys = _rotations()
        delta = 1e-3
        word = FiniteWord((1, 2, 1, 2))
        seg = iterate_forward(sys, word, circle_point(0.2), 4)
        pts = list(seg.points)
        good = ChainCertificate(word, tuple(pts), DeltaImage(delta), DeltaImage(delta), WholeSpace())
        assert verify_chain(sys, good)
        pts[2] = circle_point(pts[2].value + 10 * delta)
        bad = ChainCertificate(word, tuple(pts), DeltaImage(delta), DeltaImage(delta), WholeSpace())
        assert not verify_chain(sys, bad)

    def test_final_point_must_lie_in_target(self):
        sys = _rotations()
        far = BallTarget(ball_around(circle_point(3.0), 0.01))
        cert = self._orbit_cert(sys, circle_point(0.2), FiniteWord((1, 2)), far)
        assert not verify_chain(sys, cert)


class TestFindChainConnection:
    def test_whole_space_succeeds_immediately(self):
        sys = _rotations()
        word = sample_word(sys.weights, 8, seed=1)
        cert = find_chain_connection(
            sys, circle_point(0.7), WholeSpace(), ExactImage(), DeltaImage(0.5), word, horizon=8
        )
        assert cert is not None
        assert len(cert.direction) == 1
        assert verify_chain(sys, cert)

    def test_minimal_rotations_reach_a_small_ball(self):
        sys = _rotations()
        target = BallTarget(ball_around(circle_point(4.0), 0.05))
        word = WordStream(seed=5, weights=sys.weights)
        cert = find_chain_connection(
            sys, circle_point(0.0), target, ExactImage(), InBall(target.ball), word, horizon=10**4
        )
        assert cert is not None
        assert verify_chain(sys, cert)
        assert target_contains(CIRCLE, target, cert.points[-1])

    def test_constant_orbit_never_reaches_other_node(self):
        sys = identity_grid_system(3)
        target = BallTarget(ball_around(grid_point(2), 0.5))
        word = sample_word(sys.weights, 50, seed=0)
        cert = find_chain_connection(
            sys, grid_point(0), target, DeltaImage(0.5), DeltaImage(0.5), word, horizon=50
        )
        assert cert is None

    def test_delta_connection_witness_verifies(self):
        sys = _rotations()
        target = BallTarget(ball_around(circle_point(2.0), 0.2))
        word = WordStream(seed=9, weights=sys.weights)
        cert = find_chain_connection(
            sys,
            circle_point(0.0),
            target,
            DeltaImage(0.2),
            DeltaImage(0.2),
            word,
            horizon=60,
            net_eps=0.05,
        )
        assert cert is not None
        assert verify_chain(sys, cert)


class TestStableConnection:
    def test_whole_space_is_stable_for_any_radius(self):
        sys = _rotations()
        cert = find_chain_connection(
            sys,
            circle_point(0.7),
            WholeSpace(),
            ExactImage(),
            DeltaImage(0.5),
            sample_word(sys.weights, 4, seed=2),
            horizon=4,
        )
        assert check_stable_connection(sys, cert, radius=1.0, samples=50, seed=3)

    def test_interior_landing_is_stable_for_small_radius(self):
        sys = uniform_system(CIRCLE, (CircleRotation(1.0),))
        x = circle_point(0.0)
        target = BallTarget(ball_around(circle_point(1.02), 0.05))
        cert = find_chain_connection(
            sys, x, target, ExactImage(), InBall(target.ball), FiniteWord((1,)), horizon=1
        )
        assert cert is not None
        # rotation is an isometry: margin 0.03 absorbs any 0.01 perturbation
        assert check_stable_connection(sys, cert, radius=0.01, samples=100, seed=0)

    def test_boundary_landing_fails_for_large_radius(self):
        # f(t) = t/2 + 1/2 sends 0.5 to 0.75, exactly on the closed boundary
        # of the radius-0.25 set around 0.5 (dyadic floats, no rounding)
        space = interval_space()
        sys = uniform_system(space, (IntervalAffine(0.5, 0.5),))
        x = interval_point(0.5)
        member = interval_point(0.5)
        target = PointSetTarget((member,), radius=0.25)
        cert = find_chain_connection(
            sys, x, target, ExactImage(), ExactImage(), FiniteWord((1,)), horizon=1
        )
        assert cert is not None
        assert distance(space, cert.points[-1], member) == 0.25
        assert not check_stable_connection(sys, cert, radius=0.4, samples=100, seed=0)


class TestHitSets:
    def test_full_range_has_gap_one(self):
        hits = HitSet(tuple(range(0, 51)), horizon=50)
        assert syndetic_max_gap(hits) == 1

    def test_even_indices_have_gap_two(self):
        hits = HitSet(tuple(range(0, 101, 2)), horizon=100)
        assert syndetic_max_gap(hits) == 2

    def test_single_hit_at_zero(self):
        assert syndetic_max_gap(HitSet((0,), horizon=100)) == 101

    def test_empty_hit_set(self):
        assert syndetic_max_gap(HitSet((), horizon=100)) == 101

    def test_indices_are_sorted_and_deduplicated(self):
        hits = HitSet((5, 1, 5, 3), horizon=10)
        assert hits.indices == (1, 3, 5)

    def test_index_beyond_horizon_rejected(self):
        with pytest.raises(Exception):
            HitSet((11,), horizon=10)


class TestDeltaChainReachable:
    def test_one_step_image(self):
        sys = _rotations()
        x = circle_point(0.3)
        y = apply_map(sys.maps[0], x)
        ok, word = delta_chain_reachable(sys, x, y, delta=0.1, eps=0.04, max_len=3)
        assert ok
        assert word is not None and len(word) >= 1

    def test_identity_cannot_jump_two_deltas(self):
        sys = identity_grid_system(4)
        ok, word = delta_chain_reachable(
            sys, grid_point(0), grid_point(3), delta=0.4, eps=0.2, max_len=10
        )
        assert not ok and word is None

    def test_delta_must_exceed_eps(self):
        sys = _rotations()
        with pytest.raises(InvalidParameterError):
            LabeledNetGraph(sys, delta=0.01, eps=0.05)

    def test_fifty_node_permutation_matches_bfs_oracle(self):
        gen = np.random.default_rng(20)
        n = 50
        perm = tuple(int(v) for v in gen.permutation(n))
        sys = uniform_system(grid_space(n), (GridPermutation(perm),))
        _, _, adj = net_adjacency(sys, delta=0.5, eps=0.25)
        for _ in range(40):
            i, j = int(gen.integers(n)), int(gen.integers(n))
            ok, word = delta_chain_reachable(
                sys, grid_point(i), grid_point(j), delta=0.5, eps=0.25, max_len=n + 1
            )
            assert ok == reachable(adj, i, j)
            if ok:
                cur = grid_point(i)
                for letter in word.letters:
                    cur = apply_map(sys.maps[letter - 1], cur)
                assert cur.value == j

    def test_witness_replays_into_certificate(self):
        sys = _rotations()
        x, y = circle_point(0.0), circle_point(2.5)
        ok, word = delta_chain_reachable(sys, x, y, delta=0.15, eps=0.05, max_len=40)
        assert ok
        cert = replay_delta_witness(sys, x, y, word, delta=0.15, eps=0.05)
        assert verify_chain(sys, cert)
        assert target_contains(CIRCLE, cert.target, cert.points[-1])


class TestChainRecurrence:
    def test_identity_makes_every_node_recurrent(self):
        sys = identity_grid_system(5)
        pts = chain_recurrent_set(sys, delta=0.5, eps=0.25)
        assert sorted(p.value for p in pts) == list(range(5))

    def test_contraction_recurrence_concentrates_at_fixed_point(self):
        sys = uniform_system(interval_space(), (IntervalAffine(0.5, 0.0),))
        delta, eps = 0.01, 0.004
        pts = chain_recurrent_set(sys, delta, eps)
        assert pts, "fixed point neighborhood should be recurrent"
        assert max(p.value for p in pts) < 2 * delta
        _, _, adj = net_adjacency(sys, delta, eps)
        net = epsilon_net(interval_space(), eps)
        want = sorted(net[u].value for u in recurrent_nodes(adj))
        assert sorted(p.value for p in pts) == pytest.approx(want)

    def test_irrational_rotation_recurs_everywhere(self):
        sys = uniform_system(CIRCLE, (CircleRotation(GOLDEN_ANGLE),))
        delta, eps = 0.05, 0.02
        pts = chain_recurrent_set(sys, delta, eps)
        assert len(pts) == len(epsilon_net(CIRCLE, eps))


class TestChainTransitivity:
    def test_identity_two_nodes_not_transitive(self):
        sys = identity_grid_system(2)
        assert not is_chain_transitive(sys, delta=0.5, eps=0.25)

    def test_irrational_rotation_is_transitive(self):
        sys = uniform_system(CIRCLE, (CircleRotation(GOLDEN_ANGLE),))
        assert is_chain_transitive(sys, delta=0.05, eps=0.02)

    def test_full_cycle_permutation_is_transitive(self):
        n = 7
        perm = tuple((i + 1) % n for i in range(n))
        sys = uniform_system(grid_space(n), (GridPermutation(perm),))
        assert is_chain_transitive(sys, delta=0.5, eps=0.25)


class TestTargets:
    def test_ball_target_membership_is_strict(self):
        target = BallTarget(ball_around(circle_point(0.0), 0.5))
        assert target_contains(CIRCLE, target, circle_point(0.49))
        assert not target_contains(CIRCLE, target, circle_point(0.5))

    def test_point_set_target_membership_is_closed(self):
        space = interval_space()
        target = PointSetTarget((interval_point(0.5),), radius=0.25)
        assert target_contains(space, target, interval_point(0.75))
        assert not target_contains(space, target, interval_point(0.76))
        ball = BallTarget(ball_around(interval_point(0.5), 0.25))
        assert not target_contains(space, ball, interval_point(0.75))

    def test_whole_space_contains_everything(self):
        assert target_contains(CIRCLE, WholeSpace(), circle_point(2.2))
