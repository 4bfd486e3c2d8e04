"""Monte Carlo verification of the almost-sure statements.

Trial t of every estimator draws its letters from the Philox stream
(base_seed, t), so results are reproducible and independent of evaluation
order or thread count; IFS_LAB_THREADS only caps the worker threads that
process disjoint trial blocks, and the reduction is ordered by trial index.

Tail-bound convention: a hit at chain index j means the orbit point y_{j+1}
realizes the tilde step into the target. The table row for horizon n counts
trials with no hit at any j <= n + window, the window set of the proof, and
compares against the bound (1 - p_lower)^(1 + floor(n / window)) with
p_lower = (min_i p_i)^window.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .chains import (
    BallTarget,
    DeltaImage,
    ExactImage,
    InBall,
    PointSetTarget,
    RelationSpec,
    TargetSet,
    WholeSpace,
    HitSet,
    find_chain_connection,
)
from .errors import InvalidParameterError, UnsupportedError
from .spaces import (
    SpaceDescriptor,
    SpacePoint,
    check_point,
    chord_radius,
    circle_point,
    coord_distance,
    coord_distance_to_point,
    embed_coords,
    net_coords,
    points_to_coords,
    random_point,
    sphere_point,
)
from .symbolic import (
    ProbabilityVector,
    WordStream,
    letters_from_uniform,
    philox_generator,
)
from .systems import (
    CircleRotation,
    IfsSystem,
    SphereRotation,
    apply_inverse_coords,
    apply_map_coords,
    is_invertible_on_space,
    make_north_south,
)

# golden angle: the canonical irrational rotation parameter
GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))

_LETTER_CHUNK = 512


# ---------------------------------------------------------------------------
# branch properties


@dataclass(frozen=True)
class ReachesTarget:
    target: TargetSet
    rel: RelationSpec
    tilde: RelationSpec
    horizon: int

    def __post_init__(self):
        if self.horizon < 1:
            raise InvalidParameterError(f"horizon must be >= 1, got {self.horizon}")


@dataclass(frozen=True)
class EpsDense:
    eps: float
    horizon: int

    def __post_init__(self):
        if self.eps <= 0.0 or self.horizon < 1:
            raise InvalidParameterError("EpsDense needs eps > 0 and horizon >= 1")


@dataclass(frozen=True)
class ProximalPair:
    y: SpacePoint
    tol: float
    horizon: int

    def __post_init__(self):
        if self.tol <= 0.0 or self.horizon < 1:
            raise InvalidParameterError("ProximalPair needs tol > 0 and horizon >= 1")


@dataclass(frozen=True)
class FirstLetterIs:
    symbol: int

    def __post_init__(self):
        if self.symbol < 1:
            raise InvalidParameterError(f"symbol must be >= 1, got {self.symbol}")


BranchProperty = ReachesTarget | EpsDense | ProximalPair | FirstLetterIs


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class EstimationReport:
    trials: int
    successes: int
    frequency: float
    standard_error: float
    base_seed: int
    params: dict
    extras: dict

    @property
    def near_zero_one(self) -> bool:
        """Within 3 standard errors of 0 or of 1 (the dichotomy probe)."""
        band = 3.0 * self.standard_error
        return self.frequency <= band or 1.0 - self.frequency <= band


def _make_report(trials, successes, base_seed, params, extras=None) -> EstimationReport:
    freq = successes / trials
    se = math.sqrt(freq * (1.0 - freq) / trials)
    return EstimationReport(
        trials=trials,
        successes=int(successes),
        frequency=freq,
        standard_error=se,
        base_seed=base_seed,
        params=params,
        extras=extras or {},
    )


@dataclass(frozen=True)
class TailBoundReport:
    window: int
    p_lower: float
    rows: tuple[tuple[int, float, float], ...]  # (n, empirical miss rate, bound)
    trials: int
    base_seed: int
    flagged: int  # trials with no hit anywhere in the sampled range


@dataclass(frozen=True)
class ProbeReport:
    passed: bool
    coverages: tuple[float, ...]
    eps: float
    steps: int
    points: int
    base_seed: int


# ---------------------------------------------------------------------------
# trial blocks and the vectorized orbit engine


def _worker_count(trials: int) -> int:
    desired = min(os.cpu_count() or 1, 8, max(1, trials // 64))
    env = os.environ.get("IFS_LAB_THREADS")
    if env is not None:
        try:
            cap = int(env)
        except ValueError as exc:
            raise InvalidParameterError(f"IFS_LAB_THREADS must be an integer, got {env!r}") from exc
        if cap < 1:
            raise InvalidParameterError(f"IFS_LAB_THREADS must be >= 1, got {cap}")
        desired = min(desired, cap)
    return max(1, desired)


def _map_blocks(trials: int, fn):
    """Run fn(first_trial, count) over contiguous blocks; ordered results."""
    workers = _worker_count(trials)
    if workers == 1:
        return [fn(0, trials)]
    size = (trials + workers - 1) // workers
    ranges = [(i, min(size, trials - i)) for i in range(0, trials, size)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda r: fn(*r), ranges))


def _letter_rows(weights, base_seed, first_stream, count, total):
    """Yield (offset, letters matrix of shape (count, <=chunk)) column blocks."""
    gens = [philox_generator(base_seed, first_stream + t) for t in range(count)]
    done = 0
    while done < total:
        width = min(_LETTER_CHUNK, total - done)
        u = np.empty((count, width), dtype=np.float64)
        for i, g in enumerate(gens):
            u[i] = g.random(width)
        yield done, letters_from_uniform(weights, u)
        done += width


def _tile_state(space: SpaceDescriptor, x: SpacePoint, count: int) -> np.ndarray:
    row = points_to_coords(space, [x])
    if space.kind == "sphere2":
        return np.tile(row, (count, 1))
    return np.repeat(row, count)


def _step_state(sys: IfsSystem, state: np.ndarray, letters_col: np.ndarray) -> np.ndarray:
    for v in range(1, sys.k + 1):
        mask = letters_col == v
        if mask.any():
            state[mask] = apply_map_coords(sys.maps[v - 1], state[mask])
    return state


def _membership_fn(space: SpaceDescriptor, target: TargetSet, tilde: RelationSpec):
    """Vectorized test: orbit point realizes the tilde step into the target."""
    if not isinstance(tilde, (ExactImage, DeltaImage, InBall)):
        raise UnsupportedError(f"no vectorized hit test for tilde {tilde!r}")
    checks = []
    if isinstance(tilde, InBall):
        b = tilde.ball
        checks.append(lambda c: coord_distance_to_point(space, c, b.center) < b.radius)
    if isinstance(target, BallTarget):
        b = target.ball
        checks.append(lambda c: coord_distance_to_point(space, c, b.center) < b.radius)
    elif isinstance(target, PointSetTarget):
        pts, r = target.points, target.radius

        def in_point_set(c):
            d = coord_distance_to_point(space, c, pts[0])
            for p in pts[1:]:
                d = np.minimum(d, coord_distance_to_point(space, c, p))
            return d <= r

        checks.append(in_point_set)
    elif not isinstance(target, WholeSpace):
        raise UnsupportedError(f"unknown target {target!r}")

    def fn(coords):
        out = np.ones(len(np.atleast_1d(coords)) if space.kind != "sphere2" else coords.shape[0], dtype=bool)
        for chk in checks:
            out &= chk(coords)
        return out

    return fn


def _orbit_first_hit(sys, x, trials, base_seed, steps, hit_fn) -> np.ndarray:
    """Per trial: smallest orbit index i in [1, steps] with hit_fn(y_i), else steps+1."""

    def block(first, count):
        state = _tile_state(sys.space, x, count)
        first_hit = np.full(count, steps + 1, dtype=np.int64)
        pending = np.ones(count, dtype=bool)
        for offset, letters in _letter_rows(sys.weights, base_seed, first, count, steps):
            for j in range(letters.shape[1]):
                _step_state(sys, state, letters[:, j])
                idx = offset + j + 1
                hits = hit_fn(state) & pending
                if hits.any():
                    first_hit[hits] = idx
                    pending &= ~hits
            if not pending.any():
                break
        return first_hit

    return np.concatenate(_map_blocks(trials, block))


def _orbit_hit_matrix(sys, x, trials, base_seed, steps, hit_fn) -> np.ndarray:
    """Boolean (trials, steps): column i-1 tells whether y_i hit, i = 1..steps."""

    def block(first, count):
        state = _tile_state(sys.space, x, count)
        hits = np.zeros((count, steps), dtype=bool)
        for offset, letters in _letter_rows(sys.weights, base_seed, first, count, steps):
            for j in range(letters.shape[1]):
                _step_state(sys, state, letters[:, j])
                hits[:, offset + j] = hit_fn(state)
        return hits

    return np.vstack(_map_blocks(trials, block))


def record_orbits(sys: IfsSystem, x: SpacePoint, trials: int, steps: int, base_seed: int, first_stream: int = 0) -> np.ndarray:
    """Orbit coordinates for trial streams first_stream..: (trials, steps+1[, 3])."""
    state = _tile_state(sys.space, x, trials)
    if sys.space.kind == "sphere2":
        rec = np.empty((trials, steps + 1, 3), dtype=np.float64)
    else:
        rec = np.empty((trials, steps + 1), dtype=state.dtype)
    rec[:, 0] = state
    for offset, letters in _letter_rows(sys.weights, base_seed, first_stream, trials, steps):
        for j in range(letters.shape[1]):
            _step_state(sys, state, letters[:, j])
            rec[:, offset + j + 1] = state
    return rec


# ---------------------------------------------------------------------------
# density coverage


def _coverage_of_rows(space: SpaceDescriptor, rows: np.ndarray, eps: float) -> np.ndarray:
    """Per row: fraction of eps-net nodes within eps of the row's points."""
    if space.kind == "grid":
        n = net_coords(space, eps).shape[0]
        return np.array([np.unique(row).size / n for row in rows])
    net_emb = embed_coords(space, net_coords(space, eps))
    chord = chord_radius(space, eps)
    out = np.empty(rows.shape[0], dtype=np.float64)
    for i in range(rows.shape[0]):
        tree = cKDTree(embed_coords(space, rows[i]))
        d, _ = tree.query(net_emb, k=1)
        out[i] = float(np.mean(d <= chord + 1e-12))
    return out


# ---------------------------------------------------------------------------
# estimators


def estimate_branch_probability(
    sys: IfsSystem, x: SpacePoint, prop: BranchProperty, trials: int, base_seed: int
) -> EstimationReport:
    """Frequency of sampled branches satisfying the property; trial t = stream t."""
    if trials < 1:
        raise InvalidParameterError(f"trials must be >= 1, got {trials}")
    check_point(sys.space, x)
    if isinstance(prop, FirstLetterIs):
        if prop.symbol > sys.k:
            raise InvalidParameterError(f"symbol {prop.symbol} outside 1..{sys.k}")

        def block(first, count):
            hits = 0
            for t in range(count):
                g = philox_generator(base_seed, first + t)
                letter = int(letters_from_uniform(sys.weights, g.random(1))[0])
                hits += letter == prop.symbol
            return hits

        successes = sum(_map_blocks(trials, block))
        return _make_report(trials, successes, base_seed, {"kind": "first_letter", "symbol": prop.symbol})

    if isinstance(prop, EpsDense):
        return _density_report(sys, x, prop.eps, prop.horizon, trials, base_seed)

    if isinstance(prop, ProximalPair):
        return verify_proximality(sys, x, prop.y, prop.tol, prop.horizon, trials, base_seed)

    if isinstance(prop, ReachesTarget):
        params = {
            "kind": "reaches_target",
            "horizon": prop.horizon,
            "rel": repr(prop.rel),
            "tilde": repr(prop.tilde),
            "target": repr(prop.target),
        }
        if isinstance(prop.rel, ExactImage):
            # the chain rides the orbit: vectorized hit detection
            hit_fn = _membership_fn(sys.space, prop.target, prop.tilde)
            first_hit = _orbit_first_hit(sys, x, trials, base_seed, prop.horizon + 1, hit_fn)
            successes = int((first_hit <= prop.horizon + 1).sum())
            return _make_report(trials, successes, base_seed, params)
        # general relation kinds: full search per trial
        successes = 0
        for t in range(trials):
            word = WordStream(seed=base_seed, weights=sys.weights, stream=t)
            found = find_chain_connection(
                sys, x, prop.target, prop.rel, prop.tilde, word, prop.horizon
            )
            successes += found is not None
        return _make_report(trials, successes, base_seed, params)

    raise InvalidParameterError(f"unknown branch property {prop!r}")


def _density_report(sys, x, eps, horizon, trials, base_seed) -> EstimationReport:
    def block(first, count):
        rec = record_orbits(sys, x, count, horizon, base_seed, first_stream=first)
        return _coverage_of_rows(sys.space, rec, eps)

    coverage = np.concatenate(_map_blocks(trials, block))
    successes = int((coverage >= 1.0).sum())
    return _make_report(
        trials,
        successes,
        base_seed,
        {"kind": "eps_dense", "eps": eps, "horizon": horizon},
        extras={"coverage": tuple(float(c) for c in coverage)},
    )


def verify_chaos_game_density(
    sys: IfsSystem, x: SpacePoint, eps: float, horizon: int, trials: int, base_seed: int
) -> EstimationReport:
    """Frequency of trials whose orbit segment is eps-dense (covers the eps-net)."""
    if eps <= 0.0 or horizon < 1:
        raise InvalidParameterError("density check needs eps > 0 and horizon >= 1")
    if trials < 1:
        raise InvalidParameterError(f"trials must be >= 1, got {trials}")
    check_point(sys.space, x)
    return _density_report(sys, x, eps, horizon, trials, base_seed)


def tail_bound_report(
    sys: IfsSystem,
    x: SpacePoint,
    target: TargetSet,
    rel: RelationSpec,
    tilde: RelationSpec,
    window: int,
    horizons,
    trials: int,
    base_seed: int,
) -> TailBoundReport:
    """Empirical miss rates against (1 - p_lower)^(1 + floor(n/window)).

    Row n counts trials with no hit at any chain index j <= n + window; see
    the module docstring for the window convention.
    """
    if window < 1:
        raise InvalidParameterError(f"window must be >= 1, got {window}")
    horizons = [int(n) for n in horizons]
    if not horizons or any(n < 0 for n in horizons):
        raise InvalidParameterError("horizons must be a nonempty list of n >= 0")
    if trials < 1:
        raise InvalidParameterError(f"trials must be >= 1, got {trials}")
    if not isinstance(rel, ExactImage):
        raise UnsupportedError("tail bounds ride exact-image chains along the orbit")
    check_point(sys.space, x)
    steps = max(horizons) + window + 1
    hit_fn = _membership_fn(sys.space, target, tilde)
    first_hit = _orbit_first_hit(sys, x, trials, base_seed, steps, hit_fn)
    p_lower = min(sys.weights.p) ** window
    rows = []
    for n in horizons:
        miss = float((first_hit > n + window + 1).mean())
        bound = (1.0 - p_lower) ** (1 + n // window)
        rows.append((n, miss, bound))
    flagged = int((first_hit > steps).sum())
    return TailBoundReport(
        window=window,
        p_lower=p_lower,
        rows=tuple(rows),
        trials=trials,
        base_seed=base_seed,
        flagged=flagged,
    )


def sample_hit_sets(
    sys: IfsSystem,
    x: SpacePoint,
    target: TargetSet,
    tilde: RelationSpec,
    horizon: int,
    trials: int,
    base_seed: int,
) -> list[HitSet]:
    """Per trial: the chain indices j in [0, horizon] whose tilde step hits."""
    if horizon < 1:
        raise InvalidParameterError(f"horizon must be >= 1, got {horizon}")
    check_point(sys.space, x)
    hit_fn = _membership_fn(sys.space, target, tilde)
    hits = _orbit_hit_matrix(sys, x, trials, base_seed, horizon + 1, hit_fn)
    out = []
    for t in range(trials):
        idx = np.nonzero(hits[t])[0]  # orbit index i = idx + 1, chain index j = idx
        out.append(HitSet(indices=tuple(int(v) for v in idx), horizon=horizon))
    return out


def verify_proximality(
    sys: IfsSystem,
    x: SpacePoint,
    y: SpacePoint,
    tol: float,
    horizon: int,
    trials: int,
    base_seed: int,
) -> EstimationReport:
    """Frequency of branches with min_{i <= H} d(f^i(x), f^i(y)) < tol.

    Trials stop stepping once every one has succeeded, so the reported
    minima are the minima observed up to the success step (upper bounds on
    the full-horizon minima); frequencies are unaffected.
    """
    if tol <= 0.0 or horizon < 1:
        raise InvalidParameterError("proximality needs tol > 0 and horizon >= 1")
    if trials < 1:
        raise InvalidParameterError(f"trials must be >= 1, got {trials}")
    check_point(sys.space, x)
    check_point(sys.space, y)

    def block(first, count):
        sx = _tile_state(sys.space, x, count)
        sy = _tile_state(sys.space, y, count)
        best = coord_distance(sys.space, sx, sy).astype(np.float64)
        for offset, letters in _letter_rows(sys.weights, base_seed, first, count, horizon):
            for j in range(letters.shape[1]):
                _step_state(sys, sx, letters[:, j])
                _step_state(sys, sy, letters[:, j])
                np.minimum(best, coord_distance(sys.space, sx, sy), out=best)
            if (best < tol).all():
                break
        return best

    minima = np.concatenate(_map_blocks(trials, block))
    successes = int((minima < tol).sum())
    return _make_report(
        trials,
        successes,
        base_seed,
        {"kind": "proximal_pair", "tol": tol, "horizon": horizon},
        extras={
            "median_min": float(np.median(minima)),
            "minima": tuple(float(v) for v in minima),
        },
    )


# ---------------------------------------------------------------------------
# the window helper


def choose_window(
    sys: IfsSystem,
    x: SpacePoint,
    target: TargetSet,
    tilde: RelationSpec,
    trials: int = 32,
    horizon: int = 2048,
    max_window: int | None = None,
    base_seed: int = 0,
) -> int:
    """Smallest window L verified on a sampled orbit set.

    Samples orbit branches from x and returns the smallest L such that every
    sampled orbit state saw its own continuation hit the target within L
    further steps (states past a trial's last observed hit are censored).
    Each such continuation is itself a hitting word of length <= L, so the
    window hypothesis of the tail bound holds on the sample by construction;
    how well L transfers to fresh branches is exactly what the tail-bound
    and gap reports then measure.
    """
    check_point(sys.space, x)
    if trials < 1 or horizon < 1:
        raise InvalidParameterError("window search needs trials >= 1 and horizon >= 1")
    cap = horizon if max_window is None else max_window
    hit_fn = _membership_fn(sys.space, target, tilde)
    hits = _orbit_hit_matrix(sys, x, trials, base_seed, horizon, hit_fn)
    worst = 0
    for t in range(trials):
        idx = np.nonzero(hits[t])[0]  # hit at orbit index idx + 1
        if idx.size == 0:
            raise InvalidParameterError(
                f"trial {t} saw no hit within {horizon} steps; no window is verifiable"
            )
        need = int(idx[0]) + 1
        if idx.size > 1:
            need = max(need, int(np.diff(idx).max()))
        worst = max(worst, need)
    if worst > cap:
        raise InvalidParameterError(f"verified window {worst} exceeds max_window {cap}")
    return worst


# ---------------------------------------------------------------------------
# the two-map scenario of the strong-proximality theorem


def build_theorem_c_scenario(
    space: SpaceDescriptor,
    lam: float,
    alpha: float | None = None,
    axis: tuple[float, float, float] = (1.0, 0.0, 0.0),
) -> IfsSystem:
    """{rotation(alpha), north-south(p, lam)} with uniform weights.

    alpha defaults to the golden angle, the shipped irrational-rotation
    surrogate; rationality of a caller-supplied alpha is the caller's
    responsibility, but an angle that is 0 mod 2pi is rejected outright. On
    the sphere the rotation axis is orthogonal to the north-south pole by
    default so the two maps generate motion across latitudes.
    """
    if alpha is None:
        alpha = GOLDEN_ANGLE
    if not 0.0 < lam < 1.0:
        raise InvalidParameterError(f"multiplier must lie in (0,1), got {lam}")
    if abs(alpha) % (2.0 * math.pi) < 1e-12:
        raise InvalidParameterError("rotation angle must be nonzero mod 2pi")
    if space.kind == "circle":
        pole = circle_point(0.0)
        maps = (CircleRotation(alpha), make_north_south(space, pole, lam))
    elif space.kind == "sphere2":
        pole = sphere_point(0.0, 0.0, 1.0)
        maps = (SphereRotation(axis, alpha), make_north_south(space, pole, lam))
    else:
        raise UnsupportedError(f"scenario lives on circle or sphere, not {space.kind}")
    return IfsSystem(space=space, maps=maps, weights=ProbabilityVector.uniform(2))


def backward_minimality_probe(
    sys: IfsSystem,
    eps: float = 0.05,
    steps: int = 10**4,
    points: int = 20,
    base_seed: int = 0,
) -> ProbeReport:
    """Are backward orbits from sampled points eps-dense within the step budget?

    Point t draws its start from stream 2^32 + t and its inverse letters
    from stream t of the same base seed.
    """
    for m in sys.maps:
        if not is_invertible_on_space(m):
            raise UnsupportedError(f"map {m!r} is not invertible on the whole space")
    if eps <= 0.0 or steps < 1 or points < 1:
        raise InvalidParameterError("probe needs eps > 0, steps >= 1, points >= 1")
    starts = [random_point(sys.space, philox_generator(base_seed, 2**32 + t)) for t in range(points)]
    state = (
        np.vstack([points_to_coords(sys.space, [p]) for p in starts])
        if sys.space.kind == "sphere2"
        else np.concatenate([points_to_coords(sys.space, [p]) for p in starts])
    )
    if sys.space.kind == "sphere2":
        rec = np.empty((points, steps + 1, 3), dtype=np.float64)
    else:
        rec = np.empty((points, steps + 1), dtype=state.dtype)
    rec[:, 0] = state
    for offset, letters in _letter_rows(sys.weights, base_seed, 0, points, steps):
        for j in range(letters.shape[1]):
            col = letters[:, j]
            for v in range(1, sys.k + 1):
                mask = col == v
                if mask.any():
                    state[mask] = apply_inverse_coords(sys.maps[v - 1], state[mask])
            rec[:, offset + j + 1] = state
    coverage = _coverage_of_rows(sys.space, rec, eps)
    return ProbeReport(
        passed=bool((coverage >= 1.0).all()),
        coverages=tuple(float(c) for c in coverage),
        eps=eps,
        steps=steps,
        points=points,
        base_seed=base_seed,
    )
