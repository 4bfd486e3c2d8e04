"""Chains in a direction, chain connections, delta-chain reachability, recurrence.

Step semantics, pinned once: a chain step with letter l from point a to point
b realizes the condition "f_l(a) REL b". Relation kinds that already apply
the step map inside their predicate (ExactImage, DeltaImage, PairExactImage)
are evaluated as relation_holds(rel, l, a, b); membership kinds (InBall,
PairInBall) ignore the letter, so the step map is applied first and the
relation is evaluated between f_l(a) and b.

A certificate with direction (w_1 .. w_{n+1}) and points (x_0 .. x_{n+1}) is
an n-step chain with one final tilde step: interior steps i = 0..n-1 use the
chain relation with letter w_{i+1}, the last letter w_{n+1} drives the tilde
step, and x_{n+1} must lie in the target. Pair relations act on 2-tuples of
points; the step map applies to both coordinates with the same letter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import InvalidParameterError, UnsupportedError
from .spaces import (
    BasisBall,
    SpaceDescriptor,
    SpacePoint,
    chord_radius,
    check_point,
    coord_distance,
    coord_distance_to_point,
    coords_to_points,
    distance,
    embed_coords,
    net_coords,
    points_to_coords,
    sample_in_ball,
    NET_CAP,
)
from .symbolic import FiniteWord, WordStream, philox_generator
from .systems import IfsSystem, apply_map, apply_map_coords

# ---------------------------------------------------------------------------
# relations


@dataclass(frozen=True)
class ExactImage:
    """f_l(x) within tolerance of y; the float stand-in for y = f_l(x)."""

    tolerance: float = 1e-9

    def __post_init__(self):
        if self.tolerance < 0.0:
            raise InvalidParameterError(f"tolerance must be >= 0, got {self.tolerance}")


@dataclass(frozen=True)
class DeltaImage:
    """f_l(x) within open distance delta of y."""

    delta: float

    def __post_init__(self):
        if self.delta <= 0.0:
            raise InvalidParameterError(f"delta must be > 0, got {self.delta}")


@dataclass(frozen=True)
class InBall:
    """Both members lie in the ball; the step letter is ignored."""

    ball: BasisBall


@dataclass(frozen=True)
class PairExactImage:
    """Componentwise ExactImage on pairs, same letter on both coordinates."""

    tolerance: float = 1e-9

    def __post_init__(self):
        if self.tolerance < 0.0:
            raise InvalidParameterError(f"tolerance must be >= 0, got {self.tolerance}")


@dataclass(frozen=True)
class PairInBall:
    """All coordinates of both pairs lie in the ball; letter ignored."""

    ball: BasisBall


RelationSpec = ExactImage | DeltaImage | InBall | PairExactImage | PairInBall

_PAIR_KINDS = (PairExactImage, PairInBall)
_IMAGE_KINDS = (ExactImage, DeltaImage, PairExactImage)


def ball_around(center: SpacePoint, radius: float) -> BasisBall:
    """Ad-hoc open ball; index 0 marks it as outside the canonical enumeration."""
    if radius <= 0.0:
        raise InvalidParameterError(f"ball radius must be > 0, got {radius}")
    return BasisBall(index=0, center=center, radius=radius)


# ---------------------------------------------------------------------------
# targets


@dataclass(frozen=True)
class BallTarget:
    ball: BasisBall


@dataclass(frozen=True)
class WholeSpace:
    pass


@dataclass(frozen=True)
class PointSetTarget:
    """Union of closed balls of the given radius around finitely many points."""

    points: tuple[SpacePoint, ...]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        if len(self.points) == 0:
            raise InvalidParameterError("point-set target must be nonempty")
        if self.radius < 0.0:
            raise InvalidParameterError(f"radius must be >= 0, got {self.radius}")


TargetSet = BallTarget | WholeSpace | PointSetTarget


def _point_in_target(space: SpaceDescriptor, target: TargetSet, x: SpacePoint) -> bool:
    if isinstance(target, WholeSpace):
        check_point(space, x)
        return True
    if isinstance(target, BallTarget):
        return distance(space, target.ball.center, x) < target.ball.radius
    return min(distance(space, p, x) for p in target.points) <= target.radius


def target_contains(space: SpaceDescriptor, target: TargetSet, x) -> bool:
    """Membership; a pair belongs when both coordinates do."""
    if isinstance(x, tuple) and len(x) == 2 and isinstance(x[0], SpacePoint):
        return _point_in_target(space, target, x[0]) and _point_in_target(space, target, x[1])
    return _point_in_target(space, target, x)


# ---------------------------------------------------------------------------
# relation and step evaluation


def _check_letter(sys: IfsSystem, letter: int) -> None:
    if not 1 <= letter <= sys.k:
        raise InvalidParameterError(f"letter {letter} outside 1..{sys.k}")


def _in_ball(space: SpaceDescriptor, ball: BasisBall, x: SpacePoint) -> bool:
    return distance(space, ball.center, x) < ball.radius


def relation_holds(sys: IfsSystem, rel: RelationSpec, letter: int, x, y) -> bool:
    """The relation's literal predicate; letter ignored by membership kinds."""
    _check_letter(sys, letter)
    space = sys.space
    f = sys.maps[letter - 1]
    if isinstance(rel, ExactImage):
        return distance(space, apply_map(f, x), y) <= rel.tolerance
    if isinstance(rel, DeltaImage):
        return distance(space, apply_map(f, x), y) < rel.delta
    if isinstance(rel, InBall):
        return _in_ball(space, rel.ball, x) and _in_ball(space, rel.ball, y)
    if isinstance(rel, PairExactImage):
        return (
            distance(space, apply_map(f, x[0]), y[0]) <= rel.tolerance
            and distance(space, apply_map(f, x[1]), y[1]) <= rel.tolerance
        )
    if isinstance(rel, PairInBall):
        return all(_in_ball(space, rel.ball, v) for v in (*x, *y))
    raise InvalidParameterError(f"unknown relation {rel!r}")


def step_image(sys: IfsSystem, letter: int, x):
    """f_letter applied to a point or componentwise to a pair."""
    _check_letter(sys, letter)
    f = sys.maps[letter - 1]
    if isinstance(x, tuple) and len(x) == 2 and isinstance(x[0], SpacePoint):
        return (apply_map(f, x[0]), apply_map(f, x[1]))
    return apply_map(f, x)


def step_holds(sys: IfsSystem, rel: RelationSpec, letter: int, x, y) -> bool:
    """Chain step condition "f_letter(x) REL y" (see module docstring)."""
    if isinstance(rel, _IMAGE_KINDS):
        return relation_holds(sys, rel, letter, x, y)
    return relation_holds(sys, rel, letter, step_image(sys, letter, x), y)


# ---------------------------------------------------------------------------
# certificates


@dataclass(frozen=True)
class ChainCertificate:
    """An n-step chain plus one tilde step into the target (n = len(direction) - 1)."""

    direction: FiniteWord
    points: tuple
    relation: RelationSpec
    tilde_relation: RelationSpec
    target: TargetSet

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        if len(self.direction) < 1:
            raise InvalidParameterError("a chain consumes at least one letter")
        if len(self.points) != len(self.direction) + 1:
            raise InvalidParameterError(
                f"{len(self.points)} points do not fit {len(self.direction)} letters"
            )


def verify_chain(sys: IfsSystem, cert: ChainCertificate) -> bool:
    steps = len(cert.direction)
    pts = cert.points
    for i in range(steps - 1):
        if not step_holds(sys, cert.relation, cert.direction[i], pts[i], pts[i + 1]):
            return False
    if not step_holds(sys, cert.tilde_relation, cert.direction[steps - 1], pts[-2], pts[-1]):
        return False
    return target_contains(sys.space, cert.target, pts[-1])


# ---------------------------------------------------------------------------
# hit sets and the syndetic gap statistic


@dataclass(frozen=True)
class HitSet:
    """Chain indices on [0, horizon] at which a connection exists."""

    indices: tuple[int, ...]
    horizon: int

    def __post_init__(self):
        idx = tuple(sorted(int(v) for v in set(self.indices)))
        object.__setattr__(self, "indices", idx)
        if self.horizon < 1:
            raise InvalidParameterError(f"horizon must be >= 1, got {self.horizon}")
        if idx and (idx[0] < 0 or idx[-1] > self.horizon):
            raise InvalidParameterError("hit indices must lie in [0, horizon]")


def syndetic_max_gap(hits: HitSet) -> int:
    """Max gap on [0, N], counting the lead-in and the open tail (empty set: N+1)."""
    idx = hits.indices
    n = hits.horizon
    if not idx:
        return n + 1
    gaps = [idx[0], n + 1 - idx[-1]]
    gaps.extend(idx[i + 1] - idx[i] for i in range(len(idx) - 1))
    return max(gaps)


# ---------------------------------------------------------------------------
# chain connection search


def _resolve_direction(word, count: int) -> tuple[int, ...]:
    if isinstance(word, WordStream):
        return word.peek(count).letters
    if isinstance(word, FiniteWord):
        return word.letters[:count]
    raise InvalidParameterError(f"cannot read letters from {type(word).__name__}")


def _tilde_witness(sys: IfsSystem, tilde: RelationSpec, letter: int, x, target: TargetSet):
    """A point q with step_holds(tilde, letter, x, q) and q in target, or None.

    Candidates, in order: the step image itself, then the target's own
    representative points (ball center, point-set members). Deterministic.
    """
    candidates = [step_image(sys, letter, x)]
    if isinstance(target, BallTarget):
        candidates.append(target.ball.center)
    elif isinstance(target, PointSetTarget):
        candidates.extend(target.points)
    if isinstance(x, tuple):
        candidates = [c if isinstance(c, tuple) else (c, c) for c in candidates]
    for q in candidates:
        if target_contains(sys.space, target, q) and step_holds(sys, tilde, letter, x, q):
            return q
    return None


def find_chain_connection(
    sys: IfsSystem,
    x,
    target: TargetSet,
    rel: RelationSpec,
    tilde: RelationSpec,
    word,
    horizon: int,
    net_eps: float | None = None,
) -> ChainCertificate | None:
    """First chain connection from x to the target in direction of the word.

    ExactImage relation: the chain rides the fiber-wise orbit; returns at the
    first length n <= horizon whose tilde step lands in the target.
    DeltaImage relation: layered breadth-first search over the eps-net (net
    resolution defaults to delta/2), layer i advanced by the word's letter
    i+1 with slack delta; chain points are x followed by net nodes. Returns
    None when no connection exists within the horizon.
    """
    if horizon < 1:
        raise InvalidParameterError(f"horizon must be >= 1, got {horizon}")
    letters = _resolve_direction(word, horizon + 1)
    if len(letters) == 0:
        return None
    if isinstance(rel, (ExactImage, PairExactImage)):
        return _find_connection_orbit(sys, x, target, rel, tilde, letters)
    if isinstance(rel, DeltaImage):
        return _find_connection_delta(sys, x, target, rel, tilde, letters, net_eps)
    raise UnsupportedError(f"no search mode for relation {rel!r}")


def _find_connection_orbit(sys, x, target, rel, tilde, letters):
    pts = [x]
    cur = x
    for n in range(len(letters)):
        letter = letters[n]
        nxt = step_image(sys, letter, cur)
        if target_contains(sys.space, target, nxt) and step_holds(sys, tilde, letter, cur, nxt):
            return ChainCertificate(
                direction=FiniteWord(letters[: n + 1]),
                points=tuple(pts) + (nxt,),
                relation=rel,
                tilde_relation=tilde,
                target=target,
            )
        pts.append(nxt)
        cur = nxt
    return None


class _NetIndex:
    """Net coordinates plus a nearest-neighbor index over their embedding."""

    def __init__(self, space: SpaceDescriptor, eps: float, cap: int = NET_CAP):
        self.space = space
        self.eps = eps
        self.coords = net_coords(space, eps, cap)
        self.size = len(self.coords)
        self.tree = None if space.kind == "grid" else cKDTree(embed_coords(space, self.coords))

    def points(self) -> list[SpacePoint]:
        return coords_to_points(self.space, self.coords)

    def nearest(self, x: SpacePoint) -> int:
        """Lowest-index nearest net node."""
        d = coord_distance_to_point(self.space, self.coords, x)
        return int(np.argmin(d))

    def within(self, image_coords: np.ndarray, radius: float) -> list[np.ndarray]:
        """Per image row: sorted node indices at metric distance < radius."""
        if self.space.kind == "grid":
            out = []
            for v in np.atleast_1d(image_coords):
                if radius > 1.0:
                    out.append(np.arange(self.size, dtype=np.int64))
                else:
                    out.append(np.array([int(v)], dtype=np.int64))
            return out
        emb = embed_coords(self.space, np.atleast_1d(image_coords))
        # chord query may include boundary points; filter to the strict metric ball
        raw = self.tree.query_ball_point(emb, chord_radius(self.space, radius) + 1e-12)
        rows = np.atleast_1d(image_coords)
        out = []
        for v, cand in zip(rows, raw):
            cand = np.array(sorted(cand), dtype=np.int64)
            if cand.size:
                d = coord_distance(self.space, self.coords[cand], v)
                cand = cand[d < radius]
            out.append(cand)
        return out


def _find_connection_delta(sys, x, target, rel, tilde, letters, net_eps):
    if isinstance(x, tuple):
        raise UnsupportedError("delta search is defined for single points, not pairs")
    delta = rel.delta
    if net_eps is None:
        net_eps = delta / 2.0
    if not 0.0 < net_eps < delta:
        raise InvalidParameterError(f"net resolution must lie in (0, delta), got {net_eps}")
    net = _NetIndex(sys.space, net_eps)
    node_points = net.points()

    # layer 0 is the start point itself; later layers are sets of net nodes
    layer_nodes: list[np.ndarray] = []  # nodes of layer i >= 1, sorted
    parents: list[np.ndarray] = []  # parent position in the previous layer (-1 = start)

    def emit(depth: int, pos: int, q) -> ChainCertificate:
        chain = []
        d, p = depth, pos
        while d >= 1:
            node = int(layer_nodes[d - 1][p])
            chain.append(node_points[node])
            p = int(parents[d - 1][p])
            d -= 1
        chain.reverse()
        return ChainCertificate(
            direction=FiniteWord(letters[: depth + 1]),
            points=(x, *chain, q),
            relation=rel,
            tilde_relation=tilde,
            target=target,
        )

    current_points = [x]
    current_nodes = None  # None marks the start layer
    for depth in range(len(letters)):
        letter = letters[depth]
        # tilde attempt from every member of the current layer, in order
        for pos, pt in enumerate(current_points):
            q = _tilde_witness(sys, tilde, letter, pt, target)
            if q is not None:
                return emit(depth, pos, q)
        if depth == len(letters) - 1:
            break
        # advance the layer by this letter with slack delta
        if current_nodes is None:
            base = points_to_coords(sys.space, [x])
        else:
            base = net.coords[current_nodes]
        images = apply_map_coords(sys.maps[letter - 1], base)
        nbrs = net.within(images, delta)
        nxt: dict[int, int] = {}
        for src_pos, arr in enumerate(nbrs):
            for v in arr.tolist():
                if v not in nxt:
                    nxt[v] = src_pos
        if not nxt:
            return None
        nodes = np.array(sorted(nxt), dtype=np.int64)
        layer_nodes.append(nodes)
        parents.append(np.array([nxt[int(v)] for v in nodes], dtype=np.int64))
        current_nodes = nodes
        current_points = [node_points[int(v)] for v in nodes]
    return None


# ---------------------------------------------------------------------------
# stability


def check_stable_connection(
    sys: IfsSystem, cert: ChainCertificate, radius: float, samples: int, seed: int = 0
) -> bool:
    """Statistical surrogate for Definition-1.2 stability.

    Samples start points u in B(x_0, radius) and re-checks the chain along
    the same direction: exact-image chains recompute the whole orbit from u;
    all other relation kinds keep the original interior points and absorb the
    perturbation in the first step's slack.
    """
    if radius <= 0.0:
        raise InvalidParameterError(f"radius must be > 0, got {radius}")
    if samples < 1:
        raise InvalidParameterError(f"samples must be >= 1, got {samples}")
    gen = philox_generator(seed)
    x0 = cert.points[0]
    pair = isinstance(x0, tuple)
    for _ in range(samples):
        if pair:
            u = (
                sample_in_ball(sys.space, x0[0], radius, gen),
                sample_in_ball(sys.space, x0[1], radius, gen),
            )
        else:
            u = sample_in_ball(sys.space, x0, radius, gen)
        if isinstance(cert.relation, (ExactImage, PairExactImage)):
            pts = [u]
            cur = u
            for letter in cert.direction.letters[:-1]:
                cur = step_image(sys, letter, cur)
                pts.append(cur)
            pts.append(step_image(sys, cert.direction[-1], cur))
            moved = ChainCertificate(
                direction=cert.direction,
                points=tuple(pts),
                relation=cert.relation,
                tilde_relation=cert.tilde_relation,
                target=cert.target,
            )
        else:
            moved = ChainCertificate(
                direction=cert.direction,
                points=(u,) + cert.points[1:],
                relation=cert.relation,
                tilde_relation=cert.tilde_relation,
                target=cert.target,
            )
        if not verify_chain(sys, moved):
            return False
    return True


# ---------------------------------------------------------------------------
# labeled net graph: delta-chain reachability, recurrence, transitivity


class LabeledNetGraph:
    """Nodes = eps-net; edge u -(letter)-> v iff d(f_letter(u), v) < delta."""

    def __init__(self, sys: IfsSystem, delta: float, eps: float, cap: int = NET_CAP):
        if delta <= eps:
            raise InvalidParameterError(
                f"delta must exceed the net resolution, got delta={delta}, eps={eps}"
            )
        self.sys = sys
        self.delta = delta
        self.eps = eps
        self.net = _NetIndex(sys.space, eps, cap)
        self.size = self.net.size
        # adjacency[letter-1][node] = sorted successor indices
        self.adjacency = []
        for m in sys.maps:
            images = apply_map_coords(m, self.net.coords)
            self.adjacency.append(self.net.within(images, delta))

    def points(self) -> list[SpacePoint]:
        return self.net.points()

    def union_matrix(self) -> csr_matrix:
        rows, cols = [], []
        for adj in self.adjacency:
            for u, arr in enumerate(adj):
                rows.extend([u] * len(arr))
                cols.extend(arr.tolist())
        data = np.ones(len(rows), dtype=np.int8)
        return csr_matrix((data, (rows, cols)), shape=(self.size, self.size))

    def has_self_edge(self, u: int) -> bool:
        return any(u in adj[u] for adj in self.adjacency)


def delta_chain_reachable(
    sys: IfsSystem,
    x: SpacePoint,
    y: SpacePoint,
    delta: float,
    eps: float,
    max_len: int,
    cap: int = NET_CAP,
) -> tuple[bool, FiniteWord | None]:
    """Reachability x -| y in the labeled net graph, path length in [1, max_len].

    Start node: net node nearest to x (lowest index on ties); success: any
    node at metric distance < delta from y. The witness letters replay into a
    chain valid under DeltaImage(delta + eps); see replay_delta_witness.
    """
    if max_len < 1:
        raise InvalidParameterError(f"max_len must be >= 1, got {max_len}")
    check_point(sys.space, x)
    check_point(sys.space, y)
    graph = LabeledNetGraph(sys, delta, eps, cap)
    start = graph.net.nearest(x)
    goal = coord_distance_to_point(sys.space, graph.net.coords, y) < delta

    # breadth-first over (letter, node) in ascending order; the start node is
    # not marked visited so cycles back to it still count as length >= 1
    visited = np.zeros(graph.size, dtype=bool)
    parent = np.full(graph.size, -1, dtype=np.int64)
    parent_letter = np.zeros(graph.size, dtype=np.int64)
    frontier = [start]
    for depth in range(1, max_len + 1):
        nxt = []
        for u in frontier:
            for letter in range(1, sys.k + 1):
                for v in graph.adjacency[letter - 1][u].tolist():
                    if not visited[v]:
                        visited[v] = True
                        parent[v] = u
                        parent_letter[v] = letter
                        nxt.append(v)
        hits = [v for v in nxt if goal[v]]
        if hits:
            end = hits[0]
            letters = []
            v = end
            for _ in range(depth):
                letters.append(int(parent_letter[v]))
                v = int(parent[v])
            letters.reverse()
            return True, FiniteWord(tuple(letters))
        if not nxt:
            return False, None
        frontier = nxt
    return False, None


def replay_delta_witness(
    sys: IfsSystem,
    x: SpacePoint,
    y: SpacePoint,
    word: FiniteWord,
    delta: float,
    eps: float,
    cap: int = NET_CAP,
) -> ChainCertificate:
    """Rebuild a witness word into a certificate under DeltaImage(delta + eps).

    Chain points are net nodes (deterministic: enumeration order), starting
    at the node nearest x; the certificate's target is the open ball of
    radius delta + eps around y, which the found path is guaranteed to enter.
    """
    if len(word) < 1:
        raise InvalidParameterError("witness word must be nonempty")
    graph = LabeledNetGraph(sys, delta, eps, cap)
    goal = coord_distance_to_point(sys.space, graph.net.coords, y) < delta
    start = graph.net.nearest(x)

    # layered search constrained to the witness letters
    layers = [[start]]
    parents = [{start: -1}]
    for letter in word:
        prev = layers[-1]
        seen = {}
        for u in prev:
            for v in graph.adjacency[letter - 1][u].tolist():
                if v not in seen:
                    seen[v] = u
        if not seen:
            raise InvalidParameterError("witness word does not replay on the net")
        layers.append(sorted(seen))
        parents.append(seen)
    final_hits = [v for v in layers[-1] if goal[v]]
    if not final_hits:
        raise InvalidParameterError("witness word does not reach the goal ball")
    path = [final_hits[0]]
    for depth in range(len(word), 0, -1):
        path.append(parents[depth][path[-1]])
    path.reverse()
    node_points = graph.points()
    slack = DeltaImage(delta + eps)
    return ChainCertificate(
        direction=word,
        points=tuple(node_points[v] for v in path),
        relation=slack,
        tilde_relation=slack,
        target=BallTarget(ball_around(y, delta + eps)),
    )


def chain_recurrent_set(
    sys: IfsSystem, delta: float, eps: float, cap: int = NET_CAP
) -> list[SpacePoint]:
    """Net nodes on a labeled-graph cycle: SCC of size >= 2, or a self-edge."""
    graph = LabeledNetGraph(sys, delta, eps, cap)
    mat = graph.union_matrix()
    _, labels = connected_components(mat, directed=True, connection="strong")
    counts = np.bincount(labels)
    pts = graph.points()
    out = []
    for u in range(graph.size):
        if counts[labels[u]] >= 2 or graph.has_self_edge(u):
            out.append(pts[u])
    return out


def is_chain_transitive(sys: IfsSystem, delta: float, eps: float, cap: int = NET_CAP) -> bool:
    """True iff the labeled net graph is strongly connected."""
    graph = LabeledNetGraph(sys, delta, eps, cap)
    n_comp, _ = connected_components(graph.union_matrix(), directed=True, connection="strong")
    return n_comp == 1
