"""Compact metric spaces: circle, 2-sphere, unit interval, finite grid.

Points are immutable tagged values. Circle points are angles in [0, 2pi)
with arc metric; sphere points are unit 3-vectors with geodesic angle;
interval points live in [0,1] with absolute difference; grid points are node
indices with the discrete 0/1 metric.

Epsilon nets are formulaic, so a single net node can be produced without
materializing the whole net. The countable ball basis enumerates pairs
(level m, node j) of radius 2^-m centered at the nodes of the level net
eps = 2^-(m+1), walking diagonals d = (m-1) + j so every pair gets a finite
1-based index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    InvalidParameterError,
    OutOfRangeError,
    SpaceMismatchError,
    TooFineError,
)

TWO_PI = 2.0 * math.pi

KINDS = ("circle", "sphere2", "interval", "grid")

# Fibonacci sphere covering constant: net of N >= (C/eps)^2 points has
# covering radius <= eps (checked empirically with wide margin)
SPHERE_COVER_CONST = 3.0

NET_CAP = 10**6

_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


@dataclass(frozen=True)
class SpaceDescriptor:
    kind: str
    grid_size: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameterError(f"unknown space kind {self.kind!r}")
        if self.kind == "grid":
            if self.grid_size < 1:
                raise InvalidParameterError("grid needs at least one node")
        elif self.grid_size != 0:
            raise InvalidParameterError(f"grid_size only applies to grid, got {self.kind}")


def circle_space() -> SpaceDescriptor:
    return SpaceDescriptor("circle")


def sphere_space() -> SpaceDescriptor:
    return SpaceDescriptor("sphere2")


def interval_space() -> SpaceDescriptor:
    return SpaceDescriptor("interval")


def grid_space(n: int) -> SpaceDescriptor:
    return SpaceDescriptor("grid", grid_size=n)


@dataclass(frozen=True)
class SpacePoint:
    kind: str
    value: object

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameterError(f"unknown space kind {self.kind!r}")


def circle_point(theta: float) -> SpacePoint:
    theta = float(theta)
    if not math.isfinite(theta):
        raise InvalidParameterError(f"circle angle must be finite, got {theta}")
    return SpacePoint("circle", theta % TWO_PI)


def interval_point(t: float) -> SpacePoint:
    t = float(t)
    if not -1e-12 <= t <= 1.0 + 1e-12:
        raise InvalidParameterError(f"interval point must lie in [0,1], got {t}")
    return SpacePoint("interval", min(max(t, 0.0), 1.0))


def sphere_point(x: float, y: float, z: float) -> SpacePoint:
    v = np.array([x, y, z], dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > 1e-6:
        raise InvalidParameterError(f"sphere point must be a unit vector, |v|={norm}")
    v = v / norm
    return SpacePoint("sphere2", (float(v[0]), float(v[1]), float(v[2])))


def grid_point(i: int) -> SpacePoint:
    i = int(i)
    if i < 0:
        raise InvalidParameterError(f"grid node must be >= 0, got {i}")
    return SpacePoint("grid", i)


def check_point(space: SpaceDescriptor, x: SpacePoint) -> None:
    if x.kind != space.kind:
        raise SpaceMismatchError(f"point of kind {x.kind} in space {space.kind}")
    if space.kind == "grid" and not 0 <= x.value < space.grid_size:
        raise SpaceMismatchError(
            f"grid node {x.value} outside grid of size {space.grid_size}"
        )


@dataclass(frozen=True)
class BasisBall:
    """Open metric ball from the countable basis; index is its 1-based rank."""

    index: int
    center: SpacePoint
    radius: float


def distance(space: SpaceDescriptor, x: SpacePoint, y: SpacePoint) -> float:
    check_point(space, x)
    check_point(space, y)
    if space.kind == "circle":
        d = abs(x.value - y.value) % TWO_PI
        return min(d, TWO_PI - d)
    if space.kind == "sphere2":
        u = np.array(x.value)
        v = np.array(y.value)
        return float(math.atan2(float(np.linalg.norm(np.cross(u, v))), float(np.dot(u, v))))
    if space.kind == "interval":
        return abs(x.value - y.value)
    return 0.0 if x.value == y.value else 1.0


def diameter(space: SpaceDescriptor) -> float:
    if space.kind in ("circle", "sphere2"):
        return math.pi
    if space.kind == "interval":
        return 1.0
    return 1.0 if space.grid_size > 1 else 0.0


# ---------------------------------------------------------------------------
# epsilon nets


def net_size(space: SpaceDescriptor, eps: float) -> int:
    """Node count of the canonical eps-net; closed form, no materialization."""
    if eps <= 0.0:
        raise InvalidParameterError(f"net resolution must be positive, got {eps}")
    if space.kind == "circle":
        return max(1, math.ceil(TWO_PI / eps))
    if space.kind == "sphere2":
        return max(2, math.ceil((SPHERE_COVER_CONST / eps) ** 2))
    if space.kind == "interval":
        return math.ceil(1.0 / eps) + 1
    return space.grid_size


def net_point(space: SpaceDescriptor, eps: float, j: int) -> SpacePoint:
    """Node j of the canonical eps-net, 0-based."""
    n = net_size(space, eps)
    if not 0 <= j < n:
        raise OutOfRangeError(f"net node {j} outside 0..{n - 1}")
    if space.kind == "circle":
        return SpacePoint("circle", (j * TWO_PI / n) % TWO_PI)
    if space.kind == "sphere2":
        z = 1.0 - (2.0 * j + 1.0) / n
        r = math.sqrt(max(0.0, 1.0 - z * z))
        phi = j * _GOLDEN_ANGLE
        v = np.array([r * math.cos(phi), r * math.sin(phi), z])
        v = v / np.linalg.norm(v)
        return SpacePoint("sphere2", (float(v[0]), float(v[1]), float(v[2])))
    if space.kind == "interval":
        return SpacePoint("interval", j / (n - 1))
    return SpacePoint("grid", j)


def epsilon_net(space: SpaceDescriptor, eps: float, cap: int = NET_CAP) -> list[SpacePoint]:
    """Finite net with every point of the space within eps of some node."""
    n = net_size(space, eps)
    if n > cap:
        raise TooFineError(f"net would need {n} nodes, cap is {cap}")
    return [net_point(space, eps, j) for j in range(n)]


def net_coords(space: SpaceDescriptor, eps: float, cap: int = NET_CAP) -> np.ndarray:
    """Raw coordinate array of the eps-net (angles, vectors, values, or indices)."""
    n = net_size(space, eps)
    if n > cap:
        raise TooFineError(f"net would need {n} nodes, cap is {cap}")
    if space.kind == "circle":
        return (np.arange(n) * (TWO_PI / n)) % TWO_PI
    if space.kind == "sphere2":
        j = np.arange(n)
        z = 1.0 - (2.0 * j + 1.0) / n
        r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        phi = j * _GOLDEN_ANGLE
        v = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
        return v / np.linalg.norm(v, axis=1, keepdims=True)
    if space.kind == "interval":
        return np.arange(n) / (n - 1)
    return np.arange(n)


# ---------------------------------------------------------------------------
# countable ball basis

_BASIS_LEVEL_MAX = 1074  # radius 2^-m underflows beyond this


def _basis_level_size(space: SpaceDescriptor, m: int) -> int:
    return net_size(space, 2.0 ** -(m + 1)) if m <= _BASIS_LEVEL_MAX else net_size(space, 2.0 ** -(_BASIS_LEVEL_MAX + 1))


def _cumulative_pairs(space: SpaceDescriptor, d: int) -> int:
    """Count of basis pairs on diagonals 0 .. d-1.

    Pair (m >= 1, j >= 0) is valid when j < n_m and sits on diagonal
    (m - 1) + j. Level sizes n_m grow geometrically (or stay flat on grids),
    so the sum splits into an explicit head and an arithmetic tail.
    """
    total = 0
    m = 1
    while m <= d:
        n_m = _basis_level_size(space, m)
        remaining = d - m + 1
        if n_m >= remaining:
            # every level from here on contributes d - m' + 1
            tail = d - m + 1
            total += tail * (tail + 1) // 2
            return total
        total += n_m
        m += 1
    return total


def basis_ball(space: SpaceDescriptor, i: int) -> BasisBall:
    """Ball number i (1-based) of the canonical countable basis."""
    if i < 1:
        raise OutOfRangeError(f"basis index must be >= 1, got {i}")
    # find the diagonal d with cumulative(d) < i <= cumulative(d+1)
    hi = 1
    while _cumulative_pairs(space, hi) < i:
        hi *= 2
    lo = hi // 2
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if _cumulative_pairs(space, mid) < i:
            lo = mid
        else:
            hi = mid
    d = hi - 1
    rank = i - _cumulative_pairs(space, d)
    for m in range(1, d + 2):
        j = d - (m - 1)
        if j < _basis_level_size(space, m):
            rank -= 1
            if rank == 0:
                center = net_point(space, 2.0 ** -(min(m, _BASIS_LEVEL_MAX) + 1), j)
                return BasisBall(index=i, center=center, radius=math.ldexp(1.0, -m))
    raise OutOfRangeError(f"basis index {i} not reached on diagonal {d}")


def basis_index(space: SpaceDescriptor, m: int, j: int) -> int:
    """1-based index of the basis pair (level m, node j); inverse of basis_ball."""
    if m < 1 or j < 0 or j >= _basis_level_size(space, m):
        raise OutOfRangeError(f"invalid basis pair ({m}, {j})")
    d = (m - 1) + j
    rank = 0
    for m2 in range(1, m + 1):
        if d - (m2 - 1) < _basis_level_size(space, m2):
            rank += 1
    return _cumulative_pairs(space, d) + rank


def ball_contains(space: SpaceDescriptor, ball: BasisBall, x: SpacePoint) -> bool:
    return distance(space, ball.center, x) < ball.radius


# ---------------------------------------------------------------------------
# random points and ball sampling


def random_point(space: SpaceDescriptor, gen: np.random.Generator) -> SpacePoint:
    if space.kind == "circle":
        return SpacePoint("circle", float(gen.random() * TWO_PI))
    if space.kind == "sphere2":
        v = gen.normal(size=3)
        n = np.linalg.norm(v)
        while n < 1e-12:
            v = gen.normal(size=3)
            n = np.linalg.norm(v)
        v = v / n
        return SpacePoint("sphere2", (float(v[0]), float(v[1]), float(v[2])))
    if space.kind == "interval":
        return SpacePoint("interval", float(gen.random()))
    return SpacePoint("grid", int(gen.integers(0, space.grid_size)))


def sample_in_ball(
    space: SpaceDescriptor, center: SpacePoint, radius: float, gen: np.random.Generator
) -> SpacePoint:
    """Random point of the open ball B(center, radius), intersected with the space."""
    check_point(space, center)
    if radius <= 0.0:
        raise InvalidParameterError(f"ball radius must be positive, got {radius}")
    if space.kind == "circle":
        r = min(radius, math.pi)
        off = (gen.random() * 2.0 - 1.0) * r
        return SpacePoint("circle", (center.value + off) % TWO_PI)
    if space.kind == "interval":
        lo = max(0.0, center.value - radius)
        hi = min(1.0, center.value + radius)
        return SpacePoint("interval", float(lo + gen.random() * (hi - lo)))
    if space.kind == "sphere2":
        r = min(radius, math.pi)
        # uniform on the cap: polar angle with density sin, azimuth uniform
        cos_t = 1.0 - gen.random() * (1.0 - math.cos(r))
        cos_t = min(1.0, max(-1.0, cos_t))
        sin_t = math.sqrt(1.0 - cos_t * cos_t)
        phi = gen.random() * TWO_PI
        c = np.array(center.value)
        e1, e2 = _tangent_frame(c)
        v = cos_t * c + sin_t * (math.cos(phi) * e1 + math.sin(phi) * e2)
        v = v / np.linalg.norm(v)
        return SpacePoint("sphere2", (float(v[0]), float(v[1]), float(v[2])))
    if radius > 1.0:
        return SpacePoint("grid", int(gen.integers(0, space.grid_size)))
    return center


def _tangent_frame(p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal pair spanning the tangent plane at unit vector p."""
    u = np.array([1.0, 0.0, 0.0]) if abs(p[0]) <= 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = u - np.dot(u, p) * p
    e1 = e1 / np.linalg.norm(e1)
    e2 = np.cross(p, e1)
    return e1, e2


# ---------------------------------------------------------------------------
# coordinate arrays for the vectorized engines


def points_to_coords(space: SpaceDescriptor, points) -> np.ndarray:
    for x in points:
        check_point(space, x)
    if space.kind == "circle":
        return np.array([x.value for x in points], dtype=np.float64)
    if space.kind == "sphere2":
        return np.array([x.value for x in points], dtype=np.float64).reshape(-1, 3)
    if space.kind == "interval":
        return np.array([x.value for x in points], dtype=np.float64)
    return np.array([x.value for x in points], dtype=np.int64)


def coords_to_points(space: SpaceDescriptor, coords: np.ndarray) -> list[SpacePoint]:
    if space.kind == "circle":
        return [SpacePoint("circle", float(v) % TWO_PI) for v in coords]
    if space.kind == "sphere2":
        return [
            SpacePoint("sphere2", (float(v[0]), float(v[1]), float(v[2]))) for v in coords
        ]
    if space.kind == "interval":
        return [SpacePoint("interval", float(min(max(v, 0.0), 1.0))) for v in coords]
    return [SpacePoint("grid", int(v)) for v in coords]


def coord_distance(space: SpaceDescriptor, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Rowwise metric distance between coordinate arrays (broadcasting allowed)."""
    if space.kind == "circle":
        d = np.abs(a - b) % TWO_PI
        return np.minimum(d, TWO_PI - d)
    if space.kind == "sphere2":
        cross = np.cross(a, b)
        sin_part = np.linalg.norm(np.atleast_2d(cross), axis=-1)
        cos_part = np.sum(a * b, axis=-1)
        return np.arctan2(sin_part, cos_part)
    if space.kind == "interval":
        return np.abs(a - b)
    return (a != b).astype(np.float64)


def coord_distance_to_point(
    space: SpaceDescriptor, coords: np.ndarray, x: SpacePoint
) -> np.ndarray:
    check_point(space, x)
    if space.kind == "sphere2":
        target = np.array(x.value, dtype=np.float64)
    elif space.kind == "grid":
        target = np.int64(x.value)
    else:
        target = np.float64(x.value)
    return coord_distance(space, coords, target)


def embed_coords(space: SpaceDescriptor, coords: np.ndarray) -> np.ndarray:
    """Euclidean embedding used for nearest-neighbor queries (not for grids)."""
    if space.kind == "circle":
        return np.stack([np.cos(coords), np.sin(coords)], axis=1)
    if space.kind == "sphere2":
        return np.asarray(coords, dtype=np.float64).reshape(-1, 3)
    if space.kind == "interval":
        return np.asarray(coords, dtype=np.float64).reshape(-1, 1)
    raise InvalidParameterError("grids have no euclidean embedding")


def chord_radius(space: SpaceDescriptor, r: float) -> float:
    """Euclidean radius in the embedding that contains the metric ball of radius r."""
    if space.kind in ("circle", "sphere2"):
        return 2.0 * math.sin(min(r, math.pi) / 2.0)
    if space.kind == "interval":
        return r
    raise InvalidParameterError("grids have no euclidean embedding")


# ---------------------------------------------------------------------------
# serialization


def point_text(space: SpaceDescriptor, x: SpacePoint) -> str:
    check_point(space, x)
    if space.kind == "circle":
        return f"theta={x.value!r}"
    if space.kind == "sphere2":
        return ",".join(repr(v) for v in x.value)
    if space.kind == "interval":
        return f"t={x.value!r}"
    return f"#{x.value}"


def point_from_text(space: SpaceDescriptor, text: str) -> SpacePoint:
    text = text.strip()
    try:
        if space.kind == "circle":
            body = text[6:] if text.startswith("theta=") else text
            return circle_point(float(body))
        if space.kind == "sphere2":
            parts = [float(p) for p in text.split(",")]
            if len(parts) != 3:
                raise InvalidParameterError(f"sphere point needs 3 components: {text!r}")
            return sphere_point(*parts)
        if space.kind == "interval":
            body = text[2:] if text.startswith("t=") else text
            return interval_point(float(body))
        body = text[1:] if text.startswith("#") else text
        pt = grid_point(int(body))
        check_point(space, pt)
        return pt
    except ValueError as exc:
        raise InvalidParameterError(f"cannot parse point {text!r}: {exc}") from exc
