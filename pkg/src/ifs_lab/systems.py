"""Map descriptors, iterated function systems, and orbit iteration.

A north-south map with pole p and multiplier lam in (0,1) contracts toward p
with derivative lam at p and expands away from the antipodal pole q with
derivative 1/lam. On the circle it acts through the chart theta -> tan of the
half-angle relative to p; on the sphere through stereographic projection from
q onto the tangent chart at p (xi scales by lam). The inverse is the same
construction with multiplier 1/lam, and coincides with the north-south map of
multiplier lam at the antipode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    InvalidParameterError,
    OutOfRangeError,
    SpaceMismatchError,
    UnsupportedError,
)
from .spaces import (
    TWO_PI,
    SpaceDescriptor,
    SpacePoint,
    check_point,
    coords_to_points,
    grid_space,
    points_to_coords,
    circle_space,
    interval_space,
    sphere_space,
    _tangent_frame,
)
from .symbolic import FiniteWord, ProbabilityVector, WordStream


@dataclass(frozen=True)
class CircleRotation:
    alpha: float

    def __post_init__(self):
        if not math.isfinite(self.alpha):
            raise InvalidParameterError(f"rotation angle must be finite, got {self.alpha}")


@dataclass(frozen=True)
class IntervalAffine:
    """t -> a*t + b with a > 0, b >= 0, a + b <= 1, so [0,1] maps into itself."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0.0 and self.b >= 0.0 and self.a + self.b <= 1.0):
            raise InvalidParameterError(
                f"affine map needs a > 0, b >= 0, a + b <= 1, got a={self.a}, b={self.b}"
            )


@dataclass(frozen=True)
class NorthSouth:
    pole: SpacePoint
    multiplier: float

    def __post_init__(self):
        if self.pole.kind not in ("circle", "sphere2"):
            raise UnsupportedError(f"north-south maps need a circle or sphere pole, got {self.pole.kind}")
        if not 0.0 < self.multiplier < 1.0:
            raise InvalidParameterError(
                f"north-south multiplier must lie in (0,1), got {self.multiplier}"
            )


@dataclass(frozen=True)
class SphereRotation:
    axis: tuple[float, float, float]
    alpha: float

    def __post_init__(self):
        v = np.array(self.axis, dtype=np.float64)
        n = float(np.linalg.norm(v))
        if n < 1e-12:
            raise InvalidParameterError("rotation axis must be nonzero")
        v = v / n
        object.__setattr__(self, "axis", (float(v[0]), float(v[1]), float(v[2])))
        if not math.isfinite(self.alpha):
            raise InvalidParameterError(f"rotation angle must be finite, got {self.alpha}")


@dataclass(frozen=True)
class GridPermutation:
    perm: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "perm", tuple(int(v) for v in self.perm))
        n = len(self.perm)
        if n < 1 or sorted(self.perm) != list(range(n)):
            raise InvalidParameterError(f"not a permutation of 0..{n - 1}: {self.perm}")


MapDescriptor = CircleRotation | IntervalAffine | NorthSouth | SphereRotation | GridPermutation


def map_space(m: MapDescriptor) -> SpaceDescriptor:
    """The space a map descriptor acts on."""
    if isinstance(m, CircleRotation):
        return circle_space()
    if isinstance(m, IntervalAffine):
        return interval_space()
    if isinstance(m, NorthSouth):
        return circle_space() if m.pole.kind == "circle" else sphere_space()
    if isinstance(m, SphereRotation):
        return sphere_space()
    if isinstance(m, GridPermutation):
        return grid_space(len(m.perm))
    raise InvalidParameterError(f"unknown map descriptor {m!r}")


def is_invertible_on_space(m: MapDescriptor) -> bool:
    """True when the map is a homeomorphism of its whole space."""
    if isinstance(m, IntervalAffine):
        return m.a == 1.0 and m.b == 0.0
    return True


def antipode(space: SpaceDescriptor, p: SpacePoint) -> SpacePoint:
    check_point(space, p)
    if space.kind == "circle":
        return SpacePoint("circle", (p.value + math.pi) % TWO_PI)
    if space.kind == "sphere2":
        return SpacePoint("sphere2", tuple(-v for v in p.value))
    raise UnsupportedError(f"antipode undefined on {space.kind}")


def make_north_south(space: SpaceDescriptor, pole: SpacePoint, multiplier: float) -> NorthSouth:
    if space.kind not in ("circle", "sphere2"):
        raise UnsupportedError(f"north-south maps live on circle or sphere, not {space.kind}")
    check_point(space, pole)
    return NorthSouth(pole=pole, multiplier=multiplier)


def inverse_descriptor(m: MapDescriptor) -> MapDescriptor:
    """Descriptor of the inverse map, for maps invertible on their space."""
    if isinstance(m, CircleRotation):
        return CircleRotation(-m.alpha)
    if isinstance(m, SphereRotation):
        return SphereRotation(m.axis, -m.alpha)
    if isinstance(m, NorthSouth):
        return NorthSouth(antipode(map_space(m), m.pole), m.multiplier)
    if isinstance(m, GridPermutation):
        inv = [0] * len(m.perm)
        for i, v in enumerate(m.perm):
            inv[v] = i
        return GridPermutation(tuple(inv))
    if isinstance(m, IntervalAffine) and is_invertible_on_space(m):
        return m
    raise UnsupportedError(f"map {m!r} is not invertible on its space")


# ---------------------------------------------------------------------------
# vectorized application on coordinate arrays


def _ns_chart_coords(pole: SpacePoint, factor: float, coords: np.ndarray, kind: str) -> np.ndarray:
    if kind == "circle":
        rel = (coords - pole.value + math.pi) % TWO_PI - math.pi
        t = np.tan(rel / 2.0)
        return (pole.value + 2.0 * np.arctan(factor * t)) % TWO_PI
    p = np.array(pole.value, dtype=np.float64)
    e1, e2 = _tangent_frame(p)
    v = np.asarray(coords, dtype=np.float64).reshape(-1, 3)
    z = v @ p
    a = v @ e1
    b = v @ e2
    denom = 1.0 + z
    fixed = denom < 1e-14  # the repelling pole stays put
    denom = np.where(fixed, 1.0, denom)
    xi1 = factor * a / denom
    xi2 = factor * b / denom
    s = xi1 * xi1 + xi2 * xi2
    out = (
        2.0 * xi1[:, None] * e1[None, :]
        + 2.0 * xi2[:, None] * e2[None, :]
        + (1.0 - s)[:, None] * p[None, :]
    ) / (1.0 + s)[:, None]
    out[fixed] = -p
    out = out / np.linalg.norm(out, axis=1, keepdims=True)
    return out


def _rodrigues(axis: tuple[float, float, float], alpha: float, v: np.ndarray) -> np.ndarray:
    k = np.array(axis, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64).reshape(-1, 3)
    cos_a = math.cos(alpha)
    sin_a = math.sin(alpha)
    out = v * cos_a + np.cross(np.broadcast_to(k, v.shape), v) * sin_a
    out = out + np.outer(v @ k, k) * (1.0 - cos_a)
    return out / np.linalg.norm(out, axis=1, keepdims=True)


def apply_map_coords(m: MapDescriptor, coords: np.ndarray) -> np.ndarray:
    if isinstance(m, CircleRotation):
        return (coords + m.alpha) % TWO_PI
    if isinstance(m, IntervalAffine):
        return np.clip(m.a * coords + m.b, 0.0, 1.0)
    if isinstance(m, NorthSouth):
        return _ns_chart_coords(m.pole, m.multiplier, coords, m.pole.kind)
    if isinstance(m, SphereRotation):
        return _rodrigues(m.axis, m.alpha, coords)
    if isinstance(m, GridPermutation):
        return np.array(m.perm, dtype=np.int64)[coords]
    raise InvalidParameterError(f"unknown map descriptor {m!r}")


def apply_inverse_coords(m: MapDescriptor, coords: np.ndarray) -> np.ndarray:
    if isinstance(m, CircleRotation):
        return (coords - m.alpha) % TWO_PI
    if isinstance(m, IntervalAffine):
        out = (np.asarray(coords, dtype=np.float64) - m.b) / m.a
        if np.any(out < -1e-9) or np.any(out > 1.0 + 1e-9):
            raise OutOfRangeError("point outside the image of the affine map")
        return np.clip(out, 0.0, 1.0)
    if isinstance(m, NorthSouth):
        return _ns_chart_coords(m.pole, 1.0 / m.multiplier, coords, m.pole.kind)
    if isinstance(m, SphereRotation):
        return _rodrigues(m.axis, -m.alpha, coords)
    if isinstance(m, GridPermutation):
        inv = np.empty(len(m.perm), dtype=np.int64)
        inv[np.array(m.perm, dtype=np.int64)] = np.arange(len(m.perm), dtype=np.int64)
        return inv[coords]
    raise InvalidParameterError(f"unknown map descriptor {m!r}")


# ---------------------------------------------------------------------------
# scalar application


def apply_map(m: MapDescriptor, x: SpacePoint) -> SpacePoint:
    space = map_space(m)
    check_point(space, x)
    coords = points_to_coords(space, [x])
    return coords_to_points(space, apply_map_coords(m, coords))[0]


def apply_inverse(m: MapDescriptor, x: SpacePoint) -> SpacePoint:
    space = map_space(m)
    check_point(space, x)
    coords = points_to_coords(space, [x])
    return coords_to_points(space, apply_inverse_coords(m, coords))[0]


# ---------------------------------------------------------------------------
# systems and orbits


@dataclass(frozen=True)
class IfsSystem:
    space: SpaceDescriptor
    maps: tuple[MapDescriptor, ...]
    weights: ProbabilityVector

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))
        if len(self.maps) < 1:
            raise InvalidParameterError("a system needs at least one map")
        if len(self.maps) != self.weights.k:
            raise InvalidParameterError(
                f"{len(self.maps)} maps but {self.weights.k} weights"
            )
        for m in self.maps:
            if map_space(m) != self.space:
                raise SpaceMismatchError(f"map {m!r} does not act on {self.space}")

    @property
    def k(self) -> int:
        return len(self.maps)


def uniform_system(space: SpaceDescriptor, maps) -> IfsSystem:
    maps = tuple(maps)
    return IfsSystem(space=space, maps=maps, weights=ProbabilityVector.uniform(len(maps)))


@dataclass(frozen=True)
class OrbitSegment:
    """Points x_0 .. x_n of one branch together with the letters that drove it."""

    base: SpacePoint
    direction: FiniteWord
    points: tuple[SpacePoint, ...]

    def __post_init__(self):
        if len(self.points) != len(self.direction) + 1:
            raise InvalidParameterError(
                f"{len(self.points)} points do not fit {len(self.direction)} letters"
            )
        if len(self.points) == 0 or self.points[0] != self.base:
            raise InvalidParameterError("orbit must start at its base point")

    def __len__(self) -> int:
        return len(self.direction)


def _resolve_letters(system: IfsSystem, word, n: int) -> FiniteWord:
    if n < 0:
        raise OutOfRangeError(f"orbit length must be >= 0, got {n}")
    if isinstance(word, WordStream):
        letters = word.peek(n)
    elif isinstance(word, FiniteWord):
        if len(word) < n:
            raise OutOfRangeError(f"word of length {len(word)} cannot drive {n} steps")
        letters = FiniteWord(word.letters[:n])
    else:
        raise InvalidParameterError(f"cannot iterate along {type(word).__name__}")
    if any(v > system.k for v in letters):
        raise OutOfRangeError(f"letters must lie in 1..{system.k}")
    return letters


def iterate_forward(system: IfsSystem, word, x: SpacePoint, n: int) -> OrbitSegment:
    """x, f_{w1}(x), f_{w2}(f_{w1}(x)), ... for n steps along the word."""
    check_point(system.space, x)
    letters = _resolve_letters(system, word, n)
    pts = [x]
    cur = x
    for letter in letters:
        cur = apply_map(system.maps[letter - 1], cur)
        pts.append(cur)
    return OrbitSegment(base=x, direction=letters, points=tuple(pts))


def iterate_backward(system: IfsSystem, word, x: SpacePoint, n: int) -> OrbitSegment:
    """Inverse maps applied in word order: step i applies the inverse of map w_i.

    Only defined when every map of the system is a homeomorphism of the space.
    Following the forward maps through the reversed direction recovers x.
    """
    check_point(system.space, x)
    for m in system.maps:
        if not is_invertible_on_space(m):
            raise UnsupportedError(f"map {m!r} is not invertible on the whole space")
    letters = _resolve_letters(system, word, n)
    pts = [x]
    cur = x
    for letter in letters:
        cur = apply_inverse(system.maps[letter - 1], cur)
        pts.append(cur)
    return OrbitSegment(base=x, direction=letters, points=tuple(pts))
