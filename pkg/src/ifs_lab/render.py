"""Chaos-game raster output as binary PPM (P6).

One orbit is generated from the seed's stream 0 and plotted after a burn-in;
the image is a pure function of (system, start, seed, steps, size, burn-in).
Circle orbits land on a ring of radius 0.42 min(w, h), interval orbits on a
horizontal strip, sphere orbits through the orthographic projection onto the
xy-plane (both hemispheres are drawn). Background black, points white.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidParameterError, UnsupportedError
from .spaces import SpacePoint, check_point
from .stochastic import record_orbits
from .systems import IfsSystem

RING_SCALE = 0.42
DEFAULT_BURN_IN = 100


def _pixel_xy(space_kind: str, coords: np.ndarray, width: int, height: int):
    cx, cy = (width - 1) / 2.0, (height - 1) / 2.0
    radius = RING_SCALE * min(width, height)
    if space_kind == "circle":
        xs = cx + radius * np.cos(coords)
        ys = cy - radius * np.sin(coords)
    else:  # sphere2: orthographic onto the xy-plane
        xs = cx + radius * coords[:, 0]
        ys = cy - radius * coords[:, 1]
    px = np.clip(np.rint(xs), 0, width - 1).astype(np.int64)
    py = np.clip(np.rint(ys), 0, height - 1).astype(np.int64)
    return px, py


def render_attractor(
    sys: IfsSystem,
    x: SpacePoint,
    seed: int,
    steps: int,
    size: tuple[int, int] = (256, 256),
    burn_in: int = DEFAULT_BURN_IN,
) -> bytes:
    """PPM bytes of the plotted orbit; steps=0 gives the bare background."""
    width, height = size
    if width < 1 or height < 1:
        raise InvalidParameterError(f"image size must be positive, got {size}")
    if steps < 0 or burn_in < 0:
        raise InvalidParameterError("steps and burn_in must be >= 0")
    if sys.space.kind == "grid":
        raise UnsupportedError("grid spaces are not rendered")
    check_point(sys.space, x)
    canvas = np.zeros((height, width, 3), dtype=np.uint8)
    if steps > 0:
        rec = record_orbits(sys, x, 1, burn_in + steps, seed)[0]
        pts = rec[burn_in + 1 :]
        if sys.space.kind == "interval":
            px = np.clip(np.rint(pts * (width - 1)), 0, width - 1).astype(np.int64)
            y0, y1 = height // 3, max(height // 3 + 1, (2 * height) // 3)
            canvas[y0:y1, px] = 255
        else:
            px, py = _pixel_xy(sys.space.kind, pts, width, height)
            canvas[py, px] = 255
    header = f"P6\n{width} {height}\n255\n".encode("ascii")
    return header + canvas.tobytes()


def ring_pixels(width: int, height: int, samples: int = 200000) -> set[tuple[int, int]]:
    """Pixels the circle crosses with non-negligible arc, for coverage checks.

    A dense angle sweep counts how often each pixel is entered; pixels whose
    count falls below a tenth of the per-pixel mean are corner slivers with
    preimage arcs too small for a finite orbit to visit reliably, so they are
    excluded from the reference set.
    """
    angles = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
    px, py = _pixel_xy("circle", angles, width, height)
    counts: dict[tuple[int, int], int] = {}
    for key in zip(px.tolist(), py.tolist()):
        counts[key] = counts.get(key, 0) + 1
    floor = 0.1 * samples / len(counts)
    return {key for key, c in counts.items() if c >= floor}
