"""Sectioned key=value run configs.

Grammar (line-based, documented in the README): blank lines and lines whose
first nonblank character is '#' are ignored; a section header is '[name]';
every other line is 'key = value'. Sections: [space], [maps], [weights]
(optional, uniform when absent), [scenario]. Map and property values are a
kind token followed by key=value tokens separated by spaces, so values
inside them cannot contain spaces; scenario values run to the end of the
line. All validation happens at parse time, before any computation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .chains import BallTarget, DeltaImage, ExactImage, InBall, ball_around
from .errors import ConfigError, IfsLabError
from .spaces import (
    SpaceDescriptor,
    SpacePoint,
    check_point,
    circle_space,
    grid_space,
    interval_space,
    point_from_text,
    sphere_space,
)
from .symbolic import MAX_SEED, ProbabilityVector
from .systems import (
    CircleRotation,
    GridPermutation,
    IfsSystem,
    IntervalAffine,
    SphereRotation,
    make_north_south,
)

SCENARIO_KINDS = (
    "chaos-game",
    "chains",
    "recurrent",
    "proximal",
    "estimate",
    "theorem-b",
    "render",
)

_SECTIONS = ("space", "maps", "weights", "scenario")


@dataclass(frozen=True)
class RunConfig:
    system: IfsSystem
    scenario: str
    params: dict


def _fail(msg: str, line: int | None = None):
    raise ConfigError(msg, line=line)


def _parse_float(raw: str, line: int, key: str) -> float:
    try:
        v = float(raw)
    except ValueError:
        _fail(f"{key} must be a number, got {raw!r}", line)
    if not math.isfinite(v):
        _fail(f"{key} must be finite, got {raw!r}", line)
    return v


def _parse_int(raw: str, line: int, key: str) -> int:
    try:
        return int(raw, 10)
    except ValueError:
        _fail(f"{key} must be an integer, got {raw!r}", line)


def _parse_point(raw: str, space: SpaceDescriptor, line: int, key: str) -> SpacePoint:
    try:
        p = point_from_text(space, raw)
        check_point(space, p)
    except IfsLabError as exc:
        _fail(f"{key}: {exc}", line)
    return p


def _split_tokens(value: str, line: int) -> tuple[str, dict[str, str]]:
    tokens = value.split()
    if not tokens:
        _fail("empty value", line)
    kind, kv = tokens[0], {}
    for tok in tokens[1:]:
        if "=" not in tok:
            _fail(f"expected key=value token, got {tok!r}", line)
        k, v = tok.split("=", 1)
        if k in kv:
            _fail(f"duplicate parameter {k!r}", line)
        kv[k] = v
    return kind, kv


def _take(kv: dict, key: str, line: int) -> str:
    if key not in kv:
        _fail(f"missing parameter {key!r}", line)
    return kv.pop(key)


def _reject_leftovers(kv: dict, line: int, context: str):
    if kv:
        _fail(f"unknown {context} parameter(s): {', '.join(sorted(kv))}", line)


def _build_space(entries: dict, header_line: int) -> SpaceDescriptor:
    if "kind" not in entries:
        _fail("space section needs a kind", header_line)
    kind_raw, line = entries.pop("kind")
    if kind_raw == "grid":
        if "size" not in entries:
            _fail("grid space needs size", line)
        size_raw, size_line = entries.pop("size")
        space = grid_space(_parse_int(size_raw, size_line, "size"))
    elif kind_raw == "circle":
        space = circle_space()
    elif kind_raw == "sphere2":
        space = sphere_space()
    elif kind_raw == "interval":
        space = interval_space()
    else:
        _fail(f"unknown space kind {kind_raw!r}", line)
    if entries:
        key, (_, extra_line) = next(iter(entries.items()))
        _fail(f"unknown space key {key!r}", extra_line)
    return space


def _build_map(space: SpaceDescriptor, value: str, line: int):
    kind, kv = _split_tokens(value, line)
    try:
        if kind == "rotation":
            alpha = _parse_float(_take(kv, "alpha", line), line, "alpha")
            _reject_leftovers(kv, line, "rotation")
            return CircleRotation(alpha)
        if kind == "north_south":
            pole = _parse_point(_take(kv, "pole", line), space, line, "pole")
            lam = _parse_float(_take(kv, "lambda", line), line, "lambda")
            _reject_leftovers(kv, line, "north_south")
            return make_north_south(space, pole, lam)
        if kind == "affine":
            a = _parse_float(_take(kv, "a", line), line, "a")
            b = _parse_float(_take(kv, "b", line), line, "b")
            _reject_leftovers(kv, line, "affine")
            return IntervalAffine(a, b)
        if kind == "sphere_rotation":
            axis_raw = _take(kv, "axis", line)
            parts = axis_raw.split(",")
            if len(parts) != 3:
                _fail(f"axis must be x,y,z, got {axis_raw!r}", line)
            axis = tuple(_parse_float(p, line, "axis") for p in parts)
            alpha = _parse_float(_take(kv, "alpha", line), line, "alpha")
            _reject_leftovers(kv, line, "sphere_rotation")
            return SphereRotation(axis, alpha)
        if kind == "permutation":
            perm_raw = _take(kv, "perm", line)
            perm = tuple(_parse_int(p, line, "perm") for p in perm_raw.split(","))
            _reject_leftovers(kv, line, "permutation")
            return GridPermutation(perm)
    except ConfigError:
        raise
    except IfsLabError as exc:
        _fail(str(exc), line)
    _fail(f"unknown map kind {kind!r}", line)


def _build_weights(entries: dict, k: int, header_line: int | None) -> ProbabilityVector:
    if header_line is None:
        return ProbabilityVector.uniform(k)
    if "p" not in entries:
        _fail("weights section needs p", header_line)
    raw, line = entries.pop("p")
    if entries:
        key, (_, extra_line) = next(iter(entries.items()))
        _fail(f"unknown weights key {key!r}", extra_line)
    values = tuple(_parse_float(part, line, "p") for part in raw.split(","))
    if len(values) != k:
        _fail(f"{len(values)} weights for {k} maps", line)
    if any(v <= 0.0 for v in values):
        _fail("weights must be positive", line)
    total = sum(values)
    if abs(total - 1.0) > 1e-12:
        _fail(f"weights sum must be 1, got {total!r}", line)
    return ProbabilityVector(values)


def _parse_property(space, raw: str, line: int) -> dict:
    kind, kv = _split_tokens(raw, line)
    if kind == "first_letter":
        symbol = _parse_int(_take(kv, "symbol", line), line, "symbol")
        if symbol < 1:
            _fail(f"symbol must be >= 1, got {symbol}", line)
        _reject_leftovers(kv, line, "first_letter")
        return {"kind": "first_letter", "symbol": symbol}
    if kind == "reaches":
        center = _parse_point(_take(kv, "center", line), space, line, "center")
        radius = _parse_float(_take(kv, "radius", line), line, "radius")
        horizon = _parse_int(_take(kv, "horizon", line), line, "horizon")
        if radius <= 0.0:
            _fail(f"radius must be > 0, got {radius}", line)
        if horizon < 1:
            _fail(f"horizon must be >= 1, got {horizon}", line)
        _reject_leftovers(kv, line, "reaches")
        return {"kind": "reaches", "center": center, "radius": radius, "horizon": horizon}
    _fail(f"unknown property kind {kind!r}", line)


class _Scenario:
    """Typed accessor over the [scenario] entries with per-key line numbers."""

    def __init__(self, entries: dict, header_line: int):
        self.entries = entries
        self.header_line = header_line

    def raw(self, key: str, default=None):
        if key in self.entries:
            return self.entries.pop(key)
        if default is None:
            _fail(f"scenario needs {key}", self.header_line)
        return default, self.header_line

    def f(self, key: str, default=None, positive=False) -> float:
        raw, line = self.raw(key, default)
        v = raw if isinstance(raw, float) else _parse_float(raw, line, key)
        if positive and v <= 0.0:
            _fail(f"{key} must be > 0, got {v}", line)
        return v

    def i(self, key: str, default=None, minimum=None) -> int:
        raw, line = self.raw(key, default)
        v = raw if isinstance(raw, int) else _parse_int(raw, line, key)
        if minimum is not None and v < minimum:
            _fail(f"{key} must be >= {minimum}, got {v}", line)
        return v

    def p(self, space, key: str) -> SpacePoint:
        raw, line = self.raw(key)
        return _parse_point(raw, space, line, key)

    def done(self):
        if self.entries:
            key = next(iter(self.entries))
            _fail(f"unknown scenario key {key!r}", self.entries[key][1])


def _scenario_params(kind: str, sc: _Scenario, system: IfsSystem) -> dict:
    space = system.space
    params: dict = {"seed": sc.i("seed", default=0, minimum=0)}
    if params["seed"] >= MAX_SEED:
        _fail(f"seed must be < 2^64, got {params['seed']}", sc.header_line)
    if kind == "chaos-game":
        params.update(
            x=sc.p(space, "x"),
            eps=sc.f("eps", positive=True),
            horizon=sc.i("horizon", minimum=1),
            trials=sc.i("trials", default=100, minimum=1),
        )
    elif kind == "chains":
        relation, rel_line = sc.raw("relation", default="exact")
        if relation == "exact":
            rel = ExactImage(tolerance=sc.f("tolerance", default=1e-9))
        elif relation == "delta":
            rel = DeltaImage(delta=sc.f("delta", positive=True))
        else:
            _fail(f"relation must be exact or delta, got {relation!r}", rel_line)
        center = sc.p(space, "target_center")
        radius = sc.f("target_radius", positive=True)
        ball = ball_around(center, radius)
        params.update(
            x=sc.p(space, "x"),
            rel=rel,
            tilde=InBall(ball),
            target=BallTarget(ball),
            horizon=sc.i("horizon", minimum=1),
        )
    elif kind == "recurrent":
        delta = sc.f("delta", positive=True)
        eps = sc.f("eps", positive=True)
        if delta <= eps:
            _fail(f"delta must exceed eps, got delta={delta}, eps={eps}", sc.header_line)
        params.update(delta=delta, eps=eps)
    elif kind == "proximal":
        params.update(
            pairs=sc.i("pairs", default=20, minimum=1),
            tol=sc.f("tol", positive=True),
            horizon=sc.i("horizon", minimum=1),
            trials=sc.i("trials", default=100, minimum=1),
        )
    elif kind == "estimate":
        raw, line = sc.raw("property")
        params.update(
            x=sc.p(space, "x"),
            property=_parse_property(space, raw, line),
            trials=sc.i("trials", default=1000, minimum=1),
        )
    elif kind == "theorem-b":
        k = sc.i("k", minimum=1)
        if k != system.k:
            _fail(f"k={k} does not match the {system.k}-map system", sc.header_line)
        params.update(k=k, max_len=sc.i("max_len", minimum=1))
    elif kind == "render":
        params.update(
            x=sc.p(space, "x"),
            steps=sc.i("steps", minimum=0),
            width=sc.i("width", default=256, minimum=8),
            height=sc.i("height", default=256, minimum=8),
            burn_in=sc.i("burn_in", default=100, minimum=0),
        )
    else:
        _fail(f"unknown scenario kind {kind!r}", sc.header_line)
    sc.done()
    return params


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a config; raises ConfigError with line numbers."""
    sections: dict[str, dict] = {}
    section_lines: dict[str, int] = {}
    map_entries: list[tuple[str, int]] = []
    current = None
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in _SECTIONS:
                _fail(f"unknown section [{name}]", lineno)
            if name in sections:
                _fail(f"duplicate section [{name}]", lineno)
            sections[name] = {}
            section_lines[name] = lineno
            current = name
            continue
        if current is None:
            _fail("content before any section header", lineno)
        if "=" not in line:
            _fail("expected key = value", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            _fail("empty key", lineno)
        if current == "maps":
            if key != "map":
                _fail(f"maps section only takes map keys, got {key!r}", lineno)
            map_entries.append((value, lineno))
        else:
            if key in sections[current]:
                _fail(f"duplicate key {key!r} in [{current}]", lineno)
            sections[current][key] = (value, lineno)

    for required in ("space", "maps", "scenario"):
        if required not in sections:
            _fail(f"missing section [{required}]")
    space = _build_space(dict(sections["space"]), section_lines["space"])
    if not map_entries:
        _fail("maps section declares no maps", section_lines["maps"])
    maps = tuple(_build_map(space, value, line) for value, line in map_entries)
    weights = _build_weights(
        dict(sections.get("weights", {})), len(maps), section_lines.get("weights")
    )
    try:
        system = IfsSystem(space=space, maps=maps, weights=weights)
    except IfsLabError as exc:
        _fail(str(exc), section_lines["maps"])

    scenario_entries = dict(sections["scenario"])
    if "kind" not in scenario_entries:
        _fail("scenario section needs a kind", section_lines["scenario"])
    kind_raw, kind_line = scenario_entries.pop("kind")
    if kind_raw not in SCENARIO_KINDS:
        _fail(f"unknown scenario kind {kind_raw!r}", kind_line)
    sc = _Scenario(scenario_entries, section_lines["scenario"])
    params = _scenario_params(kind_raw, sc, system)
    return RunConfig(system=system, scenario=kind_raw, params=params)


def override_config(text: str, seed: int | None = None, trials: int | None = None) -> str:
    """Rewrite seed/trials inside [scenario], preserving every other line.

    The rewritten text is what reports echo, so a summary's embedded config
    reruns to the same outputs without knowing the original flags.
    """
    if seed is None and trials is None:
        return text
    lines = text.splitlines()
    replacements = {}
    if seed is not None:
        replacements["seed"] = str(seed)
    if trials is not None:
        replacements["trials"] = str(trials)
    out = []
    current = None
    scenario_header_idx = None
    replaced = set()
    for raw_line in lines:
        line = raw_line.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            out.append(raw_line)
            if current == "scenario":
                scenario_header_idx = len(out)
            continue
        if current == "scenario" and line and not line.startswith("#") and "=" in line:
            key = line.split("=", 1)[0].strip()
            if key in replacements:
                out.append(f"{key} = {replacements[key]}")
                replaced.add(key)
                continue
        out.append(raw_line)
    if scenario_header_idx is None:
        raise ConfigError("missing section [scenario]")
    for key in sorted(set(replacements) - replaced):
        out.insert(scenario_header_idx, f"{key} = {replacements[key]}")
        scenario_header_idx += 1
    return "\n".join(out) + "\n"
