"""Config execution: dispatch a parsed scenario and assemble the report bundle.

The JSON summary embeds the effective config text (seed/trials overrides
already rewritten in), so re-running that embedded text reproduces every
numeric output byte for byte. Wall-clock never enters the bundle; callers
wanting timing print it themselves.
"""

from __future__ import annotations

import itertools

from . import __version__
from .chains import (
    BallTarget,
    ExactImage,
    InBall,
    ball_around,
    chain_recurrent_set,
    find_chain_connection,
    is_chain_transitive,
    step_image,
)
from .config import RunConfig, override_config, parse_config
from .errors import UnsupportedError
from .render import render_attractor
from .reports import CsvTable, ReportBundle, write_report
from .spaces import distance, point_text, random_point
from .stochastic import (
    FirstLetterIs,
    ReachesTarget,
    estimate_branch_probability,
    verify_chaos_game_density,
    verify_proximality,
)
from .symbolic import (
    Cylinder,
    FiniteWord,
    WordStream,
    find_cylinder_occurrence,
    philox_generator,
    universal_word,
    word_to_text,
)

_PAIR_STREAM_BASE = 2**33


def _summary_skeleton(cfg: RunConfig, effective_text: str, status: str, results: dict) -> dict:
    return {
        "tool": "ifs-lab",
        "version": __version__,
        "scenario": cfg.scenario,
        "status": status,
        "base_seed": cfg.params["seed"],
        "config": effective_text,
        "results": results,
    }


def _run_chaos_game(cfg: RunConfig, text: str) -> ReportBundle:
    p = cfg.params
    rep = verify_chaos_game_density(
        cfg.system, p["x"], p["eps"], p["horizon"], p["trials"], p["seed"]
    )
    coverage = rep.extras["coverage"]
    rows = tuple(
        (t, cov, cov >= 1.0) for t, cov in enumerate(coverage)
    )
    table = CsvTable(name="trials", header=("trial", "coverage", "dense"), rows=rows)
    results = {
        "frequency": rep.frequency,
        "successes": rep.successes,
        "trials": rep.trials,
        "standard_error": rep.standard_error,
        "near_zero_one": rep.near_zero_one,
        "eps": p["eps"],
        "horizon": p["horizon"],
    }
    return ReportBundle(summary=_summary_skeleton(cfg, text, "ok", results), tables=(table,))


def _run_chains(cfg: RunConfig, text: str) -> ReportBundle:
    p = cfg.params
    word = WordStream(seed=p["seed"], weights=cfg.system.weights)
    cert = find_chain_connection(
        cfg.system, p["x"], p["target"], p["rel"], p["tilde"], word, p["horizon"]
    )
    if cert is None:
        results = {"found": False, "horizon": p["horizon"]}
        return ReportBundle(summary=_summary_skeleton(cfg, text, "not_found", results))
    rows = [(0, "", point_text(cfg.system.space, cert.points[0]), 0.0)]
    for i, letter in enumerate(cert.direction.letters):
        prev, cur = cert.points[i], cert.points[i + 1]
        err = distance(cfg.system.space, step_image(cfg.system, letter, prev), cur)
        rows.append((i + 1, letter, point_text(cfg.system.space, cur), err))
    table = CsvTable(
        name="witness",
        header=("step", "letter", "point", "step_error"),
        rows=tuple(rows),
    )
    results = {
        "found": True,
        "length": len(cert.direction) - 1,
        "letters": word_to_text(cert.direction, cfg.system.k),
        "horizon": p["horizon"],
    }
    return ReportBundle(summary=_summary_skeleton(cfg, text, "ok", results), tables=(table,))


def _run_recurrent(cfg: RunConfig, text: str) -> ReportBundle:
    p = cfg.params
    pts = chain_recurrent_set(cfg.system, p["delta"], p["eps"])
    transitive = is_chain_transitive(cfg.system, p["delta"], p["eps"])
    rows = tuple((i, point_text(cfg.system.space, pt)) for i, pt in enumerate(pts))
    table = CsvTable(name="recurrent", header=("index", "point"), rows=rows)
    results = {
        "recurrent_count": len(pts),
        "transitive": transitive,
        "delta": p["delta"],
        "eps": p["eps"],
    }
    return ReportBundle(summary=_summary_skeleton(cfg, text, "ok", results), tables=(table,))


def _run_proximal(cfg: RunConfig, text: str) -> ReportBundle:
    p = cfg.params
    space = cfg.system.space
    rows = []
    freqs = []
    for i in range(p["pairs"]):
        x = random_point(space, philox_generator(p["seed"], _PAIR_STREAM_BASE + 2 * i))
        y = random_point(space, philox_generator(p["seed"], _PAIR_STREAM_BASE + 2 * i + 1))
        rep = verify_proximality(cfg.system, x, y, p["tol"], p["horizon"], p["trials"], p["seed"])
        freqs.append(rep.frequency)
        rows.append(
            (
                i,
                point_text(space, x),
                point_text(space, y),
                rep.successes,
                rep.frequency,
                rep.extras["median_min"],
            )
        )
    table = CsvTable(
        name="pairs",
        header=("pair", "x", "y", "successes", "frequency", "median_min"),
        rows=tuple(rows),
    )
    results = {
        "pairs": p["pairs"],
        "trials": p["trials"],
        "tol": p["tol"],
        "horizon": p["horizon"],
        "min_frequency": min(freqs),
        "mean_frequency": sum(freqs) / len(freqs),
    }
    return ReportBundle(summary=_summary_skeleton(cfg, text, "ok", results), tables=(table,))


def _run_estimate(cfg: RunConfig, text: str) -> ReportBundle:
    p = cfg.params
    spec = p["property"]
    if spec["kind"] == "first_letter":
        prop = FirstLetterIs(spec["symbol"])
    else:
        ball = ball_around(spec["center"], spec["radius"])
        prop = ReachesTarget(
            target=BallTarget(ball), rel=ExactImage(), tilde=InBall(ball), horizon=spec["horizon"]
        )
    rep = estimate_branch_probability(cfg.system, p["x"], prop, p["trials"], p["seed"])
    table = CsvTable(
        name="estimate",
        header=("kind", "trials", "successes", "frequency", "standard_error", "near_zero_one"),
        rows=(
            (
                spec["kind"],
                rep.trials,
                rep.successes,
                rep.frequency,
                rep.standard_error,
                rep.near_zero_one,
            ),
        ),
    )
    results = {
        "kind": spec["kind"],
        "trials": rep.trials,
        "successes": rep.successes,
        "frequency": rep.frequency,
        "standard_error": rep.standard_error,
        "near_zero_one": rep.near_zero_one,
    }
    return ReportBundle(summary=_summary_skeleton(cfg, text, "ok", results), tables=(table,))


def _run_theorem_b(cfg: RunConfig, text: str) -> ReportBundle:
    p = cfg.params
    word = universal_word(p["k"], p["max_len"])
    rows = []
    missing = 0
    for length in range(1, p["max_len"] + 1):
        for letters in _all_words(p["k"], length):
            cyl = Cylinder(prefix=FiniteWord(letters))
            idx = find_cylinder_occurrence(word, cyl, horizon=len(word))
            if idx is None:
                missing += 1
                rows.append((length, word_to_text(FiniteWord(letters), p["k"]), -1))
            else:
                rows.append((length, word_to_text(FiniteWord(letters), p["k"]), idx))
    table = CsvTable(name="cylinders", header=("length", "word", "index"), rows=tuple(rows))
    status = "ok" if missing == 0 else "not_found"
    results = {
        "k": p["k"],
        "max_len": p["max_len"],
        "cylinders": len(rows),
        "missing": missing,
        "word_length": len(word),
    }
    return ReportBundle(summary=_summary_skeleton(cfg, text, status, results), tables=(table,))


def _all_words(k: int, length: int):
    return itertools.product(range(1, k + 1), repeat=length)


def _run_render(cfg: RunConfig, text: str) -> ReportBundle:
    p = cfg.params
    image = render_attractor(
        cfg.system,
        p["x"],
        p["seed"],
        p["steps"],
        size=(p["width"], p["height"]),
        burn_in=p["burn_in"],
    )
    results = {
        "width": p["width"],
        "height": p["height"],
        "steps": p["steps"],
        "burn_in": p["burn_in"],
        "bytes": len(image),
    }
    return ReportBundle(summary=_summary_skeleton(cfg, text, "ok", results), image=image)


_DISPATCH = {
    "chaos-game": _run_chaos_game,
    "chains": _run_chains,
    "recurrent": _run_recurrent,
    "proximal": _run_proximal,
    "estimate": _run_estimate,
    "theorem-b": _run_theorem_b,
    "render": _run_render,
}


def run_config_text(
    text: str, seed: int | None = None, trials: int | None = None
) -> ReportBundle:
    """Validate fully, then dispatch; overrides are rewritten into the echo."""
    effective = override_config(text, seed=seed, trials=trials)
    cfg = parse_config(effective)
    handler = _DISPATCH.get(cfg.scenario)
    if handler is None:
        raise UnsupportedError(f"no handler for scenario {cfg.scenario!r}")
    return handler(cfg, effective)


def run_config(
    path: str, seed: int | None = None, trials: int | None = None, out_dir: str | None = None
) -> ReportBundle:
    """Run a config file; optionally write the bundle under out_dir."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    bundle = run_config_text(text, seed=seed, trials=trials)
    if out_dir is not None:
        write_report(bundle, out_dir)
    return bundle
