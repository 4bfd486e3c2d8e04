"""Config grammar: parsing, validation errors, and overrides."""

import math

import pytest

from ifs_lab.config import override_config, parse_config
from ifs_lab.errors import ConfigError

MINIMAL = """\
[space]
kind = grid
size = 1
[maps]
map = permutation perm=0
[scenario]
kind = estimate
x = #0
property = first_letter symbol=1
trials = 100
seed = 1
"""

CHAOS = """\
[space]
kind = circle
[maps]
map = rotation alpha=2.39996322972865332
map = rotation alpha=1.0
[weights]
p = 0.5, 0.5
[scenario]
kind = chaos-game
x = theta=0.0
eps = 0.02
horizon = 100
trials = 10
seed = 3
"""


class TestParsing:
    def test_minimal_config(self):
        cfg = parse_config(MINIMAL)
        assert cfg.scenario == "estimate"
        assert cfg.system.space.kind == "grid"
        assert cfg.system.k == 1
        assert cfg.params["trials"] == 100
        assert cfg.params["seed"] == 1

    def test_missing_weights_defaults_to_uniform(self):
        cfg = parse_config(CHAOS)
        assert cfg.system.weights.p == (0.5, 0.5)

    def test_two_rotation_chaos_game(self):
        cfg = parse_config(CHAOS)
        assert cfg.scenario == "chaos-game"
        assert cfg.params["eps"] == pytest.approx(0.02)
        assert cfg.params["x"].value == pytest.approx(0.0)

    def test_sphere_maps(self):
        text = """\
[space]
kind = sphere2
[maps]
map = sphere_rotation axis=1,0,0 alpha=2.39996
map = north_south pole=0,0,1 lambda=0.5
[scenario]
kind = proximal
pairs = 2
tol = 0.001
horizon = 100
trials = 5
seed = 2
"""
        cfg = parse_config(text)
        assert cfg.system.space.kind == "sphere2"
        assert cfg.scenario == "proximal"

    def test_comments_and_blank_lines_ignored(self):
        text = MINIMAL.replace("[maps]", "# leading comment\n\n[maps]")
        assert parse_config(text).scenario == "estimate"


class TestValidationErrors:
    def _err(self, text):
        with pytest.raises(ConfigError) as info:
            parse_config(text)
        return str(info.value)

    def test_weights_sum_named_in_error(self):
        bad = CHAOS.replace("p = 0.5, 0.5", "p = 0.5, 0.6")
        msg = self._err(bad)
        assert "weights sum" in msg

    def test_error_carries_line_number(self):
        bad = CHAOS.replace("p = 0.5, 0.5", "p = 0.5, 0.6")
        with pytest.raises(ConfigError) as info:
            parse_config(bad)
        assert info.value.line == 7
        assert str(info.value).startswith("line 7:")

    def test_unknown_scenario_kind(self):
        assert "kind" in self._err(MINIMAL.replace("kind = estimate", "kind = wander"))

    def test_unknown_key_rejected(self):
        bad = MINIMAL.replace("seed = 1", "seed = 1\nturbo = yes")
        assert "turbo" in self._err(bad)

    def test_missing_section_rejected(self):
        bad = MINIMAL.replace("[maps]\nmap = permutation perm=0\n", "")
        self._err(bad)

    def test_point_text_must_match_space(self):
        bad = MINIMAL.replace("x = #0", "x = theta=1.0")
        self._err(bad)

    def test_seed_range(self):
        bad = MINIMAL.replace("seed = 1", f"seed = {2**64}")
        assert "seed" in self._err(bad)

    def test_recurrent_delta_must_exceed_eps(self):
        bad = """\
[space]
kind = grid
size = 3
[maps]
map = permutation perm=1,2,0
[scenario]
kind = recurrent
delta = 0.1
eps = 0.2
"""
        msg = self._err(bad)
        assert "delta" in msg

    def test_theorem_b_alphabet_must_match(self):
        bad = """\
[space]
kind = circle
[maps]
map = rotation alpha=1.0
[scenario]
kind = theorem-b
k = 2
max_len = 3
seed = 1
"""
        self._err(bad)

    def test_trials_key_rejected_on_scenarios_without_trials(self):
        bad = """\
[space]
kind = circle
[maps]
map = rotation alpha=1.0
map = rotation alpha=2.0
[scenario]
kind = chains
x = theta=0.0
relation = exact
target_center = theta=1.0
target_radius = 0.3
horizon = 50
seed = 1
trials = 10
"""
        assert "trials" in self._err(bad)

    def test_bad_map_grammar(self):
        bad = CHAOS.replace("map = rotation alpha=1.0", "map = rotation speed=1.0")
        self._err(bad)

    def test_render_size_floor(self):
        bad = """\
[space]
kind = circle
[maps]
map = rotation alpha=1.0
map = rotation alpha=2.0
[scenario]
kind = render
x = theta=0.0
steps = 10
width = 4
height = 16
seed = 1
"""
        assert "width" in self._err(bad)

    def test_interval_affine_bounds(self):
        bad = """\
[space]
kind = interval
[maps]
map = affine a=0.9 b=0.5
[scenario]
kind = chaos-game
x = t=0.0
eps = 0.1
horizon = 10
trials = 2
seed = 1
"""
        self._err(bad)


class TestOverride:
    def test_seed_and_trials_replaced_in_place(self):
        out = override_config(MINIMAL, seed=42, trials=7)
        cfg = parse_config(out)
        assert cfg.params["seed"] == 42
        assert cfg.params["trials"] == 7
        # everything outside [scenario] untouched
        assert out.splitlines()[:5] == MINIMAL.splitlines()[:5]

    def test_none_means_keep(self):
        assert override_config(MINIMAL, seed=None, trials=None) == MINIMAL
        out = override_config(MINIMAL, seed=9, trials=None)
        cfg = parse_config(out)
        assert cfg.params["seed"] == 9
        assert cfg.params["trials"] == 100

    def test_seed_inserted_when_absent(self):
        text = MINIMAL.replace("seed = 1\n", "")
        cfg = parse_config(override_config(text, seed=5, trials=None))
        assert cfg.params["seed"] == 5


def test_all_shipped_configs_parse():
    import glob
    import os

    paths = sorted(glob.glob(os.path.join(os.path.dirname(__file__), "..", "configs", "*.cfg")))
    assert len(paths) == 9
    kinds = set()
    for p in paths:
        with open(p, "r", encoding="utf-8") as fh:
            cfg = parse_config(fh.read())
        kinds.add(cfg.scenario)
    assert {"chaos-game", "chains", "recurrent", "proximal", "estimate", "theorem-b", "render"} <= kinds
