from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bergerflow.config import RunConfig, load_config, parse_config, serialize_config
from bergerflow.errors import ConfigError

MINIMAL = """
[initial]
family = cap_cylinder
B = 1.0

[grid]
n_nodes = 512
"""


# ---------------------------------------------------------------------------
# parsing and validation
# ---------------------------------------------------------------------------


class TestParse:
    def test_minimal_defaults(self):
        cfg = parse_config(MINIMAL)
        assert cfg.family == "cap_cylinder"
        assert cfg.params == {"B": 1.0, "a": 0.0}
        assert cfg.grid.n_nodes == 512
        d = RunConfig()
        assert cfg.grid.x_max == d.grid.x_max
        assert cfg.step == d.step and cfg.run == d.run and cfg.output == d.output

    def test_comments_and_case(self):
        cfg = parse_config(MINIMAL + "x_max = 12.5   # wider\n# trailing comment\n")
        assert cfg.grid.x_max == 12.5

    @pytest.mark.parametrize("text,key,line", [
        (MINIMAL + "cluster_factor = -1\n", "grid.cluster_factor", 8),
        (MINIMAL + "n_nodes2 = 4\n", "grid.n_nodes2", 8),
        (MINIMAL.replace("n_nodes = 512", "n_nodes = 5x"), "grid.n_nodes", 7),
        (MINIMAL.replace("B = 1.0", "B = -2"), "initial.B", 4),
        (MINIMAL + "\n[step]\ncfl_factor = 2\n", "step.cfl_factor", 10),
        (MINIMAL + "\n[bogus]\nx = 1\n", "bogus", 9),
        (MINIMAL.replace("B = 1.0", "B = 1.0\nzeta = 3"), "initial.zeta", 5),
    ])
    def test_errors_name_key_and_line(self, text, key, line):
        with pytest.raises(ConfigError) as ei:
            parse_config(text)
        assert ei.value.key == key
        assert ei.value.line == line
        assert key in str(ei.value) and f"line {line}" in str(ei.value)

    def test_unknown_family(self):
        with pytest.raises(ConfigError, match="family"):
            parse_config("[initial]\nfamily = torus\n")

    def test_cylinder_needs_mirror(self):
        with pytest.raises(ConfigError, match="mirror"):
            parse_config("[initial]\nfamily = cylinder\n")
        cfg = parse_config("[initial]\nfamily = cylinder\n[grid]\ninner = mirror\n")
        assert cfg.params == {"r0": 1.0}

    def test_syntax_error(self):
        with pytest.raises(ConfigError, match="syntax"):
            parse_config("[initial\nfamily = flat\n")

    def test_bool(self):
        cfg = parse_config(MINIMAL + "[output]\nwrite_files = no\n")
        assert cfg.output.write_files is False
        with pytest.raises(ConfigError):
            parse_config(MINIMAL + "[output]\nwrite_files = maybe\n")

    def test_replace(self):
        cfg = parse_config(MINIMAL)
        new = cfg.replace(grid={"n_nodes": 64}, params={"a": 0.3})
        assert new.grid.n_nodes == 64 and new.params["a"] == 0.3
        assert cfg.grid.n_nodes == 512
        with pytest.raises(ConfigError):
            cfg.replace(grid={"nodes": 3})
        with pytest.raises(ConfigError):
            cfg.replace(params={"a": 0.9})


# ---------------------------------------------------------------------------
# serialisation
# ---------------------------------------------------------------------------


class TestSerialize:
    @settings(max_examples=40, deadline=None)
    @given(a=st.floats(0, 0.5), n=st.integers(16, 10000), x_max=st.floats(0.5, 100),
           cfl=st.floats(0.01, 1.0), remesh=st.booleans(), d=st.text("abc/_", min_size=1, max_size=8))
    def test_roundtrip(self, a, n, x_max, cfl, remesh, d):
        cfg = parse_config(MINIMAL).replace(params={"a": a}, grid={"n_nodes": n, "x_max": x_max},
                                            step={"cfl_factor": cfl}, run={"remesh": remesh},
                                            output={"directory": d})
        assert parse_config(serialize_config(cfg)) == cfg

    def test_load(self, tmp_path):
        p = tmp_path / "c.ini"
        p.write_text(MINIMAL)
        assert load_config(p) == parse_config(MINIMAL)
