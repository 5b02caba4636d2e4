from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_array_equal

from bergerflow.curvature import curvature_field
from bergerflow.mesh import MetricState, build_grid
from bergerflow.monitor import monitor_report
from bergerflow.solitons import bryant_profile
from bergerflow.storage import (
    TIMESERIES_COLUMNS,
    SchemaError,
    emit_timeseries,
    read_snapshot,
    read_timeseries,
    write_profile,
    write_snapshot,
)

from conftest import cap_state, flat_state


def _save(state, tmp_path, stem="snap"):
    cf = curvature_field(state)
    return write_snapshot(state, cf, monitor_report(state, cf), tmp_path, stem, {"t_phys": 0.5})


# ---------------------------------------------------------------------------
# snapshots
# ---------------------------------------------------------------------------


class TestSnapshot:
    def test_flat_roundtrip_exact(self, tmp_path):
        st = flat_state(128, 4.0)
        path = _save(st, tmp_path)
        back, cf, rep, man = read_snapshot(path)
        assert_array_equal(back.b, st.b)
        assert_array_equal(back.c, st.c)
        assert_array_equal(back.xi, st.xi)
        assert_array_equal(back.grid.nodes, st.grid.nodes)
        assert man["t_phys"] == 0.5
        assert rep == monitor_report(st)

    @settings(max_examples=15, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
    @given(pert=arrays(np.float64, 64, elements=st.floats(-0.2, 0.2)), t=st.floats(0, 10))
    def test_roundtrip_random(self, tmp_path, pert, t):
        g = build_grid(64, 3.0, 2.0, outer="reflect")
        st_ = MetricState(t, np.exp(pert), g.nodes * (1 + 0.1 * pert ** 2), g.nodes, g)
        back, *_ = read_snapshot(_save(st_, tmp_path, "r"))
        assert_array_equal(back.b, st_.b)
        assert_array_equal(back.xi, st_.xi)
        assert back.t == st_.t
        assert back.grid.outer == "reflect"

    def test_missing_column(self, tmp_path):
        path = _save(cap_state(32, 0.3), tmp_path)
        lines = path.read_text().splitlines()
        rows = [ln.split("\t") for ln in lines[1:]]
        j = rows[0].index("xi")
        path.write_text("\n".join([lines[0]] + ["\t".join(r[:j] + r[j + 1:]) for r in rows]) + "\n")
        with pytest.raises(SchemaError, match="'xi'"):
            read_snapshot(path)

    def test_version_mismatch(self, tmp_path):
        path = _save(cap_state(32, 0.3), tmp_path)
        man = path.with_suffix(".json")
        d = json.loads(man.read_text())
        d["format_version"] = 99
        man.write_text(json.dumps(d))
        with pytest.raises(SchemaError, match="format_version"):
            read_snapshot(path)

    def test_truncated(self, tmp_path):
        path = _save(cap_state(32, 0.3), tmp_path)
        lines = path.read_text().splitlines()
        path.write_text("\n".join(lines[:-5]) + "\n" + lines[-5][:10] + "\n")
        with pytest.raises(SchemaError):
            read_snapshot(path)
        path.write_text("\n".join(lines[:-5]) + "\n")
        with pytest.raises(SchemaError, match="truncated"):
            read_snapshot(path)


# ---------------------------------------------------------------------------
# time series and profiles
# ---------------------------------------------------------------------------


def _rows(n):
    out = []
    for i in range(n):
        r = {c: float(i) for c in TIMESERIES_COLUMNS if c != "N"}
        r["t"] = 0.01 * i
        r["rm_max"] = 1.0 / (0.25 - 0.01 * i)
        out.append(r)
    return out


class TestTimeseries:
    def test_roundtrip_and_N(self, tmp_path):
        p = emit_timeseries(_rows(10), tmp_path, T_est=0.25)
        ts = read_timeseries(p)
        assert ts["t"].size == 10
        assert np.allclose(ts["N"], 1.0)
        p2 = emit_timeseries(_rows(3), tmp_path, name="b.tsv")
        assert np.all(np.isnan(read_timeseries(p2)["N"]))

    def test_deterministic_bytes(self, tmp_path):
        a = emit_timeseries(_rows(20), tmp_path / "a", T_est=0.25).read_bytes()
        b = emit_timeseries(_rows(20), tmp_path / "b", T_est=0.25).read_bytes()
        assert a == b

    def test_missing_column(self, tmp_path):
        p = emit_timeseries(_rows(4), tmp_path)
        text = p.read_text().replace("rm_max", "rmmax")
        p.write_text(text)
        with pytest.raises(SchemaError, match="rm_max"):
            read_timeseries(p)

    def test_profile(self, tmp_path):
        p = write_profile(bryant_profile(10.0), tmp_path / "bryant.tsv")
        lines = p.read_text().splitlines()
        assert "kind=bryant" in lines[0]
        assert lines[1].split("\t") == ["sigma", "phi", "dphi"]
        vals = np.array([float(v) for v in lines[-1].split("\t")])
        assert vals[0] == 10.0 and math.isfinite(vals[1])
