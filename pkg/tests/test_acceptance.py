"""Acceptance criteria A1–A14.

Each criterion prints one ``A<k>: PASS|FAIL - detail`` line (also collected in
the pytest terminal summary).  The flow runs are shared through module-scoped
fixtures; at the desk-scale resolutions used here the whole module takes a
few minutes on one core.
"""
from __future__ import annotations

import math

import numpy as np
import pytest

from bergerflow.config import parse_config
from bergerflow.driver import run
from bergerflow.flow import (
    FlowState,
    StepControl,
    constrained,
    remesh,
    rescale_continue,
    rm_and_rhs,
    rm_max_fast,
    select_dt,
    step,
)
from bergerflow.initial_data import construct_initial
from bergerflow.mesh import MetricState, build_grid
from bergerflow.monitor import verify_evolution_identities
from bergerflow.singularity import final_decades_ratio

from conftest import acceptance, flat_state
from oracles import SO4Solver

pytestmark = pytest.mark.slow

G_CONFIG = """
[initial]
family = cap_cylinder
B = 1.0
a = {a}
[grid]
n_nodes = 256
x_max = {x_max}
outer = reflect
[run]
t_max = 1.0
max_rescales = {rescales}
nodes_per_length = 32
[output]
directory = {d}
"""

NECK_CONFIG = """
[initial]
family = neck
r_n = 0.2
d = 0.9
x0 = 3.0
w = 1.0
[grid]
n_nodes = 256
x_max = 9.0
outer = pinned
[run]
t_max = 10.0
max_rescales = 7
nodes_per_length = 32
[output]
directory = {d}
"""

TAUBNUT_CONFIG = """
[initial]
family = taubnut_like
q = 0.0
mu0 = 1.0
[grid]
n_nodes = 256
x_max = 20.0
outer = pinned
[run]
t_max = 1.0
nodes_per_length = 32
[output]
directory = {d}
"""

CYLINDER_CONFIG = """
[initial]
family = cylinder
r0 = 1.0
[grid]
n_nodes = 32
x_max = 2.0
inner = mirror
outer = reflect
[run]
t_max = 1.0
max_rescales = 6
[output]
directory = {d}
series_every = 1
"""


def g_run(tmp_path_factory, a, x_max=8.0, rescales=6):
    d = tmp_path_factory.mktemp(f"g_a{a}_x{x_max}")
    return run(parse_config(G_CONFIG.format(a=a, x_max=x_max, rescales=rescales, d=d)))


@pytest.fixture(scope="module")
def g0(tmp_path_factory):
    return g_run(tmp_path_factory, 0.0)


@pytest.fixture(scope="module")
def g3(tmp_path_factory):
    return g_run(tmp_path_factory, 0.3)


@pytest.fixture(scope="module", params=[0.0, 0.3], ids=["a=0", "a=0.3"])
def g_any(request):
    return request.getfixturevalue("g0" if request.param == 0.0 else "g3")


def _at(series, key, t0):
    return float(np.interp(t0, series["t"], series[key]))


def _trusted(res):
    """Series restricted to the trusted part of the run."""
    s = res.series
    keep = s["t"] <= res.trusted_until
    return {k: v[keep] for k, v in s.items()}


# ---------------------------------------------------------------------------
# A1–A3: exact solutions and the SO(4) reduction
# ---------------------------------------------------------------------------


def test_a1_flat_fixed_point():
    st0 = constrained(flat_state(2048, 8.0))
    st, ctl = st0, StepControl()
    for _ in range(1000):
        st, _ = step(st, select_dt(st, ctl), ctl)
    drift = max(np.max(np.abs(st.b / st0.b - 1)), np.max(np.abs(st.c / st0.c - 1)),
                np.max(np.abs(st.xi / st0.xi - 1)))
    acceptance("A1", drift <= 1e-8, f"max relative drift {drift:.2e} after 1000 steps at n=2048 (<= 1e-8)")


def test_a2_cylinder_law(tmp_path_factory):
    res = run(parse_config(CYLINDER_CONFIG.format(d=tmp_path_factory.mktemp("cyl"))))
    s = res.series
    est = res.estimate
    slope = np.polyfit(s["t"], s["sup_b"] ** 2, 1)[0]
    win = s["rm_max"] >= s["rm_max"][-1] / 10
    prod = (est.T_est - s["t"][win]) * s["R_origin"][win]
    dev = float(np.max(np.abs(prod / 1.5 - 1)))
    ok = abs(slope + 4) <= 1e-3 and abs(est.T_est - 0.25) <= 1e-3 and dev <= 0.05
    acceptance("A2", ok, f"d(b^2)/dt={slope:.6f}, T_est={est.T_est:.6f}, "
                         f"max|(T-t)R/1.5-1|={dev:.2e} over {win.sum()} samples")


def test_a3_so4_reduction():
    n, npl, growth = 256, 32, 1e3
    grid = build_grid(n, 8.0, outer="reflect")
    st = constrained(construct_initial("cap_cylinder", {"B": 1.0, "a": 0.0}, grid))
    fs, ctl = FlowState(st), StepControl()
    oracle = SO4Solver(grid.widths, st.b, st.lnxi)
    rm0, _ = rm_max_fast(st)
    fs.rm_at_rescale, fs.dt_at_remesh = rm0, select_dt(st, ctl, rm0)
    worst, steps = 0.0, 0
    while True:
        rm, _, k1 = rm_and_rhs(fs.state)
        if rm * fs.lam_total >= growth * rm0:
            break
        dt = select_dt(fs.state, ctl, rm)
        zoom = 4.0 if rm >= 4.0 * fs.rm_at_rescale else (1.0 if dt < 0.25 * fs.dt_at_remesh else None)
        if zoom is not None:
            new = rescale_continue(fs, zoom, nodes_per_length=npl)
            ost = MetricState(fs.state.t, np.exp(oracle.lnxi), oracle.phi, oracle.phi, fs.state.grid)
            onew = remesh(ost, new.state.grid.nodes, zoom)
            oracle = SO4Solver(new.state.grid.widths, onew.b, onew.lnxi)
            fs = new
            fs.dt_at_remesh = select_dt(fs.state, ctl)
            continue
        fs.state, used = step(fs.state, dt, ctl, k1)
        oracle.step(used)
        steps += 1
        if steps % 50 == 0:
            err = max(np.max(np.abs(fs.state.b / oracle.phi - 1)), np.max(np.abs(fs.state.c / oracle.phi - 1)))
            worst = max(worst, err)
    err = max(np.max(np.abs(fs.state.b / oracle.phi - 1)), np.max(np.abs(fs.state.c / oracle.phi - 1)))
    worst = max(worst, err)
    acceptance("A3", worst <= 1e-6, f"max relative deviation {worst:.2e} from the scalar solver through "
                                    f"rm_max growth {rm * fs.lam_total / rm0:.0f}x ({steps} steps, "
                                    f"{fs.rescales} rescales)")


# ---------------------------------------------------------------------------
# A4–A9: the class 𝒢 cap-cylinder runs
# ---------------------------------------------------------------------------


def test_a4_invariants(g_any):
    res = g_any
    a = res.config.params["a"]
    s = _trusted(res)
    eps0 = res.eps0
    checks = {
        "min_H": bool(np.all(s["min_H"] >= -1e-3 * s["max_abs_H"])),
        "min_bs": bool(np.all(s["min_bs"] >= -1e-3 * s["max_abs_bs"])),
        "ratio": bool(np.all(s["ratio_min"] >= eps0 - 1e-3) and np.all(s["ratio_max"] <= 1 + 1e-10)),
    }
    verdicts = {v.name: v.passed for v in res.verdicts}
    checks["sup_b"] = verdicts.get("sup_b", False)
    checks["sup_pos_phi4"] = verdicts.get("sup_pos_phi4", False)
    ok = all(checks.values()) and math.isinf(res.trusted_until)
    failed = [k for k, v in checks.items() if not v]
    acceptance(f"A4 (a={a})", ok, f"{len(s['t'])} samples to t={s['t'][-1]:.8f}; "
                                  f"trusted_until={res.trusted_until}; failed={failed or 'none'}")


def test_a5_finite_time_bound(g_any):
    res = g_any
    a = res.config.params["a"]
    bound = res.validation.sup_b ** 2 / 4 * 1.05
    est = res.estimate
    ok = est.singular and est.T_est <= bound
    acceptance(f"A5 (a={a})", ok, f"singular={est.singular}, T_est={est.T_est:.8f} ± {est.uncertainty:.1e} "
                                  f"({est.method}) <= {bound:.6f}")


def test_a6_curvature_orbit_coupling(g_any):
    res = g_any
    a = res.config.params["a"]
    s = _trusted(res)
    half = _at(s, "sup_b2rm", res.estimate.T_est / 2)
    last = float(s["sup_b2rm"][-1])
    acceptance(f"A6 (a={a})", last <= 10 * half,
               f"sup b^2 rm_max: {last:.4g} at last trusted sample vs {half:.4g} at T/2 (ratio {last / half:.3g})")


def test_a7_symmetry_enhancement(g_any):
    res = g_any
    a = res.config.params["a"]
    s = _trusted(res)
    growth = s["rm_max"][-1] / s["rm_max"][0]
    t_half = res.estimate.T_est / 2
    late = s["t"] >= t_half
    ratios = {}
    for k in ("sup_symm0", "sup_symm1", "sup_symm2"):
        ref = abs(_at(s, k, t_half))
        peak = float(np.max(np.abs(s[k][late])))
        # for a = 0 (b ≡ c) the defects are rounding noise; report them as identically zero
        ratios[k] = "≡0" if peak < 1e-9 else round(peak / ref, 3)
    bounded = all(r == "≡0" or r <= 10 for r in ratios.values())
    defects = [f.sym_defect for f in res.frames if math.isfinite(f.sym_defect)][-3:]
    if a == 0.0:
        mono = all(d < 1e-9 for d in defects)
    else:
        mono = len(defects) == 3 and defects[0] > defects[1] > defects[2]
    ok = bounded and mono and growth >= 1e3
    acceptance(f"A7 (a={a})", ok, "rm growth {:.3g}; late max / T/2 value {}; last origin-frame defects {}".format(
        growth, ratios, [f"{d:.2e}" for d in defects]))


def test_a8_type_ii(g_any):
    res = g_any
    a = res.config.params["a"]
    est = res.estimate
    n_ratio, _ = final_decades_ratio(est, res.series["rm_max"]) if est.singular else (math.nan, math.nan)
    ok = est.type_verdict == "TypeII-indicated" and n_ratio >= 2
    acceptance(f"A8 (a={a})", ok, f"classify_type={est.type_verdict} (slope {est.slope:.3f}); "
                                  f"N growth over final two decades x{n_ratio:.3g}")


def test_a9_bryant(g_any):
    res = g_any
    a = res.config.params["a"]
    fr = [f for f in res.frames if math.isfinite(f.dist_bryant) and f.t <= res.trusted_until]
    d = [f.dist_bryant for f in fr[-3:]]
    slope0 = fr[-1].slope0 if fr else math.nan
    ok = len(d) == 3 and d[-1] <= 0.1 and d[0] > d[1] > d[2] and abs(slope0 - 1) <= 0.05
    acceptance(f"A9 (a={a})", ok, f"Bryant distances of last 3 origin frames {[round(x, 5) for x in d]}; "
                                  f"db/dsigma(0)={slope0:.4f}")


# ---------------------------------------------------------------------------
# A10–A11: neckpinch and immortal data
# ---------------------------------------------------------------------------


def test_a10_neckpinch(tmp_path_factory):
    res = run(parse_config(NECK_CONFIG.format(d=tmp_path_factory.mktemp("neck"))))
    est = res.estimate
    _, spread = final_decades_ratio(est, res.series["rm_max"]) if est.singular else (math.nan, math.inf)
    # N within ±20% of a constant  <=>  max N / min N <= 1.2/0.8
    n_ok = spread <= 1.2 / 0.8
    cyl = res.frames[-1].dist_cylinder
    t0, t1 = res.series["t"][0], res.series["t"][-1]
    late = [f for f in res.frames if f.t >= t1 - 0.1 * (t1 - t0)]
    spheres = bool(late) and all(len(f.minimal_spheres) >= 1 for f in late)
    ok = est.type_verdict == "TypeI" and n_ok and cyl <= 0.05 and spheres
    acceptance("A10", ok, f"class={res.validation.verdict}, type={est.type_verdict} (slope {est.slope:.4f}), "
                          f"N max/min={spread:.4f}, cylinder distance {cyl:.4f}, "
                          f"minimal spheres in {sum(len(f.minimal_spheres) > 0 for f in late)}/{len(late)} late frames")


def test_a11_immortality(tmp_path_factory):
    res = run(parse_config(TAUBNUT_CONFIG.format(d=tmp_path_factory.mktemp("taubnut"))))
    s = res.series
    after = s["t"] >= 0.1
    rm = s["rm_max"][after]
    rise = float(np.max(rm) / rm[0] - 1)
    # tolerance: one part in 10^3 of sampling noise
    non_increasing = bool(np.all(rm[1:] <= np.minimum.accumulate(rm)[:-1] * (1 + 1e-3)))
    ok = res.termination == "t_max" and not res.singular and non_increasing
    acceptance("A11", ok, f"class={res.validation.verdict}, termination={res.termination}, "
                          f"singular={res.singular}, rm_max {rm[0]:.4f} at t=0.1 -> {rm[-1]:.4f} at t=1 "
                          f"(max rise {100 * rise:.1f}%)")


# ---------------------------------------------------------------------------
# A12–A14: numerical robustness
# ---------------------------------------------------------------------------


def _extrema(res, t_end):
    s = res.series
    m = s["t"] <= t_end
    return {
        "ratio_min": float(np.min(s["ratio_min"][m])),
        "ratio_max": float(np.max(s["ratio_max"][m])),
        "sup_b": float(np.max(s["sup_b"][m])),
        "min_H/max|H|": float(np.min(s["min_H"][m] / s["max_abs_H"][m])),
        "min_bs/max|bs|": float(np.min(s["min_bs"][m] / s["max_abs_bs"][m])),
        "sup_pos_phi4": float(np.max(s["sup_pos_phi4"][m])),
    }


def test_a12_domain_truncation(g3, tmp_path_factory):
    wide = g_run(tmp_path_factory, 0.3, x_max=16.0)
    dT = abs(wide.estimate.T_est / g3.estimate.T_est - 1)
    t_end = min(g3.series["t"][-1], wide.series["t"][-1])
    e1, e2 = _extrema(g3, t_end), _extrema(wide, t_end)
    # normalised extrema that vanish are compared in absolute terms
    diffs = {k: abs(e2[k] - e1[k]) / max(abs(e1[k]), 1.0) for k in e1}
    worst = max(diffs.values())
    ok = dT < 5e-3 and worst < 5e-3
    acceptance("A12", ok, f"x_max 8 -> 16: |dT/T|={dT:.2e}, worst extremum change {worst:.2e} "
                          f"({max(diffs, key=diffs.get)})")


def test_a13_identity_residuals():
    res = []
    for n in (256, 512):
        grid = build_grid(n, 8.0, outer="reflect")
        st = constrained(construct_initial("cap_cylinder", {"B": 1.0, "a": 0.3}, grid))
        ctl = StepControl()
        while st.t < 0.02:
            st, _ = step(st, min(select_dt(st, ctl), 0.02 - st.t + 1e-15), ctl)
        dt = select_dt(st, ctl)
        w = [st]
        for _ in range(2):
            w.append(step(w[-1], dt, ctl)[0])
        res.append(verify_evolution_identities(w))
    ratios = {k: res[0].residual[k] / res[1].residual[k] for k in res[0].residual}
    ok = all(3.0 <= r <= 5.0 for r in ratios.values())
    acceptance("A13", ok, "residual ratios n=256/512: " + ", ".join(f"{k}={r:.2f}" for k, r in ratios.items()))


def test_a14_determinism(tmp_path_factory):
    paths = []
    for i in range(2):
        d = tmp_path_factory.mktemp(f"det{i}")
        res = run(parse_config(G_CONFIG.format(a=0.3, x_max=8.0, rescales=2, d=d)))
        paths.append(res.paths["timeseries"])
    a, b = paths[0].read_bytes(), paths[1].read_bytes()
    acceptance("A14", a == b, f"two runs: {len(a)} bytes each, identical={a == b}")
