"""Runtime monitoring of every functional the flow keeps bounded or monotone.

:func:`monitor_report` evaluates the controlled quantities on one time slice;
:func:`check_monotone` turns a history of reports into pass/fail verdicts;
:func:`verify_evolution_identities` compares finite time differences of
derived quantities with their analytic evolution equations, which is the
strongest available check that the coded right-hand side is the Ricci flow.

Reports can be expressed in physical units of a rescaled run: pass the
accumulated rescale factor ``lam`` and every field is converted with its
scaling dimension (lengths scale by λ^(−1/2), curvatures by λ).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .curvature import CurvatureField, curvature_field
from .errors import MonitorFailure
from .mesh import MetricState, RadialField, deriv_s


@dataclass(frozen=True)
class MonitorReport:
    """Controlled functionals on one slice (physical units)."""

    t: float
    ratio_min: float
    ratio_max: float
    min_bs: float
    max_abs_bs: float
    min_H: float
    max_abs_H: float
    min_H_node: int
    sup_pos_phi4: float
    sup_symm0: float
    sup_symm1: float
    sup_phi1: float
    sup_b2rm: float
    sup_symm2: float
    min_clogc: float
    min_blogb: float
    sup_abs_bs: float
    sup_abs_cs: float
    sup_b: float
    cH_origin: float
    rm_max: float
    rm_index: int
    R_origin: float

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def _masked_min(v: np.ndarray, mask: np.ndarray) -> float:
    return float(np.min(v[mask])) if np.any(mask) else math.nan


def monitor_report(
    state: MetricState, cf: CurvatureField | None = None, lam: float = 1.0, t_phys: float | None = None
) -> MonitorReport:
    """Evaluate all controlled functionals of ``state``.

    ``lam`` is the accumulated rescale factor of the stored metric (stored =
    λ·physical); values are returned in physical units.  Log-estimate terms
    are restricted to nodes where the physical c < 1 (resp. b < 1) and are NaN
    when there are none.
    """
    if cf is None:
        cf = curvature_field(state)
    b, c = state.b, state.c
    bs, cs, H = cf.bs, cf.cs, cf.H
    rl = math.sqrt(lam)  # 1/length scaling
    ratio = c / b
    b_phys, c_phys = b / rl, c / rl
    iH = int(np.argmin(H))
    phi4 = np.maximum((bs * bs - 4.0) / b, 0.0)
    clog = cf.css * c * np.log(c_phys)
    blog = cf.bss * b * np.log(b_phys)
    return MonitorReport(
        t=float(state.t if t_phys is None else t_phys),
        ratio_min=float(np.min(ratio)),
        ratio_max=float(np.max(ratio)),
        min_bs=float(np.min(bs)),
        max_abs_bs=float(np.max(np.abs(bs))),
        min_H=float(H[iH]) * rl,
        max_abs_H=float(np.max(np.abs(H))) * rl,
        min_H_node=iH,
        sup_pos_phi4=float(np.max(phi4)) * rl,
        sup_symm0=float(np.max((b / c - 1.0) / b)) * rl,
        sup_symm1=float(np.max(np.abs(cs / c - bs / b))) * rl,
        sup_phi1=float(np.max((bs * bs - 1.0) / b)) * rl,
        sup_b2rm=float(np.max(b * b * cf.rm_max_node)),
        sup_symm2=float(np.max(b * np.abs(cf.k01 - cf.k03))) * rl,
        min_clogc=_masked_min(clog, c_phys < 1.0),
        min_blogb=_masked_min(blog, b_phys < 1.0),
        sup_abs_bs=float(np.max(np.abs(bs))),
        sup_abs_cs=float(np.max(np.abs(cs))),
        sup_b=float(np.max(b_phys)),
        cH_origin=float(c[0] * H[0]),
        rm_max=cf.rm_max * lam,
        rm_index=cf.rm_index,
        R_origin=float(cf.R[0]) * lam,
    )


# ---------------------------------------------------------------- verdicts


@dataclass(frozen=True)
class Verdict:
    name: str
    passed: bool
    t_fail: float | None
    detail: str

    def __str__(self) -> str:
        status = "PASS" if self.passed else f"FAIL at t={self.t_fail:.10g}"
        return f"{self.name}: {status} ({self.detail})"


def _first_fail(t, bad, name, detail) -> Verdict:
    idx = np.flatnonzero(bad)
    if idx.size == 0:
        return Verdict(name, True, None, detail)
    return Verdict(name, False, float(t[idx[0]]), detail)


def _non_increasing(t, v, rate, floor):
    """Flags j with v_j > v_i + rate·(t_j − t_i) + floor for some i < j."""
    u = v - rate * t
    run_min = np.minimum.accumulate(u)
    prev = np.concatenate(([np.inf], run_min[:-1]))
    return u > prev + floor


def check_monotone(
    history: list[MonitorReport],
    cls: str,
    eps0: float | None = None,
    tol: float = 1e-3,
    ratio_tol: float = 1e-10,
    phi4_rate: float = 0.01,
) -> list[Verdict]:
    """Pass/fail verdicts for the monotone and signed quantities.

    Applies to classes ``"G"`` and ``"G_inf"``; for any other class only the
    ordering checks (c ≤ b and c/b ≥ ε₀) are made.  Tolerances:

    * b_s ≥ −tol·max|b_s| and H ≥ −tol·max|H| (per slice);
    * sup((b_s² − 4)/b)₊ may grow by at most ``phi4_rate``·scale per unit
      time plus tol·scale, scale = its maximum over the history (or 1 if 0);
    * 𝒢 only: sup b non-increasing within tol·sup b(0);
    * c/b ≤ 1 + ``ratio_tol`` and c/b ≥ ε₀·(1 − tol), ε₀ = ratio_min(0).
    """
    if len(history) < 2:
        raise ValueError("check_monotone needs at least two reports")
    t = np.array([r.t for r in history])
    col = lambda k: np.array([getattr(r, k) for r in history], dtype=float)  # noqa: E731
    eps0 = float(history[0].ratio_min if eps0 is None else eps0)
    out = [
        _first_fail(t, col("ratio_max") > 1.0 + ratio_tol, "ratio_max", f"c/b <= 1 + {ratio_tol:g}"),
        _first_fail(t, col("ratio_min") < eps0 * (1.0 - tol), "ratio_min", f"c/b >= eps0*(1-{tol:g}), eps0={eps0:.6g}"),
    ]
    if cls not in ("G", "G_inf"):
        return out
    out.append(_first_fail(t, col("min_bs") < -tol * col("max_abs_bs"), "min_bs", "b_s >= -tol*max|b_s|"))
    out.append(_first_fail(t, col("min_H") < -tol * col("max_abs_H"), "min_H", "H >= -tol*max|H|"))
    p4 = col("sup_pos_phi4")
    scale = max(float(np.max(p4)), 1.0 if np.max(p4) == 0 else 0.0)
    out.append(_first_fail(t, _non_increasing(t, p4, phi4_rate * scale, tol * scale), "sup_pos_phi4",
                           f"non-increasing within {phi4_rate:g}/unit time"))
    if cls == "G":
        sb = col("sup_b")
        out.append(_first_fail(t, _non_increasing(t, sb, 0.0, tol * sb[0]), "sup_b", "non-increasing within tol"))
    return out


def first_failure_time(verdicts: list[Verdict]) -> float | None:
    ts = [v.t_fail for v in verdicts if not v.passed]
    return min(ts) if ts else None


def enforce_ratio(report: MonitorReport, eps0: float, tol: float = 1e-3, ratio_tol: float = 1e-10) -> None:
    """Raise :class:`MonitorFailure` on a hard ordering violation."""
    if report.ratio_max > 1.0 + ratio_tol:
        raise MonitorFailure(f"c/b = {report.ratio_max:.12g} exceeds 1 at t={report.t:.10g}")
    if report.ratio_min < eps0 * (1.0 - tol):
        raise MonitorFailure(f"c/b = {report.ratio_min:.12g} below eps0={eps0:.6g} at t={report.t:.10g}")


def band_check(values: np.ndarray, reference: float, factor: float = 10.0) -> bool:
    """True when every value stays within ``factor`` × ``reference``."""
    return bool(np.all(np.asarray(values) <= factor * reference))


# ---------------------------------------------------- evolution identities

IDENTITY_NAMES = ("logcb", "cbbs", "cH", "bs", "cs", "k01", "k03")


def _jets(state: MetricState):
    fb, fc = state.field("b"), state.field("c")
    bs = deriv_s(fb, state, 1, accuracy=4).values
    bss = deriv_s(fb, state, 2, accuracy=4).values
    cs = deriv_s(fc, state, 1, accuracy=4).values
    css = deriv_s(fc, state, 2, accuracy=4).values
    return state.b, state.c, bs, cs, bss, css


def _quantities(state: MetricState) -> dict[str, np.ndarray]:
    b, c, bs, cs, bss, css = _jets(state)
    return {
        "logcb": np.log(c / b),
        "cbbs": c / b * bs,
        "cH": c * (2.0 * bs / b + cs / c),
        "bs": bs,
        "cs": cs,
        "k01": -bss / b,
        "k03": -css / c,
    }


def _rhs_identities(state: MetricState, Q: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    b, c, bs, cs, bss, css = _jets(state)
    par = "odd" if state.grid.inner == "origin" else "even"
    parity = {"logcb": "even", "cbbs": "even", "cH": "even", "bs": "even", "cs": "even",
              "k01": "even", "k03": "even"}
    if par == "even":  # mirror plane: b, c even ⇒ b_s, c_s odd
        parity.update(bs="odd", cs="odd", cbbs="odd", cH="odd")
    def d1(name):
        return deriv_s(RadialField(Q[name], parity[name]), state, 1, accuracy=4).values

    def d2(name):
        return deriv_s(RadialField(Q[name], parity[name]), state, 2, accuracy=4).values

    drift = 2.0 * bs / b + cs / c

    def lap(name):
        return d2(name) + drift * d1(name)

    b2, b4 = b * b, b**4
    k01, k03 = Q["k01"], Q["k03"]
    cbbs, cH = Q["cbbs"], Q["cH"]
    return {
        "logcb": lap("logcb") + 4.0 / b2 * (1.0 - c * c / b2),
        "cbbs": d2("cbbs") + d1("cbbs") * (2 * bs / b - cs / c)
        + cbbs / b2 * (8 - 10 * c * c / b2 - 2 * bs * bs) + 4 * c * c / b4 * cs,
        "cH": d2("cH") + d1("cH") * (2 * bs / b - cs / c)
        + 2 * cH / b2 * (c * c / b2 - bs * bs) + 16 / b2 * cbbs * (1 - c * c / b2),
        "bs": lap("bs") - 2 * bs / b * d1("bs")
        + (4 / b2 - bs * bs / b2 - cs * cs / (c * c) - 6 * c * c / b4) * bs + 4 * c / b**3 * cs,
        "cs": lap("cs") - 2 * cs / c * d1("cs") - (6 * c * c / b4 + 2 * bs * bs / b2) * cs
        + 8 * c**3 / b**5 * bs,
        "k01": lap("k01") + 2 * k01**2
        + k01 * (8 / b2 - 8 * c * c / b4 - 2 * cs * cs / (c * c) - 4 * bs * bs / b2)
        + k03 * (4 * c * c / b4 - 2 * bs * cs / (b * c)) - 4 * cs * cs / b4
        + 24 * c * bs * cs / b**5 - 2 * bs * cs**3 / (b * c**3) - 24 * c * c * bs * bs / b**6
        + 8 * bs * bs / b4 - 2 * bs**4 / b4,
        "k03": lap("k03") + 2 * k03**2 - 4 * k03 * (bs * bs / b2 + c * c / b4)
        + 4 * k01 * (2 * c * c / b4 - bs * cs / (b * c)) + 12 * cs * cs / b4
        + 40 * c * c * bs * bs / b**6 - 48 * c * bs * cs / b**5 - 4 * bs**3 * cs / (b**3 * c),
    }


@dataclass(frozen=True)
class IdentityResiduals:
    """Max-norm residual |∂_t Q − RHS(Q)| per identity over the interior mask."""

    residual: dict
    scale: dict
    t: float
    n_nodes: int


def verify_evolution_identities(
    window: list[MetricState],
    outer_fraction: float = 0.1,
    s_core: float = 0.5,
) -> IdentityResiduals:
    """Compare fixed-x time differences with the analytic evolution equations.

    ``window`` holds ≥ 3 consecutive states on one grid; the middle state is
    the evaluation point and the time derivative is the three-point
    (nonuniform) second-order difference.  Nodes in the outer
    ``outer_fraction`` of the grid and nodes with s < ``s_core`` are excluded;
    the identities involve up to b⁻⁶ so a fixed inner core keeps the residual
    norm from being dominated by the innermost cells.
    """
    if len(window) < 3:
        raise ValueError("need at least three states")
    grid = window[0].grid
    for st in window:
        if st.grid is not grid and not np.array_equal(st.grid.nodes, grid.nodes):
            raise ValueError("window spans a regrid/rescale")
    k = len(window) // 2
    s0, s1, s2 = window[k - 1], window[k], window[k + 1]
    t0, t1, t2 = s0.t, s1.t, s2.t
    h1, h2 = t1 - t0, t2 - t1
    if not (h1 > 0 and h2 > 0):
        raise ValueError("window times must be increasing")
    Q0, Q1, Q2 = _quantities(s0), _quantities(s1), _quantities(s2)
    rhs = _rhs_identities(s1, Q1)
    n = grid.n
    mask = np.zeros(n, bool)
    mask[: int(math.floor((1.0 - outer_fraction) * n))] = True
    mask &= np.asarray(s1.s) >= s_core
    res, scale = {}, {}
    for name in IDENTITY_NAMES:
        dQ = (-h2 / (h1 * (h1 + h2))) * Q0[name] + ((h2 - h1) / (h1 * h2)) * Q1[name] + (h1 / (h2 * (h1 + h2))) * Q2[name]
        r = np.abs(dQ - rhs[name])[mask]
        res[name] = float(np.max(r))
        scale[name] = float(np.max(np.abs(rhs[name][mask])))
    return IdentityResiduals(res, scale, float(t1), n)
