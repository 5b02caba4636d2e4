"""Singular-time estimation, Type-I/Type-II classification, blow-up frames,
profile comparison and detection of minimal hyperspheres.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curvature import CurvatureField
from .mesh import MetricState
from .solitons import Profile


@dataclass(frozen=True)
class SingularityEstimate:
    """Estimated singular time and type.

    ``method`` is ``"linear-b2"``, ``"linear-1/rm"`` or ``"none"``;
    ``N_series`` holds (t, (T_est − t)·rm_max) for samples before T_est.
    """

    singular: bool
    T_est: float
    uncertainty: float
    method: str
    T_rm: float = math.nan
    T_b2: float = math.nan
    type_verdict: str = "undetermined"
    slope: float = math.nan
    N_series: tuple = field(default=((), ()), repr=False)

    def with_type(self, verdict: str, slope: float) -> "SingularityEstimate":
        d = dict(self.__dict__)
        d.update(type_verdict=verdict, slope=slope)
        return SingularityEstimate(**d)


def _linear_root(t: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Root of the least-squares line through (t, y) and its standard error."""
    A = np.vstack([t, np.ones_like(t)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    k, c = coef
    if k >= 0:
        return math.nan, math.nan
    root = -c / k
    m = t.size
    resid = y - (k * t + c)
    if m > 2:
        s2 = float(resid @ resid) / (m - 2)
        cov = s2 * np.linalg.inv(A.T @ A)
        # root = −c/k: gradient (c/k², −1/k)
        g = np.array([c / k**2, -1.0 / k])
        se = math.sqrt(max(float(g @ cov @ g), 0.0))
    else:
        se = 0.0
    return float(root), se


def estimate_T(
    t, rm, b2, min_samples: int = 20, min_growth: float = 1e3, agree: float = 0.2
) -> SingularityEstimate:
    """Estimate the singular time from sampled (t, rm_max, tracked b²).

    The fit window is the last decade of rm_max growth.  Both 1/rm_max and
    b² are extrapolated linearly to zero; the b² root is used when the two
    roots agree within ``agree`` (relative), otherwise the 1/rm root with
    doubled uncertainty.  The uncertainty is the larger of the least-squares
    standard error and the shift of the root when only the later half of the
    window is fitted.  Returns ``method="none"`` when there are fewer than
    ``min_samples`` samples or rm_max grew by less than ``min_growth``.
    """
    t = np.asarray(t, float)
    rm = np.asarray(rm, float)
    b2 = np.asarray(b2, float)
    none = SingularityEstimate(False, math.inf, math.inf, "none", type_verdict="none")
    if t.size < min_samples or not np.all(np.isfinite(rm)) or not np.any(rm > 0):
        return none
    if rm[-1] < min_growth * np.min(rm[rm > 0]):
        return none
    win = rm >= rm[-1] / 10.0
    # keep the window contiguous at the end of the series
    start = int(np.flatnonzero(~win)[-1] + 1) if np.any(~win) else 0
    tw, rw, bw = t[start:], rm[start:], b2[start:]
    if tw.size < 3:
        tw, rw, bw = t[-3:], rm[-3:], b2[-3:]
    T_rm, se_rm = _linear_root(tw, 1.0 / rw)
    T_b2, se_b2 = _linear_root(tw, bw)
    # systematic drift: the same fit on the later half of the window
    h = tw.size // 2
    if tw.size - h >= 3:
        T_rm_h, _ = _linear_root(tw[h:], 1.0 / rw[h:])
        T_b2_h, _ = _linear_root(tw[h:], bw[h:])
        if math.isfinite(T_rm_h):
            se_rm = max(se_rm, abs(T_rm_h - T_rm))
        if math.isfinite(T_b2_h):
            se_b2 = max(se_b2, abs(T_b2_h - T_b2))
    t_last = float(t[-1])
    floor = 1e-12 * max(abs(t_last), 1.0)
    ok_b2 = math.isfinite(T_b2) and T_b2 > t_last
    ok_rm = math.isfinite(T_rm) and T_rm > t_last
    if ok_b2 and ok_rm and abs(T_b2 - T_rm) <= agree * T_rm:
        T, unc, method = T_b2, max(se_b2, floor), "linear-b2"
    elif ok_rm:
        T, unc, method = T_rm, 2.0 * max(se_rm, floor), "linear-1/rm"
    elif ok_b2:
        T, unc, method = T_b2, 2.0 * max(se_b2, floor), "linear-b2"
    else:
        return none
    before = t < T
    N = (T - t[before]) * rm[before]
    return SingularityEstimate(True, float(T), float(unc), method, T_rm, T_b2,
                               N_series=(tuple(t[before]), tuple(N)))


def classify_type(
    est: SingularityEstimate, rm, t=None, type1_slope: float = 0.1, type2_slope: float = -0.3
) -> SingularityEstimate:
    """Fit log N against log(T_est − t) over the final two decades of rm_max.

    |m| ≤ ``type1_slope`` → ``"TypeI"``; m ≤ ``type2_slope`` →
    ``"TypeII-indicated"``; otherwise (or with less than one decade of data)
    ``"undetermined"``.  ``rm`` (and optionally ``t``) are the full sampled
    series the estimate was built from.
    """
    if not est.singular:
        return est.with_type("none", math.nan)
    tN = np.asarray(est.N_series[0], float)
    N = np.asarray(est.N_series[1], float)
    rm = np.asarray(rm, float)[: tN.size]
    if tN.size < 3:
        return est.with_type("undetermined", math.nan)
    win = rm >= rm[-1] / 100.0
    start = int(np.flatnonzero(~win)[-1] + 1) if np.any(~win) else 0
    rw = rm[start:]
    if rw.size < 3 or rw[-1] < 10.0 * np.min(rw):
        return est.with_type("undetermined", math.nan)
    x = np.log(est.T_est - tN[start:])
    y = np.log(N[start:])
    m = float(np.polyfit(x, y, 1)[0])
    if abs(m) <= type1_slope:
        v = "TypeI"
    elif m <= type2_slope:
        v = "TypeII-indicated"
    else:
        v = "undetermined"
    return est.with_type(v, m)


def final_decades_ratio(est: SingularityEstimate, rm, decades: float = 2.0) -> tuple[float, float]:
    """(N_end/N_start, max/min of N) over the final ``decades`` of rm growth."""
    N = np.asarray(est.N_series[1], float)
    rm = np.asarray(rm, float)[: N.size]
    win = rm >= rm[-1] / 10.0**decades
    start = int(np.flatnonzero(~win)[-1] + 1) if np.any(~win) else 0
    Nw = N[start:]
    return float(Nw[-1] / Nw[0]), float(np.max(Nw) / np.min(Nw))


# ------------------------------------------------------------------ frames


@dataclass(frozen=True, eq=False)
class BlowupFrame:
    """Parabolically rescaled profile around a base node (λ = R at the base)."""

    base: int
    t_frame: float
    lam: float
    sigma: np.ndarray
    b_tilde: np.ndarray
    c_tilde: np.ndarray
    at_origin: bool
    slope0: float


def blowup_frame(
    state: MetricState, cf: CurvatureField, at_origin: bool = True, sigma_max: float = 20.0,
    t_frame: float | None = None, base: int | None = None,
) -> BlowupFrame:
    """Rescale ``state`` by λ = R(base).

    Origin frames use the innermost node and σ = √λ·s; other frames use the
    curvature-peak node (or ``base``) and σ = √λ·(s − s_base), which may be
    negative.  Only |σ| ≤ ``sigma_max`` is kept.  Scale-invariant, so the
    frame of a stored rescaled state equals the frame of the physical one.
    """
    if base is None:
        base = 0 if at_origin else int(cf.rm_index)
    lam = float(cf.R[base])
    if not lam > 0:
        raise ValueError(f"scalar curvature at base node {base} is {lam:.3g} <= 0; no frame")
    s = np.asarray(state.s)
    rl = math.sqrt(lam)
    s_base = 0.0 if at_origin else float(s[base])
    sigma = rl * (s - s_base)
    keep = np.abs(sigma) <= sigma_max
    if at_origin:
        # slope at σ = 0 from linear extrapolation in s² of b_s
        bs = cf.bs
        slope0 = float(bs[0] - s[0] ** 2 * (bs[1] - bs[0]) / (s[1] ** 2 - s[0] ** 2))
    else:
        slope0 = float(cf.bs[base])
    return BlowupFrame(
        base=int(base),
        t_frame=float(state.t if t_frame is None else t_frame),
        lam=lam,
        sigma=sigma[keep],
        b_tilde=rl * state.b[keep],
        c_tilde=rl * state.c[keep],
        at_origin=bool(at_origin),
        slope0=slope0,
    )


@dataclass(frozen=True)
class ProfileDistance:
    dist_b: float
    dist_c: float
    symmetry_defect: float
    sigma_cmp: float
    oracle: str

    @property
    def distance(self) -> float:
        return max(self.dist_b, self.dist_c)


def compare_profile(frame: BlowupFrame, oracle: Profile, sigma_cmp: float = 5.0) -> ProfileDistance:
    """Relative sup-distance of (b̃, c̃) to the oracle on the comparison range.

    Origin frames compare on σ ∈ (0, σ_cmp]; other frames on |σ| ≤ σ_cmp
    (the oracle is evaluated at |σ|).  The denominator is max(φ, 0.1).
    """
    sig = frame.sigma
    sel = (sig > 0) & (sig <= sigma_cmp) if frame.at_origin else np.abs(sig) <= sigma_cmp
    lo = 0.0 if frame.at_origin else -sigma_cmp
    if not np.any(sel) or sig.min() > lo + 0.5 * sigma_cmp or sig.max() < sigma_cmp * (1 - 1e-9):
        raise ValueError("frame does not cover the comparison σ-range")
    if sigma_cmp > oracle.sigma_max:
        raise ValueError("oracle does not cover the comparison σ-range")
    phi = oracle(np.abs(sig[sel]))
    den = np.maximum(phi, 0.1)
    db = np.abs(frame.b_tilde[sel] - phi) / den
    dc = np.abs(frame.c_tilde[sel] - phi) / den
    sym = np.abs(frame.b_tilde[sel] / frame.c_tilde[sel] - 1.0)
    return ProfileDistance(float(db.max()), float(dc.max()), float(sym.max()), float(sigma_cmp), oracle.kind)


def detect_minimal_spheres(state: MetricState, cf: CurvatureField) -> list[float]:
    """x-locations where H changes sign (linear interpolation between nodes).

    Nodes with H exactly 0 count as crossings, except a reflecting outer node,
    where H = 0 holds by construction of the truncated domain's mirror plane.
    """
    H = cf.H
    x = state.grid.nodes
    out = []
    idx = np.flatnonzero(np.sign(H[:-1]) * np.sign(H[1:]) < 0)
    for i in idx:
        out.append(float(x[i] - H[i] * (x[i + 1] - x[i]) / (H[i + 1] - H[i])))
    zeros = np.flatnonzero(H == 0.0)
    if state.grid.outer == "reflect":
        zeros = zeros[zeros != H.size - 1]
    out += [float(x[i]) for i in zeros]
    return sorted(out)
