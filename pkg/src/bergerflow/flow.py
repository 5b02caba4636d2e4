"""Time integration of the warped Berger Ricci flow at fixed radial coordinate.

The evolution is

    b_t = b_ss + (c_s/c + b_s/b) b_s + 2(c² − 2b²)/b³
    c_t = c_ss + 2 (b_s/b) c_s − 2c³/b⁴
    (ln ξ)_t = 2 b_ss/b + c_ss/c

with ∂_s = ξ⁻¹∂_x.  The hot loop lives in :mod:`bergerflow.kernels`; this
module adds the explicit Heun (RK2) stepper, time-step selection, the origin
closing constraint, and parabolic rescaling with remeshing onto a grid that
concentrates nodes around the current curvature peak.

Rescaling convention: after a rescale by ``zoom`` = λ the stored metric is
g̃ = λ g and the stored time t̃ restarts at 0; physical time is
``t_offset + t̃ / lam_total`` and physical curvature is ``lam_total`` times the
stored curvature.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import make_interp_spline
from scipy.optimize import brentq

from . import kernels
from .errors import NumericalBreakdown, ResolutionExhausted
from .mesh import Grid, MeshError, MetricState, RadialField

# number of innermost nodes whose b_s, c_s use 4th-order stencils in the RHS
INNER_HIGH_ORDER_NODES = 6


@dataclass(frozen=True)
class StepControl:
    """Time-step policy: dt = min(cfl·min(L)², η/rm_max, dt_max).

    The explicit diffusion limit of the scheme is dt ≈ 0.18·min(L)², hence the
    default ``cfl = 0.15``.  A step whose result is non-positive or non-finite
    is retried with dt/2 up to ``max_retries`` times.
    """

    cfl: float = 0.15
    eta: float = 0.05
    dt_min: float = 1e-14
    dt_max: float = 1e-2
    max_retries: int = 8


def apply_origin_constraint(b: np.ndarray, lnxi: np.ndarray, grid: Grid) -> np.ndarray:
    """Return ``lnxi`` with the innermost segment fixed by b_s(0) = 1.

    Only acts for ``inner="origin"``; the innermost segment length is then an
    algebraic function of b_0, b_1 and the second segment length.
    """
    if grid.inner != "origin":
        return lnxi
    w = grid.widths
    L1 = math.exp(lnxi[1]) * w[1]
    s0 = kernels.origin_segment_length(float(b[0]), float(b[1]), float(L1))
    out = np.array(lnxi, dtype=float, copy=True)
    out[0] = math.log(s0 / w[0])
    return out


def constrained(state: MetricState) -> MetricState:
    """``state`` with the origin constraint imposed on ξ_0."""
    lx = apply_origin_constraint(state.b, state.lnxi, state.grid)
    return state.replace(xi=np.exp(lx))


def _raw_rhs(grid: Grid, b, c, lnxi):
    return kernels.rhs_kernel(
        grid.widths, b, c, lnxi, grid.inner_code, grid.outer_code, INNER_HIGH_ORDER_NODES
    )


def rhs(state: MetricState) -> tuple[RadialField, RadialField, RadialField]:
    """Time derivatives (b_t, c_t, (ln ξ)_t) at fixed x.

    Raises :class:`NumericalBreakdown` naming the first node with a
    non-finite entry.
    """
    with np.errstate(all="ignore"):
        db, dc, dl, *_ = _raw_rhs(state.grid, state.b, state.c, state.lnxi)
    bad = ~(np.isfinite(db) & np.isfinite(dc) & np.isfinite(dl))
    if bad.any():
        raise NumericalBreakdown("non-finite right-hand side", node=int(np.flatnonzero(bad)[0]), snapshot=state)
    par = state.metric_parity
    return RadialField(db, par), RadialField(dc, par), RadialField(dl, "even")


# innermost nodes whose curvature jets are recomputed with 5-point stencils
_RM_INNER = 16


def rm_max_fast(state: MetricState, jets=None) -> tuple[float, int]:
    """Max-norm of the sectional curvatures, cheaply.

    Uses the RHS jets (``jets`` = (bs, cs, bss, css) if already available)
    except at the innermost nodes, where the second-order b_s error is
    amplified by 1/b² in k12 and k13 and would create a spurious O(1) peak;
    there the five-point parity-aware stencils are used instead.
    """
    if jets is None:
        _, _, _, bs, cs, bss, css = _raw_rhs(state.grid, state.b, state.c, state.lnxi)
    else:
        bs, cs, bss, css = jets
    n = state.grid.n
    m = min(n, _RM_INNER + 4)
    if n > _RM_INNER + 4:
        bs, cs, bss, css = bs.copy(), cs.copy(), bss.copy(), css.copy()
        s = np.asarray(state.s)[:m]
        odd = state.grid.inner == "origin"
        b1, b2 = kernels.deriv4(state.b[:m], s, odd, state.grid.inner_code)
        c1, c2 = kernels.deriv4(state.c[:m], s, odd, state.grid.inner_code)
        k = _RM_INNER
        bs[:k], bss[:k], cs[:k], css[:k] = b1[:k], b2[:k], c1[:k], c2[:k]
    return _rm_from_jets(state.b, state.c, bs, cs, bss, css)


def rm_and_rhs(state: MetricState) -> tuple[float, int, tuple]:
    """:func:`rm_max_fast` together with the raw RHS it was computed from."""
    raw = _raw_rhs(state.grid, state.b, state.c, state.lnxi)
    rm, i = rm_max_fast(state, raw[3:])
    return rm, i, raw


def _rm_from_jets(b, c, bs, cs, bss, css):
    b2 = b * b
    k12 = (4.0 * b2 - 3.0 * c * c) / (b2 * b2) - bs * bs / b2
    k13 = c * c / (b2 * b2) - bs * cs / (b * c)
    k01 = -bss / b
    k03 = -css / c
    rm = np.maximum.reduce([np.abs(k12), np.abs(k13), np.abs(k01), np.abs(k03)])
    i = int(np.argmax(rm))
    return float(rm[i]), i


def select_dt(state: MetricState, control: StepControl, rm_max: float | None = None) -> float:
    """Stable step for ``state`` under ``control``."""
    if rm_max is None:
        rm_max, _ = rm_max_fast(state)
    Lmin = float(np.min(state.segment_lengths))
    dt = min(control.cfl * Lmin * Lmin, control.dt_max)
    if rm_max > 0.0:
        dt = min(dt, control.eta / rm_max)
    return dt


def _heun(grid: Grid, b, c, lx, dt, k1=None):
    db, dc, dl, *_ = _raw_rhs(grid, b, c, lx) if k1 is None else k1
    b1 = b + dt * db
    c1 = c + dt * dc
    if np.any(b1 <= 0.0) or np.any(c1 <= 0.0):
        return None
    l1 = apply_origin_constraint(b1, lx + dt * dl, grid)
    db2, dc2, dl2, *_ = _raw_rhs(grid, b1, c1, l1)
    bn = b + 0.5 * dt * (db + db2)
    cn = c + 0.5 * dt * (dc + dc2)
    if np.any(bn <= 0.0) or np.any(cn <= 0.0):
        return None
    ln = apply_origin_constraint(bn, lx + 0.5 * dt * (dl + dl2), grid)
    if not (np.all(np.isfinite(bn)) and np.all(np.isfinite(cn)) and np.all(np.isfinite(ln))):
        return None
    return bn, cn, ln


def step(
    state: MetricState, dt: float, control: StepControl = StepControl(), k1=None
) -> tuple[MetricState, float]:
    """Advance one Heun step; returns the new state and the dt actually used.

    ``k1`` may pass the raw RHS of ``state`` (see :func:`rm_and_rhs`) to save
    one evaluation.

    On loss of positivity or finiteness the step is retried with dt/2 up to
    ``control.max_retries`` times before :class:`NumericalBreakdown` is raised.
    """
    if not (dt > 0.0 and math.isfinite(dt)):
        raise ValueError("dt must be positive and finite")
    grid = state.grid
    h = dt
    for _ in range(control.max_retries + 1):
        if h < control.dt_min:
            break
        res = _heun(grid, state.b, state.c, state.lnxi, h, k1)
        if res is not None:
            bn, cn, ln = res
            return MetricState(state.t + h, np.exp(ln), bn, cn, grid), h
        h *= 0.5
    bad = np.flatnonzero(~np.isfinite(state.b) | (state.b <= 0))
    raise NumericalBreakdown(
        f"step failed after {control.max_retries} halvings (dt={h:.3g})",
        node=int(bad[0]) if bad.size else None,
        snapshot=state,
    )


# ---------------------------------------------------------------- remeshing


def remesh_nodes(
    s_max: float,
    n: int,
    h_fine: float,
    s_peak: float = 0.0,
    core: float = 0.0,
    ratio_cap: float = 1.9,
) -> np.ndarray:
    """Nodes on (0, s_max] with spacing h_fine inside |s − s_peak| ≤ core and
    linearly growing spacing h_fine·(1 + κ·dist) outside.

    κ is chosen by bisection so exactly ``n`` nodes are used; if ``n`` nodes at
    spacing ``h_fine`` already cover (0, s_max] the grid is uniform.
    """
    if n < 16:
        raise MeshError("need at least 16 nodes")
    if n * h_fine >= s_max:
        return s_max * np.arange(1, n + 1) / n
    # extents of the coarse regions on each side of the core
    lo_edge, hi_edge = max(0.0, s_peak - core), min(s_max, s_peak + core)
    sides = np.array([lo_edge, s_max - hi_edge])
    core_len = hi_edge - lo_edge

    def total(kappa):
        # node count implied by the density 1/(h(1 + κ·dist)), integrated exactly
        coarse = np.sum(np.log1p(kappa * sides)) / kappa if kappa > 0 else np.sum(sides)
        return (core_len + coarse) / h_fine - n

    hi = 1.0
    while total(hi) > 0:
        hi *= 2.0
        if hi > 1e12:
            raise MeshError("cannot fit grid into the node budget")
    kappa = brentq(total, 0.0, hi, xtol=1e-14 * hi, rtol=1e-14)
    sg = np.linspace(0.0, s_max, 200_001)
    dist = np.maximum(0.0, np.abs(sg - s_peak) - core)
    dens = 1.0 / (h_fine * (1.0 + kappa * dist))
    cum = np.concatenate(([0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(sg))))
    targets = cum[-1] * np.arange(1, n + 1) / n
    nodes = np.interp(targets, cum, sg)
    nodes[-1] = s_max
    w = np.diff(nodes, prepend=0.0)
    r = w[1:] / w[:-1]
    if np.any(r > ratio_cap) or np.any(r < 1.0 / ratio_cap):
        raise MeshError("remeshed spacing varies too fast; increase the node budget")
    return nodes


def _extended_interpolants(state: MetricState):
    """Quintic splines of the even extensions of u and q = c/b, where u = b/s
    at an origin (so b = s·u stays exactly odd) and u = b at a mirror.

    Interpolating b itself with a monotone or cubic scheme leaves O(h³)
    errors in b_s that the 1/b² in k12, k13 amplify into O(1) curvature jumps
    at the innermost nodes; u is smooth and O(1) there.
    """
    s = np.asarray(state.s)
    origin = state.grid.inner == "origin"
    u = state.b / s if origin else state.b
    q = state.c / state.b
    se = np.concatenate((-s[::-1], s))
    iu = make_interp_spline(se, np.concatenate((u[::-1], u)), k=5)
    iq = make_interp_spline(se, np.concatenate((q[::-1], q)), k=5)
    if origin:
        return (lambda x: x * iu(x)), iq
    return iu, iq


def remesh(state: MetricState, nodes: np.ndarray, zoom: float = 1.0) -> MetricState:
    """Interpolate ``state`` (scaled by ``zoom``) onto new arclength nodes.

    The new coordinate is x' = √zoom·s so ξ' ≡ 1 (except the constrained
    innermost segment).  b/s and q = c/b are interpolated with quintic splines
    on their even extensions; q is capped at 1 so spline overshoot cannot
    break the ordering c ≤ b.  Raises :class:`MeshError` if a node lies outside
    the data range (extrapolation).
    """
    sq = math.sqrt(zoom)
    s = np.asarray(state.s)
    xs = np.asarray(nodes, float) / sq  # positions in old arclength
    if xs[-1] > s[-1] * (1 + 1e-12) or xs[0] <= 0.0:
        raise MeshError("remesh would extrapolate beyond the data")
    xs = np.minimum(xs, s[-1])
    ib, iq = _extended_interpolants(state)
    b = ib(xs)
    q = np.minimum(iq(xs), 1.0)
    b[-1] = state.b[-1]
    q[-1] = state.c[-1] / state.b[-1]
    b = sq * b
    c = q * b
    grid = Grid.from_nodes(nodes, inner=state.grid.inner, outer=state.grid.outer)
    new = MetricState(state.t, np.ones(grid.n), b, c, grid)
    return constrained(new)


# ----------------------------------------------------------- rescaled runs


@dataclass
class FlowState:
    """A metric in rescaled units together with its rescaling history."""

    state: MetricState
    lam_total: float = 1.0
    t_offset: float = 0.0
    step_count: int = 0
    rescales: int = 0
    remeshes: int = 0
    rm_at_rescale: float = 0.0
    dt_at_remesh: float = 0.0
    history: list = field(default_factory=list)

    @property
    def t_phys(self) -> float:
        return self.t_offset + self.state.t / self.lam_total


def peak_location(state: MetricState, rm_index: int) -> float:
    """Arclength of the curvature peak (0 if it sits at the innermost nodes)."""
    return 0.0 if rm_index <= 2 else float(state.s[rm_index])


def rescale_continue(
    fs: FlowState,
    zoom: float,
    n_nodes: int | None = None,
    nodes_per_length: float = 64.0,
    core_lengths: float = 4.0,
) -> FlowState:
    """Parabolically rescale by ``zoom`` (g ← zoom·g, t ← 0) and remesh.

    Nodes are placed at spacing min(1, ℓ)/nodes_per_length within
    ``core_lengths``·ℓ of the curvature peak, where ℓ = rm_max^(-1/2) in the
    new units, and spread geometrically-linearly elsewhere.
    """
    st = fs.state
    n = n_nodes or st.grid.n
    rm, idx = rm_max_fast(st)
    rm_new = rm / zoom
    ell = 1.0 / math.sqrt(max(rm_new, 1e-300))
    s_max = math.sqrt(zoom) * float(st.s[-1])
    h_fine = min(1.0, ell) / nodes_per_length
    s_peak = math.sqrt(zoom) * peak_location(st, idx)
    core = core_lengths * ell
    while True:
        try:
            nodes = remesh_nodes(s_max, n, h_fine, s_peak, core)
            break
        except MeshError:
            h_fine *= 1.25
            if h_fine * n > s_max:
                nodes = s_max * np.arange(1, n + 1) / n
                break
    new = remesh(st, nodes, zoom)
    new = new.replace(t=0.0)
    return FlowState(
        state=new,
        lam_total=fs.lam_total * zoom,
        t_offset=fs.t_phys,
        step_count=fs.step_count,
        rescales=fs.rescales + (1 if zoom != 1.0 else 0),
        remeshes=fs.remeshes + 1,
        rm_at_rescale=rm_new if zoom != 1.0 else fs.rm_at_rescale,
        dt_at_remesh=0.0,
        history=fs.history,
    )


def evolve(
    state: MetricState,
    t_end: float,
    control: StepControl = StepControl(),
    max_steps: int = 10_000_000,
) -> MetricState:
    """Plain fixed-grid evolution to ``t_end`` (no rescaling)."""
    k = 0
    while state.t < t_end - 1e-15 * max(1.0, t_end):
        dt = min(select_dt(state, control), t_end - state.t)
        if dt < control.dt_min:
            raise ResolutionExhausted(f"dt={dt:.3g} below dt_min at t={state.t:.6g}")
        state, _ = step(state, dt, control)
        k += 1
        if k >= max_steps:
            break
    return state
