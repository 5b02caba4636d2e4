"""Closed-form initial metrics and the class validator (𝒢, 𝒢_∞, neck, other).

Families (ξ ≡ 1 in all of them):

* ``cap_cylinder`` (class 𝒢): b = B·tanh(x/B), c = b·(1 − a·tanh²(x/B)).
* ``taubnut_like`` (class 𝒢_∞): b = x·(1 + x²/ℓ²)^q, c = μ₀·tanh(x/μ₀).
* ``neck``: b = c = x·(1 − d·G(x)·x²/(x² + r_n²)) with the even bump
  G(x) = exp(−(x−x₀)²/w²) + exp(−(x+x₀)²/w²).  This is a smooth, odd variant
  of the "√(x² + r_n²)·(1 − d·exp(−(x−x₀)²/w²))" neck, which is not odd at
  x = 0 and so violates the smoothness conditions at the singular orbit.
* ``flat`` (b = c = x) and ``cylinder`` (b = c = r₀, mirror inner boundary)
  are exact solutions used as fixtures.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .curvature import curvature_field
from .mesh import Grid, MeshError, MetricState

Fn = Callable[[np.ndarray], np.ndarray]


def _neck_b(r_n: float, d: float, x0: float, w: float) -> Fn:
    def b(x):
        g = np.exp(-((x - x0) / w) ** 2) + np.exp(-((x + x0) / w) ** 2)
        return x * (1.0 - d * g * x * x / (x * x + r_n * r_n))

    return b


def family_functions(family: str, params: dict) -> tuple[Fn, Fn]:
    """Closed-form (b, c) of a family as vectorised callables of x."""
    p = dict(params)
    if family == "cap_cylinder":
        B, a = p.get("B", 1.0), p.get("a", 0.0)
        if not (B > 0 and 0.0 <= a <= 0.5):
            raise ValueError("cap_cylinder needs B > 0 and a in [0, 0.5]")
        return (lambda x: B * np.tanh(x / B),
                lambda x: B * np.tanh(x / B) * (1.0 - a * np.tanh(x / B) ** 2))
    if family == "taubnut_like":
        ell, q, mu0 = p.get("ell", 1.0), p.get("q", 0.25), p.get("mu0", 1.0)
        if not (ell > 0 and 0.0 <= q <= 0.25 and mu0 > 0):
            raise ValueError("taubnut_like needs ell > 0, q in [0, 1/4], mu0 > 0")
        return (lambda x: x * (1.0 + (x / ell) ** 2) ** q,
                lambda x: mu0 * np.tanh(x / mu0))
    if family == "neck":
        r_n, d, x0, w = p.get("r_n", 0.2), p.get("d", 0.6), p.get("x0", 3.0), p.get("w", 1.0)
        if not (r_n > 0 and 0.0 < d < 1.0 and x0 > 0 and w > 0):
            raise ValueError("neck needs r_n > 0, d in (0, 1), x0 > 0, w > 0")
        f = _neck_b(r_n, d, x0, w)
        return f, f
    if family == "flat":
        return (lambda x: np.array(x, float)), (lambda x: np.array(x, float))
    if family == "cylinder":
        r0 = p.get("r0", 1.0)
        if not r0 > 0:
            raise ValueError("cylinder needs r0 > 0")
        return (lambda x: np.full_like(np.asarray(x, float), r0),
                lambda x: np.full_like(np.asarray(x, float), r0))
    raise ValueError(f"unknown family {family!r}")


def construct_initial(family: str, params: dict, grid: Grid) -> MetricState:
    """Sample a family on ``grid`` (ξ ≡ 1).

    Raises ``ValueError`` if b or c is not strictly positive on the grid or if
    the parity residual |b(−x₀) + b(x₀)| exceeds 10⁻⁶ (origin families only).
    """
    bf, cf = family_functions(family, params)
    x = grid.nodes
    b, c = bf(x), cf(x)
    if np.any(~np.isfinite(b)) or np.any(b <= 0) or np.any(~np.isfinite(c)) or np.any(c <= 0):
        raise ValueError(f"{family} parameters give non-positive b or c on the grid")
    if grid.inner == "origin":
        xm = np.array([-x[0], x[0]])
        res = max(abs(bf(xm).sum()), abs(cf(xm).sum()))
        if res > 1e-6:
            raise ValueError(f"{family} is not odd at the origin (residual {res:.3g})")
    try:
        return MetricState(0.0, np.ones(grid.n), b, c, grid)
    except MeshError as exc:  # pragma: no cover - guarded above
        raise ValueError(str(exc)) from exc


@dataclass(frozen=True)
class ClassValidation:
    """Numerical check of the class conditions on an initial metric.

    ``injectivity_proxy`` records that positive injectivity radius is replaced
    by the sufficient proxy "b unbounded and increasing, c ≥ μ > 0".
    """

    smooth_at_origin: bool
    bs_origin: float
    cs_origin: float
    min_bs: float
    min_H: float
    min_H_x: float
    sup_b: float
    sup_b_finite: bool
    ratio_floor: float
    ratio_max: float
    curvature_decay_ok: bool
    fiber_floor: float
    verdict: str
    injectivity_proxy: bool = True


def _origin_slope(d1: np.ndarray, s: np.ndarray) -> float:
    # linear extrapolation in s² of the (even) first derivative to s = 0
    return float(d1[0] - s[0] ** 2 * (d1[1] - d1[0]) / (s[1] ** 2 - s[0] ** 2))


def validate_class(
    state: MetricState,
    tol: float = 1e-8,
    smooth_tol: float = 1e-4,
    decay_ratio: float = 1e-2,
    bounded_slope: float = 1e-2,
) -> ClassValidation:
    """Classify a metric as 𝒢, 𝒢_∞, neck or other.

    * neck: H < −tol·max|H| somewhere.
    * 𝒢: b_s ≥ 0, H ≥ 0, c ≤ b and sup b finite, where finiteness means b has
      levelled off: max b_s over the outer quarter (x ≥ 3x_max/4) is below
      ``bounded_slope``.
    * 𝒢_∞: b_s ≥ 0, H ≥ 0, c ≤ b, b still growing in the outer quarter
      (min b_s ≥ ``bounded_slope``), curvature decay (rm over the outer quarter
      below ``decay_ratio`` × global rm) and fiber floor μ = min c over the
      outer three quarters > 0.
    """
    cf = curvature_field(state)
    s = np.asarray(state.s)
    x = state.grid.nodes
    bs, cs, H = cf.bs, cf.cs, cf.H
    tol_bs = tol * max(1.0, float(np.max(np.abs(bs))))
    # H scales like 1/b; the floor keeps H ≡ 0 (cylinder) from reading rounding noise as a neck
    tol_H = tol * max(float(np.max(np.abs(H))), 1.0 / float(np.max(state.b)))
    if state.grid.inner == "origin":
        bs0, cs0 = _origin_slope(bs, s), _origin_slope(cs, s)
        smooth = abs(bs0 - 1.0) < smooth_tol and abs(cs0 - 1.0) < smooth_tol
    else:
        bs0, cs0 = float(bs[0]), float(cs[0])
        smooth = abs(bs0) < smooth_tol and abs(cs0) < smooth_tol
    outer = x >= 0.75 * state.grid.x_max
    ratio = state.c / state.b
    sup_b_finite = bool(np.max(bs[outer]) < bounded_slope)
    growing = bool(np.min(bs[outer]) >= bounded_slope)
    rm_outer = float(np.max(cf.rm_max_node[outer]))
    decay = bool(rm_outer <= max(decay_ratio * cf.rm_max, 1e-10))
    fiber = float(np.min(state.c[x >= 0.25 * state.grid.x_max]))
    i_h = int(np.argmin(H))
    min_bs, min_H = float(np.min(bs)), float(H[i_h])
    no_neck = min_bs >= -tol_bs and min_H >= -tol_H
    ordered = float(np.max(ratio)) <= 1.0 + 1e-10
    if min_H < -tol_H:
        verdict = "neck"
    elif no_neck and ordered and sup_b_finite:
        verdict = "G"
    elif no_neck and ordered and growing and decay and fiber > 0:
        verdict = "G_inf"
    else:
        verdict = "other"
    return ClassValidation(
        smooth_at_origin=bool(smooth),
        bs_origin=bs0,
        cs_origin=cs0,
        min_bs=min_bs,
        min_H=min_H,
        min_H_x=float(x[i_h]),
        sup_b=float(np.max(state.b)) if sup_b_finite else math.inf,
        sup_b_finite=sup_b_finite,
        ratio_floor=float(np.min(ratio)),
        ratio_max=float(np.max(ratio)),
        curvature_decay_ok=decay,
        fiber_floor=fiber,
        verdict=verdict,
    )


__all__ = [
    "ClassValidation",
    "construct_initial",
    "family_functions",
    "validate_class",
]
