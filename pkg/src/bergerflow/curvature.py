"""Sectional curvatures, scalar curvature and mean curvature of the warped
Berger metric ds² + b²(σ1² + σ2²) + c²σ3².

With k02 = k01 and k23 = k13 the distinct sectional curvatures are

    k12 = (4b² − 3c²)/b⁴ − b_s²/b²      k13 = c²/b⁴ − b_s c_s/(b c)
    k01 = −b_ss/b                        k03 = −c_ss/c

and R = 2(2k01 + k03 + k12 + 2k13), H = 2b_s/b + c_s/c.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalBreakdown
from .mesh import MetricState, deriv_s

SIGN_TOLERANCE = 1e-8


@dataclass(frozen=True, eq=False)
class CurvatureField:
    k01: np.ndarray
    k03: np.ndarray
    k12: np.ndarray
    k13: np.ndarray
    R: np.ndarray
    H: np.ndarray
    rm_max_node: np.ndarray
    rm_max: float
    rm_index: int
    bs: np.ndarray
    cs: np.ndarray
    bss: np.ndarray
    css: np.ndarray
    term_scale: float = 0.0


def sectional_curvatures(b, c, bs, cs, bss, css):
    """The four distinct sectional curvatures from pointwise jets (vectorised)."""
    b2 = b * b
    k12 = (4.0 * b2 - 3.0 * c * c) / (b2 * b2) - bs * bs / b2
    k13 = c * c / (b2 * b2) - bs * cs / (b * c)
    k01 = -bss / b
    k03 = -css / c
    return k01, k03, k12, k13


def scalar_curvature(k01, k03, k12, k13):
    return 2.0 * (2.0 * k01 + k03 + k12 + 2.0 * k13)


def curvature_field(state: MetricState) -> CurvatureField:
    """All curvature quantities of ``state``; s-derivatives from deriv_s.

    Five-point (fourth-order) stencils are used: the innermost-node values of
    (1 − b_s²)/b²-type combinations are otherwise off by O(1).
    """
    fb, fc = state.field("b"), state.field("c")
    bs = deriv_s(fb, state, 1, accuracy=4).values
    bss = deriv_s(fb, state, 2, accuracy=4).values
    cs = deriv_s(fc, state, 1, accuracy=4).values
    css = deriv_s(fc, state, 2, accuracy=4).values
    return curvature_from_jets(state.b, state.c, bs, cs, bss, css)


def curvature_from_jets(b, c, bs, cs, bss, css) -> CurvatureField:
    k01, k03, k12, k13 = sectional_curvatures(b, c, bs, cs, bss, css)
    R = scalar_curvature(k01, k03, k12, k13)
    H = 2.0 * bs / b + cs / c
    rm = np.maximum(np.maximum(np.abs(k01), np.abs(k03)), np.maximum(np.abs(k12), np.abs(k13)))
    bad = ~(np.isfinite(R) & np.isfinite(H) & np.isfinite(rm))
    if bad.any():
        raise NumericalBreakdown("non-finite curvature", node=int(np.flatnonzero(bad)[0]))
    idx = int(np.argmax(rm))
    # largest individual term entering the k's: the rounding scale of their cancellations
    b2 = b * b
    scale = float(np.max((4.0 * b2 + 3.0 * c * c) / (b2 * b2) + (bs * bs + np.abs(bs * cs)) / b2
                         + np.abs(bss) / b + np.abs(css) / c))
    return CurvatureField(k01, k03, k12, k13, R, H, rm, float(rm[idx]), idx, bs, cs, bss, css, scale)


@dataclass(frozen=True)
class SignSummary:
    negative_counts: dict
    minima: dict
    tolerance: float
    nonnegative: bool

    @property
    def verdict(self) -> str:
        if self.nonnegative:
            return "all sectional curvatures nonnegative"
        return "negative sectional curvature present"


def curvature_sign_summary(cf: CurvatureField, rel_tol: float = SIGN_TOLERANCE) -> SignSummary:
    """Counts of negative nodes and global minima of each sectional curvature.

    A value counts as negative below −rel_tol·scale, where the scale is the
    larger of rm_max and the largest individual term of the curvature
    formulas; flat data, whose curvatures are cancellations of O(1/b²) terms,
    is thereby classified as nonnegative.
    """
    tol = rel_tol * max(cf.rm_max, cf.term_scale, np.finfo(float).tiny)
    ks = {"k01": cf.k01, "k03": cf.k03, "k12": cf.k12, "k13": cf.k13}
    counts = {k: int(np.count_nonzero(v < -tol)) for k, v in ks.items()}
    minima = {k: float(v.min()) for k, v in ks.items()}
    return SignSummary(counts, minima, tol, all(m >= -tol for m in minima.values()))
