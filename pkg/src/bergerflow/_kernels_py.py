"""Pure-numpy reference implementation of the hot kernels.

Every function here has a twin in ``_kernels.pyx`` with the same signature and
the same floating-point operation order, so that the compiled and the fallback
paths agree to rounding.  The package picks the compiled version at import
time when it is available (see :mod:`bergerflow.kernels`).

Layout conventions shared by all kernels
----------------------------------------
* ``w[i]`` is the coordinate width of segment ``i`` = (x_{i-1}, x_i] with
  x_{-1} = 0, so node ``i`` is the right end of segment ``i``.
* ``lnxi[i]`` is ln ξ averaged over segment ``i``; segment lengths are
  ``L = exp(lnxi) * w``.
* ``inner`` = 0 means the grid starts at the singular orbit (b, c odd, value 0
  at x = 0); ``inner`` = 1 means a mirror plane at x = 0 (b, c even), used for
  the R x S^3 cylinder.
* ``outer`` = 0 pins the last node, ``outer`` = 1 reflects evenly about x_max.
"""
from __future__ import annotations

import numpy as np

INNER_ORIGIN = 0
INNER_MIRROR = 1
OUTER_PINNED = 0
OUTER_REFLECT = 1


def _segment_slopes(f, L, inner):
    fp = np.empty(f.shape[0] + 1)
    fp[1:] = f
    fp[0] = 0.0
    S = (fp[1:] - fp[:-1]) / L
    if inner == INNER_MIRROR:
        S[0] = 0.0
    return S


def fornberg5(z, x0):
    """Weights of the first and second derivative at ``x0`` from 5 points.

    ``z`` has shape (m, 5) and ``x0`` shape (m,); returns two (m, 5) arrays.
    This is Fornberg's recursion specialised to 5 nodes and derivative order 2,
    vectorised over the leading axis.
    """
    m = z.shape[0]
    c = np.zeros((m, 5, 3))
    c1 = np.ones(m)
    c4 = z[:, 0] - x0
    c[:, 0, 0] = 1.0
    for i in range(1, 5):
        mn = min(i, 2)
        c2 = np.ones(m)
        c5 = c4
        c4 = z[:, i] - x0
        for j in range(i):
            c3 = z[:, i] - z[:, j]
            c2 = c2 * c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[:, i, k] = c1 * (k * c[:, i - 1, k - 1] - c5 * c[:, i - 1, k]) / c2
                c[:, i, 0] = -c1 * c5 * c[:, i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[:, j, k] = (c4 * c[:, j, k] - k * c[:, j, k - 1]) / c3
            c[:, j, 0] = c4 * c[:, j, 0] / c3
        c1 = c2
    return c[:, :, 1], c[:, :, 2]


def _extend(f, s, odd, inner):
    """Parity-extended sample points used by the 5-point stencils."""
    if inner == INNER_ORIGIN and odd:
        S = np.concatenate(([-s[1], -s[0], 0.0], s))
        F = np.concatenate(([-f[1], -f[0], 0.0], f))
        off = 3
    else:
        sg = -1.0 if odd else 1.0
        S = np.concatenate(([-s[1], -s[0]], s))
        F = np.concatenate(([sg * f[1], sg * f[0]], f))
        off = 2
    return S, F, off


def deriv4(f, s, odd, inner):
    """Fourth-order parity-aware first and second s-derivatives at every node."""
    n = f.shape[0]
    S, F, off = _extend(np.asarray(f, float), np.asarray(s, float), bool(odd), inner)
    m = S.shape[0]
    j = np.arange(n) + off
    lo = np.clip(j - 2, 0, m - 5)
    idx = lo[:, None] + np.arange(5)[None, :]
    w1, w2 = fornberg5(S[idx], S[j])
    Fw = F[idx]
    return (w1 * Fw).sum(axis=1), (w2 * Fw).sum(axis=1)


def _inner_d1(f, s, k4):
    """4th-order first derivative of an odd field at the first ``k4`` nodes."""
    S = np.concatenate(([-s[1], -s[0], 0.0], s[: k4 + 2]))
    F = np.concatenate(([-f[1], -f[0], 0.0], f[: k4 + 2]))
    j = np.arange(k4) + 3
    idx = (j - 2)[:, None] + np.arange(5)[None, :]
    w1, _ = fornberg5(S[idx], S[j])
    return (w1 * F[idx]).sum(axis=1)


def rhs_kernel(w, b, c, lnxi, inner, outer, k4):
    """Right-hand side of the fixed-x system and the s-derivatives it used.

    Returns ``(db, dc, dl, bs, cs, bss, css)``.
    """
    n = b.shape[0]
    L = np.exp(lnxi) * w
    Sb = _segment_slopes(b, L, inner)
    Sc = _segment_slopes(c, L, inner)
    # left and right segment of every node
    Ll = L.copy()
    if inner == INNER_MIRROR:
        Ll[0] = 2.0 * L[0]
    Lr = np.empty(n)
    Lr[:-1] = L[1:]
    Lr[-1] = L[-1]
    Sbr = np.empty(n)
    Scr = np.empty(n)
    Sbr[:-1] = Sb[1:]
    Scr[:-1] = Sc[1:]
    if outer == OUTER_REFLECT:
        Sbr[-1] = -Sb[-1]
        Scr[-1] = -Sc[-1]
    else:
        Sbr[-1] = Sb[-1]
        Scr[-1] = Sc[-1]
    tot = Ll + Lr
    bs = (Lr * Sb + Ll * Sbr) / tot
    cs = (Lr * Sc + Ll * Scr) / tot
    bss = (Sbr - Sb) / (0.5 * tot)
    css = (Scr - Sc) / (0.5 * tot)
    if inner == INNER_ORIGIN and k4 > 0:
        k = min(k4, n - 2)
        s = np.cumsum(L)
        bs[:k] = _inner_d1(b, s, k)
        cs[:k] = _inner_d1(c, s, k)
    db = bss + (cs / c + bs / b) * bs + 2.0 * (c * c - 2.0 * b * b) / (b * b * b)
    dc = css + 2.0 * (bs / b) * cs - 2.0 * c * c * c / (b * b * b * b)
    Q = 2.0 * bss / b + css / c
    dl = np.empty(n)
    dl[0] = Q[0]
    dl[1:] = 0.5 * (Q[:-1] + Q[1:])
    if outer == OUTER_PINNED:
        db[-1] = 0.0
        dc[-1] = 0.0
        dl[-1] = 0.0
    return db, dc, dl, bs, cs, bss, css


def origin_segment_length(b0, b1, L1):
    """Length s0 of the innermost segment enforcing b_s = 1 at the origin.

    Solves for s0 such that the odd cubic s + a s^3 through (s0, b0) and
    (s0 + L1, b1) exists, i.e. (b0 - s0)(s0 + L1)^3 = (b1 - s0 - L1) s0^3.
    Falls back to s0 = b0 (unit secant slope) if Newton does not converge.
    """
    s0 = b0
    for _ in range(60):
        s1 = s0 + L1
        g = (b0 - s0) * s1 ** 3 - (b1 - s1) * s0 ** 3
        dg = -(s1 ** 3) + 3.0 * (b0 - s0) * s1 ** 2 + s0 ** 3 - 3.0 * (b1 - s1) * s0 ** 2
        if dg == 0.0:
            return b0
        ds = -g / dg
        s0 = s0 + ds
        if not (s0 > 0.0):
            return b0
        if abs(ds) <= 1e-15 * s0:
            return s0
    return b0
