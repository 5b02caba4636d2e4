# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: fixed-x Ricci-flow right-hand side and the
parity-aware five-point derivative stencils.

Signatures and semantics mirror ``_kernels_py`` exactly; see that module for
the layout conventions.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fabs

cnp.import_array()

cdef enum:
    INNER_ORIGIN = 0
    INNER_MIRROR = 1
    OUTER_PINNED = 0
    OUTER_REFLECT = 1


cdef inline void _fornberg5(const double* z, double x0, double* w1, double* w2) noexcept nogil:
    cdef double c[5][3]
    cdef double c1 = 1.0, c2, c3, c4, c5
    cdef int i, j, k, mn
    for i in range(5):
        for k in range(3):
            c[i][k] = 0.0
    c4 = z[0] - x0
    c[0][0] = 1.0
    for i in range(1, 5):
        mn = i if i < 2 else 2
        c2 = 1.0
        c5 = c4
        c4 = z[i] - x0
        for j in range(i):
            c3 = z[i] - z[j]
            c2 = c2 * c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2
            for k in range(mn, 0, -1):
                c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3
            c[j][0] = c4 * c[j][0] / c3
        c1 = c2
    for i in range(5):
        w1[i] = c[i][1]
        w2[i] = c[i][2]


def deriv4(f, s, odd, int inner):
    """Fourth-order parity-aware first and second s-derivatives at every node."""
    cdef const double[::1] fv = np.ascontiguousarray(f, dtype=np.float64)
    cdef const double[::1] sv = np.ascontiguousarray(s, dtype=np.float64)
    cdef Py_ssize_t n = fv.shape[0]
    cdef int off
    cdef bint is_odd = bool(odd)
    cdef double sg = -1.0 if is_odd else 1.0
    if inner == INNER_ORIGIN and is_odd:
        off = 3
    else:
        off = 2
    cdef Py_ssize_t m = n + off
    cdef double[::1] S = np.empty(m)
    cdef double[::1] F = np.empty(m)
    cdef Py_ssize_t i, j, lo, q
    if off == 3:
        S[0] = -sv[1]; S[1] = -sv[0]; S[2] = 0.0
        F[0] = -fv[1]; F[1] = -fv[0]; F[2] = 0.0
    else:
        S[0] = -sv[1]; S[1] = -sv[0]
        F[0] = sg * fv[1]; F[1] = sg * fv[0]
    for i in range(n):
        S[i + off] = sv[i]
        F[i + off] = fv[i]
    d1 = np.empty(n)
    d2 = np.empty(n)
    cdef double[::1] o1 = d1
    cdef double[::1] o2 = d2
    cdef double w1[5]
    cdef double w2[5]
    cdef double a1, a2
    with nogil:
        for i in range(n):
            j = i + off
            lo = j - 2
            if lo < 0:
                lo = 0
            if lo > m - 5:
                lo = m - 5
            _fornberg5(&S[lo], S[j], w1, w2)
            a1 = 0.0
            a2 = 0.0
            for q in range(5):
                a1 = a1 + w1[q] * F[lo + q]
                a2 = a2 + w2[q] * F[lo + q]
            o1[i] = a1
            o2[i] = a2
    return d1, d2


def rhs_kernel(w, b, c, lnxi, int inner, int outer, int k4):
    """Right-hand side of the fixed-x system and the s-derivatives it used."""
    cdef const double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef const double[::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef const double[::1] cv = np.ascontiguousarray(c, dtype=np.float64)
    cdef const double[::1] lv = np.ascontiguousarray(lnxi, dtype=np.float64)
    cdef Py_ssize_t n = bv.shape[0]
    out = [np.empty(n) for _ in range(7)]
    cdef double[::1] db = out[0]
    cdef double[::1] dc = out[1]
    cdef double[::1] dl = out[2]
    cdef double[::1] bs = out[3]
    cdef double[::1] cs = out[4]
    cdef double[::1] bss = out[5]
    cdef double[::1] css = out[6]
    cdef double[::1] L = np.empty(n)
    cdef double[::1] Sb = np.empty(n)
    cdef double[::1] Sc = np.empty(n)
    cdef double[::1] Q = np.empty(n)
    cdef double[::1] scum = np.empty(n)
    cdef Py_ssize_t i, j, q, k
    cdef double Ll, Lr, Sbr, Scr, tot, bb, cc, acc
    cdef double z[5]
    cdef double fb[5]
    cdef double fc[5]
    cdef double w1[5]
    cdef double w2[5]
    with nogil:
        for i in range(n):
            L[i] = exp(lv[i]) * wv[i]
        Sb[0] = (bv[0] - 0.0) / L[0]
        Sc[0] = (cv[0] - 0.0) / L[0]
        for i in range(1, n):
            Sb[i] = (bv[i] - bv[i - 1]) / L[i]
            Sc[i] = (cv[i] - cv[i - 1]) / L[i]
        if inner == INNER_MIRROR:
            Sb[0] = 0.0
            Sc[0] = 0.0
        for i in range(n):
            Ll = L[i]
            if i == 0 and inner == INNER_MIRROR:
                Ll = 2.0 * L[0]
            if i < n - 1:
                Lr = L[i + 1]
                Sbr = Sb[i + 1]
                Scr = Sc[i + 1]
            else:
                Lr = L[n - 1]
                if outer == OUTER_REFLECT:
                    Sbr = -Sb[n - 1]
                    Scr = -Sc[n - 1]
                else:
                    Sbr = Sb[n - 1]
                    Scr = Sc[n - 1]
            tot = Ll + Lr
            bs[i] = (Lr * Sb[i] + Ll * Sbr) / tot
            cs[i] = (Lr * Sc[i] + Ll * Scr) / tot
            bss[i] = (Sbr - Sb[i]) / (0.5 * tot)
            css[i] = (Scr - Sc[i]) / (0.5 * tot)
        if inner == INNER_ORIGIN and k4 > 0:
            k = k4
            if k > n - 2:
                k = n - 2
            acc = 0.0
            for i in range(n):
                acc = acc + L[i]
                scum[i] = acc
            for i in range(k):
                # extended index j = i + 3 over [-s1, -s0, 0, s0, s1, ...]
                for q in range(5):
                    j = i + 1 + q      # extended index of the q-th stencil point
                    if j == 0:
                        z[q] = -scum[1]; fb[q] = -bv[1]; fc[q] = -cv[1]
                    elif j == 1:
                        z[q] = -scum[0]; fb[q] = -bv[0]; fc[q] = -cv[0]
                    elif j == 2:
                        z[q] = 0.0; fb[q] = 0.0; fc[q] = 0.0
                    else:
                        z[q] = scum[j - 3]; fb[q] = bv[j - 3]; fc[q] = cv[j - 3]
                _fornberg5(z, scum[i], w1, w2)
                acc = 0.0
                for q in range(5):
                    acc = acc + w1[q] * fb[q]
                bs[i] = acc
                acc = 0.0
                for q in range(5):
                    acc = acc + w1[q] * fc[q]
                cs[i] = acc
        for i in range(n):
            bb = bv[i]
            cc = cv[i]
            db[i] = bss[i] + (cs[i] / cc + bs[i] / bb) * bs[i] + 2.0 * (cc * cc - 2.0 * bb * bb) / (bb * bb * bb)
            dc[i] = css[i] + 2.0 * (bs[i] / bb) * cs[i] - 2.0 * cc * cc * cc / (bb * bb * bb * bb)
            Q[i] = 2.0 * bss[i] / bb + css[i] / cc
        dl[0] = Q[0]
        for i in range(1, n):
            dl[i] = 0.5 * (Q[i - 1] + Q[i])
        if outer == OUTER_PINNED:
            db[n - 1] = 0.0
            dc[n - 1] = 0.0
            dl[n - 1] = 0.0
    return tuple(out)


def origin_segment_length(double b0, double b1, double L1):
    """Length s0 of the innermost segment enforcing b_s = 1 at the origin."""
    cdef double s0 = b0, s1, g, dg, ds
    cdef int it
    for it in range(60):
        s1 = s0 + L1
        g = (b0 - s0) * s1 ** 3 - (b1 - s1) * s0 ** 3
        dg = -(s1 ** 3) + 3.0 * (b0 - s0) * s1 ** 2 + s0 ** 3 - 3.0 * (b1 - s1) * s0 ** 2
        if dg == 0.0:
            return b0
        ds = -g / dg
        s0 = s0 + ds
        if not (s0 > 0.0):
            return b0
        if fabs(ds) <= 1e-15 * s0:
            return s0
    return b0
