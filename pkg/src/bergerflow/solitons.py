"""Reference profiles: the Bryant steady soliton on R⁴ and the round cylinder.

The Bryant soliton is the rotationally symmetric metric dσ² + φ(σ)² g_{S³}
with potential f solving Ric + Hess f = 0, i.e.

    3 φ''/φ = f''
    φ''/φ + 2(φ'² − 1)/φ² = f' φ'/φ .

Writing ψ = φ' and F = f' gives the first-order system

    φ' = ψ,   ψ' = F ψ − 2(ψ² − 1)/φ,   F' = 3 ψ'/φ .

It is integrated in the variable χ = 1 − ψ (so ψ² − 1 = −χ(2 − χ)): near
σ = 0, χ ≈ 3κσ² is tiny and forming ψ² − 1 from ψ directly loses all its
significant digits to cancellation, which makes the profile depend on the
starting point at the 10⁻⁵ level.

Smoothness at σ = 0 forces φ = σ − κσ³ + O(σ⁵) and F = −18κσ + O(σ³).  The
scalar curvature there is R(0) = 72κ, so the normalisation R(0) = 1 fixes
κ = 1/72 and leaves no free parameter: the profile is integrated directly
from the origin series (no shooting needed).  The conserved quantity
R + F² = R(0) = 1 is checked after integration.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

KAPPA = 1.0 / 72.0


@dataclass(frozen=True, eq=False)
class Profile:
    """A radial profile φ(σ) sampled on σ ≥ 0 with a callable interpolant."""

    sigma: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    kind: str
    note: str
    fs: np.ndarray | None = None
    _dense: object = None

    def __call__(self, sig) -> np.ndarray:
        sig = np.asarray(sig, float)
        if np.any(sig < 0) or np.any(sig > self.sigma[-1] * (1 + 1e-12)):
            raise ValueError("σ outside the profile range")
        if self.kind == "cylinder":
            return np.full_like(sig, self.phi[0])
        return _eval_bryant(self._dense, sig)

    def derivative(self, sig) -> np.ndarray:
        sig = np.asarray(sig, float)
        if self.kind == "cylinder":
            return np.zeros_like(sig)
        return _eval_bryant(self._dense, sig, comp=1)

    @property
    def sigma_max(self) -> float:
        return float(self.sigma[-1])


def _series(sig):
    """(φ, χ = 1 − φ', F = f') from the regular origin expansion."""
    k = KAPPA
    return np.array([sig - k * sig**3, 3.0 * k * sig**2, -18.0 * k * sig])


def _rhs(_, y):
    phi, chi, F = y
    psi = 1.0 - chi
    dpsi = F * psi + 2.0 * chi * (2.0 - chi) / phi
    return [psi, -dpsi, 3.0 * dpsi / phi]


SIGMA_START = 1e-4


def _eval_bryant(dense, sig, comp=0):
    sig = np.asarray(sig, float)
    out = np.empty_like(sig)
    small = sig < SIGMA_START
    if np.any(small):
        out[small] = _series(sig[small])[comp]
    if np.any(~small):
        out[~small] = dense(sig[~small])[comp]
    if comp == 1:  # stored χ = 1 − φ'
        out = 1.0 - out
    return out


@functools.lru_cache(maxsize=16)
def _bryant_cached(sigma_max: float, tolerance: float, n_out: int) -> Profile:
    sol = solve_ivp(
        _rhs, (SIGMA_START, sigma_max), _series(SIGMA_START), method="DOP853",
        rtol=tolerance * 1e-3, atol=tolerance * 1e-4, dense_output=True,
    )
    if not sol.success:
        raise RuntimeError(f"Bryant integration failed: {sol.message}")
    sig = np.linspace(0.0, sigma_max, n_out)
    phi = _eval_bryant(sol.sol, sig, 0)
    dphi = _eval_bryant(sol.sol, sig, 1)
    fs = _eval_bryant(sol.sol, sig, 2)
    if not (np.all(dphi[1:] > 0) and np.all(dphi[1:] < 1) and np.all(np.diff(dphi) < 0)):
        raise RuntimeError("Bryant profile left the stable branch (φ' not in (0,1) decreasing)")
    for a in (sig, phi, dphi, fs):
        a.setflags(write=False)
    return Profile(sig, phi, dphi, "bryant", "R(0) = 1, phi = s - s^3/72 + ...", fs, sol.sol)


def bryant_profile(sigma_max: float = 20.0, tolerance: float = 1e-10, n_out: int = 2001) -> Profile:
    """Bryant soliton profile with R(0) = 1 on [0, sigma_max]."""
    if not (0 < sigma_max <= 1e3):
        raise ValueError("sigma_max must lie in (0, 1000]")
    if not tolerance >= 1e-10:
        raise ValueError("tolerance must be >= 1e-10")
    return _bryant_cached(float(sigma_max), float(tolerance), int(n_out))


def bryant_residuals(profile: Profile, h: float = 1e-3) -> tuple[float, float, float]:
    """Max residuals of (φ' − ψ, ψ' − rhs, F' − 3ψ'/φ) at interior output nodes.

    Derivatives of the dense output are taken by Richardson-extrapolated
    central differences (O(h⁴)), so the check is independent of the RHS code.
    """
    sig = profile.sigma[(profile.sigma > 2 * h + SIGMA_START) & (profile.sigma < profile.sigma_max - 2 * h)]
    ev = lambda z: np.array([_eval_bryant(profile._dense, z, k) for k in range(3)])  # noqa: E731
    d_h = (ev(sig + h) - ev(sig - h)) / (2 * h)
    d_h2 = (ev(sig + h / 2) - ev(sig - h / 2)) / h
    d = (4 * d_h2 - d_h) / 3
    phi, psi, F = ev(sig)
    dpsi = F * psi - 2.0 * (psi * psi - 1.0) / phi
    r1 = np.max(np.abs(d[0] - psi))
    r2 = np.max(np.abs(d[1] - dpsi))
    r3 = np.max(np.abs(d[2] - 3.0 * d[1] / phi))
    return float(r1), float(r2), float(r3)


def bryant_scalar_curvature(profile: Profile) -> np.ndarray:
    """R = −6φ''/φ + 6(1 − φ'²)/φ² along the profile (series value 1 at σ=0)."""
    sig, phi, psi, F = profile.sigma, profile.phi, profile.dphi, profile.fs
    R = np.empty_like(sig)
    pos = sig > 0
    dpsi = F[pos] * psi[pos] - 2.0 * (psi[pos] ** 2 - 1.0) / phi[pos]
    R[pos] = -6.0 * dpsi / phi[pos] + 6.0 * (1.0 - psi[pos] ** 2) / phi[pos] ** 2
    R[~pos] = 72.0 * KAPPA
    return R


def cylinder_profile(radius: float, sigma_max: float = 20.0, n_out: int = 2001) -> Profile:
    """Constant profile φ ≡ radius (radius √6 has R = 6/r² = 1)."""
    if not radius > 0:
        raise ValueError("radius must be > 0")
    sig = np.linspace(0.0, sigma_max, n_out)
    return Profile(sig, np.full(n_out, float(radius)), np.zeros(n_out), "cylinder", f"radius {radius!r}")
