"""Special-function kernels: complete elliptic integrals by AGM and the chi equation.

Argument convention: the parameter m (not the modulus k), i.e.
K(m) = int_0^{pi/2} (1 - m sin^2 t)^(-1/2) dt and
E(m) = int_0^{pi/2} (1 - m sin^2 t)^(1/2) dt.

The chi equation is 2(1 - y^2) chi'' = c3 * chi on y in (-1, 1); its ratio
2(1 - y^2) chi'/chi is the building block for a family of axisymmetric
no-swirl velocity profiles.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import DomainError, ParameterError

_AGM_TOL = 1e-16
_ENDPOINT_MARGIN = 1e-6


def _agm_mean(a, b):
    """Common limit of the arithmetic-geometric mean iteration, vectorized."""
    a = np.asarray(a, dtype=float).copy()
    b = np.asarray(b, dtype=float).copy()
    for _ in range(60):
        if np.all(np.abs(a - b) <= _AGM_TOL * np.abs(a)):
            break
        a, b = 0.5 * (a + b), np.sqrt(a * b)
    return 0.5 * (a + b)


def _ellip_k_from_complement(mc):
    """K(1 - mc) through AGM(1, sqrt(mc)); keeps full precision near m = 1."""
    return np.pi / (2.0 * _agm_mean(np.ones_like(np.asarray(mc, dtype=float)), np.sqrt(mc)))


def elliptic_K(m):
    """Complete elliptic integral of the first kind, parameter m in [0, 1)."""
    m = np.asarray(m, dtype=float)
    if np.any(m < 0) or np.any(m > 1):
        raise ParameterError("K requires 0 <= m < 1")
    if np.any(m == 1):
        raise ParameterError("K diverges at m = 1")
    return _ellip_k_from_complement(1.0 - m)


def elliptic_E(m):
    """Complete elliptic integral of the second kind, parameter m in [0, 1]."""
    m = np.asarray(m, dtype=float)
    if np.any(m < 0) or np.any(m > 1):
        raise ParameterError("E requires 0 <= m <= 1")
    scalar = m.ndim == 0
    m = np.atleast_1d(m)
    out = np.empty_like(m)
    at_one = m == 1.0
    out[at_one] = 1.0
    mm = m[~at_one]
    if mm.size:
        a = np.ones_like(mm)
        b = np.sqrt(1.0 - mm)
        c = np.sqrt(mm)
        csum = 0.5 * c**2
        power = 1.0
        for _ in range(60):
            if np.all(np.abs(c) <= _AGM_TOL):
                break
            a, b, c = 0.5 * (a + b), np.sqrt(a * b), 0.5 * (a - b)
            csum += power * c**2
            power *= 2.0
        K = np.pi / (2.0 * a)
        out[~at_one] = K * (1.0 - csum)
    return out[0] if scalar else out


def elliptic_K_dm(m):
    """dK/dm via the standard derivative identity."""
    m = np.asarray(m, dtype=float)
    return (elliptic_E(m) - (1.0 - m) * elliptic_K(m)) / (2.0 * m * (1.0 - m))


def elliptic_E_dm(m):
    """dE/dm via the standard derivative identity."""
    m = np.asarray(m, dtype=float)
    return (elliptic_E(m) - elliptic_K(m)) / (2.0 * m)


def _ellip_A(m, mc):
    """E(m) - mc*K(m) with the complement supplied exactly.

    This combination solves 4 m mc A'' = A, vanishes at m = 0, and has
    derivative K(m)/2; it generates the c3 = 1/2 chi solutions.
    """
    m = np.asarray(m, dtype=float)
    return elliptic_E(m) - np.asarray(mc, dtype=float) * _ellip_k_from_complement(mc)


@dataclass(frozen=True)
class ChiSolution:
    """A solution of 2(1 - y^2) chi'' = c3 chi with pointwise (chi, chi') access."""

    c3: float
    values: Callable
    alpha: Optional[float] = None

    def __call__(self, y):
        return self.values(y)

    def residual(self, y, fd_step=1e-5):
        """|2(1-y^2) chi'' - c3 chi| with chi'' from differencing chi'."""
        y = np.asarray(y, dtype=float)
        _, dp = self.values(y + fd_step)
        _, dm = self.values(y - fd_step)
        chi, _ = self.values(y)
        d2 = (dp - dm) / (2.0 * fd_step)
        return np.abs(2.0 * (1.0 - y**2) * d2 - self.c3 * chi)


def _verify_chi(sol: ChiSolution, grid):
    grid = np.asarray(grid, dtype=float)
    chi, _ = sol(grid)
    bad = sol.residual(grid) >= 1e-8 * (1.0 + np.abs(chi))
    if np.any(bad):
        raise RuntimeError(f"chi residual check failed at {grid[bad]}")


def chi_solve(c3, init, y0=0.0, grid=None) -> ChiSolution:
    """Integrate the chi equation from (chi, chi')(y0) = init over the grid's span.

    The endpoints y = +-1 are regular singular points and are kept at a hard
    margin; a grid touching them is rejected.
    """
    if grid is None:
        grid = np.linspace(-0.9, 0.9, 33)
    grid = np.asarray(grid, dtype=float)
    if np.any(np.abs(grid) >= 1.0 - _ENDPOINT_MARGIN) or abs(y0) >= 1.0 - _ENDPOINT_MARGIN:
        raise DomainError("chi grid must stay inside (-1, 1) by a 1e-6 margin")

    def rhs(y, state):
        chi, dchi = state
        return [dchi, c3 * chi / (2.0 * (1.0 - y**2))]

    lo, hi = min(grid.min(), y0), max(grid.max(), y0)
    sols = {}
    for a, b in ((y0, hi), (y0, lo)):
        if a == b:
            continue
        res = solve_ivp(rhs, (a, b), list(init), method="DOP853",
                        rtol=1e-10, atol=1e-13, dense_output=True)
        if not res.success:
            raise RuntimeError(f"chi integration failed: {res.message}")
        sols[np.sign(b - a)] = res.sol

    def values(y):
        y = np.asarray(y, dtype=float)
        chi = np.empty(y.shape)
        dchi = np.empty(y.shape)
        here = np.isclose(y, y0, rtol=0.0, atol=1e-15)
        chi[here], dchi[here] = init
        for sign, sol in sols.items():
            mask = ((y > y0) if sign > 0 else (y < y0)) & ~here
            if np.any(mask):
                chi[mask], dchi[mask] = sol(y[mask])
        return chi, dchi

    out = ChiSolution(c3=float(c3), values=values)
    _verify_chi(out, grid)
    return out


def chi_closed_form_log(alpha=0.0) -> ChiSolution:
    """The explicit c3 = -4 family chi = (1-y^2) ln((1+y)/(1-y)) + 2y + 2a(1-y^2)."""

    def values(y):
        y = np.asarray(y, dtype=float)
        omy2 = 1.0 - y**2
        M = np.log1p(y) - np.log1p(-y)
        chi = omy2 * M + 2.0 * y + 2.0 * alpha * omy2
        dchi = -2.0 * y * M + 4.0 - 4.0 * alpha * y
        return chi, dchi

    return ChiSolution(c3=-4.0, values=values, alpha=float(alpha))


def chi_elliptic_half(alpha) -> ChiSolution:
    """The c3 = 1/2 family built from complete elliptic integrals.

    chi(y) = A(z) + alpha*A(1-z) with z = (1+y)/2 and A(m) = E(m) - (1-m)K(m);
    alpha = inf selects the pure complementary branch A(1-z).
    """
    a = float(alpha)

    def values(y):
        y = np.asarray(y, dtype=float)
        z = 0.5 * (1.0 + y)
        zc = 0.5 * (1.0 - y)
        if np.isinf(a):
            chi = _ellip_A(zc, z)
            dchi = -0.25 * _ellip_k_from_complement(z)
        else:
            chi = _ellip_A(z, zc) + a * _ellip_A(zc, z)
            dchi = 0.25 * (_ellip_k_from_complement(zc) - a * _ellip_k_from_complement(z))
        return chi, dchi

    return ChiSolution(c3=0.5, values=values, alpha=a)


def u_theta_from_chi(chi: ChiSolution, y):
    """The profile U_theta = 2 (1 - y^2) chi'(y) / chi(y).

    A zero of chi marks the boundary of the velocity's domain and raises
    DomainError.
    """
    y = np.asarray(y, dtype=float)
    c, dc = chi(y)
    if np.any(np.abs(c) <= 1e-14 * (1.0 + np.abs(dc))):
        raise DomainError("chi vanishes: domain boundary of the velocity profile")
    return 2.0 * (1.0 - y**2) * dc / c


def chi_first_root(fun, lo, hi, tol=1e-12):
    """Bisection root of a scalar function between a sign change in [lo, hi]."""
    flo, fhi = fun(lo), fun(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise ValueError("no sign change in the bracketing interval")
    return brentq(fun, lo, hi, xtol=tol)
