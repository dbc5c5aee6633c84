"""Small numerical utilities: Richardson pairing, limit fits, complex line quadrature."""

import numpy as np


def richardson_pair(f_h, f_h2):
    """Combine values of an O(h^2)-accurate rule at steps h and h/2 into an O(h^4) one."""
    return f_h2 + (f_h2 - f_h) / 3.0


def richardson_sequence(values, ratio=2.0, order=2.0):
    """Repeated Richardson extrapolation of a sequence sampled at steps h, h/r, h/r^2, ...

    Assumes errors scale like h^order at leading order. Returns the final extrapolant.
    """
    level = [np.asarray(v, dtype=float) for v in values]
    mult = ratio**order
    while len(level) > 1:
        level = [(mult * level[i + 1] - level[i]) / (mult - 1.0) for i in range(len(level) - 1)]
        mult *= ratio**order
    return level[0]


def invlog_limit(dists, values, degree=3):
    """Extrapolate d -> 0 limit of a sequence with corrections polynomial in 1/ln(d).

    Fits values ~ c0 + c1*t + ... + c_deg*t^deg with t = 1/ln(d). Power-law
    corrections look constant on this ladder, so the fit is also exact for them.

    Returns (limit, slope_in_t, fit_residual).
    """
    d = np.asarray(dists, dtype=float)
    v = np.asarray(values, dtype=float)
    t = 1.0 / np.log(d)
    deg = min(degree, len(d) - 1)
    coef = np.polynomial.polynomial.polyfit(t, v, deg)
    resid = float(np.max(np.abs(np.polynomial.polynomial.polyval(t, coef) - v)))
    slope = float(coef[1]) if deg >= 1 else 0.0
    return float(coef[0]), slope, resid


def affine_fit(x, y):
    """Least-squares y = slope*x + intercept; returns (slope, intercept, rel_residual)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), res, _, _ = np.linalg.lstsq(A, y, rcond=None)
    scale = max(np.max(np.abs(y)), 1e-300)
    rel = float(np.sqrt(res[0] / len(y)) / scale) if res.size else 0.0
    return float(slope), float(intercept), rel


def quadratic_through(ys, values):
    """Exact quadratic coefficients (p0, p1, p2) through three (y, value) samples."""
    V = np.vander(np.asarray(ys, dtype=float), 3, increasing=True)
    p0, p1, p2 = np.linalg.solve(V, np.asarray(values, dtype=float))
    return float(p0), float(p1), float(p2)


# Gauss-Legendre nodes/weights on [-1, 1], fixed orders for the adaptive rule.
_GL_LO = np.polynomial.legendre.leggauss(10)
_GL_HI = np.polynomial.legendre.leggauss(21)


def _gl_segment(fun, za, zb, rule):
    nodes, weights = rule
    mid = 0.5 * (za + zb)
    half = 0.5 * (zb - za)
    return half * np.sum(weights * fun(mid + half * nodes))


def complex_line_integral(fun, za, zb, tol=1e-13, max_depth=48):
    """Adaptive integral of a complex analytic function along the segment [za, zb].

    Bisects until the 10- vs 21-node Gauss estimates agree within tol (absolute).
    """

    def recurse(a, b, depth):
        lo = _gl_segment(fun, a, b, _GL_LO)
        hi = _gl_segment(fun, a, b, _GL_HI)
        if abs(hi - lo) <= tol or depth >= max_depth:
            return hi
        m = 0.5 * (a + b)
        return recurse(a, m, depth + 1) + recurse(m, b, depth + 1)

    return recurse(complex(za), complex(zb), 0)


def gl_segment_fixed(fun, za, zb, order=24):
    """Non-adaptive Gauss-Legendre integral along [za, zb]; for short analytic hops."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    mid = 0.5 * (za + zb)
    half = 0.5 * (zb - za)
    return half * np.sum(weights * fun(mid + half * nodes))
