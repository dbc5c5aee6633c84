"""Flows generated by locally univalent meromorphic functions.

The velocity is u = grad_{S^2}(phi) - Lap_{S^2}(phi) e_r where phi solves
-Lap phi + 2 = 2 e^phi on the sphere. Pulling back through stereographic
projection, phi(x) = xi_hat(z) with

    xi_hat(z) = ln( |f'(z)|^2 (1 + |z|^2)^2 / (1 + |f(z)|^2)^2 ),

f meromorphic and locally univalent. Given m prescribed singular directions
P_j with integer exponents l_j (l_j not in {0, 1, -1}, sum l_j = m - 2), the
coordinates are rotated so P_m is the north pole and

    f(z) = int_a^z (t - z_1)^(l_1 - 1) ... (t - z_{m-1})^(l_{m-1} - 1) dt,

which is path independent. Everything downstream only needs f, f'/f, and the
Wirtinger derivatives of xi_hat, which are available in closed form; f itself
is evaluated by cached pole-avoiding path integration.
"""

import cmath
import threading
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError, ParameterError
from .geometry import (
    DomainDescriptor,
    FieldProvider,
    FieldSample,
    N_POLE,
    S_POLE,
    basis_vectors,
    cartesian_to_spherical,
    spherical_to_cartesian,
    stereographic_forward,
)
from .numerics import affine_fit, complex_line_integral, richardson_pair


def rotation_to_north(p):
    """The rotation in the plane spanned by p and N taking p to the north pole.

    Identity when p is already N; a half-turn about e1 when p is the south pole.
    """
    p = np.asarray(p, dtype=float)
    p = p / np.linalg.norm(p)
    c = float(p @ N_POLE)
    if c > 1.0 - 1e-14:
        return np.eye(3)
    if c < -1.0 + 1e-14:
        return np.diag([1.0, -1.0, -1.0])
    axis = np.cross(p, N_POLE)
    axis /= np.linalg.norm(axis)
    s = np.sqrt(max(0.0, 1.0 - c * c))
    K = np.array(
        [[0.0, -axis[2], axis[1]], [axis[2], 0.0, -axis[0]], [-axis[1], axis[0], 0.0]]
    )
    return np.eye(3) + s * K + (1.0 - c) * (K @ K)


@dataclass(frozen=True)
class SingularityPrescription:
    """m >= 2 distinct singular directions with integer exponents summing to m - 2."""

    points: tuple
    exponents: tuple
    basepoint_a: complex = 0.73 + 0.41j

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 2:
            raise ParameterError("need at least two 3-vector singular directions")
        norms = np.linalg.norm(pts, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise ParameterError("singular directions must be unit vectors")
        ls = self.exponents
        if len(ls) != pts.shape[0]:
            raise ParameterError("one exponent per point required")
        if any((int(l) != l) or int(l) in (0, 1, -1) for l in ls):
            raise ParameterError("exponents must be integers outside {0, 1, -1}")
        if sum(int(l) for l in ls) != len(ls) - 2:
            raise ParameterError("exponents must sum to m - 2")
        dots = np.clip(pts @ pts.T, -1.0, 1.0)
        np.fill_diagonal(dots, -1.0)
        if np.any(np.arccos(dots) <= 1e-6):
            raise ParameterError("singular directions must be separated by > 1e-6")

    @classmethod
    def from_json(cls, obj):
        try:
            bp = obj.get("basepoint", [0.73, 0.41])
            return cls(
                points=tuple(tuple(float(c) for c in p) for p in obj["points"]),
                exponents=tuple(int(l) for l in obj["exponents"]),
                basepoint_a=complex(bp[0], bp[1]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParameterError(f"malformed prescription: {exc}") from exc


class _PathIntegralF:
    """f from quadrature of the product formula, with an anchor cache.

    Anchor values sit on a coarse lattice and are reached by pole-avoiding
    paths from the basepoint; nearby queries continue from the anchor along a
    short segment, so batched evaluations around a point share one anchor and
    the quadrature error varies smoothly across finite-difference stencils.
    Reads are lock-free on immutable dict entries; inserts are serialized.
    """

    def __init__(self, z_list, exponents, basepoint):
        self.z_list = np.asarray(z_list, dtype=complex)
        self.lm1 = np.asarray([int(l) - 1 for l in exponents], dtype=int)
        self.basepoint = complex(basepoint)
        if self._clearance(self.basepoint) <= 1e-6:
            raise ParameterError("basepoint too close to a projected singular point")
        if self.z_list.size:
            gaps = np.abs(self.z_list[:, None] - self.z_list[None, :])
            np.fill_diagonal(gaps, np.inf)
            self._detour = float(min(max(1e-3, 0.45 * gaps.min()), 0.1))
        else:
            self._detour = 1e-3
        self._cell = 2e-3
        self._anchors = {}
        self._lock = threading.Lock()

    # -- closed-form pieces -------------------------------------------------
    def fprime(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.ones_like(z)
        for zj, e in zip(self.z_list, self.lm1):
            out = out * (z - zj) ** e
        return out

    def ln_abs_fprime(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape)
        for zj, e in zip(self.z_list, self.lm1):
            out = out + e * np.log(np.abs(z - zj))
        return out

    def S1(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        for zj, e in zip(self.z_list, self.lm1):
            out = out + e / (z - zj)
        return out

    def S1p(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        for zj, e in zip(self.z_list, self.lm1):
            out = out - e / (z - zj) ** 2
        return out

    # -- path machinery ------------------------------------------------------
    def _clearance(self, z):
        if not self.z_list.size:
            return np.inf
        return float(np.min(np.abs(self.z_list - z)))

    def _segment_clearance(self, p, q):
        if not self.z_list.size:
            return np.inf, None
        d = q - p
        L2 = abs(d) ** 2
        best, worst = np.inf, None
        for zj in self.z_list:
            t = 0.0 if L2 == 0 else min(1.0, max(0.0, ((zj - p).conjugate() * d).real / L2))
            dist = abs(p + t * d - zj)
            if dist < best:
                best, worst = dist, zj
        return best, worst

    def _waypoints(self, p, q, depth=0):
        clear, pole = self._segment_clearance(p, q)
        if pole is None or clear >= self._detour or depth > 24:
            return [q]
        d = q - p
        L2 = abs(d) ** 2
        t = 0.0 if L2 == 0 else min(1.0, max(0.0, ((pole - p).conjugate() * d).real / L2))
        foot = p + t * d
        off = foot - pole
        if abs(off) < 1e-12:
            off = d * 1j / abs(d)
        way = pole + off / abs(off) * (1.6 * self._detour)
        return self._waypoints(p, way, depth + 1) + self._waypoints(way, q, depth + 1)

    def _integrate_legs(self, p, legs, tol):
        total = 0.0 + 0.0j
        for q in legs:
            coarse = abs(complex_line_integral(self.fprime, p, q, tol=np.inf, max_depth=0))
            total += complex_line_integral(self.fprime, p, q, tol=max(tol, 1e-14 * coarse))
            p = q
        return total

    def _full_path(self, z, tol=3e-14):
        target_clear = self._clearance(z)
        if target_clear <= 1e-8:
            raise DomainError("evaluation point within 1e-8 of a singular point")
        if target_clear < self._detour:
            pole = self.z_list[np.argmin(np.abs(self.z_list - z))]
            staging = pole + (z - pole) / abs(z - pole) * self._detour
            legs = self._waypoints(self.basepoint, staging) + [z]
        else:
            legs = self._waypoints(self.basepoint, z)
        return self._integrate_legs(self.basepoint, legs, tol)

    def _anchor_for(self, z):
        key = (round(z.real / self._cell), round(z.imag / self._cell))
        cached = self._anchors.get(key)
        if cached is not None:
            return cached
        zc = complex(key[0] * self._cell, key[1] * self._cell)
        if self._clearance(zc) < 1.2e-3:
            return None
        val = self._full_path(zc)
        with self._lock:
            self._anchors.setdefault(key, (zc, val))
        return self._anchors[key]

    def f_scalar(self, z):
        z = complex(z)
        anchor = self._anchor_for(z)
        if anchor is None:
            return self._full_path(z)
        zc, fc = anchor
        hop_clear, _ = self._segment_clearance(zc, z)
        if hop_clear < 5e-4:
            return self._full_path(z)
        return fc + complex_line_integral(self.fprime, zc, z, tol=1e-13)

    def f(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.empty(z.shape, dtype=complex)
        for idx in np.ndindex(z.shape):
            out[idx] = self.f_scalar(z[idx])
        return out

    def bundle(self, z, order=1):
        z = np.asarray(z, dtype=complex)
        fval = self.f(z)
        absf = np.abs(fval)
        with np.errstate(divide="ignore"):
            ln1pf2 = np.logaddexp(0.0, 2.0 * np.log(absf))
        f1 = self.fprime(z)
        big = absf > 1e8
        with np.errstate(over="ignore", invalid="ignore"):
            T = np.where(
                big, f1 / np.where(big, fval, 1.0), np.conj(fval) * f1 / (1.0 + absf**2)
            )
        out = {
            "ln_abs_f1": self.ln_abs_fprime(z),
            "ln1pf2": ln1pf2,
            "S1": self.S1(z),
            "T": T,
            "f": fval,
            "f1": f1,
        }
        if order >= 2:
            out["S1p"] = self.S1p(z)
        return out


class _ClosedFormF:
    """Closed-form generators: power a z^alpha, exponential a e^(bz), exp(z^k)."""

    def __init__(self, kind, a=1.0, b=1.0, alpha=2.0, k=2):
        if kind not in ("power", "exp", "exp_power"):
            raise ParameterError(f"unknown closed form {kind!r}")
        self.kind = kind
        self.a = complex(a)
        self.b = complex(b)
        self.alpha = float(alpha)
        self.k = int(k)
        if kind == "power" and self.alpha == 0.0:
            raise ParameterError("power exponent must be nonzero")
        if kind == "exp" and (self.a == 0 or self.b == 0):
            raise ParameterError("need a != 0 and b != 0")
        if kind == "exp_power" and self.k < 1:
            raise ParameterError("k must be a positive integer")

    def f(self, z):
        z = np.asarray(z, dtype=complex)
        if self.kind == "power":
            return self.a * z**self.alpha
        if self.kind == "exp":
            return self.a * np.exp(self.b * z)
        return np.exp(z**self.k)

    def fprime(self, z):
        z = np.asarray(z, dtype=complex)
        if self.kind == "power":
            return self.a * self.alpha * z ** (self.alpha - 1.0)
        if self.kind == "exp":
            return self.a * self.b * np.exp(self.b * z)
        return self.k * z ** (self.k - 1) * np.exp(z**self.k)

    def bundle(self, z, order=1):
        with np.errstate(over="ignore"):
            return self._bundle(z, order)

    def _bundle(self, z, order):
        z = np.asarray(z, dtype=complex)
        out = {}
        if self.kind == "power":
            al, lna = self.alpha, np.log(abs(self.a))
            lnz = np.log(np.abs(z))
            lnf = lna + al * lnz
            sig = 1.0 / (1.0 + np.exp(-2.0 * lnf))
            out["ln_abs_f1"] = np.log(abs(self.a * al)) + (al - 1.0) * lnz
            out["ln1pf2"] = np.logaddexp(0.0, 2.0 * lnf)
            out["S1"] = (al - 1.0) / z
            out["T"] = (al / z) * sig
            if order >= 2:
                out["S1p"] = -(al - 1.0) / z**2
        elif self.kind == "exp":
            lnf = np.log(abs(self.a)) + (self.b * z).real
            sig = 1.0 / (1.0 + np.exp(-2.0 * lnf))
            out["ln_abs_f1"] = np.log(abs(self.a * self.b)) + (self.b * z).real
            out["ln1pf2"] = np.logaddexp(0.0, 2.0 * lnf)
            out["S1"] = np.full_like(z, self.b)
            out["T"] = self.b * sig
            if order >= 2:
                out["S1p"] = np.zeros_like(z)
        else:
            k = self.k
            g = z**k
            lnf = g.real
            sig = 1.0 / (1.0 + np.exp(-2.0 * lnf))
            out["ln_abs_f1"] = np.log(float(k)) + (k - 1.0) * np.log(np.abs(z)) + g.real
            out["ln1pf2"] = np.logaddexp(0.0, 2.0 * lnf)
            out["S1"] = (k - 1.0) / z + k * z ** (k - 1)
            out["T"] = k * z ** (k - 1) * sig
            if order >= 2:
                out["S1p"] = -(k - 1.0) / z**2 + k * (k - 1.0) * z ** (k - 2)
        return out


@dataclass(frozen=True)
class LiouvilleSolution:
    """A built flow: rotation, meromorphic data, and the singular directions."""

    rotation: np.ndarray
    fdata: object
    singular_points: tuple
    prescription: Optional[SingularityPrescription] = None

    def domain(self):
        return DomainDescriptor(0.0, np.pi, True, True, self.singular_points)

    def provider(self) -> FieldProvider:
        def sample(theta, phi):
            v = velocity(self, theta, phi)
            return FieldSample(v.u_r, v.u_theta, v.u_phi, pressure(self, theta, phi))

        return FieldProvider(sample, self.domain())


def build(prescription: SingularityPrescription) -> LiouvilleSolution:
    """Realize the prescription: rotate P_m to N, project, set up the path integral."""
    pts = np.asarray(prescription.points, dtype=float)
    R = rotation_to_north(pts[-1])
    z_list = np.array([stereographic_forward(R @ p) for p in pts[:-1]], dtype=complex)
    if np.any(np.abs(z_list - prescription.basepoint_a) <= 1e-6):
        raise ParameterError("basepoint coincides with a projected singular point")
    fdata = _PathIntegralF(z_list, prescription.exponents[:-1], prescription.basepoint_a)
    return LiouvilleSolution(
        rotation=R,
        fdata=fdata,
        singular_points=tuple(tuple(p) for p in pts),
        prescription=prescription,
    )


def closed_form(kind, **params) -> LiouvilleSolution:
    """A solution from a closed-form generator; no rotation is applied."""
    fdata = _ClosedFormF(kind, **params)
    if kind == "power":
        singular = () if abs(abs(fdata.alpha) - 1.0) < 1e-14 else (tuple(S_POLE), tuple(N_POLE))
    elif kind == "exp":
        singular = (tuple(N_POLE),)
    else:
        singular = (tuple(N_POLE),) if fdata.k == 1 else (tuple(S_POLE), tuple(N_POLE))
    return LiouvilleSolution(rotation=np.eye(3), fdata=fdata, singular_points=singular)


def f_and_derivatives(sol_or_data, z):
    """(f, f', f'') of the realized meromorphic function at complex z."""
    fd = sol_or_data.fdata if isinstance(sol_or_data, LiouvilleSolution) else sol_or_data
    z = np.asarray(z, dtype=complex)
    f = fd.f(z)
    f1 = fd.fprime(z)
    if isinstance(fd, _PathIntegralF):
        f2 = fd.S1(z) * f1
    else:
        f2 = fd.bundle(z, order=2)["S1"] * f1
    return f, f1, f2


def _tilde_coords(sol: LiouvilleSolution, theta, phi):
    """Rotated-frame angles and projected complex coordinate for unit-sphere points."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    x = spherical_to_cartesian(1.0, theta, phi)
    xt = x @ sol.rotation.T
    _, tt, pt = cartesian_to_spherical(xt)
    if np.any(tt < 1e-7):
        raise DomainError("evaluation too close to the rotated pole")
    z = (np.cos(tt / 2.0) / np.sin(tt / 2.0)) * np.exp(1j * pt)
    return x, tt, pt, z


def _guard_singular(sol, x, min_angle=1e-5):
    for p in sol.singular_points:
        ang = np.arccos(np.clip(np.asarray(x) @ np.asarray(p), -1.0, 1.0))
        if np.any(ang <= min_angle):
            raise DomainError("evaluation within 1e-5 of a singular direction")


def _xi_hat(bundle, z):
    return (
        2.0 * bundle["ln_abs_f1"]
        + 2.0 * np.log1p(np.abs(z) ** 2)
        - 2.0 * bundle["ln1pf2"]
    )


def _gz(bundle, z):
    return bundle["S1"] + 2.0 * np.conj(z) / (1.0 + np.abs(z) ** 2) - 2.0 * bundle["T"]


def _tangential(gz_val, tt, pt):
    xix = 2.0 * gz_val.real
    xiy = -2.0 * gz_val.imag
    pref = -1.0 / (1.0 - np.cos(tt))
    cp, sp = np.cos(pt), np.sin(pt)
    return pref * (cp * xix + sp * xiy), pref * (sp * xix - cp * xiy)


def phi_potential(sol: LiouvilleSolution, theta, phi):
    """The conformal potential phi(x) = xi_hat(F^{-1}(R x)) on the sphere."""
    _, _, _, z = _tilde_coords(sol, theta, phi)
    return _xi_hat(sol.fdata.bundle(z, order=1), z)


def velocity(sol: LiouvilleSolution, theta, phi) -> FieldSample:
    """Velocity sample at (theta, phi) in the original frame; pressure not included.

    The radial part is 2 e^phi - 2 (through the conformal equation); the
    tangential part comes from the complex gradient of xi_hat mapped through
    the stereographic frame relation, then rotated back.
    """
    x, tt, pt, z = _tilde_coords(sol, theta, phi)
    _guard_singular(sol, x)
    bundle = sol.fdata.bundle(z, order=1)
    u_r = 2.0 * np.exp(_xi_hat(bundle, z)) - 2.0
    u_t, u_p = _tangential(_gz(bundle, z), tt, pt)
    e_r, e_t, e_p = basis_vectors(tt, pt)
    u_rot = u_r[..., None] * e_r + u_t[..., None] * e_t + u_p[..., None] * e_p
    u_cart = u_rot @ sol.rotation
    er0, et0, ep0 = basis_vectors(theta, phi)
    return FieldSample(
        np.sum(u_cart * er0, axis=-1),
        np.sum(u_cart * et0, axis=-1),
        np.sum(u_cart * ep0, axis=-1),
        None,
    )


def pressure(sol: LiouvilleSolution, theta, phi, h=None):
    """Pressure from the radial momentum balance in the rotated frame.

    By default the second derivatives of u_r are taken analytically through
    the Wirtinger derivatives of xi_hat; passing a step h switches to paired
    central differences of u_r instead.
    """
    x, tt, pt, z = _tilde_coords(sol, theta, phi)
    _guard_singular(sol, x, min_angle=1e-5 if h is None else 5.0 * h)
    bundle = sol.fdata.bundle(z, order=2)
    xi = _xi_hat(bundle, z)
    E = np.exp(xi)
    gz = _gz(bundle, z)
    u_r = 2.0 * E - 2.0
    u_t, u_p = _tangential(gz, tt, pt)
    sin, cos = np.sin(tt), np.cos(tt)

    if h is None:
        gzz = (
            bundle["S1p"]
            - 2.0 * np.conj(z) ** 2 / (1.0 + np.abs(z) ** 2) ** 2
            - 2.0 * bundle["S1"] * bundle["T"]
            + 2.0 * bundle["T"] ** 2
        )
        gzb = 2.0 / (1.0 + np.abs(z) ** 2) ** 2 - 2.0 * np.exp(
            2.0 * bundle["ln_abs_f1"] - 2.0 * bundle["ln1pf2"]
        )
        z_t = -np.exp(1j * pt) / (1.0 - cos)
        z_tt = np.exp(1j * pt) * sin / (1.0 - cos) ** 2
        xi_t = 2.0 * (gz * z_t).real
        xi_tt = 2.0 * (gzz * z_t**2).real + 2.0 * gzb * np.abs(z_t) ** 2 + 2.0 * (gz * z_tt).real
        xi_p = -2.0 * (gz * z).imag
        xi_pp = -2.0 * (gzz * z**2).real + 2.0 * gzb * np.abs(z) ** 2 - 2.0 * (gz * z).real
        ur_t = 2.0 * E * xi_t
        ur_tt = 2.0 * E * (xi_tt + xi_t**2)
        ur_p = 2.0 * E * xi_p
        ur_pp = 2.0 * E * (xi_pp + xi_p**2)
    else:
        # differences taken directly in the rotated angles (tt, pt)
        def ur_at(dt, dp):
            t2, p2 = tt + dt, pt + dp
            z2 = (np.cos(t2 / 2.0) / np.sin(t2 / 2.0)) * np.exp(1j * p2)
            b2 = sol.fdata.bundle(z2, order=1)
            return 2.0 * np.exp(_xi_hat(b2, z2)) - 2.0

        def derivs(hh):
            up_, um_ = ur_at(hh, 0.0), ur_at(-hh, 0.0)
            vp_, vm_ = ur_at(0.0, hh), ur_at(0.0, -hh)
            return np.stack(
                [
                    (up_ - um_) / (2.0 * hh),
                    (up_ - 2.0 * u_r + um_) / hh**2,
                    (vp_ - vm_) / (2.0 * hh),
                    (vp_ - 2.0 * u_r + vm_) / hh**2,
                ]
            )

        ur_t, ur_tt, ur_p, ur_pp = richardson_pair(derivs(h), derivs(h / 2.0))

    return -0.5 * (
        ur_tt
        + (cos / sin) * ur_t
        + ur_pp / sin**2
        - u_t * ur_t
        - u_p * ur_p / sin
        + u_r**2
        + u_t**2
        + u_p**2
    )


def pde_defect(sol: LiouvilleSolution, theta, phi, h=1e-3):
    """Residual -Lap(phi) + 2 - 2 e^phi with a finite-difference Laplacian."""
    from .geometry import laplace_beltrami

    lap = laplace_beltrami(lambda t, p: phi_potential(sol, t, p), theta, phi, h=h)
    return -lap + 2.0 - 2.0 * np.exp(phi_potential(sol, theta, phi))


@dataclass(frozen=True)
class AsymptoticFit:
    """Per-singular-point fit of |u| against 1/dist along several directions."""

    point: tuple
    slopes: tuple
    slope: float
    rel_residual: float
    converged: bool

    def to_json(self):
        return {
            "point": list(self.point),
            "slopes": list(self.slopes),
            "slope": self.slope,
            "rel_residual": self.rel_residual,
            "converged": self.converged,
        }


def verify_asymptotics(sol: LiouvilleSolution, dists=None, n_dirs=8):
    """Fitted singular slopes at every prescribed direction.

    For each P_j, samples |u| at geometric distances along n_dirs great-circle
    approach directions and least-squares fits |u| ~ slope/dist + const per
    direction; reports the mean slope and the cross-direction consistency.
    """
    if dists is None:
        dists = np.geomspace(1e-2, 1e-4, 5)
    dists = np.asarray(dists, dtype=float)
    fits = []
    for P in sol.singular_points:
        P = np.asarray(P, dtype=float)
        seed = np.array([1.0, 0.0, 0.0]) if abs(P[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        t1 = seed - (seed @ P) * P
        t1 /= np.linalg.norm(t1)
        t2 = np.cross(P, t1)
        slopes, resids = [], []
        for k in range(n_dirs):
            psi = 2.0 * np.pi * k / n_dirs
            tang = np.cos(psi) * t1 + np.sin(psi) * t2
            xs = np.cos(dists)[:, None] * P[None, :] + np.sin(dists)[:, None] * tang[None, :]
            _, th, ph = cartesian_to_spherical(xs)
            sample = velocity(sol, th, ph)
            speed = sample.speed()
            s, _, r = affine_fit(1.0 / dists, speed)
            slopes.append(s)
            resids.append(r)
        slopes = np.asarray(slopes)
        rel = float(np.max(resids))
        fits.append(
            AsymptoticFit(
                point=tuple(P),
                slopes=tuple(float(s) for s in slopes),
                slope=float(np.mean(slopes)),
                rel_residual=rel,
                converged=bool(rel < 1e-2 and np.ptp(slopes) < 0.1 * max(1.0, np.mean(np.abs(slopes)))),
            )
        )
    return fits
