"""Catalog of closed-form (-1)-homogeneous Navier-Stokes (and Euler) flows.

Axisymmetric no-swirl members are driven by the profile U(y) = u_theta*sin(theta)
with y = cos(theta): incompressibility gives u_r = dU/dy, and the pressure is
u_r - u_theta^2/2 + c3, where (c1, c2, c3) are the quadratic constants of the
reduced equation

    (1 - y^2) U' + 2 y U + U^2/2 = c1 (1 - y) + c2 (1 + y) + c3 (1 - y^2).

The constants are recovered exactly from three profile samples, which pins the
pressure's additive constant so the full 3D momentum residual vanishes.

Evaluation near the poles goes through half-angle quantities (cos^2(theta/2),
sin^2(theta/2), ln cot(theta/2)) so that the formulas stay accurate down to
colatitudes ~1e-8 from either pole.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, ParameterError
from .geometry import (
    FULL_SPHERE,
    DomainDescriptor,
    FieldProvider,
    FieldSample,
    N_POLE,
    S_POLE,
)
from .numerics import quadratic_through, richardson_pair
from .specfun import chi_elliptic_half, chi_first_root


@dataclass(frozen=True)
class _Trig:
    """Half-angle bundle for one batch of colatitudes."""

    theta: np.ndarray
    sin: np.ndarray
    cos: np.ndarray
    y: np.ndarray
    c2h: np.ndarray  # cos^2(theta/2) = (1+y)/2
    s2h: np.ndarray  # sin^2(theta/2) = (1-y)/2

    @property
    def lncot(self):
        return 0.5 * (np.log(self.c2h) - np.log(self.s2h))


def _trig(theta) -> _Trig:
    theta = np.asarray(theta, dtype=float)
    ch, sh = np.cos(theta / 2.0), np.sin(theta / 2.0)
    c2h, s2h = ch**2, sh**2
    return _Trig(theta, 2.0 * sh * ch, c2h - s2h, c2h - s2h, c2h, s2h)


def _trig_from_y(y) -> _Trig:
    return _trig(np.arccos(np.clip(np.asarray(y, dtype=float), -1.0, 1.0)))


class _FamilyBase:
    """Shared plumbing: domain checks, providers, JSON round-trip."""

    axisymmetric = True
    no_swirl = True
    navier_stokes = True
    family = ""

    def domain(self) -> DomainDescriptor:
        raise NotImplementedError

    def evaluate(self, theta, phi=0.0) -> FieldSample:
        raise NotImplementedError

    def _check_domain(self, theta):
        theta = np.asarray(theta, dtype=float)
        if np.any(theta <= 0.0) or np.any(theta >= np.pi):
            raise DomainError("poles are excluded coordinates")
        if not np.all(self.domain().contains(theta)):
            raise DomainError(f"colatitude outside the domain of {self.family}")

    def provider(self) -> FieldProvider:
        return FieldProvider(lambda th, ph: self.evaluate(th, ph), self.domain())

    def params(self) -> dict:
        return {k: v for k, v in self.__dict__.items()}

    def to_json(self) -> dict:
        return {"family": self.family, "params": self.params()}


class _NoSwirlFamily(_FamilyBase):
    """Axisymmetric no-swirl member defined by its profile (U, dU/dy)."""

    def _profile(self, tri: _Trig):
        raise NotImplementedError

    def c_constants(self):
        """Quadratic constants of the reduced equation; exact 3-point recovery."""
        ys = (-0.5, 0.0, 0.5)
        lhs = []
        for y in ys:
            tri = _trig_from_y(y)
            U, dU = self._profile(tri)
            lhs.append((1.0 - y**2) * dU + 2.0 * y * U + 0.5 * U**2)
        p0, p1, p2 = quadratic_through(ys, [float(v) for v in lhs])
        return ((p0 + p2 - p1) / 2.0, (p0 + p2 + p1) / 2.0, -p2)

    def U(self, y):
        return self._profile(_trig_from_y(y))[0]

    def dU(self, y):
        return self._profile(_trig_from_y(y))[1]

    def d2U(self, y):
        c1, c2, c3 = self.c_constants()
        y = np.asarray(y, dtype=float)
        U, dU = self._profile(_trig_from_y(y))
        return (c2 - c1 - 2.0 * c3 * y - 2.0 * U - U * dU) / (1.0 - y**2)

    def d3U(self, y):
        c1, c2, c3 = self.c_constants()
        y = np.asarray(y, dtype=float)
        U, dU = self._profile(_trig_from_y(y))
        d2 = self.d2U(y)
        return (-2.0 * c3 + 2.0 * y * d2 - 2.0 * dU - dU**2 - U * d2) / (1.0 - y**2)

    def _pressure(self, tri: _Trig, U, dU):
        c3 = self.c_constants()[2]
        return dU - 0.5 * (U / tri.sin) ** 2 + c3

    def evaluate(self, theta, phi=0.0) -> FieldSample:
        self._check_domain(theta)
        tri = _trig(theta)
        U, dU = self._profile(tri)
        u_theta = U / tri.sin
        p = self._pressure(tri, U, dU)
        u_r, u_theta, u_phi, p, _ = np.broadcast_arrays(
            dU, u_theta, np.zeros_like(u_theta), p, np.asarray(phi, dtype=float)
        )
        return FieldSample(u_r.copy(), u_theta.copy(), u_phi.copy(), p.copy())

    def theta_derivs(self, theta):
        """Analytic d/dtheta of the sphere components (u_r, u_theta, u_phi)."""
        tri = _trig(theta)
        U, dU = self._profile(tri)
        d2 = self.d2U(tri.y)
        du_r = -tri.sin * d2
        du_t = -dU - U * tri.cos / tri.sin**2
        return du_r, du_t, np.zeros_like(du_t)


# ---------------------------------------------------------------------------
# no-swirl members


@dataclass(frozen=True)
class Landau(_NoSwirlFamily):
    """The smooth-on-the-sphere axisymmetric jet family, one parameter."""

    sigma: float
    family = "landau"

    def __post_init__(self):
        if not (self.sigma < 1.0 and self.sigma != 0.0):
            raise ParameterError("Landau parameter must lie in (-inf, 0) or (0, 1)")

    @property
    def _A(self):
        return (2.0 - self.sigma) / self.sigma

    def _profile(self, tri):
        A = self._A
        U = 2.0 * (4.0 * tri.c2h * tri.s2h) / (A + tri.y)
        dU = -2.0 * (tri.y**2 + 2.0 * A * tri.y + 1.0) / (A + tri.y) ** 2
        return U, dU

    def c_constants(self):
        return (0.0, 0.0, 0.0)

    def domain(self):
        return FULL_SPHERE


@dataclass(frozen=True)
class NoSwirlOneSing(_NoSwirlFamily):
    """No-swirl flows smooth away from the single singular ray through the south pole.

    tau is the limit of u_theta*sin(theta) at the south pole and sigma the limit
    of u_theta/sin(theta) at the north pole; (tau, sigma) must satisfy
    tau <= 2 and sigma <= (4 - tau)/4, or tau >= 2 and sigma = tau/4.
    """

    tau: float
    sigma: float
    family = "no_swirl_one_sing"

    def __post_init__(self):
        t, s = self.tau, self.sigma
        if t <= 2.0 + 1e-12:
            if s > (4.0 - t) / 4.0 + 1e-12:
                raise ParameterError("need sigma <= (4 - tau)/4 when tau <= 2")
        elif abs(s - t / 4.0) > 1e-9:
            raise ParameterError("need sigma = tau/4 when tau >= 2")

    def _profile(self, tri):
        t, s = self.tau, self.sigma
        omy = 2.0 * tri.s2h  # 1 - y
        if t > 2.0 + 1e-12:
            b = t / 2.0 - 1.0
            U = (1.0 + b) * omy
            dU = np.full_like(np.asarray(U), -(1.0 + b))
            return U, dU
        if abs(t - 2.0) <= 1e-12:
            q = 1.0 - 2.0 * s
            D = q * np.log(tri.c2h) - 2.0
            U = omy * (1.0 + 2.0 * q / D)
            dU = -1.0 - 2.0 * q / D - 2.0 * q**2 * (tri.s2h / tri.c2h) / D**2
            return U, dU
        b = 1.0 - t / 2.0
        P = 1.0 - 2.0 * s + b
        Q = 2.0 * s - 1.0 + b
        qt = 1.0 - 2.0 * s - b
        wb = tri.c2h**b
        denom = P + Q * wb
        G = wb / denom
        dG = 0.5 * b * tri.c2h ** (b - 1.0) * P / denom**2
        U = omy * ((1.0 - b) - 2.0 * b * qt * G)
        dU = -(1.0 - b) + 2.0 * b * qt * G - 2.0 * b * qt * omy * dG
        return U, dU

    def _tau_effective(self):
        """Actual limit of U at the south pole (differs from tau on the boundary line)."""
        t, s = self.tau, self.sigma
        if t <= 2.0 + 1e-12 and abs(s - (4.0 - t) / 4.0) <= 1e-12 and abs(t - 2.0) > 1e-12:
            return 4.0 - t
        return t

    def domain(self):
        if self._tau_effective() == 0.0:
            return FULL_SPHERE
        return DomainDescriptor(0.0, np.pi, True, False, (tuple(S_POLE),))


@dataclass(frozen=True)
class TypeTwoLog(_NoSwirlFamily):
    """The explicit logarithmically singular family (reduced constant c3 = -4)."""

    alpha: float
    family = "type_two_log"

    def _L(self, tri):
        return tri.lncot + self.alpha

    def _D(self, tri):
        return tri.cos + tri.sin**2 * self._L(tri)

    def _profile(self, tri):
        L = self._L(tri)
        D = self._D(tri)
        num = 1.0 - tri.cos * L
        U = 4.0 * tri.sin**2 * num / D
        dU = -4.0 - 8.0 * num / D**2
        return U, dU

    def c_constants(self):
        return (0.0, 0.0, -4.0)

    def _pressure(self, tri, U, dU):
        L = self._L(tri)
        D = self._D(tri)
        return 8.0 * (-2.0 + tri.cos * L - tri.sin**2 * L**2) / D**2

    def theta0(self):
        """Domain boundary: the unique zero of cos(t) + sin(t)^2 (ln cot(t/2) + alpha)."""
        return chi_first_root(lambda t: float(self._D(_trig(t))), 1e-9, np.pi - 1e-9)

    def domain(self):
        return DomainDescriptor(self.theta0(), np.pi, False, False, (tuple(S_POLE),))


@dataclass(frozen=True)
class EllipticC3Half(_NoSwirlFamily):
    """Profiles built from complete elliptic integrals (reduced constant c3 = 1/2).

    alpha >= 0 gives flows on the whole sphere minus both poles; alpha = inf is
    the complementary branch; alpha < 0 only yields a local flow, and the domain
    is the bisected positivity interval of the underlying chi.
    """

    alpha: float
    family = "elliptic_c3_half"

    def __post_init__(self):
        object.__setattr__(self, "_chi", chi_elliptic_half(self.alpha))

    def _chi_parts(self, tri):
        from .specfun import _ellip_A, _ellip_k_from_complement

        z, zc = tri.c2h, tri.s2h
        a = self.alpha
        if np.isinf(a):
            return _ellip_A(zc, z), -0.25 * _ellip_k_from_complement(z)
        chi = _ellip_A(z, zc) + a * _ellip_A(zc, z)
        dchi = 0.25 * (_ellip_k_from_complement(zc) - a * _ellip_k_from_complement(z))
        return chi, dchi

    def _profile(self, tri):
        chi, dchi = self._chi_parts(tri)
        w = dchi / chi
        U = 2.0 * tri.sin**2 * w
        dU = -4.0 * tri.y * w + 0.5 - 2.0 * tri.sin**2 * w**2
        return U, dU

    def c_constants(self):
        return (0.0, 0.0, 0.5)

    def domain(self):
        if self.alpha >= 0.0 or np.isinf(self.alpha):
            return DomainDescriptor(0.0, np.pi, False, False, (tuple(S_POLE), tuple(N_POLE)))
        # negative alpha: chi crosses zero once coming down from the north pole
        chi = self._chi
        y_root = chi_first_root(lambda y: float(chi(y)[0]), -1.0 + 1e-9, 1.0 - 1e-9)
        return DomainDescriptor(0.0, float(np.arccos(y_root)), False, False, (tuple(N_POLE),))


@dataclass(frozen=True)
class PowerLiouville(_NoSwirlFamily):
    """Axisymmetric flows generated by a pure power conformal factor.

    Satisfies the exchange symmetry (alpha, |a|) -> (-alpha, 1/|a|) pointwise;
    alpha = +-1 reproduces smooth members, and |a| -> 0 degenerates to the
    one-pole limit flows.
    """

    alpha: float
    a_abs: float
    family = "power_liouville"

    def __post_init__(self):
        if self.alpha == 0.0:
            raise ParameterError("alpha must be nonzero")
        if not self.a_abs > 0.0:
            raise ParameterError("|a| must be positive")

    def _profile(self, tri):
        t = math.log(self.a_abs) + self.alpha * tri.lncot
        th = np.tanh(t)
        U = 2.0 * (-tri.y + self.alpha * th)
        dU = -2.0 + 2.0 * self.alpha**2 * (1.0 - th**2) / tri.sin**2
        return U, dU

    def _pressure(self, tri, U, dU):
        return dU - 0.5 * (U / tri.sin) ** 2

    def domain(self):
        if abs(abs(self.alpha) - 1.0) <= 1e-14:
            return FULL_SPHERE
        return DomainDescriptor(0.0, np.pi, False, False, (tuple(S_POLE), tuple(N_POLE)))


@dataclass(frozen=True)
class LimitPole(_NoSwirlFamily):
    """Limit of the power family as |a| -> 0: singular at exactly one pole.

    sign=+1 is singular at the north pole, sign=-1 at the south pole. These
    flows solve the Euler equations as well.
    """

    sign: int
    family = "limit_pole"

    def __post_init__(self):
        if self.sign not in (-1, 1):
            raise ParameterError("sign must be +1 or -1")

    def _profile(self, tri):
        if self.sign > 0:
            U = -2.0 * (1.0 + tri.y)
        else:
            U = 2.0 * (1.0 - tri.y)
        return U, np.full_like(np.asarray(U), -2.0)

    def c_constants(self):
        return (0.0, 0.0, 0.0)

    def _pressure(self, tri, U, dU):
        if self.sign > 0:
            return -2.0 / tri.s2h
        return -2.0 / tri.c2h

    def domain(self):
        if self.sign > 0:
            return DomainDescriptor(0.0, np.pi, False, True, (tuple(N_POLE),))
        return DomainDescriptor(0.0, np.pi, True, False, (tuple(S_POLE),))


@dataclass(frozen=True)
class SpecialGlobalC3M4(_NoSwirlFamily):
    """The unique two-pole flow at the corner c = (0, 0, -4) of the admissible region."""

    family = "special_global_c3m4"

    def _profile(self, tri):
        U = -4.0 * tri.y
        return U, np.full_like(np.asarray(U), -4.0)

    def c_constants(self):
        return (0.0, 0.0, -4.0)

    def _pressure(self, tri, U, dU):
        return -2.0 / (tri.c2h * tri.s2h)

    def domain(self):
        return DomainDescriptor(0.0, np.pi, False, False, (tuple(S_POLE), tuple(N_POLE)))


def special_global_c3m4() -> SpecialGlobalC3M4:
    """u_theta = -4 cot(theta), u_r = -4, p = -8 csc^2(theta)."""
    return SpecialGlobalC3M4()


@dataclass(frozen=True)
class EulerNoSwirl(_NoSwirlFamily):
    """Axisymmetric no-swirl Euler flows: U = sign*sqrt(2(c0 + c1 y + c2 y^2)).

    Solves the stationary Euler equations with p = -u_theta^2/2 - c2; it solves
    the Navier-Stokes equations only when the quadratic is a perfect square.
    """

    c0: float
    c1: float
    c2: float
    sign: int = 1
    family = "euler_no_swirl"
    navier_stokes = False

    def __post_init__(self):
        if self.sign not in (-1, 1):
            raise ParameterError("sign must be +1 or -1")
        if self._Q(0.0) <= 0.0:
            raise ParameterError("quadratic must be positive on the evaluation range")

    def _Q(self, y):
        return self.c0 + self.c1 * np.asarray(y, dtype=float) + self.c2 * np.asarray(y, dtype=float) ** 2

    def _profile(self, tri):
        Q = self._Q(tri.y)
        if np.any(Q < 0.0):
            raise DomainError("quadratic becomes negative on the requested range")
        U = self.sign * np.sqrt(2.0 * Q)
        dU = self.sign * (self.c1 + 2.0 * self.c2 * tri.y) / np.sqrt(2.0 * Q)
        return U, dU

    def d2U(self, y):
        Q = self._Q(y)
        Qp = self.c1 + 2.0 * self.c2 * np.asarray(y, dtype=float)
        return self.sign * (4.0 * self.c2 * Q - Qp**2) / (2.0 * Q) ** 1.5

    def _pressure(self, tri, U, dU):
        return -self._Q(tri.y) / tri.sin**2 - self.c2

    def domain(self):
        # maximal positivity interval of the quadratic around the equator
        lo, hi = -1.0, 1.0
        if self.c2 != 0.0 or self.c1 != 0.0:
            roots = np.roots([self.c2, self.c1, self.c0]) if self.c2 != 0.0 else np.array(
                [-self.c0 / self.c1]
            )
            for r in np.real(roots[np.isreal(roots)]):
                if 0.0 > r > lo:
                    lo = float(r)
                if 0.0 < r < hi:
                    hi = float(r)
        return DomainDescriptor(float(np.arccos(hi)), float(np.arccos(lo)), False, False,
                                (tuple(S_POLE), tuple(N_POLE)))


@dataclass(frozen=True)
class EulerNS(_NoSwirlFamily):
    """Perfect-square Euler flows, which solve Navier-Stokes as well: U = a y + b."""

    a: float
    b: float
    family = "euler_ns"

    def _profile(self, tri):
        U = self.a * tri.y + self.b
        return U, np.full_like(np.asarray(U), self.a)

    def _pressure(self, tri, U, dU):
        return -(self.a**2 + self.b**2 + 2.0 * self.a * self.b * tri.y) / (2.0 * tri.sin**2)

    def domain(self):
        smooth_s = abs(self.b - self.a) <= 1e-14
        smooth_n = abs(self.b + self.a) <= 1e-14
        excluded = []
        if not smooth_s:
            excluded.append(tuple(S_POLE))
        if not smooth_n:
            excluded.append(tuple(N_POLE))
        return DomainDescriptor(0.0, np.pi, smooth_n, smooth_s, tuple(excluded))


@dataclass(frozen=True)
class WithConstantSwirl(_FamilyBase):
    """A no-swirl flow plus the constant-swirl gauge field C/(r sin(theta)) e_phi.

    The swirl shifts the pressure by the centrifugal term -C^2/(2 sin^2 theta);
    the combination solves the full equations whenever the base does.
    """

    base: _NoSwirlFamily
    C: float
    family = "with_constant_swirl"
    no_swirl = False

    def __post_init__(self):
        if not (getattr(self.base, "no_swirl", False) and self.base.navier_stokes):
            raise ParameterError("base flow must be a no-swirl Navier-Stokes member")

    def evaluate(self, theta, phi=0.0) -> FieldSample:
        self._check_domain(theta)
        s = self.base.evaluate(theta, phi)
        sin = np.sin(np.broadcast_to(np.asarray(theta, dtype=float), s.u_r.shape))
        return FieldSample(
            s.u_r, s.u_theta, s.u_phi + self.C / sin, s.p - self.C**2 / (2.0 * sin**2)
        )

    def theta_derivs(self, theta):
        du_r, du_t, du_p = self.base.theta_derivs(theta)
        theta = np.asarray(theta, dtype=float)
        return du_r, du_t, du_p - self.C * np.cos(theta) / np.sin(theta) ** 2

    def U_phi(self):
        return self.C

    def domain(self):
        d = self.base.domain()
        if self.C == 0.0:
            return d
        return DomainDescriptor(d.theta_min, d.theta_max, False, False, d.excluded_points)

    def params(self):
        return {"base": self.base.to_json(), "C": self.C}


# ---------------------------------------------------------------------------
# non-axisymmetric members (conformal-factor formulas)


class _ConformalFamily(_FamilyBase):
    """Members whose pressure comes from the generic radial-momentum formula."""

    axisymmetric = False
    no_swirl = False

    def _closed_form(self):
        raise NotImplementedError

    def _velocity(self, tri, phi):
        raise NotImplementedError

    def evaluate(self, theta, phi=0.0) -> FieldSample:
        self._check_domain(theta)
        theta, phi = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(phi, dtype=float))
        tri = _trig(theta)
        u_r, u_t, u_p = self._velocity(tri, phi)
        from . import liouville

        p = liouville.pressure(self._closed_form(), theta, phi)
        return FieldSample(u_r, u_t, u_p, p)


@dataclass(frozen=True)
class ExpLiouville(_ConformalFamily):
    """Non-axisymmetric flows from an exponential conformal factor, singular at N."""

    a_abs: float
    b1: float
    b2: float
    family = "exp_liouville"

    def __post_init__(self):
        if not self.a_abs > 0.0:
            raise ParameterError("|a| must be positive")
        if self.b1 == 0.0 and self.b2 == 0.0:
            raise ParameterError("|b| must be positive")

    def _closed_form(self):
        from . import liouville

        return liouville.closed_form("exp", a=self.a_abs, b=self.b1 + 1j * self.b2)

    def _velocity(self, tri, phi):
        w = self.b1 * np.cos(phi) - self.b2 * np.sin(phi)
        v = self.b1 * np.sin(phi) + self.b2 * np.cos(phi)
        cot_half = np.sqrt(tri.c2h / tri.s2h)
        g = cot_half * w + math.log(self.a_abs)
        th = np.tanh(g)
        with np.errstate(over="ignore"):
            sech2 = 1.0 / np.cosh(g) ** 2
        u_t = -2.0 * cot_half + (w / tri.s2h) * th
        u_p = (v / tri.s2h) * th
        u_r = -2.0 + (self.b1**2 + self.b2**2) / (2.0 * tri.s2h**2) * sech2
        return u_r, u_t, u_p

    def domain(self):
        return DomainDescriptor(0.0, np.pi, False, True, (tuple(N_POLE),))


@dataclass(frozen=True)
class ExpPowerLiouville(_ConformalFamily):
    """Flows from exp(z^k): a k-fold symmetric ring of behavior around the poles."""

    k: int
    family = "exp_power_liouville"

    def __post_init__(self):
        if not (isinstance(self.k, (int, np.integer)) and self.k >= 1):
            raise ParameterError("k must be a positive integer")

    def _closed_form(self):
        from . import liouville

        return liouville.closed_form("exp_power", k=self.k)

    def _velocity(self, tri, phi):
        k = float(self.k)
        ck = np.exp(k * tri.lncot)
        g = ck * np.cos(k * phi)
        th = np.tanh(g)
        with np.errstate(over="ignore"):
            sech2 = 1.0 / np.cosh(g) ** 2
        u_t = (-2.0 * (tri.cos + k) + 2.0 * k * np.cos(k * phi) * ck * th) / tri.sin
        u_p = 2.0 * k * np.sin(k * phi) * ck * th / tri.sin
        with np.errstate(over="ignore", invalid="ignore"):
            u_r = -2.0 + 2.0 * k**2 * np.where(
                np.isfinite(ck**2), ck**2 * sech2, np.exp(2.0 * (k * tri.lncot - np.abs(g)))
            ) / tri.sin**2
        return u_r, u_t, u_p

    def domain(self):
        if self.k == 1:
            return DomainDescriptor(0.0, np.pi, False, True, (tuple(N_POLE),))
        return DomainDescriptor(0.0, np.pi, False, False, (tuple(S_POLE), tuple(N_POLE)))


# ---------------------------------------------------------------------------
# module-level operations

FAMILY_TAGS = {
    cls.family: cls
    for cls in (
        Landau,
        NoSwirlOneSing,
        TypeTwoLog,
        EllipticC3Half,
        PowerLiouville,
        ExpLiouville,
        ExpPowerLiouville,
        LimitPole,
        EulerNoSwirl,
        EulerNS,
        WithConstantSwirl,
        SpecialGlobalC3M4,
    )
}


def evaluate(spec: _FamilyBase, theta, phi=0.0) -> FieldSample:
    """Full field sample of a catalog member at (theta, phi)."""
    return spec.evaluate(theta, phi)


def domain_of(spec: _FamilyBase) -> DomainDescriptor:
    return spec.domain()


def spec_from_json(obj: dict) -> _FamilyBase:
    """Build a catalog member from {"family": tag, "params": {...}}."""
    try:
        tag = obj["family"]
        params = dict(obj.get("params", {}))
    except (TypeError, KeyError) as exc:
        raise ParameterError(f"malformed solution spec: {exc}") from exc
    if tag not in FAMILY_TAGS:
        raise ParameterError(f"unknown family tag {tag!r}")
    if tag == "with_constant_swirl":
        params["base"] = spec_from_json(params["base"])
    if tag == "elliptic_c3_half" and params.get("alpha") == "inf":
        params["alpha"] = np.inf
    try:
        return FAMILY_TAGS[tag](**params)
    except TypeError as exc:
        raise ParameterError(f"bad parameters for {tag}: {exc}") from exc


def pressure_from_velocity(u_fun, theta, phi=0.0, h=1e-3, richardson=True):
    """Pressure from the radial momentum balance, given the velocity alone.

    u_fun(theta, phi) must return (u_r, u_theta, u_phi). The radial component's
    derivatives are taken by central differences (Richardson-paired by default):

        p = -1/2 ( u_r'' + cot(t) u_r' + u_r_pp/sin^2(t)
                   - u_theta u_r' - u_phi u_r_p/sin(t) + |u|^2 )

    with ' = d/dtheta and _p = d/dphi.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    u_r, u_t, u_p = u_fun(theta, phi)

    def formula(hh):
        urp, _, _ = u_fun(theta + hh, phi)
        urm, _, _ = u_fun(theta - hh, phi)
        urpp, _, _ = u_fun(theta, phi + hh)
        urpm, _, _ = u_fun(theta, phi - hh)
        d1t = (urp - urm) / (2.0 * hh)
        d2t = (urp - 2.0 * u_r + urm) / hh**2
        d1p = (urpp - urpm) / (2.0 * hh)
        d2p = (urpp - 2.0 * u_r + urpm) / hh**2
        sin, cos = np.sin(theta), np.cos(theta)
        return -0.5 * (
            d2t
            + (cos / sin) * d1t
            + d2p / sin**2
            - u_t * d1t
            - u_p * d1p / sin
            + u_r**2
            + u_t**2
            + u_p**2
        )

    if not richardson:
        return formula(h)
    return richardson_pair(formula(h), formula(h / 2.0))
