"""The reduced ODE system for axisymmetric homogeneous flows, in y = cos(theta).

With U = u * r sin(theta) restricted to the unit sphere, the equations become

    (1 - y^2) U_t' + 2 y U_t + U_t^2/2 + T(y) = b1 y^2 + b2 y + b3,
    (1 - y^2) U_p'' + U_t U_p' = 0,

where T is the triple antiderivative (anchored at y0 with T = T' = T'' = 0) of
2 U_p U_p' / (1 - s^2). Augmenting the state with (T, T', T'') turns this into
a clean first-order system. No-swirl runs use the c-parameterization of the
right side, c1 (1-y) + c2 (1+y) + c3 (1-y^2).
"""

import io
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad, solve_ivp

from .errors import ParameterError
from .families import _NoSwirlFamily, _Trig
from .geometry import DomainDescriptor, S_POLE, N_POLE

_EDGE = 1e-6
_BLOWUP = 1e8


@dataclass(frozen=True)
class ReducedConstants:
    """Right-side quadratic b1 y^2 + b2 y + b3 and the integral anchor y0."""

    b1: float
    b2: float
    b3: float
    y0: float = 0.0

    @classmethod
    def from_c(cls, c1, c2, c3, y0=0.0):
        return cls(b1=-c3, b2=c2 - c1, b3=c1 + c2 + c3, y0=y0)

    @property
    def c(self):
        c3 = -self.b1
        c1 = 0.5 * (self.b1 + self.b3 - self.b2)
        c2 = 0.5 * (self.b1 + self.b3 + self.b2)
        return (c1, c2, c3)

    def poly(self, y):
        y = np.asarray(y, dtype=float)
        return self.b1 * y**2 + self.b2 * y + self.b3


@dataclass(frozen=True)
class ReducedState:
    """Initial data (U_theta, U_phi, U_phi', T, T', T'') at y."""

    y: float
    U_theta: float
    U_phi: float = 0.0
    U_phi_prime: float = 0.0
    T: float = 0.0
    T1: float = 0.0
    T2: float = 0.0

    def vector(self):
        return np.array(
            [self.U_theta, self.U_phi, self.U_phi_prime, self.T, self.T1, self.T2]
        )


def _rhs(consts: ReducedConstants):
    def rhs(y, s):
        ut, up, v, T, T1, T2 = s
        omy2 = 1.0 - y * y
        dut = (consts.poly(y) - 2.0 * y * ut - 0.5 * ut * ut - T) / omy2
        return [dut, v, -ut * v / omy2, T1, T2, 2.0 * up * v / omy2]

    return rhs


@dataclass
class Trajectory:
    """Dense solution of the reduced system on a subinterval of (-1, 1)."""

    consts: ReducedConstants
    y_anchor: float
    y_lo: float
    y_hi: float
    status: str  # "completed" or "blow-up"
    escape_y: Optional[float]
    _segments: dict = field(default_factory=dict, repr=False)
    _anchor_state: np.ndarray = field(default=None, repr=False)

    @property
    def swirl(self):
        ys = np.linspace(self.y_lo, self.y_hi, 9)
        return bool(np.any(np.abs(self.U_phi(ys)) > 1e-14) or np.any(np.abs(self.U_phi_prime(ys)) > 1e-14))

    def _state(self, y):
        y = np.asarray(y, dtype=float)
        flat = np.atleast_1d(y)
        out = np.empty((6, flat.size))
        here = np.isclose(flat, self.y_anchor, rtol=0.0, atol=1e-15)
        out[:, here] = self._anchor_state[:, None]
        for sign, sol in self._segments.items():
            mask = ((flat > self.y_anchor) if sign > 0 else (flat < self.y_anchor)) & ~here
            if np.any(mask):
                out[:, mask] = sol(flat[mask])
        return out.reshape((6,) + y.shape)

    def U_theta(self, y):
        return self._state(y)[0]

    def U_phi(self, y):
        return self._state(y)[1]

    def U_phi_prime(self, y):
        return self._state(y)[2]

    def T(self, y):
        return self._state(y)[3]

    def U_theta_prime(self, y):
        """dU_theta/dy evaluated through the first reduced equation."""
        y = np.asarray(y, dtype=float)
        s = self._state(y)
        return (self.consts.poly(y) - 2.0 * y * s[0] - 0.5 * s[0] ** 2 - s[3]) / (1.0 - y**2)

    def invariant_defect(self, ys, fd_step=1e-6):
        """|first reduced equation| with dU/dy from differencing the dense output."""
        ys = np.asarray(ys, dtype=float)
        dU = (self.U_theta(ys + fd_step) - self.U_theta(ys - fd_step)) / (2.0 * fd_step)
        lhs = (1.0 - ys**2) * dU + 2.0 * ys * self.U_theta(ys) + 0.5 * self.U_theta(ys) ** 2 + self.T(ys)
        return np.abs(lhs - self.consts.poly(ys))

    def swirl_monotone(self, n=257, tol=1e-12):
        ys = np.linspace(self.y_lo + 1e-9, self.y_hi - 1e-9, n)
        v = self.U_phi_prime(ys)
        return bool(np.all(v >= -tol) or np.all(v <= tol))

    def endpoint_value(self, side, eps_bar=1.6e-4):
        """Richardson-style endpoint limit from values at 1 - eps_bar/2^k, k = 0..4."""
        ys = side * (1.0 - eps_bar * 0.5 ** np.arange(5))
        ys = np.clip(ys, self.y_lo, self.y_hi)
        vals = self.U_theta(ys)
        for _ in range(2):
            vals = vals[1:] + (vals[1:] - vals[:-1])
        return float(vals[-1])


def integrate_reduced(init: ReducedState, consts: ReducedConstants, y_range) -> Trajectory:
    """Adaptive integration of the reduced system over y_range inside (-1, 1)."""
    lo, hi = float(min(y_range)), float(max(y_range))
    if lo < -1.0 + _EDGE or hi > 1.0 - _EDGE:
        raise ParameterError(f"y range must stay inside (-1 + {_EDGE}, 1 - {_EDGE})")
    if not lo <= init.y <= hi:
        raise ParameterError("initial y must lie inside the integration range")

    def blow_up(y, s):
        return abs(s[0]) - _BLOWUP

    blow_up.terminal = True
    rhs = _rhs(consts)

    segments = {}
    status, escape_y = "completed", None
    lo_reached, hi_reached = init.y, init.y
    for target in (hi, lo):
        if target == init.y:
            continue
        res = solve_ivp(
            rhs, (init.y, target), init.vector(), method="DOP853",
            rtol=1e-10, atol=1e-12, dense_output=True, events=blow_up,
        )
        if res.status == 1:  # blow-up event
            status = "blow-up"
            escape_y = float(res.t_events[0][0])
        elif not res.success:
            raise RuntimeError(f"reduced integration failed: {res.message}")
        segments[np.sign(target - init.y)] = res.sol
        if target > init.y:
            hi_reached = float(res.t[-1])
        else:
            lo_reached = float(res.t[-1])

    return Trajectory(
        consts=consts, y_anchor=init.y, y_lo=lo_reached, y_hi=hi_reached,
        status=status, escape_y=escape_y,
        _segments=segments, _anchor_state=init.vector(),
    )


def integrate_noswirl(c, gamma, y_range, y0=0.0) -> Trajectory:
    """No-swirl run of the reduced system with U_theta(y0) = gamma."""
    consts = ReducedConstants.from_c(*c, y0=y0)
    return integrate_reduced(ReducedState(y=y0, U_theta=float(gamma)), consts, y_range)


def bar_c3(c1, c2):
    """Lower boundary of the admissible c3 values for given (c1, c2)."""
    if c1 < -1.0 or c2 < -1.0:
        raise ParameterError("need c1 >= -1 and c2 >= -1")
    s = np.sqrt(1.0 + c1) + np.sqrt(1.0 + c2)
    return -0.5 * s * (s + 2.0)


def in_region_J(c):
    c1, c2, c3 = c
    return c1 >= -1.0 and c2 >= -1.0 and c3 >= bar_c3(c1, c2)


@dataclass(frozen=True)
class RegionProbe:
    """Numerical bracket for the admissible midpoint-value interval at fixed c."""

    c: tuple
    gamma_minus_hat: float
    gamma_plus_hat: float
    bracket_width: float

    def to_json(self):
        return {
            "c": list(self.c),
            "gamma_minus_hat": self.gamma_minus_hat,
            "gamma_plus_hat": self.gamma_plus_hat,
            "bracket_width": self.bracket_width,
        }


_PROBE_CAP = 50.0
_PROBE_EDGE = 1.0 - 1e-5


def _side_bounded(c, gamma, side):
    """True when the no-swirl trajectory from y=0 stays below the cap out to the edge."""
    consts = ReducedConstants.from_c(*c)

    def cap(y, s):
        return abs(s[0]) - _PROBE_CAP

    cap.terminal = True
    res = solve_ivp(
        _rhs(consts), (0.0, side * _PROBE_EDGE),
        [float(gamma), 0.0, 0.0, 0.0, 0.0, 0.0],
        method="DOP853", rtol=1e-8, atol=1e-10, events=cap, dense_output=True,
    )
    if res.status == 1:
        return False
    # endpoint settle check: the deepest ladder values must not be scattering
    ys = side * (1.0 - 1.6e-4 * 0.5 ** np.arange(5))
    vals = res.sol(ys)[0]
    return bool(np.max(vals) - np.min(vals) < 1.0)


def _bisect_edge(c, g_bad, g_ok, side, width):
    while abs(g_ok - g_bad) > width:
        mid = 0.5 * (g_ok + g_bad)
        if _side_bounded(c, mid, side):
            g_ok = mid
        else:
            g_bad = mid
    return 0.5 * (g_ok + g_bad)


def estimate_gamma_bounds(c, bracket_width=1e-3) -> RegionProbe:
    """Bracket the admissible interval of U_theta(0) by per-side bisection.

    A value gamma is admissible when the trajectory from y = 0 stays bounded
    toward both endpoints. Boundedness toward y = 1 fails below some threshold
    (the lower edge) and toward y = -1 above another (the upper edge); each
    edge is bisected separately so the degenerate case c3 = bar_c3, where the
    two edges coincide, is still resolved.
    """
    c = tuple(float(v) for v in c)
    if not in_region_J(c):
        raise ParameterError(f"c = {c} lies outside the admissible region")

    candidates = [0.0, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0, 4.0, -4.0, 8.0, -8.0, 16.0, -16.0, 32.0, -32.0]
    probes = {g: (_side_bounded(c, g, +1), _side_bounded(c, g, -1)) for g in candidates}

    right_ok = [g for g in candidates if probes[g][0]]
    right_bad = [g for g in candidates if not probes[g][0] and g < max(right_ok, default=np.inf)]
    left_ok = [g for g in candidates if probes[g][1]]
    left_bad = [g for g in candidates if not probes[g][1] and g > min(left_ok, default=-np.inf)]
    if not right_ok or not left_ok:
        raise RuntimeError("no bounded probe found; widen the candidate scan")

    g_minus = (
        _bisect_edge(c, max(right_bad), min(g for g in right_ok if g > max(right_bad)), +1, bracket_width)
        if right_bad
        else min(right_ok)
    )
    g_plus = (
        _bisect_edge(c, min(left_bad), max(g for g in left_ok if g < min(left_bad)), -1, bracket_width)
        if left_bad
        else max(left_ok)
    )
    if g_minus > g_plus:  # degenerate bracket: edges met inside the bisection blur
        mid = 0.5 * (g_minus + g_plus)
        g_minus = g_plus = mid
    return RegionProbe(c=c, gamma_minus_hat=float(g_minus), gamma_plus_hat=float(g_plus),
                       bracket_width=float(bracket_width))


@dataclass(frozen=True)
class ReconstructedNoSwirl(_NoSwirlFamily):
    """A no-swirl flow sampled from a trajectory: u_theta = U/sin, u_r = U', p pinned by c3."""

    trajectory: Trajectory
    family = "reconstructed_no_swirl"

    def _profile(self, tri: _Trig):
        y = np.clip(tri.y, self.trajectory.y_lo, self.trajectory.y_hi)
        return self.trajectory.U_theta(y), self.trajectory.U_theta_prime(y)

    def c_constants(self):
        return self.trajectory.consts.c

    def domain(self):
        return DomainDescriptor(
            float(np.arccos(self.trajectory.y_hi)),
            float(np.arccos(self.trajectory.y_lo)),
            False,
            False,
            (tuple(S_POLE), tuple(N_POLE)),
        )


def reconstruct_noswirl_field(trajectory: Trajectory, c3=None) -> ReconstructedNoSwirl:
    """Velocity and pressure on the sphere from a no-swirl trajectory.

    Swirl trajectories are rejected: the reduction does not determine their
    pressure, and no formula is guessed here.
    """
    if trajectory.swirl:
        raise ParameterError("pressure reconstruction is only defined for no-swirl trajectories")
    if c3 is not None and abs(c3 - trajectory.consts.c[2]) > 1e-9:
        raise ParameterError("c3 disagrees with the trajectory constants")
    return ReconstructedNoSwirl(trajectory=trajectory)


def pressure_integral_check(traj, ys=None):
    """Max defect of the once-integrated radial balance along a trajectory.

    Both sides are compared with the swirl contribution evaluated by quadrature
    of U_phi^2 against the kernel (s - y)(1 - s y)/(1 - s^2)^2; the anchor term
    (y - y0)^2 U_phi(y0)^2 / (2 (1 - y0^2)) accounts for the triple-integral
    anchoring. Works for any object exposing U_theta, U_theta_prime, U_phi and
    consts (so synthetic profiles can be checked as negative controls).
    """
    consts = traj.consts
    y0 = consts.y0
    if ys is None:
        lo = getattr(traj, "y_lo", -0.8)
        hi = getattr(traj, "y_hi", 0.8)
        ys = np.linspace(lo + 1e-6, hi - 1e-6, 17)
    up0 = float(np.asarray(traj.U_phi(np.asarray(y0))))
    worst = 0.0
    for y in np.asarray(ys, dtype=float):
        kern = lambda s: float(traj.U_phi(np.asarray(s))) ** 2 * (s - y) * (1.0 - s * y) / (1.0 - s * s) ** 2
        integral = quad(kern, y0, y, epsabs=1e-11, epsrel=1e-11, limit=200)[0] if y != y0 else 0.0
        U = float(traj.U_theta(np.asarray(y)))
        dU = float(traj.U_theta_prime(np.asarray(y)))
        lhs = (1.0 - y * y) * dU + 2.0 * y * U + 0.5 * U * U
        rhs = integral + float(consts.poly(y)) + (y - y0) ** 2 * up0**2 / (2.0 * (1.0 - y0**2))
        worst = max(worst, abs(lhs - rhs))
    return worst


@dataclass(frozen=True)
class SyntheticProfile:
    """Hand-built (U_theta, U_phi) curves for defect checks; not a solution."""

    U_theta_fun: Callable
    U_theta_prime_fun: Callable
    U_phi_fun: Callable
    consts: ReducedConstants

    def U_theta(self, y):
        return self.U_theta_fun(np.asarray(y, dtype=float))

    def U_theta_prime(self, y):
        return self.U_theta_prime_fun(np.asarray(y, dtype=float))

    def U_phi(self, y):
        return self.U_phi_fun(np.asarray(y, dtype=float))


def trajectory_csv(traj: Trajectory, ys) -> str:
    """CSV rows (y, U_theta, U_phi, U_phi_prime) at full float precision."""
    out = io.StringIO()
    out.write("y,U_theta,U_phi,U_phi_prime\n")
    ys = np.asarray(ys, dtype=float)
    ut, up, v = traj.U_theta(ys), traj.U_phi(ys), traj.U_phi_prime(ys)
    for i in range(len(ys)):
        out.write(
            f"{ys[i]:.17e},{ut[i]:.17e},{up[i]:.17e},{v[i]:.17e}\n"
        )
    return out.getvalue()
