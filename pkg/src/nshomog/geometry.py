"""Spherical geometry, homogeneous extension, and finite-difference operators.

Velocity fields here live on the unit sphere and extend to R^3 \\ {0} by
u(x) = u(x/|x|)/|x| and p(x) = p(x/|x|)/|x|^2. The 3D operators act on that
extension through central differences; residual-grade calls pair steps
(h, h/2) and Richardson-extrapolate to kill the leading truncation term.

Frame convention: (e_r, e_theta, e_phi), theta the colatitude from the
positive x3-axis, phi the azimuth. Tensors are stored row-major in that
frame ordering.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, PoleProjectionError, StencilContaminationError
from .numerics import richardson_pair

S_POLE = np.array([0.0, 0.0, -1.0])
N_POLE = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class SphericalPoint:
    """A point in spherical coordinates; poles are excluded coordinates."""

    r: float
    theta: float
    phi: float

    def __post_init__(self):
        if not self.r > 0:
            raise DomainError(f"radius must be positive, got {self.r}")
        if not 0 < self.theta < np.pi:
            raise DomainError(f"colatitude must lie in (0, pi), got {self.theta}")


@dataclass(frozen=True)
class FieldSample:
    """Velocity components in the spherical frame plus pressure at one or more points."""

    u_r: np.ndarray
    u_theta: np.ndarray
    u_phi: np.ndarray
    p: Optional[np.ndarray] = None

    def speed(self):
        return np.sqrt(
            np.asarray(self.u_r) ** 2
            + np.asarray(self.u_theta) ** 2
            + np.asarray(self.u_phi) ** 2
        )


@dataclass(frozen=True)
class TangentVector:
    """Components of a tangent vector in the orthonormal (e_theta, e_phi) frame."""

    a_theta: float
    a_phi: float


@dataclass(frozen=True)
class DomainDescriptor:
    """Colatitude interval plus isolated excluded directions for a solution.

    Closed endpoints mean the solution is smooth across that pole; open ones
    mean the pole carries a singular ray.
    """

    theta_min: float = 0.0
    theta_max: float = np.pi
    closed_min: bool = False
    closed_max: bool = False
    excluded_points: tuple = ()

    def contains(self, theta, margin=0.0):
        """True where theta lies inside the interval; margins apply at open ends only."""
        theta = np.asarray(theta, dtype=float)
        margin = np.asarray(margin, dtype=float)
        if self.closed_min:
            ok = theta >= self.theta_min
        else:
            ok = theta > self.theta_min + margin
        if self.closed_max:
            ok = ok & (theta <= self.theta_max)
        else:
            ok = ok & (theta < self.theta_max - margin)
        return ok

    def clear_of_exclusions(self, x_unit, margin):
        """True where unit vectors x stay angularly farther than margin from exclusions."""
        x_unit = np.asarray(x_unit, dtype=float)
        ok = np.ones(x_unit.shape[:-1], dtype=bool)
        for p in self.excluded_points:
            cosang = np.clip(x_unit @ np.asarray(p, dtype=float), -1.0, 1.0)
            ok &= np.arccos(cosang) > margin
        return ok

    def stencil_safe(self, x, h):
        """True where a width-10h stencil at 3D points x avoids domain trouble."""
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        ok = r > 10.0 * h
        with np.errstate(invalid="ignore", divide="ignore"):
            unit = x / r[..., None]
            theta = np.arccos(np.clip(unit[..., 2], -1.0, 1.0))
        ang_margin = 10.0 * h / np.maximum(r, 1e-300)
        ok &= self.contains(theta, margin=ang_margin)
        ok &= self.clear_of_exclusions(unit, float(np.max(ang_margin)))
        return ok


FULL_SPHERE = DomainDescriptor(0.0, np.pi, True, True, ())


def spherical_to_cartesian(r, theta, phi):
    """Cartesian coordinates r*e_r for spherical (r, theta, phi); shape (..., 3)."""
    r = np.asarray(r, dtype=float)
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    return np.stack(
        [r * st * cp, r * st * sp, r * ct * np.ones_like(sp)],
        axis=-1,
    )


def cartesian_to_spherical(x):
    """Inverse of spherical_to_cartesian; returns (r, theta, phi) with phi in [0, 2pi)."""
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    if np.any(r == 0):
        raise DomainError("origin has no spherical coordinates")
    theta = np.arccos(np.clip(x[..., 2] / r, -1.0, 1.0))
    phi = np.mod(np.arctan2(x[..., 1], x[..., 0]), 2.0 * np.pi)
    return r, theta, phi


def basis_vectors(theta, phi):
    """Orthonormal frame (e_r, e_theta, e_phi) at (theta, phi); each shape (..., 3)."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    zeros = np.zeros(np.broadcast(theta, phi).shape)
    e_r = np.stack([st * cp, st * sp, ct + zeros], axis=-1)
    e_t = np.stack([ct * cp, ct * sp, -st + zeros], axis=-1)
    e_p = np.stack([-sp + zeros, cp + zeros, zeros], axis=-1)
    return e_r, e_t, e_p


def frame_components(vec, theta, phi):
    """Project cartesian vectors onto the spherical frame at (theta, phi)."""
    e_r, e_t, e_p = basis_vectors(theta, phi)
    vec = np.asarray(vec, dtype=float)
    return (
        np.sum(vec * e_r, axis=-1),
        np.sum(vec * e_t, axis=-1),
        np.sum(vec * e_p, axis=-1),
    )


def stereographic_forward(x):
    """Project unit vectors to the complex plane, z = (x1 + i x2)/(1 - x3).

    The south pole maps to 0; the north pole is the point at infinity and
    raises PoleProjectionError.
    """
    x = np.asarray(x, dtype=float)
    x3 = x[..., 2]
    if np.any(1.0 - x3 < 1e-14):
        raise PoleProjectionError("north pole projects to infinity")
    return (x[..., 0] + 1j * x[..., 1]) / (1.0 - x3)


def stereographic_inverse(z):
    """Map complex z back to the unit sphere; inverse of stereographic_forward."""
    z = np.asarray(z, dtype=complex)
    zz = np.abs(z) ** 2
    denom = 1.0 + zz
    return np.stack([2.0 * z.real / denom, 2.0 * z.imag / denom, (zz - 1.0) / denom], axis=-1)


def extend_homogeneous(sample: FieldSample, x) -> FieldSample:
    """Scale a unit-sphere sample to the 3D point x: velocity by 1/|x|, pressure by 1/|x|^2."""
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    if np.any(r == 0):
        raise DomainError("cannot extend to the origin")
    p = None if sample.p is None else np.asarray(sample.p) / r**2
    return FieldSample(
        np.asarray(sample.u_r) / r,
        np.asarray(sample.u_theta) / r,
        np.asarray(sample.u_phi) / r,
        p,
    )


@dataclass(frozen=True)
class FieldProvider:
    """A solution as a 3D field: unit-sphere sampler plus homogeneous extension."""

    sphere_sample: Callable
    domain: DomainDescriptor = FULL_SPHERE

    def __call__(self, x):
        """Cartesian velocity (..., 3) and pressure (...) at 3D points x."""
        r, theta, phi = cartesian_to_spherical(x)
        s = self.sphere_sample(theta, phi)
        e_r, e_t, e_p = basis_vectors(theta, phi)
        u = (
            np.asarray(s.u_r)[..., None] * e_r
            + np.asarray(s.u_theta)[..., None] * e_t
            + np.asarray(s.u_phi)[..., None] * e_p
        ) / r[..., None]
        p = np.full_like(r, np.nan) if s.p is None else np.asarray(s.p) / r**2
        return u, p


def _check_surface_stencil(domain, theta, phi, h):
    if domain is None:
        return
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    margin = 10.0 * h
    if not np.all(domain.contains(theta, margin=margin)):
        raise StencilContaminationError("stencil too close to the domain boundary")
    x = spherical_to_cartesian(1.0, theta, phi)
    if not np.all(domain.clear_of_exclusions(x, margin)):
        raise StencilContaminationError("stencil too close to a singular point")


def surface_gradient(f, theta, phi, h=1e-5, domain=None) -> TangentVector:
    """Central-difference surface gradient of a scalar field on the sphere.

    f is a callable f(theta, phi). Returns components in the (e_theta, e_phi)
    frame, O(h^2) accurate for smooth fields.
    """
    _check_surface_stencil(domain, theta, phi, h)
    a_t = (f(theta + h, phi) - f(theta - h, phi)) / (2.0 * h)
    a_p = (f(theta, phi + h) - f(theta, phi - h)) / (2.0 * h * np.sin(theta))
    return TangentVector(a_t, a_p)


def laplace_beltrami(f, theta, phi, h=1e-4, domain=None, richardson=True):
    """Five-point finite-difference Laplace-Beltrami operator on the sphere."""
    _check_surface_stencil(domain, theta, phi, h)

    def lb(hh):
        f0 = f(theta, phi)
        ftt = (f(theta + hh, phi) - 2.0 * f0 + f(theta - hh, phi)) / hh**2
        ft = (f(theta + hh, phi) - f(theta - hh, phi)) / (2.0 * hh)
        fpp = (f(theta, phi + hh) - 2.0 * f0 + f(theta, phi - hh)) / hh**2
        return ftt + ft / np.tan(theta) + fpp / np.sin(theta) ** 2

    if not richardson:
        return lb(h)
    return richardson_pair(lb(h), lb(h / 2.0))


def _first_derivatives(fieldp, x, h):
    """Central-difference Jacobian J[i,j] = du_i/dx_j, pressure gradient, Laplacian."""
    x = np.asarray(x, dtype=float)
    u0, p0 = fieldp(x)
    J = np.empty(x.shape[:-1] + (3, 3))
    gradp = np.empty(x.shape[:-1] + (3,))
    lap = np.zeros_like(u0)
    for j in range(3):
        dx = np.zeros(3)
        dx[j] = h
        up, pp = fieldp(x + dx)
        um, pm = fieldp(x - dx)
        J[..., :, j] = (up - um) / (2.0 * h)
        gradp[..., j] = (pp - pm) / (2.0 * h)
        lap += (up + um - 2.0 * u0) / h**2
    return u0, p0, J, gradp, lap


def _check_3d_stencil(domain, x, h):
    if domain is None:
        return
    if not np.all(domain.stencil_safe(x, h)):
        raise StencilContaminationError("3D stencil too close to a singular ray")


def divergence_3d(fieldp, x, h=1e-4, domain=None, richardson=True):
    """Divergence of the homogeneous extension at 3D points x."""
    _check_3d_stencil(domain, x, h)

    def div(hh):
        _, _, J, _, _ = _first_derivatives(fieldp, x, hh)
        return J[..., 0, 0] + J[..., 1, 1] + J[..., 2, 2]

    if not richardson:
        return div(h)
    return richardson_pair(div(h), div(h / 2.0))


def ns_operator_3d(fieldp, x, h=1e-4, domain=None, richardson=True, viscous=True):
    """Momentum operator -Delta(u) + (u.grad)u + grad(p) as a cartesian 3-vector.

    With viscous=False evaluates the Euler operator (u.grad)u + grad(p).
    """
    _check_3d_stencil(domain, x, h)

    def op(hh):
        u0, _, J, gradp, lap = _first_derivatives(fieldp, x, hh)
        adv = np.einsum("...ij,...j->...i", J, u0)
        out = adv + gradp
        if viscous:
            out = out - lap
        return out

    if not richardson:
        return op(h)
    return richardson_pair(op(h), op(h / 2.0))


def jacobian_frame_fd(fieldp, r, theta, phi, h=1e-5):
    """Finite-difference velocity gradient expressed in the spherical frame.

    Returns M[i, j] = e_i . (du/dx_j basis) e_j, the same convention as
    gradient_tensor_axisym; used as an independent cross-check.
    """
    x = spherical_to_cartesian(r, theta, phi)
    _, _, J, _, _ = _first_derivatives(fieldp, x, h)
    e_r, e_t, e_p = basis_vectors(theta, phi)
    E = np.stack([e_r, e_t, e_p], axis=-2)
    return np.einsum("...ik,...kl,...jl->...ij", E, J, E)


def gradient_tensor_axisym(sample: FieldSample, dtheta, r, theta):
    """Velocity gradient of an axisymmetric homogeneous field, (e_r,e_theta,e_phi) frame.

    sample holds the unit-sphere components at colatitude theta and dtheta their
    analytic theta-derivatives (du_r, du_theta, du_phi). Entry (i, j) is the
    derivative of component i along direction j; every entry scales as 1/r^2.
    """
    a, b, c = (np.asarray(sample.u_r), np.asarray(sample.u_theta), np.asarray(sample.u_phi))
    da, db, dc = (np.asarray(v) for v in dtheta)
    cot = 1.0 / np.tan(theta)
    rr = np.asarray(r, dtype=float) ** 2
    rows = [
        [-a, da - b, -c],
        [-b, db + a, -c * cot],
        [-c, dc, a + b * cot],
    ]
    M = np.stack([np.stack(np.broadcast_arrays(*row), axis=-1) for row in rows], axis=-2)
    return M / rr[..., None, None]
