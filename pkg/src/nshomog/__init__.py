"""Explicit (-1)-homogeneous stationary Navier-Stokes flows on the sphere.

Subpackages:
    geometry     coordinates, homogeneous extension, FD operators
    specfun      elliptic integrals (AGM) and the chi equation
    families     closed-form solution catalog
    reduced_ode  reduced axisymmetric ODE system, shooting, reconstruction
    liouville    meromorphic-function constructor for multi-singular solutions
    analysis     residual verification and singularity classification
    cli          command-line orchestrator
"""

from . import analysis, families, geometry, liouville, reduced_ode, specfun  # noqa: F401

__all__ = ["analysis", "families", "geometry", "liouville", "reduced_ode", "specfun"]
__version__ = "0.1.0"
