"""Exception types shared across the package."""


class NSHomogError(Exception):
    """Base class for package errors."""


class ParameterError(NSHomogError, ValueError):
    """Solution parameters outside the admissible region."""


class DomainError(NSHomogError, ValueError):
    """Evaluation request outside the solution's domain on the sphere."""


class PoleProjectionError(NSHomogError, ValueError):
    """Stereographic projection requested at the projection pole."""


class StencilContaminationError(NSHomogError, ValueError):
    """A finite-difference stencil would cross a singular point or domain edge."""


class InconclusiveError(NSHomogError, RuntimeError):
    """An asymptotic extraction did not converge to a usable limit."""
