"""Exception types shared across the package.

Every deliberate rejection raises a subclass of :class:`MagwellError` so
callers can distinguish misuse from genuine bugs.  The names mirror the
failure they report, not the module that raises them.
"""


class MagwellError(Exception):
    """Base class for all errors raised on purpose by this package."""


class DomainError(MagwellError, ValueError):
    """Scalar argument outside its mathematical domain (h <= 0, b0 <= 0, ...)."""


class OutOfBandError(MagwellError, ValueError):
    """Evaluation requested outside the tubular band |t| <= t_halfwidth."""


class InvalidMetricError(MagwellError, ValueError):
    """Metric coefficient a(s, t) is non-positive where it was sampled."""


class StencilError(MagwellError, ValueError):
    """A finite-difference stencil does not fit inside the band."""


class NotAWellError(MagwellError, ValueError):
    """Field profile is not critical on the curve (d_t b(s, 0) != 0)."""


class DegeneracyViolationError(MagwellError, ValueError):
    """Transverse well is not uniformly quadratic (beta2 <= 0 somewhere)."""


class DegenerateMiniwellError(MagwellError, ValueError):
    """Longitudinal well V_k has no nondegenerate interior minimum."""


class ComplexFrequencyError(MagwellError, ValueError):
    """Characteristic frequencies would be complex (discriminant < 0)."""


class PrequantizationError(MagwellError, ValueError):
    """Spherical field strength not half-integral (no line bundle exists)."""


class IntegrationError(MagwellError, RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class SolvabilityError(MagwellError, ValueError):
    """Right-hand side has a kernel component; the resolvent is undefined.

    Carries the offending coefficient in ``args[1]`` when available.
    """


class ConstructionError(MagwellError, RuntimeError):
    """Internal consistency check of a quasimode construction failed."""


class GridResolutionError(MagwellError, ValueError):
    """Grid spacing too coarse for the requested semiclassical parameter."""


class GridMismatchError(MagwellError, ValueError):
    """State samples do not match the operator's grid layout."""


class ConvergenceError(MagwellError, RuntimeError):
    """Iterative eigensolver did not converge to the requested tolerance."""


class RequestTooLargeError(MagwellError, ValueError):
    """More eigenpairs requested than the discretization can support."""


class IllConditionedFitError(MagwellError, ValueError):
    """Least-squares design matrix is numerically singular."""


class ConfigError(MagwellError, ValueError):
    """Experiment configuration is missing or inconsistent."""
