"""Exception types shared across the package.

Every error raised on a violated contract derives from MosaicError so callers
can catch the package's failures with a single except clause.
"""


class MosaicError(Exception):
    """Base class for all hypermosaic errors."""


class NotGeneralPosition(MosaicError):
    """Input hyperplanes or vectors are degenerate beyond tolerance."""


class Unbounded(MosaicError):
    """No sign pattern yields a bounded simplex."""


class DimensionUnsupported(MosaicError):
    """Operation not implemented for the requested dimension."""


class InballHit(MosaicError):
    """A hyperplane outside the tuple intersects the tuple's inball."""


class DegeneratePolytope(MosaicError):
    """Polytope has empty interior or too few vertices."""


class QuadratureNotConverged(MosaicError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class NoRoot(MosaicError):
    """Root bracketing failed; no sign change on the search interval."""


class PreconditionViolated(MosaicError):
    """An operation's stated precondition does not hold for the inputs."""


class WindowNotContained(MosaicError):
    """Observation window is not contained in the simulated region."""


class CertificationStarvation(MosaicError):
    """Too few harvested cells could be certified as fully observed."""


class InsufficientSamples(MosaicError):
    """Monte Carlo sample count is too small for the requested statistic."""


class OutOfRange(MosaicError):
    """Argument lies outside the resolvable range of an empirical transform."""


class CoverageFailure(MosaicError):
    """Direction cones fail to cover the sphere at the requested resolution."""


class ConfigInvalid(MosaicError):
    """Experiment configuration is malformed or inconsistent."""
