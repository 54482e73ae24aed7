"""Exception hierarchy."""


class KobgeoError(Exception):
    """Base class for every error raised by kobgeo."""


class DomainError(KobgeoError, ValueError):
    """Invalid domain parameters.  ``param`` names the offending field."""

    def __init__(self, param, message):
        super().__init__(f"{param}: {message}")
        self.param = param


class QueryError(KobgeoError, ValueError):
    """A point query fell outside the domain."""


class ConeConditionError(KobgeoError):
    """No admissible cone was found at a boundary point."""


class NonConvergenceError(KobgeoError):
    """Newton iteration stagnated; ``residual`` holds the last residual."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


class PathError(KobgeoError, ValueError):
    """Malformed path or a segment leaving the domain."""


class CertificationError(KobgeoError):
    """Raised when a precondition of a certification routine fails."""


class EscapeError(KobgeoError):
    """An orbit left the domain numerically; ``step`` is the offending index."""

    def __init__(self, step, point):
        super().__init__(f"orbit escaped the domain at step {step} (z={point!r})")
        self.step = step
        self.point = point


class ConfigError(KobgeoError, ValueError):
    """Scenario configuration problem."""


class IntegrityError(KobgeoError, ValueError):
    """Inputs violate a metric axiom beyond tolerance."""
