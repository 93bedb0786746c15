class TriplesError(Exception):
    """Base class of every error raised by the triples package."""

    exit_code = 1


class ConfigValidationError(TriplesError):
    """A scenario or parameter set failed validation.

    All violations are collected before raising, so ``violations`` holds
    the complete list.
    """

    exit_code = 2

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class GridShapeError(TriplesError):
    """Two correlation grids cannot be compared (axes or kind differ)."""

    exit_code = 2


class NumericalError(TriplesError):
    exit_code = 3


class QuadratureError(NumericalError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, estimate=None, bound=None):
        self.estimate = estimate
        self.bound = bound
        super().__init__(f"{message} (estimate={estimate}, error bound={bound})")


class SingularNormalizationError(NumericalError):
    """Resonant transmission t0 vanishes, so normalized correlators are undefined."""


class SteadyStateError(NumericalError):
    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(f"{message} (residual={residual})")


class CapacityError(TriplesError):
    """The density-matrix oracle was asked for more atoms than it can hold."""

    exit_code = 4
