"""Exception types shared across the package."""


class SiegelThetaError(Exception):
    """Base class for all library errors."""


class DimensionError(SiegelThetaError, ValueError):
    pass


class DomainError(SiegelThetaError, ValueError):
    pass


class SingularCocycleError(SiegelThetaError, ArithmeticError):
    """CZ + D is numerically singular."""


class RefinementRequired(SiegelThetaError, ValueError):
    pass


class NonTerminationError(SiegelThetaError, RuntimeError):
    """Reduction hit its iteration cap; ``best`` holds the best point found."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class WindowError(SiegelThetaError, ValueError):
    pass


class PreconditionError(SiegelThetaError, ValueError):
    """An operator was applied outside its domain; ``defect`` measures by how much."""

    def __init__(self, message, defect=None):
        super().__init__(message)
        self.defect = defect


class ObstructionError(PreconditionError):
    """A top-degree form pairs non-trivially with an invariant current."""


class ResonanceError(SiegelThetaError, ArithmeticError):
    def __init__(self, message, modes=()):
        super().__init__(message)
        self.modes = list(modes)


class AccuracyError(SiegelThetaError, ArithmeticError):
    def __init__(self, message, indicator=None):
        super().__init__(message)
        self.indicator = indicator


class FitError(SiegelThetaError, ValueError):
    pass


class NoPredictionError(SiegelThetaError, ValueError):
    pass


class ConventionError(SiegelThetaError, ValueError):
    pass


class ConfigError(SiegelThetaError, ValueError):
    """Invalid experiment configuration."""
