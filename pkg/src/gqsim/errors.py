"""Exception hierarchy shared by all gqsim modules."""


class GqsimError(Exception):
    """Base class for all gqsim errors."""


class DomainError(GqsimError):
    """Input outside the mathematical domain of an operation."""


class ConfigError(GqsimError):
    """Invalid configuration value or file."""


class AccuracyError(GqsimError):
    """Requested accuracy not reached; carries the best estimate."""

    def __init__(self, message, best_estimate=None):
        super().__init__(message)
        self.best_estimate = best_estimate


class AliasingError(GqsimError):
    """Tabulated function not negligible at the grid boundary."""


class ExtentError(GqsimError):
    """Requested evaluation points fall outside a tabulated grid."""


class ContractError(GqsimError):
    """A documented precondition between modules was violated."""


class NonConcaveError(GqsimError):
    """Quadratic log-likelihood fit produced a non-concave parabola."""


class StepSizeError(GqsimError):
    """Finite-difference noise dominates a derivative estimate."""
