"""Exception taxonomy shared by all solver modules.

The CLI maps these onto exit statuses: ConfigError -> 1,
NonConvergenceError -> 2, MonitorViolation -> 3.
"""


class IonwaveError(Exception):
    """Base class for all library errors."""


class ConfigError(IonwaveError):
    """Invalid configuration, domain violation or precondition failure."""


class EvaluationError(IonwaveError):
    """A user-supplied callable produced a non-finite value."""

    def __init__(self, message, xi=None):
        super().__init__(message)
        self.xi = xi


class BracketError(IonwaveError):
    """A root bracket could not be established (inadmissible profile)."""


class NonConvergenceError(IonwaveError):
    """An iterative solver exhausted its iteration budget."""

    def __init__(self, message, last_residual=None, iterations=None):
        super().__init__(message)
        self.last_residual = last_residual
        self.iterations = iterations


class ContractError(IonwaveError):
    """A validator was called on input violating its stated precondition."""


class MonitorViolation(IonwaveError):
    """A runtime wave-property monitor failed on a converged state."""
