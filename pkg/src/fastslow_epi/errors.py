"""Exception hierarchy shared by all modules."""


class FastSlowError(Exception):
    """Base class for library errors."""


class ParameterError(FastSlowError, ValueError):
    """Invalid model parameters or model kind."""


class DomainError(FastSlowError, ValueError):
    """Input outside the domain of an operation."""


class NoEndemicEquilibriumError(DomainError):
    """Raised when R0 <= 1 and an endemic state is requested."""


class PreconditionError(FastSlowError, ValueError):
    """A documented precondition of an operation does not hold."""


class NumericalError(FastSlowError, RuntimeError):
    """A numerical procedure failed; ``details`` carries diagnostics."""

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details

    def __str__(self):
        base = super().__str__()
        if not self.details:
            return base
        extra = ", ".join(f"{k}={v!r}" for k, v in self.details.items())
        return f"{base} ({extra})"


class BracketError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    pass


class StiffnessError(NumericalError):
    """Step size underflow in the orbit engine."""


class NoExitError(NumericalError):
    """No exit point found before the configured bound."""
