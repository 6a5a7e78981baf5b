"""Exception hierarchy shared by all modules."""


class QHinfError(Exception):
    """Base class for every error raised by qhinf."""


class InputError(QHinfError, ValueError):
    """Malformed input: shape mismatch, non-Hermitian data, bad parameters."""


class PreconditionError(QHinfError):
    """A documented precondition of an operation does not hold."""


class NumericalError(QHinfError):
    """A computation broke down numerically (singular basis, residual too large)."""


class NoStabilizingSolution(NumericalError):
    """The Hamiltonian matrix has eigenvalues on (or too near) the imaginary axis."""


class InfeasibleError(QHinfError):
    """One of the synthesis conditions (a), (b) or (c) failed.

    Attributes
    ----------
    condition : str
        ``"a"`` (X equation), ``"b"`` (Y equation) or ``"c"`` (coupling).
    """

    def __init__(self, condition, message):
        super().__init__(f"condition ({condition}) failed: {message}")
        self.condition = condition
        self.detail = message


class ConfigError(QHinfError):
    """A problem configuration could not be parsed or validated."""
