"""Exception hierarchy shared by all entspec modules."""


class EntspecError(Exception):
    """Base class for all errors raised by entspec."""


class ValidationError(EntspecError, ValueError):
    """Invalid model parameters or inconsistent inputs."""


class SizeError(EntspecError, ValueError):
    """Requested problem size exceeds the supported range."""


class EdgeError(EntspecError, ValueError):
    """Evaluation requested exactly at a branch point of the resolvent."""


class DivergenceError(EntspecError, ArithmeticError):
    """An integral diverges at the lower end of the spectrum."""


class ConvergenceError(EntspecError, RuntimeError):
    """Self-consistency iteration failed to converge.

    Attributes
    ----------
    residual : float
        Largest residual at the last iterate.
    z : complex or None
        Offending spectral parameter, when known.
    """

    def __init__(self, message, residual=float("nan"), z=None):
        super().__init__(message)
        self.residual = residual
        self.z = z
