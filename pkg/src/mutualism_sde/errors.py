"""Exception hierarchy shared by the numerical core and the command line."""


class MutualismError(Exception):
    """Base class for every error raised by this package."""

    #: exit status used by the command line when this error escapes a command
    exit_code = 1


class ConstraintViolation(MutualismError, ValueError):
    """A parameter or configuration value breaks a model invariant."""

    def __init__(self, key, message, line=None):
        self.key = key
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{key}{where}: {message}")


class UnknownKey(ConstraintViolation):
    pass


class MalformedValue(ConstraintViolation):
    pass


class NoConvergence(MutualismError):
    exit_code = 2


class NonDivisible(MutualismError, ValueError):
    pass


class GridMismatch(MutualismError, ValueError):
    pass


class IntegratorFailure(MutualismError):
    """A trajectory left the finite floating range."""

    exit_code = 2

    def __init__(self, message, step=None):
        self.step = step
        super().__init__(message if step is None else f"{message} at step {step}")


class EnsembleFailure(MutualismError):
    """More than the tolerated fraction of replicates failed."""

    exit_code = 2


class VerificationFailure(MutualismError):
    exit_code = 3
