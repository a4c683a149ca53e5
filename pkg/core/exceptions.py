"""
Exception types shared by the computation modules.
Each carries the process exit code the CLI reports for it.
"""


class MomentsError(Exception):
    """Base class for all domain errors."""
    exit_code = 1


class InvalidConfigError(MomentsError, ValueError):
    """Bad arguments, flags or operator definitions."""
    exit_code = 2


class InsufficientDepthError(MomentsError):
    """A table does not reach the moment or K index a computation needs."""
    exit_code = 3


class ConvergenceError(MomentsError):
    """Quadrature, root search or fit did not converge."""
    exit_code = 4
