"""
Exception hierarchy shared by the library and the CLI.
"""

from typing import Optional


class DiamondError(Exception):
    """Base class for every error raised by the diamond package."""


class InvalidArgumentError(DiamondError, ValueError):
    pass


class UnsupportedOperationError(DiamondError, NotImplementedError):
    pass


class InvalidStateError(DiamondError, RuntimeError):
    pass


class SolverDivergenceError(DiamondError, RuntimeError):
    """Newton did not reach tolerance; carries the last residual norm."""

    def __init__(self, message: str, residual: float = float("nan"),
                 diamond: Optional[int] = None, step: Optional[int] = None):
        super().__init__(message)
        self.residual = residual
        self.diamond = diamond
        self.step = step


class SingularSystemError(DiamondError, RuntimeError):
    def __init__(self, message: str, diamond: Optional[int] = None, step: Optional[int] = None):
        super().__init__(message)
        self.diamond = diamond
        self.step = step


class AbortedRunError(DiamondError, RuntimeError):
    """A parallel worker failed; the run was torn down."""

    def __init__(self, message: str, worker: int, step: Optional[int] = None):
        super().__init__(message)
        self.worker = worker
        self.step = step
