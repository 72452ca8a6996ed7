"""
SB-MCL Exceptions - Custom exceptions for meta-continual learning operations
"""
from typing import Optional, Sequence, Tuple


class SBMCLException(Exception):
    """Base exception for all SB-MCL errors."""
    pass


class ShapeMismatchException(SBMCLException):
    """Raised when operand shapes are incompatible for an operation."""

    def __init__(self, op: str, shapes: Sequence[Tuple[int, ...]], detail: str = ""):
        self.op = op
        self.shapes = tuple(tuple(s) for s in shapes)
        message = f"{op}: incompatible shapes {', '.join(str(s) for s in self.shapes)}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)


class NonFiniteException(SBMCLException):
    """Raised when an input or network output contains NaN or Inf."""
    pass


class InvalidPosteriorException(SBMCLException):
    """Raised when a posterior state violates its invariants."""
    pass


class SecondOrderException(SBMCLException):
    """Raised when an op is recorded while a backward pass is replaying."""
    pass


class EmptyBankException(SBMCLException):
    """Raised when classifying against a bank with no categories."""
    pass


class HeadMismatchException(SBMCLException):
    """Raised when a head is used with an incompatible task domain."""
    pass


class ConfigException(SBMCLException):
    """Raised when a run configuration is missing, malformed or invalid."""

    def __init__(self, message: str, key: Optional[str] = None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class CheckpointException(SBMCLException):
    """Raised when a checkpoint cannot be written, parsed or verified."""
    pass


class DivergenceException(SBMCLException):
    """Raised when meta-training produces a non-finite loss."""

    def __init__(self, step: int, loss: float):
        self.step = step
        self.loss = loss
        super().__init__(f"meta-training diverged at step {step} (loss={loss})")
