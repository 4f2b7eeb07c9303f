"""Exception types raised by splatlab.

All of them derive from a built-in exception family so that callers can
catch either the precise splatlab type or the broader built-in one.

"""

from __future__ import annotations


__all__ = [
    "ContractViolation",
    "NumericFault",
    "DatasetError",
    "CheckpointError",
]


class ContractViolation(ValueError):
    """An operation was called outside of its documented preconditions."""


class NumericFault(FloatingPointError):
    """A computation produced NaN or Inf values.
    
    Parameters
    ----------
    operation : str
        Name of the operation whose output was not finite.
    detail : str, optional
        Additional context appended to the message.
    """
    
    def __init__(self, operation: str, detail: str = "") -> None:
        self.operation = operation
        message = f"non-finite values produced by '{operation}'"
        if detail:
            message = f"{message}; {detail}"
        super().__init__(message)


class DatasetError(OSError):
    """A dataset file is missing, unreadable or inconsistent."""
    
    def __init__(self, path, reason: str) -> None:
        self.path = path
        super().__init__(f"{path}: {reason}")


class CheckpointError(ValueError):
    """A checkpoint blob has the wrong magic, version or layout."""
