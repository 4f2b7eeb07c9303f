"""Shared building blocks: the primitive metaclass, counters and errors.

"""

from .meta import PrimitiveType, class_constant
from .counters import Counter, CounterCollection
from .errors import (
    ContractViolation,
    NumericFault,
    DatasetError,
    CheckpointError,
)


__all__ = [
    "PrimitiveType",
    "class_constant",
    "Counter",
    "CounterCollection",
    "ContractViolation",
    "NumericFault",
    "DatasetError",
    "CheckpointError",
]
