"""Tensors, tapes and the primitive base class.

A `Tensor` wraps a dense numpy array. Operations on tensors are
instances of `Function` subclasses (primitives); while a `Tape` is
active, every primitive whose inputs require gradients is appended to
it together with its inputs and output. `Tape.backward` then walks the
records in reverse order and accumulates gradients into the leaves.

The tape is rebuilt on every forward pass (define-by-run): enter a new
`Tape` context for each training step.

"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass
from typing import Any, Iterator, Sequence

import numpy as np

from ..core.errors import ContractViolation, NumericFault
from ..core.meta import PrimitiveType


__all__ = [
    "Tensor",
    "Tape",
    "Function",
    "backward",
    "no_grad",
    "active_tape",
    "as_tensor",
    "set_precision",
    "get_dtype",
    "precision",
]


_PRECISIONS = {"float64": np.float64, "float32": np.float32}
_state: dict[str, Any] = {"dtype": np.float64}
_tapes: list[Tape | None] = []


def set_precision(name: str) -> None:
    """Selects the float width of newly created tensors.

    Parameters
    ----------
    name : {"float64", "float32"}
        64-bit is the verification mode and the default; 32-bit is the
        optional speed mode.
    """
    if name not in _PRECISIONS:
        raise ValueError(
            f"'precision' must be one of {sorted(_PRECISIONS)}; got {name!r}"
        )
    _state["dtype"] = _PRECISIONS[name]


def get_dtype() -> type:
    return _state["dtype"]


@contextmanager
def precision(name: str) -> Iterator[None]:
    """Temporarily switches the tensor precision."""
    previous = _state["dtype"]
    set_precision(name)
    try:
        yield
    finally:
        _state["dtype"] = previous


def active_tape() -> Tape | None:
    """Returns the innermost recording tape, if any."""
    return _tapes[-1] if _tapes else None


@contextmanager
def no_grad() -> Iterator[None]:
    """Suspends recording; primitives run but nothing is taped."""
    _tapes.append(None)
    try:
        yield
    finally:
        _tapes.pop()


class Tensor:
    """A dense array of floats with an optional gradient accumulator.

    Parameters
    ----------
    values : array_like
        The data; converted to the active precision.
    requires_grad : bool, optional
        Whether gradients should flow to this tensor, by default False.
    name : str, optional
        A label used in error messages and checkpoints.

    Attributes
    ----------
    values : numpy.ndarray
    grad : numpy.ndarray or None
        Present on every leaf with ``requires_grad``; present on a
        recorded output only when ``retain_grad`` is set.
    is_leaf : bool
        False for tensors produced by a recorded primitive.

    Examples
    --------
    >>> x = Tensor([3.0], requires_grad=True)
    >>> with Tape() as tape:
    ...     loss = (x * x).sum()
    >>> tape.backward(loss)
    >>> x.grad
    array([6.])
    """

    __slots__ = ("values", "requires_grad", "grad", "is_leaf", "retain_grad", "name")


    ###################
    # Special Methods #
    ###################

    def __init__(
        self,
        values: Any,
        requires_grad: bool = False,
        name: str | None = None,
        *,
        _leaf: bool = True,
    ) -> None:
        array = np.asarray(values)
        if not np.issubdtype(array.dtype, np.floating) or array.dtype != get_dtype():
            array = array.astype(get_dtype())
        self.values: np.ndarray = array
        self.requires_grad = bool(requires_grad)
        self.is_leaf = _leaf
        self.retain_grad = False
        self.name = name
        self.grad: np.ndarray | None = (
            np.zeros_like(array) if requires_grad and _leaf else None
        )

    def __repr__(self) -> str:
        label = f", name={self.name!r}" if self.name else ""
        return (
            f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})"
        )

    def __len__(self) -> int:
        return len(self.values)

    def __add__(self, other) -> Tensor:
        return F.add(self, other)

    def __radd__(self, other) -> Tensor:
        return F.add(other, self)

    def __sub__(self, other) -> Tensor:
        return F.sub(self, other)

    def __rsub__(self, other) -> Tensor:
        return F.sub(other, self)

    def __mul__(self, other) -> Tensor:
        return F.mul(self, other)

    def __rmul__(self, other) -> Tensor:
        return F.mul(other, self)

    def __truediv__(self, other) -> Tensor:
        return F.div(self, other)

    def __rtruediv__(self, other) -> Tensor:
        return F.div(other, self)

    def __matmul__(self, other) -> Tensor:
        return F.matmul(self, other)

    def __neg__(self) -> Tensor:
        return F.neg(self)

    def __pow__(self, exponent: float) -> Tensor:
        return F.power(self, exponent)

    def __getitem__(self, index) -> Tensor:
        return F.getitem(self, index)


    ##############
    # Properties #
    ##############

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def ndim(self) -> int:
        return self.values.ndim

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def T(self) -> Tensor:
        return F.transpose(self)


    ###########
    # Methods #
    ###########

    def item(self) -> float:
        if self.values.size != 1:
            raise ContractViolation(
                f"'item()' needs a single-element tensor; got shape {self.shape}"
            )
        return float(self.values.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.values

    def detach(self) -> Tensor:
        """Returns a constant tensor sharing this tensor's values."""
        return Tensor(self.values)

    def zero_grad(self) -> None:
        if self.grad is not None:
            self.grad = np.zeros_like(self.values)

    def assign(self, values: np.ndarray) -> None:
        """Replaces the values of a leaf, eg. after an optimizer step.

        A shape change (densification) also resets the gradient buffer.
        """
        if not self.is_leaf:
            raise ContractViolation("only leaf tensors can be assigned")
        values = np.asarray(values, dtype=self.values.dtype)
        reshaped = values.shape != self.values.shape
        self.values = values
        if self.requires_grad and (reshaped or self.grad is None):
            self.grad = np.zeros_like(values)

    def sum(self, axis=None, keepdims: bool = False) -> Tensor:
        return F.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> Tensor:
        return F.mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape) -> Tensor:
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return F.reshape(self, shape)

    def transpose(self, *axes) -> Tensor:
        return F.transpose(self, axes or None)


def as_tensor(value: Any) -> Tensor:
    """Wraps arrays and scalars as constant tensors; tensors pass through."""
    return value if isinstance(value, Tensor) else Tensor(value)


@dataclass(slots=True)
class Record:
    """One taped primitive application."""
    op: Function
    inputs: tuple[Tensor, ...]
    output: Tensor


class Tape:
    """An ordered record of primitive applications.

    Records are appended in execution order, so every record's inputs
    were produced before it; the list is a topological order of the
    graph by construction.

    Examples
    --------
    >>> with Tape() as tape:
    ...     loss = model_loss(params)
    >>> tape.backward(loss)
    """

    def __init__(self) -> None:
        self.records: list[Record] = []

    def __enter__(self) -> Tape:
        _tapes.append(self)
        return self

    def __exit__(self, *exc) -> None:
        _tapes.pop()

    def __len__(self) -> int:
        return len(self.records)

    def record(self, op: Function, inputs: tuple[Tensor, ...], output: Tensor) -> None:
        self.records.append(Record(op, inputs, output))

    def backward(self, loss: Tensor) -> None:
        """Accumulates dLoss/dLeaf into every leaf that requires grad.

        Parameters
        ----------
        loss : Tensor
            A single-element tensor recorded on this tape.

        Raises
        ------
        ContractViolation
            If `loss` holds more than one element.

        Notes
        -----
        Leaf gradients are accumulated, never overwritten: calling
        backward twice without zeroing doubles them.
        """
        if loss.values.size != 1:
            raise ContractViolation(
                f"'loss' must be scalar; got shape {loss.shape}"
            )
        if loss.is_leaf:
            if loss.requires_grad:
                loss.grad += np.ones_like(loss.values)
            return

        pending: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.values)}
        for record in reversed(self.records):
            grad = pending.pop(id(record.output), None)
            if grad is None:
                continue
            if record.output.retain_grad:
                if record.output.grad is None or record.output.grad.shape != grad.shape:
                    record.output.grad = np.zeros_like(grad)
                record.output.grad += grad

            input_grads = record.op.backward(grad)
            for tensor, input_grad in zip(record.inputs, input_grads):
                if input_grad is None or not tensor.requires_grad:
                    continue
                if input_grad.shape != tensor.shape:
                    raise ContractViolation(
                        f"backward rule of '{record.op.name}' returned shape "
                        f"{input_grad.shape} for an input of shape {tensor.shape}"
                    )
                if tensor.is_leaf:
                    tensor.grad += input_grad
                elif (known := pending.get(id(tensor))) is not None:
                    pending[id(tensor)] = known + input_grad
                else:
                    pending[id(tensor)] = input_grad


def backward(tape: Tape, loss: Tensor) -> None:
    """Functional form of `Tape.backward`."""
    tape.backward(loss)


class Function(metaclass=PrimitiveType):
    """Base class of every differentiable primitive.

    Subclasses define the class constants `name` and `arity` (None for
    variadic primitives), a `forward` taking and returning numpy arrays,
    and a `backward` returning one gradient (or None) per input. Keyword
    parameters of `apply` are passed to the constructor, so per-call
    state (saved arrays, strides, ...) lives on the instance.
    """

    name: str
    arity: int | None

    def __init__(self, **params: Any) -> None:
        for key, value in params.items():
            setattr(self, key, value)


    #################
    # Class Methods #
    #################

    @classmethod
    def apply(cls, *inputs: Any, **params: Any) -> Tensor:
        tensors = tuple(as_tensor(value) for value in inputs)
        if cls.arity is not None and len(tensors) != cls.arity:
            raise ContractViolation(
                f"'{cls.name}' takes {cls.arity} inputs; got {len(tensors)}"
            )
        op = cls(**params)
        out = np.asarray(op.forward(*(tensor.values for tensor in tensors)))
        if not np.isfinite(out).all():
            raise NumericFault(cls.name)

        tape = active_tape()
        recorded = tape is not None and any(t.requires_grad for t in tensors)
        output = Tensor(out, requires_grad=recorded, _leaf=not recorded)
        if recorded:
            tape.record(op, tensors, output)
        return output


    ###########
    # Methods #
    ###########

    def forward(self, *arrays: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> Sequence[np.ndarray | None]:
        raise NotImplementedError


from . import functional as F  # noqa: E402  (operators resolve at call time)
