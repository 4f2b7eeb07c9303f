"""Central finite-difference validation of analytic gradients.

"""

from __future__ import annotations

import logging
from typing import Callable, Sequence

import numpy as np

from ..core.errors import ContractViolation, NumericFault
from .tensor import Tape, Tensor, no_grad


__all__ = [
    "grad_check",
    "numerical_gradient",
]

logger = logging.getLogger(__name__)


def _evaluate(f: Callable[..., Tensor], point: Sequence[Tensor]) -> float:
    try:
        with no_grad():
            value = f(*point)
    except NumericFault as e:
        raise NumericFault("grad_check", f"stencil evaluation failed inside '{e.operation}'") from e
    result = value.item() if isinstance(value, Tensor) else float(value)
    if not np.isfinite(result):
        raise NumericFault("grad_check", "objective is not finite at a stencil point")
    return result


def numerical_gradient(
    f: Callable[..., Tensor],
    point: Sequence[Tensor],
    epsilon: float = 1e-6,
) -> list[np.ndarray]:
    """Central differences of `f` with respect to every tensor in `point`.

    The values of each tensor are perturbed in place and restored
    afterwards.
    """
    grads = []
    for tensor in point:
        # stencil offsets write through a flat view
        tensor.values = np.ascontiguousarray(tensor.values)
        grad = np.zeros_like(tensor.values)
        flat = tensor.values.reshape(-1)
        out = grad.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + epsilon
            upper = _evaluate(f, point)
            flat[i] = original - epsilon
            lower = _evaluate(f, point)
            flat[i] = original
            out[i] = (upper - lower) / (2.0 * epsilon)
        grads.append(grad)
    return grads


def grad_check(
    f: Callable[..., Tensor],
    point: Sequence[Tensor],
    epsilon: float = 1e-6,
    floor: float = 1e-8,
) -> float:
    """Compares taped gradients of `f` with central differences.

    Parameters
    ----------
    f : callable
        Maps the tensors of `point` (in order) to a scalar tensor.
    point : sequence of Tensor
        Leaves at which to differentiate; each must require grad.
    epsilon : float, optional
        Half-width of the central-difference stencil.
    floor : float, optional
        Lower bound of the relative-error denominator; coordinates where
        both gradients are smaller than this are compared absolutely.

    Returns
    -------
    float
        max |analytic - central| / max(|analytic|, |central|, floor) over
        every coordinate of every tensor.

    Raises
    ------
    NumericFault
        If `f` is not finite at the point or at any stencil point.
    """
    point = list(point)
    for tensor in point:
        if not tensor.requires_grad or not tensor.is_leaf:
            raise ContractViolation(
                f"'point' must hold leaf tensors requiring grad; got {tensor!r}"
            )
        tensor.zero_grad()

    with Tape() as tape:
        loss = f(*point)
    if not np.isfinite(loss.values).all():
        raise NumericFault("grad_check", "objective is not finite at the point")
    tape.backward(loss)
    analytic = [tensor.grad.copy() for tensor in point]

    numeric = numerical_gradient(f, point, epsilon)

    worst = 0.0
    for a, c in zip(analytic, numeric):
        if a.size == 0:
            continue
        scale = np.maximum(np.maximum(np.abs(a), np.abs(c)), floor)
        worst = max(worst, float(np.max(np.abs(a - c) / scale)))
    logger.debug("grad_check over %d tensors: max relative error %.3e", len(point), worst)
    return worst
