"""Adam with named parameter groups.

"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..core.counters import CounterCollection
from ..core.errors import ContractViolation
from ..diffcore import Tensor


__all__ = [
    "OptimizerState",
    "adam_step",
    "ParamGroup",
    "Adam",
]

logger = logging.getLogger(__name__)


@dataclass(slots=True)
class OptimizerState:
    """Moments and step counts of one parameter group.

    Attributes
    ----------
    first, second : dict of numpy.ndarray
        First and second moment estimates keyed by parameter name.
    steps : int
        Number of updates applied to the group.
    """
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    first: dict[str, np.ndarray] = field(default_factory=dict)
    second: dict[str, np.ndarray] = field(default_factory=dict)
    steps: int = 0


def adam_step(params: Mapping[str, Tensor], state: OptimizerState, lr: float) -> bool:
    """One bias-corrected Adam update of a parameter group.

    Returns
    -------
    bool
        False if any gradient in the group is not finite; the group is
        then left untouched.
    """
    for name, tensor in params.items():
        if tensor.grad is None:
            raise ContractViolation(f"parameter '{name}' does not accumulate gradients")
        if not np.isfinite(tensor.grad).all():
            return False

    state.steps += 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1 ** state.steps
    correction2 = 1.0 - b2 ** state.steps
    for name, tensor in params.items():
        grad = tensor.grad
        m = state.first.get(name)
        v = state.second.get(name)
        if m is None:
            m, v = np.zeros_like(grad), np.zeros_like(grad)
        elif m.shape != grad.shape:
            raise ContractViolation(
                f"moments of '{name}' have shape {m.shape}; gradient has {grad.shape}"
            )
        m = b1 * m + (1.0 - b1) * grad
        v = b2 * v + (1.0 - b2) * grad * grad
        state.first[name], state.second[name] = m, v
        update = lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
        tensor.assign(tensor.values - update)
    return True


@dataclass(slots=True)
class ParamGroup:
    params: dict[str, Tensor]
    lr: float
    state: OptimizerState = field(default_factory=OptimizerState)


class Adam:
    """Adam over several named groups, each with its own learning rate.

    A group whose gradients are not all finite is skipped for that step
    and counted in the persistent ``skipped_groups`` counter.
    """

    def __init__(self, groups: Mapping[str, tuple[Mapping[str, Tensor], float]]) -> None:
        self.groups: dict[str, ParamGroup] = {}
        for name, (params, lr) in groups.items():
            if not lr > 0:
                raise ContractViolation(f"learning rate of group '{name}' must be positive; got {lr!r}")
            self.groups[name] = ParamGroup(dict(params), float(lr))
        self.counters = CounterCollection(self)
        self.counters.add_counters("skipped_groups", type_=int, persistent=True)

    def __repr__(self) -> str:
        return f"Adam(groups={list(self.groups)})"

    def step(self) -> list[str]:
        """Updates every group; returns the names of skipped groups."""
        skipped = []
        for name, group in self.groups.items():
            if not adam_step(group.params, group.state, group.lr):
                skipped.append(name)
                self.counters.increment("skipped_groups")
                logger.warning("skipped Adam update of group '%s': non-finite gradient", name)
        return skipped

    def zero_grad(self) -> None:
        for group in self.groups.values():
            for tensor in group.params.values():
                tensor.zero_grad()

    def remap(self, group: str, source: np.ndarray, fresh: np.ndarray) -> None:
        """Carries moments across a change of the group's row count.

        Row i of every new moment is row ``source[i]`` of the old one,
        or zero where `fresh` is set.
        """
        state = self.groups[group].state
        for moments in (state.first, state.second):
            for name, old in list(moments.items()):
                new = old[source].copy()
                new[fresh] = 0.0
                moments[name] = new
