"""Trainable layers built on the diffcore primitives.

A `Module` owns its parameters as leaf tensors and exposes them through
`parameters()`, keyed by dotted attribute path. Submodules, lists of
submodules and parameter tensors are discovered from instance
attributes in assignment order, so the key order is stable and
checkpoints written from one instance load into another.

"""

from __future__ import annotations

from typing import Iterator, Mapping, Sequence

import numpy as np

from ..core.errors import CheckpointError, ContractViolation
from . import functional as F
from .tensor import Tensor


__all__ = [
    "Module",
    "Linear",
    "Conv2d",
    "ConvTranspose2d",
    "MLP",
    "UNet",
]


class Module:
    """Base class of every trainable network."""

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def _children(self) -> Iterator[tuple[str, Tensor | Module]]:
        for key, value in vars(self).items():
            if isinstance(value, (Tensor, Module)):
                yield key, value
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, (Tensor, Module)):
                        yield f"{key}.{i}", item

    def parameters(self, prefix: str = "") -> dict[str, Tensor]:
        """Returns every trainable tensor of this module and its children."""
        params: dict[str, Tensor] = {}
        for key, child in self._children():
            path = f"{prefix}{key}"
            if isinstance(child, Module):
                params.update(child.parameters(prefix=f"{path}."))
            elif child.requires_grad:
                params[path] = child
        return params

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: tensor.values.copy() for name, tensor in self.parameters().items()}

    def load_state_dict(self, state: Mapping[str, np.ndarray]) -> None:
        params = self.parameters()
        missing = params.keys() - state.keys()
        if missing:
            raise CheckpointError(f"missing network tensors: {sorted(missing)}")
        for name, tensor in params.items():
            values = np.asarray(state[name])
            if values.shape != tensor.shape:
                raise CheckpointError(
                    f"tensor '{name}' has shape {values.shape}; expected {tensor.shape}"
                )
            tensor.assign(values)

    def zero_grad(self) -> None:
        for tensor in self.parameters().values():
            tensor.zero_grad()


def _he_normal(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)


class Linear(Module):
    """y = x @ W + b on the last axis."""

    def __init__(
        self,
        in_features: int,
        out_features: int,
        rng: np.random.Generator,
        scale: float = 1.0,
    ) -> None:
        self.in_features = in_features
        self.out_features = out_features
        self.weight = Tensor(
            scale * _he_normal(rng, (in_features, out_features), in_features),
            requires_grad=True,
        )
        self.bias = Tensor(np.zeros(out_features), requires_grad=True)

    def forward(self, x) -> Tensor:
        return F.matmul(x, self.weight) + self.bias


class Conv2d(Module):
    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        rng: np.random.Generator,
        stride: int = 1,
        padding: int | None = None,
        scale: float = 1.0,
    ) -> None:
        self.stride = stride
        self.padding = kernel_size // 2 if padding is None else padding
        fan_in = in_channels * kernel_size * kernel_size
        self.weight = Tensor(
            scale * _he_normal(rng, (out_channels, in_channels, kernel_size, kernel_size), fan_in),
            requires_grad=True,
        )
        self.bias = Tensor(np.zeros(out_channels), requires_grad=True)

    def forward(self, x) -> Tensor:
        return F.conv2d(x, self.weight, self.bias, stride=self.stride, padding=self.padding)


class ConvTranspose2d(Module):
    """2x upsampling by a stride-2, 2x2 transposed convolution."""

    def __init__(self, in_channels: int, out_channels: int, rng: np.random.Generator) -> None:
        self.weight = Tensor(
            _he_normal(rng, (in_channels, out_channels, 2, 2), in_channels),
            requires_grad=True,
        )
        self.bias = Tensor(np.zeros(out_channels), requires_grad=True)

    def forward(self, x) -> Tensor:
        return F.conv_transpose2d(x, self.weight, self.bias, stride=2)


class MLP(Module):
    """Fully connected layers with ReLU between them and none after the last."""

    def __init__(self, widths: Sequence[int], rng: np.random.Generator) -> None:
        if len(widths) < 2:
            raise ContractViolation(f"'widths' needs at least 2 entries; got {list(widths)}")
        self.widths = tuple(widths)
        self.layers = [
            Linear(n_in, n_out, rng) for n_in, n_out in zip(widths[:-1], widths[1:])
        ]

    def forward(self, x) -> Tensor:
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < len(self.layers) - 1:
                x = F.relu(x)
        return x


class UNet(Module):
    """An encoder-decoder with skip connections.

    Parameters
    ----------
    in_channels, out_channels : int
    widths : sequence of int
        Channel count of the full-resolution stem followed by one entry
        per downsampling stage; spatial extents must be divisible by
        2 ** (len(widths) - 1).
    rng : numpy.random.Generator

    Notes
    -----
    `forward` returns both the output map and the bottleneck map (the
    output of the last downsampling stage).
    """

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        widths: Sequence[int],
        rng: np.random.Generator,
        head_scale: float = 1.0,
    ) -> None:
        if len(widths) < 2:
            raise ContractViolation(f"'widths' needs at least 2 entries; got {list(widths)}")
        self.widths = tuple(widths)
        self.stem = Conv2d(in_channels, widths[0], 3, rng)
        self.down = [
            Conv2d(c_in, c_out, 3, rng, stride=2)
            for c_in, c_out in zip(widths[:-1], widths[1:])
        ]
        self.up = [
            ConvTranspose2d(c_out, c_in, rng)
            for c_in, c_out in reversed(list(zip(widths[:-1], widths[1:])))
        ]
        self.fuse = [
            Conv2d(2 * c_in, c_in, 3, rng)
            for c_in in reversed(widths[:-1])
        ]
        self.head = Conv2d(widths[0], out_channels, 1, rng, scale=head_scale)

    @property
    def factor(self) -> int:
        return 2 ** (len(self.widths) - 1)

    def forward(self, x) -> tuple[Tensor, Tensor]:
        if x.shape[2] % self.factor or x.shape[3] % self.factor:
            raise ContractViolation(
                f"UNet input extents must be divisible by {self.factor}; got {x.shape[2:]}"
            )
        h = F.relu(self.stem(x))
        skips = [h]
        for conv in self.down:
            h = F.relu(conv(h))
            skips.append(h)
        bottleneck = h
        for up, fuse, skip in zip(self.up, self.fuse, reversed(skips[:-1])):
            h = F.relu(up(h))
            h = F.relu(fuse(F.concat([h, skip], axis=1)))
        return self.head(h), bottleneck
