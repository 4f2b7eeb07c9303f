"""A minimal reverse-mode differentiation engine over numpy arrays.

"""

from . import functional
from .tensor import (
    Tensor,
    Tape,
    Function,
    backward,
    no_grad,
    active_tape,
    as_tensor,
    set_precision,
    get_dtype,
    precision,
)
from .gradcheck import grad_check, numerical_gradient
from .nn import Module, Linear, Conv2d, ConvTranspose2d, MLP, UNet


__all__ = [
    "functional",
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
    "grad_check",
    "numerical_gradient",
    "Module",
    "Linear",
    "Conv2d",
    "ConvTranspose2d",
    "MLP",
    "UNet",
]
