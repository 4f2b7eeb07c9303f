"""The primitive suite of diffcore.

Every function here applies one `Function` subclass. Elementwise binary
primitives follow numpy broadcasting; their backward rules sum the
gradient back to each operand's shape.

Image-like arrays use the (N, C, H, W) layout throughout.

"""

from __future__ import annotations

from typing import Any, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..core.errors import ContractViolation
from .tensor import Function, Tensor


__all__ = [
    "add", "sub", "mul", "div", "neg", "power", "exp", "log", "sqrt", "absolute",
    "relu", "sigmoid", "where",
    "sum", "mean", "var",
    "reshape", "transpose", "getitem", "concat", "stack",
    "matmul", "inv",
    "conv2d", "conv_transpose2d", "avg_pool2x2", "global_avg_pool",
    "grid_sample",
]


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sums `grad` over the axes that broadcasting added or stretched."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    stretched = tuple(
        axis for axis, extent in enumerate(shape)
        if extent == 1 and grad.shape[axis] != 1
    )
    if stretched:
        grad = grad.sum(axis=stretched, keepdims=True)
    return grad.reshape(shape)


def _check_broadcast(name: str, *arrays: np.ndarray) -> None:
    try:
        np.broadcast_shapes(*(array.shape for array in arrays))
    except ValueError as e:
        shapes = ", ".join(str(array.shape) for array in arrays)
        raise ContractViolation(f"'{name}' got incompatible shapes {shapes}") from e


def _expand_reduced(grad: np.ndarray, shape: tuple[int, ...], axis, keepdims: bool) -> np.ndarray:
    if axis is None:
        return np.broadcast_to(grad.reshape((1,) * len(shape)), shape)
    if not keepdims:
        axes = (axis,) if np.isscalar(axis) else tuple(axis)
        axes = tuple(a % len(shape) for a in axes)
        grad = np.expand_dims(grad, axes)
    return np.broadcast_to(grad, shape)


def _reduced_count(shape: tuple[int, ...], axis) -> int:
    if axis is None:
        return int(np.prod(shape))
    axes = (axis,) if np.isscalar(axis) else tuple(axis)
    return int(np.prod([shape[a] for a in axes]))


########################
# Elementwise (binary) #
########################

class Add(Function):
    name = "add"
    arity = 2

    def forward(self, a, b):
        _check_broadcast(self.name, a, b)
        self.shapes = (a.shape, b.shape)
        return a + b

    def backward(self, grad):
        return _unbroadcast(grad, self.shapes[0]), _unbroadcast(grad, self.shapes[1])


class Sub(Function):
    name = "sub"
    arity = 2

    def forward(self, a, b):
        _check_broadcast(self.name, a, b)
        self.shapes = (a.shape, b.shape)
        return a - b

    def backward(self, grad):
        return _unbroadcast(grad, self.shapes[0]), _unbroadcast(-grad, self.shapes[1])


class Mul(Function):
    name = "mul"
    arity = 2

    def forward(self, a, b):
        _check_broadcast(self.name, a, b)
        self.a, self.b = a, b
        return a * b

    def backward(self, grad):
        return (
            _unbroadcast(grad * self.b, self.a.shape),
            _unbroadcast(grad * self.a, self.b.shape),
        )


class Div(Function):
    name = "div"
    arity = 2

    def forward(self, a, b):
        _check_broadcast(self.name, a, b)
        self.a, self.b = a, b
        with np.errstate(divide="ignore", invalid="ignore"):
            return a / b

    def backward(self, grad):
        return (
            _unbroadcast(grad / self.b, self.a.shape),
            _unbroadcast(-grad * self.a / (self.b * self.b), self.b.shape),
        )


class Where(Function):
    """Selects `a` where `condition` holds and `b` elsewhere."""
    name = "where"
    arity = 2

    def forward(self, a, b):
        _check_broadcast(self.name, a, b, np.asarray(self.condition))
        self.shapes = (a.shape, b.shape)
        return np.where(self.condition, a, b)

    def backward(self, grad):
        zero = np.zeros_like(grad)
        return (
            _unbroadcast(np.where(self.condition, grad, zero), self.shapes[0]),
            _unbroadcast(np.where(self.condition, zero, grad), self.shapes[1]),
        )


#######################
# Elementwise (unary) #
#######################

class Neg(Function):
    name = "neg"
    arity = 1

    def forward(self, x):
        return -x

    def backward(self, grad):
        return (-grad,)


class Power(Function):
    name = "power"
    arity = 1

    def forward(self, x):
        self.x = x
        with np.errstate(divide="ignore", invalid="ignore"):
            return x ** self.exponent

    def backward(self, grad):
        if self.exponent == 0:
            return (np.zeros_like(grad),)
        return (grad * self.exponent * self.x ** (self.exponent - 1),)


class Exp(Function):
    name = "exp"
    arity = 1

    def forward(self, x):
        with np.errstate(over="ignore"):
            self.out = np.exp(x)
        return self.out

    def backward(self, grad):
        return (grad * self.out,)


class Log(Function):
    name = "log"
    arity = 1

    def forward(self, x):
        self.x = x
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log(x)

    def backward(self, grad):
        return (grad / self.x,)


class Sqrt(Function):
    name = "sqrt"
    arity = 1

    def forward(self, x):
        with np.errstate(invalid="ignore"):
            self.out = np.sqrt(x)
        return self.out

    def backward(self, grad):
        with np.errstate(divide="ignore"):
            return (grad * 0.5 / self.out,)


class Absolute(Function):
    name = "abs"
    arity = 1

    def forward(self, x):
        self.sign = np.sign(x)
        return np.abs(x)

    def backward(self, grad):
        return (grad * self.sign,)


class ReLU(Function):
    name = "relu"
    arity = 1

    def forward(self, x):
        self.active = x > 0
        return np.where(self.active, x, 0.0).astype(x.dtype)

    def backward(self, grad):
        return (np.where(self.active, grad, 0.0).astype(grad.dtype),)


class Sigmoid(Function):
    name = "sigmoid"
    arity = 1

    def forward(self, x):
        e = np.exp(-np.abs(x))
        self.out = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e)).astype(x.dtype)
        return self.out

    def backward(self, grad):
        return (grad * self.out * (1.0 - self.out),)


##############
# Reductions #
##############

class Sum(Function):
    name = "sum"
    arity = 1

    def forward(self, x):
        self.shape = x.shape
        return np.sum(x, axis=self.axis, keepdims=self.keepdims)

    def backward(self, grad):
        return (_expand_reduced(grad, self.shape, self.axis, self.keepdims).copy(),)


class Mean(Function):
    name = "mean"
    arity = 1

    def forward(self, x):
        self.shape = x.shape
        return np.mean(x, axis=self.axis, keepdims=self.keepdims)

    def backward(self, grad):
        count = _reduced_count(self.shape, self.axis)
        return (_expand_reduced(grad, self.shape, self.axis, self.keepdims) / count,)


class Var(Function):
    """Population variance (ddof = 0) along `axis`."""
    name = "var"
    arity = 1

    def forward(self, x):
        self.shape = x.shape
        self.centered = x - np.mean(x, axis=self.axis, keepdims=True)
        return np.mean(self.centered ** 2, axis=self.axis, keepdims=self.keepdims)

    def backward(self, grad):
        count = _reduced_count(self.shape, self.axis)
        expanded = _expand_reduced(grad, self.shape, self.axis, self.keepdims)
        return (expanded * 2.0 * self.centered / count,)


##################
# Shape handling #
##################

class Reshape(Function):
    name = "reshape"
    arity = 1

    def forward(self, x):
        self.in_shape = x.shape
        try:
            return x.reshape(self.shape)
        except ValueError as e:
            raise ContractViolation(
                f"cannot reshape {x.shape} into {self.shape}"
            ) from e

    def backward(self, grad):
        return (grad.reshape(self.in_shape),)


class Transpose(Function):
    name = "transpose"
    arity = 1

    def forward(self, x):
        self.axes_ = self.axes if self.axes is not None else tuple(reversed(range(x.ndim)))
        return np.transpose(x, self.axes_)

    def backward(self, grad):
        return (np.transpose(grad, np.argsort(self.axes_)),)


def _is_advanced(index: Any) -> bool:
    parts = index if isinstance(index, tuple) else (index,)
    return any(isinstance(part, (np.ndarray, list)) for part in parts)


def _normalize_index(index: Any) -> Any:
    """Replaces boolean masks with their integer coordinates."""
    if isinstance(index, np.ndarray) and index.dtype == bool:
        return np.nonzero(index)
    if isinstance(index, tuple):
        return tuple(
            np.nonzero(part)[0] if isinstance(part, np.ndarray) and part.dtype == bool
            else part
            for part in index
        )
    return index


class GetItem(Function):
    name = "getitem"
    arity = 1

    def forward(self, x):
        self.shape = x.shape
        self.index = _normalize_index(self.index)
        try:
            return np.array(x[self.index])
        except IndexError as e:
            raise ContractViolation(f"bad index for shape {x.shape}: {e}") from e

    def backward(self, grad):
        full = np.zeros(self.shape, dtype=grad.dtype)
        if _is_advanced(self.index):
            np.add.at(full, self.index, grad)
        else:
            full[self.index] += grad
        return (full,)


class Concat(Function):
    name = "concat"
    arity = None

    def forward(self, *arrays):
        if not arrays:
            raise ContractViolation("'concat' needs at least one input")
        try:
            out = np.concatenate(arrays, axis=self.axis)
        except ValueError as e:
            raise ContractViolation(f"'concat' shape mismatch: {e}") from e
        self.splits = np.cumsum([array.shape[self.axis] for array in arrays])[:-1]
        return out

    def backward(self, grad):
        return tuple(np.split(grad, self.splits, axis=self.axis))


class Stack(Function):
    name = "stack"
    arity = None

    def forward(self, *arrays):
        try:
            return np.stack(arrays, axis=self.axis)
        except ValueError as e:
            raise ContractViolation(f"'stack' shape mismatch: {e}") from e

    def backward(self, grad):
        count = grad.shape[self.axis]
        return tuple(np.take(grad, i, axis=self.axis) for i in range(count))


##################
# Linear algebra #
##################

class MatMul(Function):
    name = "matmul"
    arity = 2

    def forward(self, a, b):
        if a.ndim < 2 or b.ndim < 2:
            raise ContractViolation(
                f"'matmul' needs operands with at least 2 axes; got {a.shape} and {b.shape}"
            )
        if a.shape[-1] != b.shape[-2]:
            raise ContractViolation(
                f"'matmul' inner extents differ: {a.shape} @ {b.shape}"
            )
        self.a, self.b = a, b
        return a @ b

    def backward(self, grad):
        grad_a = grad @ np.swapaxes(self.b, -1, -2)
        grad_b = np.swapaxes(self.a, -1, -2) @ grad
        return _unbroadcast(grad_a, self.a.shape), _unbroadcast(grad_b, self.b.shape)


class Inverse(Function):
    """Batched inverse of square matrices on the last two axes."""
    name = "inv"
    arity = 1

    def forward(self, x):
        if x.ndim < 2 or x.shape[-1] != x.shape[-2]:
            raise ContractViolation(f"'inv' needs square matrices; got {x.shape}")
        self.out = np.linalg.inv(x)
        return self.out

    def backward(self, grad):
        inv_t = np.swapaxes(self.out, -1, -2)
        return (-(inv_t @ grad @ inv_t),)


#################
# Convolutional #
#################

def _pad(x: np.ndarray, padding: int) -> np.ndarray:
    if not padding:
        return x
    return np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))


def _windows(x: np.ndarray, kh: int, kw: int, stride: int) -> np.ndarray:
    """(N, C, H, W) -> (N, C, Ho, Wo, kh, kw) view of every kernel window."""
    return sliding_window_view(x, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]


def _col2im(cols: np.ndarray, shape: tuple[int, ...], stride: int) -> np.ndarray:
    """Adjoint of `_windows`; `cols` is (N, Ho, Wo, C, kh, kw)."""
    out = np.zeros(shape, dtype=cols.dtype)
    _, ho, wo, _, kh, kw = cols.shape
    for i in range(kh):
        for j in range(kw):
            out[:, :, i:i + stride * (ho - 1) + 1:stride, j:j + stride * (wo - 1) + 1:stride] += (
                cols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
            )
    return out


class Conv2d(Function):
    """Cross-correlation with zero padding; weights are (O, C, kh, kw)."""
    name = "conv2d"
    arity = 3

    def forward(self, x, w, b):
        if x.ndim != 4 or w.ndim != 4 or x.shape[1] != w.shape[1]:
            raise ContractViolation(
                f"'conv2d' needs x (N,C,H,W) and w (O,C,kh,kw) with equal C; "
                f"got {x.shape} and {w.shape}"
            )
        if b.shape != (w.shape[0],):
            raise ContractViolation(
                f"'conv2d' bias must have shape {(w.shape[0],)}; got {b.shape}"
            )
        kh, kw = w.shape[2:]
        padded = _pad(x, self.padding)
        if padded.shape[2] < kh or padded.shape[3] < kw:
            raise ContractViolation(
                f"'conv2d' kernel {w.shape[2:]} larger than padded input {padded.shape[2:]}"
            )
        self.x_shape, self.padded_shape = x.shape, padded.shape
        self.win, self.w = _windows(padded, kh, kw, self.stride), w
        out = np.tensordot(self.win, w, axes=([1, 4, 5], [1, 2, 3]))
        return np.ascontiguousarray(out.transpose(0, 3, 1, 2)) + b[None, :, None, None]

    def backward(self, grad):
        grad_w = np.tensordot(grad, self.win, axes=([0, 2, 3], [0, 2, 3]))
        grad_b = grad.sum(axis=(0, 2, 3))
        cols = np.tensordot(grad, self.w, axes=([1], [0]))
        grad_padded = _col2im(cols, self.padded_shape, self.stride)
        p = self.padding
        h, w = self.x_shape[2:]
        grad_x = grad_padded[:, :, p:p + h, p:p + w] if p else grad_padded
        return np.ascontiguousarray(grad_x), grad_w, grad_b


class ConvTranspose2d(Function):
    """Transposed (upsampling) convolution; weights are (C, O, kh, kw)."""
    name = "conv_transpose2d"
    arity = 3

    def forward(self, x, w, b):
        if x.ndim != 4 or w.ndim != 4 or x.shape[1] != w.shape[0]:
            raise ContractViolation(
                f"'conv_transpose2d' needs x (N,C,H,W) and w (C,O,kh,kw) with equal C; "
                f"got {x.shape} and {w.shape}"
            )
        if b.shape != (w.shape[1],):
            raise ContractViolation(
                f"'conv_transpose2d' bias must have shape {(w.shape[1],)}; got {b.shape}"
            )
        n, _, h, wd = x.shape
        kh, kw = w.shape[2:]
        s, p = self.stride, self.padding
        full = ((n, w.shape[1], (h - 1) * s + kh, (wd - 1) * s + kw))
        self.x, self.w, self.full = x, w, full
        cols = np.tensordot(x, w, axes=([1], [0]))
        out = _col2im(cols, full, s)
        if p:
            out = out[:, :, p:full[2] - p, p:full[3] - p]
        return np.ascontiguousarray(out) + b[None, :, None, None]

    def backward(self, grad):
        grad_b = grad.sum(axis=(0, 2, 3))
        grad_full = _pad(grad, self.padding)
        kh, kw = self.w.shape[2:]
        win = _windows(grad_full, kh, kw, self.stride)
        grad_x = np.tensordot(win, self.w, axes=([1, 4, 5], [1, 2, 3]))
        grad_w = np.tensordot(self.x, win, axes=([0, 2, 3], [0, 2, 3]))
        return np.ascontiguousarray(grad_x.transpose(0, 3, 1, 2)), grad_w, grad_b


class AvgPool2x2(Function):
    name = "avg_pool2x2"
    arity = 1

    def forward(self, x):
        n, c, h, w = x.shape
        if h % 2 or w % 2:
            raise ContractViolation(f"'avg_pool2x2' needs even extents; got {x.shape}")
        return x.reshape(n, c, h // 2, 2, w // 2, 2).mean(axis=(3, 5))

    def backward(self, grad):
        return (np.repeat(np.repeat(grad, 2, axis=2), 2, axis=3) / 4.0,)


class GlobalAvgPool(Function):
    """(N, C, H, W) -> (N, C)."""
    name = "global_avg_pool"
    arity = 1

    def forward(self, x):
        if x.ndim != 4:
            raise ContractViolation(f"'global_avg_pool' needs (N,C,H,W); got {x.shape}")
        self.shape = x.shape
        return x.mean(axis=(2, 3))

    def backward(self, grad):
        h, w = self.shape[2:]
        return (np.broadcast_to(grad[:, :, None, None] / (h * w), self.shape).copy(),)


class GridSample(Function):
    """Bilinear lookup of a (C, H, W) map at (P, 2) normalized coordinates.

    Coordinates are (u, v) in [0, 1] with u along W and v along H; texel
    centers sit at ((j + 0.5) / W, (i + 0.5) / H). Coordinates beyond
    the outermost texel centers clamp to the border, where the gradient
    along the clamped axis is zero.
    """
    name = "grid_sample"
    arity = 2

    def forward(self, feature, coords):
        if feature.ndim != 3 or coords.ndim != 2 or coords.shape[1] != 2:
            raise ContractViolation(
                f"'grid_sample' needs feature (C,H,W) and coords (P,2); "
                f"got {feature.shape} and {coords.shape}"
            )
        c, h, w = feature.shape
        self.feature_shape = feature.shape

        x = coords[:, 0] * w - 0.5
        y = coords[:, 1] * h - 0.5
        xc = np.clip(x, 0.0, w - 1)
        yc = np.clip(y, 0.0, h - 1)
        self.inside_x = (x >= 0.0) & (x <= w - 1)
        self.inside_y = (y >= 0.0) & (y <= h - 1)

        x0 = np.minimum(np.floor(xc).astype(np.int64), max(w - 2, 0))
        y0 = np.minimum(np.floor(yc).astype(np.int64), max(h - 2, 0))
        x1 = np.minimum(x0 + 1, w - 1)
        y1 = np.minimum(y0 + 1, h - 1)
        fx = (xc - x0)[:, None]
        fy = (yc - y0)[:, None]

        flat = feature.reshape(c, h * w).T
        self.idx = (y0 * w + x0, y0 * w + x1, y1 * w + x0, y1 * w + x1)
        f00, f01, f10, f11 = (flat[i] for i in self.idx)
        self.corners = (f00, f01, f10, f11)
        self.fx, self.fy = fx, fy
        self.scale = (w, h)
        top = (1.0 - fx) * f00 + fx * f01
        bottom = (1.0 - fx) * f10 + fx * f11
        return (1.0 - fy) * top + fy * bottom

    def backward(self, grad):
        c, h, w = self.feature_shape
        fx, fy = self.fx, self.fy
        weights = ((1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy)
        grad_flat = np.zeros((h * w, c), dtype=grad.dtype)
        for index, weight in zip(self.idx, weights):
            np.add.at(grad_flat, index, grad * weight)
        grad_feature = grad_flat.T.reshape(c, h, w)

        f00, f01, f10, f11 = self.corners
        d_dx = (1 - fy) * (f01 - f00) + fy * (f11 - f10)
        d_dy = (1 - fx) * (f10 - f00) + fx * (f11 - f01)
        grad_u = np.sum(grad * d_dx, axis=1) * self.scale[0] * self.inside_x
        grad_v = np.sum(grad * d_dy, axis=1) * self.scale[1] * self.inside_y
        return grad_feature, np.stack([grad_u, grad_v], axis=1)


##########################
# Functional entry points #
##########################

def add(a, b) -> Tensor:
    return Add.apply(a, b)

def sub(a, b) -> Tensor:
    return Sub.apply(a, b)

def mul(a, b) -> Tensor:
    return Mul.apply(a, b)

def div(a, b) -> Tensor:
    return Div.apply(a, b)

def neg(x) -> Tensor:
    return Neg.apply(x)

def power(x, exponent: float) -> Tensor:
    return Power.apply(x, exponent=exponent)

def exp(x) -> Tensor:
    return Exp.apply(x)

def log(x) -> Tensor:
    return Log.apply(x)

def sqrt(x) -> Tensor:
    return Sqrt.apply(x)

def absolute(x) -> Tensor:
    return Absolute.apply(x)

def relu(x) -> Tensor:
    return ReLU.apply(x)

def sigmoid(x) -> Tensor:
    return Sigmoid.apply(x)

def where(condition: np.ndarray, a, b) -> Tensor:
    return Where.apply(a, b, condition=np.asarray(condition, dtype=bool))

def sum(x, axis=None, keepdims: bool = False) -> Tensor:
    return Sum.apply(x, axis=axis, keepdims=keepdims)

def mean(x, axis=None, keepdims: bool = False) -> Tensor:
    return Mean.apply(x, axis=axis, keepdims=keepdims)

def var(x, axis=None, keepdims: bool = False) -> Tensor:
    return Var.apply(x, axis=axis, keepdims=keepdims)

def reshape(x, shape: Sequence[int]) -> Tensor:
    return Reshape.apply(x, shape=tuple(shape))

def transpose(x, axes: Sequence[int] | None = None) -> Tensor:
    return Transpose.apply(x, axes=None if axes is None else tuple(axes))

def getitem(x, index) -> Tensor:
    return GetItem.apply(x, index=index)

def concat(tensors: Sequence, axis: int = 1) -> Tensor:
    """Concatenates along `axis`, by default the channel axis."""
    return Concat.apply(*tensors, axis=axis)

def stack(tensors: Sequence, axis: int = 0) -> Tensor:
    return Stack.apply(*tensors, axis=axis)

def matmul(a, b) -> Tensor:
    return MatMul.apply(a, b)

def inv(x) -> Tensor:
    return Inverse.apply(x)

def conv2d(x, weight, bias, stride: int = 1, padding: int = 0) -> Tensor:
    if stride not in (1, 2):
        raise ContractViolation(f"'stride' must be 1 or 2; got {stride!r}")
    return Conv2d.apply(x, weight, bias, stride=stride, padding=padding)

def conv_transpose2d(x, weight, bias, stride: int = 2, padding: int = 0) -> Tensor:
    return ConvTranspose2d.apply(x, weight, bias, stride=stride, padding=padding)

def avg_pool2x2(x) -> Tensor:
    return AvgPool2x2.apply(x)

def global_avg_pool(x) -> Tensor:
    return GlobalAvgPool.apply(x)

def grid_sample(feature, coords) -> Tensor:
    return GridSample.apply(feature, coords)
