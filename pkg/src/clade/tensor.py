"""Dense NCHW tensor ops: direct convolution, nearest upsampling, moments,
elementwise arithmetic. Tensors are plain numpy arrays of f32/f64; this is
the fixed op set the layers and the toy generator need, not a framework.

Every op is a pure function and deterministic; convolution is direct
(im2col + matmul), which is also the convention the analytic FLOPs model
assumes.
"""

import contextvars
from dataclasses import dataclass

import numpy as np

from . import kernels

EPS = 1e-5  # added under the square root in all normalizations

_FLOAT_DTYPES = (np.dtype(np.float32), np.dtype(np.float64))

# active measured-FLOPs counter, per execution context (see complexity.FlopCounter)
_counter: contextvars.ContextVar = contextvars.ContextVar("clade_flop_counter", default=None)


def emit_ops(category, count):
    c = _counter.get()
    if c is not None:
        c.add(category, count)


class ShapeError(ValueError):
    """Structured shape-contract violation; the message names the offending dims."""


def check_nchw(x, name="tensor"):
    x = np.asarray(x)
    if x.ndim != 4:
        raise ShapeError(f"{name}: expected rank-4 (N,C,H,W), got shape {x.shape}")
    if min(x.shape) < 1:
        raise ShapeError(f"{name}: all dims must be >= 1, got shape {x.shape}")
    if x.dtype not in _FLOAT_DTYPES:
        raise ShapeError(f"{name}: dtype must be f32/f64, got {x.dtype}")
    return x


@dataclass
class ConvKernel:
    """Cross-correlation kernel: weight (Cout, Cin, k, k), bias (Cout,)."""

    weight: np.ndarray
    bias: np.ndarray
    stride: int = 1
    padding: int = 0

    def __post_init__(self):
        w = np.asarray(self.weight)
        if w.ndim != 4 or w.shape[2] != w.shape[3]:
            raise ShapeError(f"conv weight must be (Cout,Cin,k,k), got {w.shape}")
        if w.shape[2] % 2 == 0:
            raise ShapeError(f"conv kernel size must be odd, got k={w.shape[2]}")
        if not np.all(np.isfinite(w)):
            raise ValueError("conv weight contains non-finite values")
        b = np.asarray(self.bias)
        if b.shape != (w.shape[0],):
            raise ShapeError(f"conv bias must be (Cout,)=({w.shape[0]},), got {b.shape}")
        if self.stride < 1:
            raise ShapeError(f"conv stride must be positive, got {self.stride}")
        if self.padding < 0:
            raise ShapeError(f"conv padding must be non-negative, got {self.padding}")
        self.weight = w
        self.bias = b

    @property
    def cout(self):
        return self.weight.shape[0]

    @property
    def cin(self):
        return self.weight.shape[1]

    @property
    def k(self):
        return self.weight.shape[2]


def conv2d(x, kern):
    """Direct 2-D cross-correlation of (N,C,H,W) with a ConvKernel."""
    x = check_nchw(x, "conv2d input")
    if x.shape[1] != kern.cin:
        raise ShapeError(
            f"conv2d: input has {x.shape[1]} channels but kernel expects {kern.cin}"
        )
    n, _, h, w = x.shape
    ho, wo = kernels.conv_out_hw(h, w, kern.k, kern.stride, kern.padding)
    if ho < 1 or wo < 1:
        raise ShapeError(
            f"conv2d: output dims {ho}x{wo} not positive for input {h}x{w}, "
            f"k={kern.k}, stride={kern.stride}, padding={kern.padding}"
        )
    return _conv2d_raw(x, kern.weight, kern.bias, kern.stride, kern.padding)


def _conv2d_raw(x, weight, bias, stride, padding):
    # shared by the layer API and autodiff; inputs already validated
    n, cin, h, w = x.shape
    cout, _, k, _ = weight.shape
    ho, wo = kernels.conv_out_hw(h, w, k, stride, padding)
    cols = kernels.im2col(np.ascontiguousarray(x), k, stride, padding)
    wmat = np.ascontiguousarray(weight.reshape(cout, cin * k * k).astype(x.dtype, copy=False))
    out = np.matmul(wmat, cols)  # (N, Cout, Ho*Wo)
    out = out.reshape(n, cout, ho, wo)
    out = out + bias.astype(x.dtype, copy=False).reshape(1, cout, 1, 1)
    # per-sample count matches the analytic model; N>1 scales it
    emit_ops("mac", k * k * cin * cout * ho * wo * n)
    emit_ops("bias_add", cout * ho * wo * n)
    return out


def upsample_nearest(x, factor):
    x = check_nchw(x, "upsample input")
    if factor < 1:
        raise ShapeError(f"upsample factor must be >= 1, got {factor}")
    if factor == 1:
        return x
    return np.repeat(np.repeat(x, factor, axis=2), factor, axis=3)


PER_CHANNEL = "per_channel_over_NHW"
PER_INSTANCE = "per_instance_over_HW"


def moments(x, mode=PER_CHANNEL):
    """Population mean/variance per reduction group.

    per_channel_over_NHW -> BN statistics, shapes (C,).
    per_instance_over_HW -> IN statistics, shapes (N, C).
    """
    x = check_nchw(x, "moments input")
    if mode == PER_CHANNEL:
        axes = (0, 2, 3)
    elif mode == PER_INSTANCE:
        axes = (2, 3)
    else:
        raise ValueError(f"unknown moments mode {mode!r}")
    mean = x.mean(axis=axes)
    var = ((x - x.mean(axis=axes, keepdims=True)) ** 2).mean(axis=axes)
    return mean, var


def _broadcastable(sx, sy):
    if len(sx) != len(sy):
        return False
    return all(a == b or a == 1 or b == 1 for a, b in zip(sx, sy))


def elementwise(x, y, op):
    x = np.asarray(x)
    y = np.asarray(y)
    if not _broadcastable(x.shape, y.shape):
        raise ShapeError(f"elementwise: shapes {x.shape} and {y.shape} do not broadcast")
    if op == "add":
        out = x + y
    elif op == "mul":
        out = x * y
    else:
        raise ValueError(f"unknown elementwise op {op!r}")
    emit_ops("arith", out.size)
    return out


def relu(x):
    x = np.asarray(x)
    emit_ops("arith", x.size)
    return np.maximum(x, 0)


def leaky_relu(x, slope=0.2):
    x = np.asarray(x)
    emit_ops("arith", x.size)
    return np.where(x >= 0, x, slope * x)


def concat_channels(x, y):
    x = check_nchw(x, "concat lhs")
    y = check_nchw(y, "concat rhs")
    if x.shape[0] != y.shape[0] or x.shape[2:] != y.shape[2:]:
        raise ShapeError(f"concat_channels: shapes {x.shape} and {y.shape} differ outside C")
    return np.concatenate([x, y], axis=1)


def resize_nearest_grid(arr, h2, w2):
    """Nearest resize over the trailing two dims using the floor(i*H/H') index map."""
    arr = np.asarray(arr)
    h, w = arr.shape[-2], arr.shape[-1]
    if h2 < 1 or w2 < 1:
        raise ShapeError(f"resize target must be >= 1, got {h2}x{w2}")
    rows = (np.arange(h2) * h) // h2
    cols = (np.arange(w2) * w) // w2
    return arr[..., rows[:, None], cols[None, :]]
