"""Dense tensor type with tape-based reverse-mode autodiff.

The op set is closed and minimal: exactly what the separation model needs.
Arrays are numpy (float32 by default, float64 for verification); every op
output is finite-checked unless disabled.  A `Tape` records op nodes in
execution order; `Tape.backward` replays them in exact reverse order and
accumulates into `.grad`, so shared subexpressions sum rather than
overwrite.

Only one tape can be active at a time and a tape is single-threaded;
tensors are immutable after construction except for gradient accumulation.
"""

from __future__ import annotations

import math
from contextlib import contextmanager

import numpy as np

from . import kernels
from .errors import NumericError, ShapeError

_DEFAULT_DTYPE = np.float32
_CHECK_FINITE = True
_ACTIVE_TAPE = None


def default_dtype():
    return _DEFAULT_DTYPE


def set_default_dtype(dtype):
    """Set the dtype new tensors default to (np.float32 or np.float64)."""
    global _DEFAULT_DTYPE
    dtype = np.dtype(dtype).type
    if dtype not in (np.float32, np.float64):
        raise ValueError("only float32/float64 supported")
    _DEFAULT_DTYPE = dtype


@contextmanager
def dtype_scope(dtype):
    """Temporarily switch the default dtype (verification runs use float64)."""
    prev = _DEFAULT_DTYPE
    set_default_dtype(dtype)
    try:
        yield
    finally:
        set_default_dtype(prev)


def set_finite_checks(enabled):
    global _CHECK_FINITE
    _CHECK_FINITE = bool(enabled)


class Tensor:
    """n-dimensional value array, optionally participating in a gradient tape."""

    __slots__ = ("data", "requires_grad", "grad")

    def __init__(self, data, requires_grad=False, dtype=None):
        if isinstance(data, Tensor):
            data = data.data
        arr = np.asarray(data, dtype=dtype or _DEFAULT_DTYPE)
        if arr.dtype.type not in (np.float32, np.float64):
            raise ValueError(f"unsupported dtype {arr.dtype}")
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def item(self):
        return float(self.data.reshape(()))

    def numpy(self):
        """The underlying array.  Treat as read-only."""
        return self.data

    def detach(self):
        return Tensor(self.data, requires_grad=False, dtype=self.data.dtype)

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        flag = ", grad" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype.name}{flag})"

    # arithmetic sugar; all routed through the op functions below
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return getitem(self, idx)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 else shape[0])

    def permute(self, *axes):
        return permute(self, axes)


class Tape:
    """Ordered record of op nodes; inputs of every node precede it.

    Usage: run the forward pass inside `with Tape() as tape:` and then call
    `tape.backward(scalar_loss)`.
    """

    def __init__(self):
        self.nodes = []  # (out, inputs, backward_fn)

    def __enter__(self):
        global _ACTIVE_TAPE
        if _ACTIVE_TAPE is not None:
            raise RuntimeError("a tape is already active")
        _ACTIVE_TAPE = self
        return self

    def __exit__(self, *exc):
        global _ACTIVE_TAPE
        _ACTIVE_TAPE = None
        return False

    def backward(self, root, seed=None):
        """Accumulate d(root)/d(input) into .grad for every recorded input.

        `root` must be scalar unless an explicit `seed` gradient is given.
        """
        if seed is None:
            if root.size != 1:
                raise ShapeError(f"backward root must be scalar, got shape {root.shape}")
            seed = np.ones_like(root.data)
        if root.grad is None:
            root.grad = np.zeros_like(root.data)
        root.grad += seed
        for out, inputs, backward_fn in reversed(self.nodes):
            gout = out.grad
            if gout is None:
                continue
            grads = backward_fn(gout)
            for tensor, g in zip(inputs, grads):
                if g is None or not tensor.requires_grad:
                    continue
                if tensor.grad is None:
                    tensor.grad = np.zeros_like(tensor.data)
                tensor.grad += g


def push_node(out, inputs, backward_fn):
    """Record a custom linear/differentiable op on the active tape.

    Used by modules that own ops outside the core set (chunk/overlap-add).
    """
    if _ACTIVE_TAPE is not None and out.requires_grad:
        _ACTIVE_TAPE.nodes.append((out, inputs, backward_fn))


def _as_tensor(x, like=None):
    if isinstance(x, Tensor):
        return x
    dtype = like.data.dtype if like is not None else _DEFAULT_DTYPE
    return Tensor(np.asarray(x, dtype=dtype), requires_grad=False, dtype=dtype)


def _make(data, inputs, backward_fn, op_name):
    """Wrap op output, finite-check it, and record on the active tape."""
    if _CHECK_FINITE and not np.all(np.isfinite(data)):
        raise NumericError(f"non-finite values produced by op '{op_name}'")
    out = Tensor(data, requires_grad=any(t.requires_grad for t in inputs), dtype=data.dtype)
    if _ACTIVE_TAPE is not None and out.requires_grad:
        _ACTIVE_TAPE.nodes.append((out, inputs, backward_fn))
    return out


def _unbroadcast(grad, shape):
    """Sum `grad` down to `shape` (inverse of numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def add(a, b):
    a = _as_tensor(a, like=b if isinstance(b, Tensor) else None)
    b = _as_tensor(b, like=a)
    data = a.data + b.data

    def backward(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)

    return _make(data, (a, b), backward, "add")


def sub(a, b):
    a = _as_tensor(a, like=b if isinstance(b, Tensor) else None)
    b = _as_tensor(b, like=a)
    data = a.data - b.data

    def backward(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(-g, b.data.shape)

    return _make(data, (a, b), backward, "sub")


def mul(a, b):
    a = _as_tensor(a, like=b if isinstance(b, Tensor) else None)
    b = _as_tensor(b, like=a)
    data = a.data * b.data

    def backward(g):
        return (
            _unbroadcast(g * b.data, a.data.shape),
            _unbroadcast(g * a.data, b.data.shape),
        )

    return _make(data, (a, b), backward, "mul")


def div(a, b):
    a = _as_tensor(a, like=b if isinstance(b, Tensor) else None)
    b = _as_tensor(b, like=a)
    data = a.data / b.data

    def backward(g):
        return (
            _unbroadcast(g / b.data, a.data.shape),
            _unbroadcast(-g * data / b.data, b.data.shape),
        )

    return _make(data, (a, b), backward, "div")


def neg(a):
    return _make(-a.data, (a,), lambda g: (-g,), "neg")


def matmul(a, b):
    """Matrix product with numpy broadcasting over leading batch dims."""
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul needs >=2-d operands, got {a.shape} @ {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul inner dims disagree: {a.shape} @ {b.shape}")
    data = a.data @ b.data

    def backward(g):
        ga = _unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.data.shape)
        gb = _unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.data.shape)
        return ga, gb

    return _make(data, (a, b), backward, "matmul")


def relu(a):
    data = np.maximum(a.data, 0)

    def backward(g):
        return (g * (a.data > 0),)

    return _make(data, (a,), backward, "relu")


def sigmoid(a):
    # split by sign for stability at large |x|
    x = a.data
    data = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))), np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))
    data = data.astype(x.dtype, copy=False)

    def backward(g):
        return (g * data * (1.0 - data),)

    return _make(data, (a,), backward, "sigmoid")


def exp(a):
    data = np.exp(a.data)

    def backward(g):
        return (g * data,)

    return _make(data, (a,), backward, "exp")


def log(a):
    data = np.log(a.data)

    def backward(g):
        return (g / a.data,)

    return _make(data, (a,), backward, "log")


def tsum(a, axis=None, keepdims=False):
    data = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        g = np.asarray(g)
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.data.shape).copy(),)

    return _make(np.asarray(data), (a,), backward, "sum")


def tmean(a, axis=None, keepdims=False):
    data = a.data.mean(axis=axis, keepdims=keepdims)
    count = a.data.size if axis is None else np.prod([a.data.shape[i] for i in np.atleast_1d(axis)])

    def backward(g):
        g = np.asarray(g)
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.data.shape).copy() / count,)

    return _make(np.asarray(data), (a,), backward, "mean")


def reshape(a, shape):
    data = a.data.reshape(shape)

    def backward(g):
        return (g.reshape(a.data.shape),)

    return _make(data, (a,), backward, "reshape")


def permute(a, axes):
    axes = tuple(axes)
    data = np.ascontiguousarray(a.data.transpose(axes))
    inverse = tuple(np.argsort(axes))

    def backward(g):
        return (np.ascontiguousarray(g.transpose(inverse)),)

    return _make(data, (a,), backward, "permute")


def getitem(a, idx):
    """Basic (slice/int) indexing only; backward scatters into zeros."""
    data = a.data[idx]

    def backward(g):
        full = np.zeros_like(a.data)
        full[idx] = g
        return (full,)

    return _make(np.ascontiguousarray(data), (a,), backward, "getitem")


def concat(tensors, axis=0):
    tensors = list(tensors)
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        slicer = [slice(None)] * g.ndim
        grads = []
        for i in range(len(tensors)):
            slicer[axis] = slice(offsets[i], offsets[i + 1])
            grads.append(np.ascontiguousarray(g[tuple(slicer)]))
        return tuple(grads)

    return _make(data, tuple(tensors), backward, "concat")


def broadcast_to(a, shape):
    data = np.broadcast_to(a.data, shape).copy()

    def backward(g):
        return (_unbroadcast(g, a.data.shape),)

    return _make(data, (a,), backward, "broadcast_to")


def softmax_lastdim(a):
    """Softmax over the last dimension, stabilized by max subtraction."""
    if a.data.shape[-1] < 1:
        raise ShapeError("softmax needs a non-empty last dimension")
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    data = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        inner = (g * data).sum(axis=-1, keepdims=True)
        return (data * (g - inner),)

    return _make(data, (a,), backward, "softmax")


def layernorm(a, gamma, beta, eps=1e-5):
    """Normalize the last dimension to zero mean / unit variance, then affine."""
    if gamma.shape != a.shape[-1:] or beta.shape != a.shape[-1:]:
        raise ShapeError(
            f"layernorm affine params {gamma.shape}/{beta.shape} do not match last dim of {a.shape}"
        )
    n = a.data.shape[-1]
    mean = a.data.mean(axis=-1, keepdims=True)
    centered = a.data - mean
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv
    data = gamma.data * xhat + beta.data

    def backward(g):
        gxhat = g * gamma.data
        gx = inv * (
            gxhat
            - gxhat.mean(axis=-1, keepdims=True)
            - xhat * (gxhat * xhat).mean(axis=-1, keepdims=True)
        )
        axes = tuple(range(g.ndim - 1))
        ggamma = (g * xhat).sum(axis=axes)
        gbeta = g.sum(axis=axes)
        return gx, ggamma, gbeta

    return _make(data, (a, gamma, beta), backward, "layernorm")


def _conv_operands(x, w):
    if x.ndim == 2 and x.shape[0] == 1:
        xv = x.data[0]
    elif x.ndim == 1:
        xv = x.data
    else:
        raise ShapeError(f"conv1d input must be (1, T) or (T,), got {x.shape}")
    if w.ndim != 3 or w.shape[1] != 1:
        raise ShapeError(f"conv1d weight must be (N, 1, L), got {w.shape}")
    return np.ascontiguousarray(xv), np.ascontiguousarray(w.data[:, 0, :])


def conv1d(x, w, stride):
    """Strided correlation of a mono signal with a filter bank -> (N, K).

    Requires T >= L and (T - L) divisible by stride; K = (T - L)/stride + 1.
    """
    xv, wv = _conv_operands(x, w)
    T, (N, L) = xv.shape[0], wv.shape
    if T < L:
        raise ShapeError(f"input too short for kernel: T={T} < L={L}")
    if (T - L) % stride != 0:
        raise ShapeError(f"(T-L) not divisible by stride: T={T}, L={L}, stride={stride}")
    data = kernels.conv1d_fwd(xv, wv, stride)

    def backward(g):
        g = np.ascontiguousarray(g)
        gx = kernels.conv1d_bwd_x(g, wv, stride, T).reshape(x.data.shape)
        gw = kernels.conv1d_bwd_w(g, xv, stride, L).reshape(w.data.shape)
        return gx, gw

    return _make(data, (x, w), backward, "conv1d")


def transposed_conv1d(h, w, stride):
    """Adjoint of conv1d: (N, K) feature back to a (1, T) signal, T=(K-1)*stride+L."""
    if h.ndim != 2:
        raise ShapeError(f"transposed_conv1d input must be (N, K), got {h.shape}")
    if w.ndim != 3 or w.shape[1] != 1 or w.shape[0] != h.shape[0]:
        raise ShapeError(f"weight (N, 1, L) must match input rows: {w.shape} vs {h.shape}")
    wv = np.ascontiguousarray(w.data[:, 0, :])
    hv = np.ascontiguousarray(h.data)
    N, K = hv.shape
    L = wv.shape[1]
    T = (K - 1) * stride + L
    data = kernels.conv1d_bwd_x(hv, wv, stride, T).reshape(1, T)

    def backward(g):
        gv = np.ascontiguousarray(g.reshape(T))
        gh = kernels.conv1d_fwd(gv, wv, stride)
        gw = kernels.conv1d_bwd_w(hv, gv, stride, L).reshape(w.data.shape)
        return gh, gw

    return _make(data, (h, w), backward, "transposed_conv1d")


def zeros(shape, dtype=None, requires_grad=False):
    return Tensor(np.zeros(shape, dtype=dtype or _DEFAULT_DTYPE), requires_grad=requires_grad)


def ones(shape, dtype=None, requires_grad=False):
    return Tensor(np.ones(shape, dtype=dtype or _DEFAULT_DTYPE), requires_grad=requires_grad)


def uniform(shape, bound, rng, dtype=None, requires_grad=True):
    """Uniform init in [-bound, bound] from an explicit Generator (determinism)."""
    data = rng.uniform(-bound, bound, size=shape)
    return Tensor(data.astype(dtype or _DEFAULT_DTYPE), requires_grad=requires_grad)


def grad_check(f, inputs, step=1e-5):
    """Max relative error between tape gradients and central finite differences.

    `f` maps the given tensors to a scalar Tensor and must be deterministic.
    Inputs must be float64 (the 32-bit path has no headroom for differencing);
    their data is perturbed in place and restored.
    """
    inputs = list(inputs)
    for t in inputs:
        if t.data.dtype != np.float64:
            raise NumericError("grad_check requires float64 inputs")
        t.zero_grad()
    with Tape() as tape:
        out = f(*inputs)
        if out.size != 1:
            raise ShapeError(f"grad_check needs a scalar-valued f, got shape {out.shape}")
        tape.backward(out)
    analytic = [t.grad.copy() if t.grad is not None else np.zeros_like(t.data) for t in inputs]

    max_err = 0.0
    for t, ana in zip(inputs, analytic):
        flat = t.data.ravel()
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + step
            fp = f(*inputs).item()
            flat[j] = orig - step
            fm = f(*inputs).item()
            flat[j] = orig
            numeric = (fp - fm) / (2.0 * step)
            err = abs(ana.ravel()[j] - numeric) / max(1.0, abs(numeric))
            max_err = max(max_err, err)
    return max_err


def global_norm(arrays):
    """L2 norm over a list of numpy arrays (gradient clipping helper)."""
    total = 0.0
    for a in arrays:
        total += float(np.sum(a.astype(np.float64) ** 2))
    return math.sqrt(total)
