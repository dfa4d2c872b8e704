"""Minimal reverse-mode automatic differentiation over NumPy arrays.

Each op records its parents and a vector-Jacobian closure; backward() does
an iterative topological sweep and accumulates gradients on every node
that requires them.  Ops are array-granular (whole convolutions, whole
normalizations) so the tape stays short and the hot work runs through the
kernel backends.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np
import scipy.fft

from . import _kernels as kn

__all__ = [
    "Tensor",
    "tensor",
    "no_grad",
    "grad_enabled",
    "add",
    "sub",
    "mul",
    "matmul",
    "conv1d",
    "dwconv1d",
    "linear",
    "group_norm",
    "swish",
    "softmax",
    "pad_last",
    "crop_last",
    "slice_last",
    "dct_last",
    "idct_last",
    "concat",
    "upsample_linear2",
    "reshape",
    "transpose",
    "mean_abs",
    "ParamStore",
]

_GRAD_ENABLED = True


@contextmanager
def no_grad():
    """Disable tape recording (used by the sampler's inference loop)."""
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


def grad_enabled() -> bool:
    return _GRAD_ENABLED


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_vjp")

    def __init__(self, data, requires_grad=False, parents=(), vjp=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad and _GRAD_ENABLED
        self._parents = parents if self.requires_grad else ()
        self._vjp = vjp if self.requires_grad else None

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, grad={self.grad is not None})"

    def backward(self):
        if self.data.size != 1:
            raise ValueError("backward() expects a scalar loss")
        order = _toposort(self)
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._vjp is None:
                continue
            grads = node._vjp(node.grad)
            for parent, g in zip(node._parents, grads):
                if g is None or not parent.requires_grad:
                    continue
                if parent.grad is None:
                    parent.grad = g
                else:
                    parent.grad = parent.grad + g
            # free intermediate buffers; leaves keep their grads
            if node._parents:
                node.grad = None

    # light operator sugar (scalars and Tensors)
    def __add__(self, other):
        return add(self, _wrap(other))

    def __sub__(self, other):
        return sub(self, _wrap(other))

    def __mul__(self, other):
        return mul(self, _wrap(other))

    __radd__ = __add__
    __rmul__ = __mul__


def tensor(data, requires_grad=False) -> Tensor:
    return Tensor(data, requires_grad=requires_grad)


def _wrap(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _toposort(root: Tensor):
    order, seen, stack = [], set(), [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def _make(data, parents, vjp) -> Tensor:
    req = _GRAD_ENABLED and any(p.requires_grad for p in parents)
    return Tensor(data, requires_grad=req, parents=parents, vjp=vjp)


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Sum gradient over axes that were broadcast in the forward op."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


# ---------------------------------------------------------------- basic ops


def add(a: Tensor, b: Tensor) -> Tensor:
    def vjp(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)

    return _make(a.data + b.data, (a, b), vjp)


def sub(a: Tensor, b: Tensor) -> Tensor:
    def vjp(g):
        return _unbroadcast(g, a.data.shape), -_unbroadcast(g, b.data.shape)

    return _make(a.data - b.data, (a, b), vjp)


def mul(a: Tensor, b: Tensor) -> Tensor:
    def vjp(g):
        return (
            _unbroadcast(g * b.data, a.data.shape),
            _unbroadcast(g * a.data, b.data.shape),
        )

    return _make(a.data * b.data, (a, b), vjp)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    def vjp(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        return _unbroadcast(ga, a.data.shape), _unbroadcast(gb, b.data.shape)

    return _make(a.data @ b.data, (a, b), vjp)


def reshape(a: Tensor, shape) -> Tensor:
    old = a.data.shape

    def vjp(g):
        return (g.reshape(old),)

    return _make(a.data.reshape(shape), (a,), vjp)


def transpose(a: Tensor, axes) -> Tensor:
    inv = np.argsort(axes)

    def vjp(g):
        return (np.ascontiguousarray(g.transpose(inv)),)

    return _make(np.ascontiguousarray(a.data.transpose(axes)), (a,), vjp)


def concat(tensors, axis: int = 1) -> Tensor:
    sizes = [t.data.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def vjp(g):
        return tuple(np.ascontiguousarray(p) for p in np.split(g, splits, axis=axis))

    return _make(np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors), vjp)


# ------------------------------------------------------------- convolutions


def conv1d(x: Tensor, w: Tensor, b: Tensor, stride: int = 1, pad: int = 0) -> Tensor:
    y = kn.conv1d_forward(x.data, w.data, b.data, stride, pad)
    length = x.data.shape[2]
    k = w.data.shape[2]

    def vjp(g):
        g = np.ascontiguousarray(g)
        gx = kn.conv1d_backward_data(g, w.data, stride, pad, length)
        gw, gb = kn.conv1d_backward_weights(g, x.data, k, stride, pad)
        return gx, gw, gb

    return _make(y, (x, w, b), vjp)


def dwconv1d(x: Tensor, w: Tensor, b: Tensor, pad: int = 0) -> Tensor:
    y = kn.dwconv1d_forward(x.data, w.data, b.data, pad)
    length = x.data.shape[2]
    k = w.data.shape[1]

    def vjp(g):
        g = np.ascontiguousarray(g)
        gx = kn.dwconv1d_backward_data(g, w.data, pad, length)
        gw, gb = kn.dwconv1d_backward_weights(g, x.data, k, pad)
        return gx, gw, gb

    return _make(y, (x, w, b), vjp)


def linear(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """x (..., in) @ w (out, in).T + b (out,)"""

    def vjp(g):
        gx = g @ w.data
        gw = np.tensordot(g, x.data, axes=(range(g.ndim - 1), range(g.ndim - 1)))
        gb = g.reshape(-1, g.shape[-1]).sum(axis=0)
        return gx, gw, gb

    return _make(x.data @ w.data.T + b.data, (x, w, b), vjp)


# ------------------------------------------------------------ nonlinearities


def swish(x: Tensor) -> Tensor:
    sig = 1.0 / (1.0 + np.exp(-x.data))
    y = x.data * sig

    def vjp(g):
        return (g * (sig + y * (1.0 - sig)),)

    return _make(y, (x,), vjp)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)

    def vjp(g):
        dot = (g * y).sum(axis=axis, keepdims=True)
        return (y * (g - dot),)

    return _make(y, (x,), vjp)


def group_norm(x: Tensor, gamma: Tensor, beta: Tensor, groups: int, eps: float = 1e-6) -> Tensor:
    """Normalize (B, C, L) per sample over channel groups, then affine."""
    bsz, ch, length = x.data.shape
    if ch % groups:
        raise ValueError(f"channels {ch} not divisible by groups {groups}")
    xg = x.data.reshape(bsz, groups, -1)
    mu = xg.mean(axis=2, keepdims=True)
    var = xg.var(axis=2, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = ((xg - mu) * inv).reshape(bsz, ch, length)
    y = xhat * gamma.data[None, :, None] + beta.data[None, :, None]

    def vjp(g):
        ggamma = (g * xhat).sum(axis=(0, 2))
        gbeta = g.sum(axis=(0, 2))
        gxhat = (g * gamma.data[None, :, None]).reshape(bsz, groups, -1)
        xh = xhat.reshape(bsz, groups, -1)
        m1 = gxhat.mean(axis=2, keepdims=True)
        m2 = (gxhat * xh).mean(axis=2, keepdims=True)
        gx = (inv * (gxhat - m1 - xh * m2)).reshape(bsz, ch, length)
        return gx, ggamma, gbeta

    return _make(y, (x, gamma, beta), vjp)


# ----------------------------------------------------- transforms and shape


def pad_last(x: Tensor, total: int) -> Tensor:
    cur = x.data.shape[-1]
    if total < cur:
        raise ValueError(f"cannot pad {cur} down to {total}")
    width = [(0, 0)] * (x.data.ndim - 1) + [(0, total - cur)]

    def vjp(g):
        return (np.ascontiguousarray(g[..., :cur]),)

    return _make(np.pad(x.data, width), (x,), vjp)


def crop_last(x: Tensor, total: int) -> Tensor:
    cur = x.data.shape[-1]
    if total > cur:
        raise ValueError(f"cannot crop {cur} up to {total}")

    def vjp(g):
        width = [(0, 0)] * (g.ndim - 1) + [(0, cur - total)]
        return (np.pad(g, width),)

    return _make(np.ascontiguousarray(x.data[..., :total]), (x,), vjp)


def slice_last(x: Tensor, start: int, stop: int) -> Tensor:
    cur = x.data.shape[-1]

    def vjp(g):
        width = [(0, 0)] * (g.ndim - 1) + [(start, cur - stop)]
        return (np.pad(g, width),)

    return _make(np.ascontiguousarray(x.data[..., start:stop]), (x,), vjp)


def dct_last(x: Tensor) -> Tensor:
    """Orthonormal forward transform; the vjp is the inverse transform."""

    def vjp(g):
        return (scipy.fft.idct(g, type=2, norm="ortho", axis=-1),)

    return _make(scipy.fft.dct(x.data, type=2, norm="ortho", axis=-1), (x,), vjp)


def idct_last(x: Tensor) -> Tensor:
    def vjp(g):
        return (scipy.fft.dct(g, type=2, norm="ortho", axis=-1),)

    return _make(scipy.fft.idct(x.data, type=2, norm="ortho", axis=-1), (x,), vjp)


def upsample_linear2(x: Tensor) -> Tensor:
    """Double the last axis by midpoint interpolation (endpoint repeated)."""
    length = x.data.shape[-1]
    y = np.empty(x.data.shape[:-1] + (2 * length,))
    y[..., 0::2] = x.data
    y[..., 1:-1:2] = 0.5 * (x.data[..., :-1] + x.data[..., 1:])
    y[..., -1] = x.data[..., -1]

    def vjp(g):
        gx = np.ascontiguousarray(g[..., 0::2])
        mids = g[..., 1:-1:2]
        gx[..., :-1] += 0.5 * mids
        gx[..., 1:] += 0.5 * mids
        gx[..., -1] += g[..., -1]
        return (gx,)

    return _make(y, (x,), vjp)


def mean_abs(x: Tensor) -> Tensor:
    """Mean absolute value; the training loss head."""
    n = x.data.size
    sign = np.sign(x.data)

    def vjp(g):
        return (g * sign / n,)

    return _make(np.abs(x.data).mean(), (x,), vjp)


# ------------------------------------------------------------- param store


class ParamStore:
    """Named learnable arrays with a flat index map.

    Registration order is deterministic, so the flattened vector layout is
    stable across runs; that layout is what checkpoints and the
    finite-difference checks use.
    """

    def __init__(self):
        self._tensors: dict[str, Tensor] = {}

    def register(self, name: str, array: np.ndarray) -> Tensor:
        if name in self._tensors:
            raise ValueError(f"duplicate parameter name {name!r}")
        t = Tensor(np.asarray(array, dtype=np.float64), requires_grad=True)
        self._tensors[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._tensors[name]

    def __iter__(self):
        return iter(self._tensors.items())

    def __len__(self):
        return len(self._tensors)

    @property
    def count(self) -> int:
        return sum(t.data.size for t in self._tensors.values())

    def index_map(self) -> dict[str, tuple[int, tuple[int, ...]]]:
        out, offset = {}, 0
        for name, t in self._tensors.items():
            out[name] = (offset, t.data.shape)
            offset += t.data.size
        return out

    def flat(self) -> np.ndarray:
        return np.concatenate([t.data.ravel() for t in self._tensors.values()])

    def set_flat(self, vec: np.ndarray) -> None:
        vec = np.asarray(vec, dtype=np.float64)
        if vec.size != self.count:
            raise ValueError(f"expected {self.count} values, got {vec.size}")
        offset = 0
        for t in self._tensors.values():
            size = t.data.size
            t.data = vec[offset : offset + size].reshape(t.data.shape).copy()
            offset += size

    def zero_grad(self) -> None:
        for t in self._tensors.values():
            t.grad = None

    def grad_flat(self) -> np.ndarray:
        """Flattened gradients; disconnected parameters contribute zeros."""
        parts = []
        for t in self._tensors.values():
            if t.grad is None:
                parts.append(np.zeros(t.data.size))
            else:
                parts.append(t.grad.ravel())
        return np.concatenate(parts)

    def disconnected(self) -> list[str]:
        """Names of parameters that received no gradient in the last pass."""
        return [name for name, t in self._tensors.items() if t.grad is None]
