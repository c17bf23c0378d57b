"""Reverse-mode autodiff over float64 numpy buffers.

A Tensor records its parents and a backward closure; `backward()` replays
the recorded graph in reverse topological order exactly once. The op set
is the minimum the reduction and dynamics models need. Everything is
single-threaded and deterministic.
"""
from __future__ import annotations

import numpy as np

from . import backend


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward_fn")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents: tuple = ()
        self._backward_fn = None

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    def _accumulate(self, g):
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64)
        else:
            self.grad += g

    def backward(self, grad=None):
        """Backpropagate from this node (defaults to d(self)=1)."""
        if grad is None:
            grad = np.ones_like(self.data)
        # Iterative topological order: deep graphs (long BPTT chains)
        # would overflow the recursion limit.
        order, seen, stack = [], set(), [(self, False)]
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
                if id(p) not in seen:
                    stack.append((p, False))
        self._accumulate(np.asarray(grad, dtype=np.float64))
        for node in reversed(order):
            if node._backward_fn is not None and node.grad is not None:
                node._backward_fn(node.grad)

    # -- operator sugar ----------------------------------------------------
    def __add__(self, other):
        return add(self, _wrap(other))

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, mul(_wrap(other), -1.0))

    def __rsub__(self, other):
        return add(_wrap(other), mul(self, -1.0))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 else shape[0])

    def sum(self):
        return sum_all(self)


def _wrap(x):
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=np.float64))


def _needs(*tensors):
    return any(t.requires_grad for t in tensors)


def _node(data, parents, backward_fn):
    out = Tensor(data, requires_grad=_needs(*parents))
    if out.requires_grad:
        out._parents = tuple(parents)
        out._backward_fn = backward_fn
    return out


def _unbroadcast(grad, shape):
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(
        i for i, (g, s) in enumerate(zip(grad.shape, shape)) if s == 1 and g != 1
    )
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


# -- arithmetic -------------------------------------------------------------


def add(a: Tensor, b) -> Tensor:
    b = _wrap(b)
    out_data = a.data + b.data

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g, b.data.shape))

    return _node(out_data, (a, b), backward)


def mul(a: Tensor, b) -> Tensor:
    if isinstance(b, (int, float)):
        scale = float(b)
        out_data = a.data * scale

        def backward_scalar(g):
            if a.requires_grad:
                a._accumulate(g * scale)

        return _node(out_data, (a,), backward_scalar)

    b = _wrap(b)
    out_data = a.data * b.data

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g * a.data, b.data.shape))

    return _node(out_data, (a, b), backward)


def reshape(t: Tensor, shape) -> Tensor:
    old = t.data.shape

    def backward(g):
        if t.requires_grad:
            t._accumulate(g.reshape(old))

    return _node(t.data.reshape(shape), (t,), backward)


def concat(tensors, axis: int = 1) -> Tensor:
    datas = [t.data for t in tensors]
    sizes = [d.shape[axis] for d in datas]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        parts = np.split(g, splits, axis=axis)
        for t, p in zip(tensors, parts):
            if t.requires_grad:
                t._accumulate(p)

    return _node(np.concatenate(datas, axis=axis), tuple(tensors), backward)


def sum_all(t: Tensor) -> Tensor:
    def backward(g):
        if t.requires_grad:
            t._accumulate(np.full(t.data.shape, float(g)))

    return _node(t.data.sum(), (t,), backward)


def mean_all(t: Tensor) -> Tensor:
    n = t.data.size

    def backward(g):
        if t.requires_grad:
            t._accumulate(np.full(t.data.shape, float(g) / n))

    return _node(t.data.mean(), (t,), backward)


# -- nonlinearities ----------------------------------------------------------


def lrelu(t: Tensor, slope: float = 0.01) -> Tensor:
    mask = t.data > 0
    out_data = np.where(mask, t.data, slope * t.data)

    def backward(g):
        if t.requires_grad:
            t._accumulate(np.where(mask, g, slope * g))

    return _node(out_data, (t,), backward)


def sigmoid(t: Tensor) -> Tensor:
    s = 1.0 / (1.0 + np.exp(-t.data))

    def backward(g):
        if t.requires_grad:
            t._accumulate(g * s * (1.0 - s))

    return _node(s, (t,), backward)


def tanh(t: Tensor) -> Tensor:
    y = np.tanh(t.data)

    def backward(g):
        if t.requires_grad:
            t._accumulate(g * (1.0 - y * y))

    return _node(y, (t,), backward)


def exp(t: Tensor) -> Tensor:
    y = np.exp(t.data)

    def backward(g):
        if t.requires_grad:
            t._accumulate(g * y)

    return _node(y, (t,), backward)


# -- linear algebra ----------------------------------------------------------


def dense(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """x (N, d_in) @ weight (d_in, d_out) + bias (d_out,)."""
    out_data = x.data @ weight.data
    if bias is not None:
        out_data = out_data + bias.data

    def backward(g):
        if x.requires_grad:
            x._accumulate(g @ weight.data.T)
        if weight.requires_grad:
            weight._accumulate(x.data.T @ g)
        if bias is not None and bias.requires_grad:
            bias._accumulate(g.sum(axis=tuple(range(g.ndim - 1))))

    parents = (x, weight) if bias is None else (x, weight, bias)
    return _node(out_data, parents, backward)


# -- spatial ops -------------------------------------------------------------


def conv3d(x: Tensor, kernel: Tensor, stride=(1, 1, 1), padding=(0, 0, 0)) -> Tensor:
    stride = tuple(int(s) for s in stride)
    padding = tuple(int(p) for p in padding)
    out_data = backend.conv3d_forward(x.data, kernel.data, stride, padding)

    def backward(g):
        dx, dw = backend.conv3d_backward(x.data, kernel.data, g, stride, padding)
        if x.requires_grad:
            x._accumulate(dx)
        if kernel.requires_grad:
            kernel._accumulate(dw)

    return _node(out_data, (x, kernel), backward)


def upsample_trilinear(x: Tensor) -> Tensor:
    """Double every spatial dimension (align_corners=False)."""
    out_data = backend.upsample2_forward(x.data)

    def backward(g):
        if x.requires_grad:
            x._accumulate(backend.upsample2_backward(g))

    return _node(out_data, (x,), backward)


def crop3d(x: Tensor, target_spatial) -> Tensor:
    """Crop trailing spatial dims of (N, C, D, H, W) to the target sizes."""
    td, th, tw = target_spatial
    full = x.data.shape

    def backward(g):
        if x.requires_grad:
            gg = np.zeros(full)
            gg[:, :, :td, :th, :tw] = g
            x._accumulate(gg)

    return _node(np.ascontiguousarray(x.data[:, :, :td, :th, :tw]), (x,), backward)


def bias_add_channel(x: Tensor, bias: Tensor) -> Tensor:
    """Add a per-channel bias (C,) to an (N, C, D, H, W) tensor."""
    out_data = x.data + bias.data[None, :, None, None, None]

    def backward(g):
        if x.requires_grad:
            x._accumulate(g)
        if bias.requires_grad:
            bias._accumulate(g.sum(axis=(0, 2, 3, 4)))

    return _node(out_data, (x, bias), backward)
