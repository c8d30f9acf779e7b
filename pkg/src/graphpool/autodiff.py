"""Small reverse-mode differentiation tape over numpy arrays.

Only the primitives needed by the trainable pooling operators are
implemented; each op records its parents and a hand-written
vector-Jacobian product. ``Tensor.backward()`` accumulates gradients of
a scalar loss into every node of the tape. Gradients are checked
against central finite differences in the test suite.
"""

from __future__ import annotations

import numpy as np


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a gradient over the axes numpy broadcast in the forward op."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    __slots__ = ("value", "grad", "_partials")

    def __init__(self, value, partials=()):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self._partials = tuple(partials)  # (parent, fn: out_grad -> parent_grad)

    @property
    def shape(self):
        return self.value.shape

    @property
    def T(self):
        return transpose(self)

    def backward(self):
        if self.value.size != 1:
            raise ValueError("backward() needs a scalar loss")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent, _ in node._partials:
                stack.append((parent, False))
        for node in topo:
            node.grad = np.zeros_like(node.value)
        self.grad = np.ones_like(self.value)
        for node in reversed(topo):
            for parent, fn in node._partials:
                parent.grad = parent.grad + fn(node.grad)

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

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return mul(self, -1.0)


def wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def add(a, b) -> Tensor:
    a, b = wrap(a), wrap(b)
    return Tensor(
        a.value + b.value,
        [(a, lambda g: _unbroadcast(g, a.value.shape)), (b, lambda g: _unbroadcast(g, b.value.shape))],
    )


def sub(a, b) -> Tensor:
    a, b = wrap(a), wrap(b)
    return Tensor(
        a.value - b.value,
        [(a, lambda g: _unbroadcast(g, a.value.shape)), (b, lambda g: _unbroadcast(-g, b.value.shape))],
    )


def mul(a, b) -> Tensor:
    a, b = wrap(a), wrap(b)
    return Tensor(
        a.value * b.value,
        [
            (a, lambda g: _unbroadcast(g * b.value, a.value.shape)),
            (b, lambda g: _unbroadcast(g * a.value, b.value.shape)),
        ],
    )


def div(a, b) -> Tensor:
    a, b = wrap(a), wrap(b)
    return Tensor(
        a.value / b.value,
        [
            (a, lambda g: _unbroadcast(g / b.value, a.value.shape)),
            (b, lambda g: _unbroadcast(-g * a.value / b.value**2, b.value.shape)),
        ],
    )


def matmul(a, b) -> Tensor:
    a, b = wrap(a), wrap(b)
    return Tensor(
        a.value @ b.value,
        [(a, lambda g: g @ b.value.T), (b, lambda g: a.value.T @ g)],
    )


def transpose(a) -> Tensor:
    a = wrap(a)
    return Tensor(a.value.T, [(a, lambda g: g.T)])


def relu(a) -> Tensor:
    a = wrap(a)
    mask = a.value > 0
    return Tensor(a.value * mask, [(a, lambda g: g * mask)])


def tanh(a) -> Tensor:
    a = wrap(a)
    t = np.tanh(a.value)
    return Tensor(t, [(a, lambda g: g * (1.0 - t**2))])


def sigmoid(a) -> Tensor:
    a = wrap(a)
    s = 1.0 / (1.0 + np.exp(-a.value))
    return Tensor(s, [(a, lambda g: g * s * (1.0 - s))])


def exp(a) -> Tensor:
    a = wrap(a)
    e = np.exp(a.value)
    return Tensor(e, [(a, lambda g: g * e)])


def log(a) -> Tensor:
    a = wrap(a)
    return Tensor(np.log(a.value), [(a, lambda g: g / a.value)])


def sqrt(a) -> Tensor:
    a = wrap(a)
    r = np.sqrt(a.value)
    return Tensor(r, [(a, lambda g: g / (2.0 * np.maximum(r, 1e-300)))])


def absolute(a) -> Tensor:
    a = wrap(a)
    return Tensor(np.abs(a.value), [(a, lambda g: g * np.sign(a.value))])


def tsum(a, axis=None) -> Tensor:
    a = wrap(a)
    val = a.value.sum(axis=axis)

    def back(g):
        if axis is None:
            return np.broadcast_to(g, a.value.shape).copy()
        return np.broadcast_to(np.expand_dims(g, axis), a.value.shape).copy()

    return Tensor(val, [(a, back)])


def tmean(a, axis=None) -> Tensor:
    a = wrap(a)
    count = a.value.size if axis is None else a.value.shape[axis]
    return mul(tsum(a, axis=axis), 1.0 / count)


def softmax_rows(a) -> Tensor:
    a = wrap(a)
    z = a.value - a.value.max(axis=1, keepdims=True)
    e = np.exp(z)
    s = e / e.sum(axis=1, keepdims=True)
    return Tensor(s, [(a, lambda g: s * (g - (g * s).sum(axis=1, keepdims=True)))])


def trace(a) -> Tensor:
    a = wrap(a)
    n = a.value.shape[0]
    return Tensor(np.trace(a.value), [(a, lambda g: g * np.eye(n))])


def diag_embed(v) -> Tensor:
    v = wrap(v)
    return Tensor(np.diag(v.value), [(v, lambda g: np.diagonal(g).copy())])


def diag_part(m) -> Tensor:
    m = wrap(m)

    def back(g):
        out = np.zeros_like(m.value)
        np.fill_diagonal(out, g)
        return out

    return Tensor(np.diagonal(m.value).copy(), [(m, back)])


def gather_rows(a, idx) -> Tensor:
    a = wrap(a)
    idx = np.asarray(idx, dtype=np.int64)

    def back(g):
        out = np.zeros_like(a.value)
        np.add.at(out, idx, g)
        return out

    return Tensor(a.value[idx], [(a, back)])


def scatter_rows(a, idx, n: int) -> Tensor:
    """Rows of ``a`` placed at positions ``idx`` of an (n, F) zero matrix."""
    a = wrap(a)
    idx = np.asarray(idx, dtype=np.int64)
    val = np.zeros((n,) + a.value.shape[1:])
    val[idx] = a.value
    return Tensor(val, [(a, lambda g: g[idx])])


def inv(m) -> Tensor:
    m = wrap(m)
    vi = np.linalg.inv(m.value)
    return Tensor(vi, [(m, lambda g: -vi.T @ g @ vi.T)])


def frobenius(a) -> Tensor:
    a = wrap(a)
    norm = float(np.sqrt((a.value**2).sum()))
    return Tensor(norm, [(a, lambda g: g * a.value / max(norm, 1e-300))])
