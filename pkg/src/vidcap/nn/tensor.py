"""Minimal reverse-mode autodiff over float64 numpy arrays.

Graphs are dynamic: every op executed while gradients are enabled appends a
node holding its backward closure. ``backward(loss)`` topologically sorts the
recorded nodes and accumulates gradients into every reachable tensor that
requires them. The tape is per-forward-pass and garbage-collected with the
output tensors.
"""

from __future__ import annotations

import contextlib
from typing import Callable, Sequence

import numpy as np


class ShapeError(ValueError):
    """Raised when operand shapes are inconsistent with an operation."""


_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable graph recording inside the block (inference mode)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def grad_enabled() -> bool:
    return _grad_enabled


class Node:
    """One recorded op: parents, output tensors, and a backward closure.

    ``backward`` receives the output gradients (None for outputs the loss
    never touched) and must accumulate into the parents' ``.grad``.
    """

    __slots__ = ("parents", "outputs", "backward")

    def __init__(self, parents: Sequence["Tensor"], outputs: Sequence["Tensor"],
                 backward: Callable):
        self.parents = tuple(parents)
        self.outputs = tuple(outputs)
        self.backward = backward


class Tensor:
    """n-dimensional float64 array with an optional gradient slot."""

    __slots__ = ("data", "grad", "requires_grad", "node")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.node: Node | None = None

    @property
    def shape(self):
        return self.data.shape

    def accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def zero_grad(self) -> None:
        self.grad = None

    def item(self) -> float:
        return float(self.data)

    def backward(self) -> None:
        backward(self)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


def _wants_graph(*parents: Tensor) -> bool:
    return _grad_enabled and any(p.requires_grad for p in parents)


def _attach(out: Tensor | tuple, parents: Sequence[Tensor], backward: Callable) -> None:
    outs = out if isinstance(out, tuple) else (out,)
    node = Node(parents, outs, backward)
    for o in outs:
        o.requires_grad = True
        o.node = node


def constant(data) -> Tensor:
    return Tensor(data, requires_grad=False)


# ---------------------------------------------------------------------------
# elementwise arithmetic


def add(a: Tensor, b: Tensor) -> Tensor:
    """a + b; b may be 1-D broadcast over the rows of a 2-D a (bias add)."""
    bias = b.data.ndim == 1 and a.data.ndim == 2
    if not bias and a.data.shape != b.data.shape:
        raise ShapeError(f"add: shapes {a.data.shape} vs {b.data.shape}")
    out = Tensor(a.data + b.data)
    if _wants_graph(a, b):
        def bw(gs):
            (g,) = gs
            if a.requires_grad:
                a.accumulate(g)
            if b.requires_grad:
                b.accumulate(g.sum(axis=0) if bias else g)
        _attach(out, (a, b), bw)
    return out


def sub(a: Tensor, b: Tensor) -> Tensor:
    return add(a, scale(b, -1.0))


def mul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise ShapeError(f"mul: shapes {a.data.shape} vs {b.data.shape}")
    out = Tensor(a.data * b.data)
    if _wants_graph(a, b):
        ad, bd = a.data, b.data
        def bw(gs):
            (g,) = gs
            if a.requires_grad:
                a.accumulate(g * bd)
            if b.requires_grad:
                b.accumulate(g * ad)
        _attach(out, (a, b), bw)
    return out


def mul_const(a: Tensor, c: np.ndarray) -> Tensor:
    """Elementwise product with a non-differentiated array (masks, weights)."""
    c = np.asarray(c, dtype=np.float64)
    out = Tensor(a.data * c)
    if _wants_graph(a):
        def bw(gs):
            (g,) = gs
            a.accumulate(g * c)
        _attach(out, (a,), bw)
    return out


def scale(a: Tensor, s: float) -> Tensor:
    out = Tensor(a.data * s)
    if _wants_graph(a):
        def bw(gs):
            (g,) = gs
            a.accumulate(g * s)
        _attach(out, (a,), bw)
    return out


def affine_const(a: Tensor, s: float, c: float) -> Tensor:
    """s * a + c with python-scalar coefficients (e.g. 1 - x)."""
    out = Tensor(a.data * s + c)
    if _wants_graph(a):
        def bw(gs):
            (g,) = gs
            a.accumulate(g * s)
        _attach(out, (a,), bw)
    return out


# ---------------------------------------------------------------------------
# linear algebra

# All matrix products run through fixed-order einsum so each output row is
# computed identically whether it sits in a batch or stands alone; this keeps
# batched losses bit-consistent with per-clip losses.


def mm_nt(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """x @ w.T for x (d,) or (B, d), w (h, d)."""
    if x.ndim == 1:
        return np.einsum("d,hd->h", x, w, optimize=False)
    return np.einsum("bd,hd->bh", x, w, optimize=False)


def mm_nn(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """x @ w for x (d,) or (B, d), w (d, h)."""
    if x.ndim == 1:
        return np.einsum("d,dh->h", x, w, optimize=False)
    return np.einsum("bd,dh->bh", x, w, optimize=False)


def mm_tn(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """a.T @ b batch reduction for a (B, h), b (B, d)."""
    return np.einsum("bh,bd->hd", a, b, optimize=False)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    ad, bd = a.data, b.data
    if ad.shape[-1] != bd.shape[0]:
        raise ShapeError(f"matmul: inner dims {ad.shape} vs {bd.shape}")
    out = Tensor(mm_nn(ad, bd))
    if _wants_graph(a, b):
        def bw(gs):
            (g,) = gs
            if a.requires_grad:
                a.accumulate(mm_nt(g, bd) if ad.ndim == 2
                             else np.einsum("dh,h->d", bd, g, optimize=False))
            if b.requires_grad:
                if ad.ndim == 2:
                    b.accumulate(mm_tn(ad, g))
                else:
                    b.accumulate(np.outer(ad, g))
        _attach(out, (a, b), bw)
    return out


def concat_cols(a: Tensor, b: Tensor) -> Tensor:
    """Concatenate along the last axis (decoder input assembly)."""
    if a.data.ndim != b.data.ndim:
        raise ShapeError(f"concat: ndim {a.data.ndim} vs {b.data.ndim}")
    out = Tensor(np.concatenate([a.data, b.data], axis=-1))
    if _wants_graph(a, b):
        na = a.data.shape[-1]
        def bw(gs):
            (g,) = gs
            if a.requires_grad:
                a.accumulate(g[..., :na])
            if b.requires_grad:
                b.accumulate(g[..., na:])
        _attach(out, (a, b), bw)
    return out


def tile_rows(a: Tensor, m: int) -> Tensor:
    """Repeat each row of a 2-D tensor m times; backward sums the copies."""
    n = a.data.shape[0]
    out = Tensor(np.repeat(a.data, m, axis=0))
    if _wants_graph(a):
        def bw(gs):
            (g,) = gs
            a.accumulate(g.reshape(n, m, -1).sum(axis=1).reshape(a.data.shape))
        _attach(out, (a,), bw)
    return out


def reshape(a: Tensor, shape) -> Tensor:
    out = Tensor(a.data.reshape(shape))
    if _wants_graph(a):
        def bw(gs):
            (g,) = gs
            a.accumulate(g.reshape(a.data.shape))
        _attach(out, (a,), bw)
    return out


# ---------------------------------------------------------------------------
# reductions


def tsum(a: Tensor, axis: int | None = None) -> Tensor:
    out = Tensor(a.data.sum(axis=axis))
    if _wants_graph(a):
        def bw(gs):
            (g,) = gs
            if axis is None:
                a.accumulate(np.full_like(a.data, g))
            else:
                a.accumulate(np.expand_dims(g, axis) * np.ones_like(a.data))
        _attach(out, (a,), bw)
    return out


def tmean(a: Tensor, axis: int | None = None) -> Tensor:
    n = a.data.size if axis is None else a.data.shape[axis]
    return scale(tsum(a, axis), 1.0 / n)


# ---------------------------------------------------------------------------
# nonlinearities


def sigmoid(a: Tensor) -> Tensor:
    y = 1.0 / (1.0 + np.exp(-a.data))
    out = Tensor(y)
    if _wants_graph(a):
        def bw(gs):
            (g,) = gs
            a.accumulate(g * y * (1.0 - y))
        _attach(out, (a,), bw)
    return out


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.data)
    out = Tensor(y)
    if _wants_graph(a):
        def bw(gs):
            (g,) = gs
            a.accumulate(g * (1.0 - y * y))
        _attach(out, (a,), bw)
    return out


def relu(a: Tensor) -> Tensor:
    y = np.maximum(a.data, 0.0)
    out = Tensor(y)
    if _wants_graph(a):
        mask = (a.data > 0.0).astype(np.float64)
        def bw(gs):
            (g,) = gs
            a.accumulate(g * mask)
        _attach(out, (a,), bw)
    return out


def softmax(a: Tensor) -> Tensor:
    """Softmax over the last axis."""
    z = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=-1, keepdims=True)
    out = Tensor(y)
    if _wants_graph(a):
        def bw(gs):
            (g,) = gs
            dot = (g * y).sum(axis=-1, keepdims=True)
            a.accumulate(y * (g - dot))
        _attach(out, (a,), bw)
    return out


def tlog(a: Tensor) -> Tensor:
    out = Tensor(np.log(a.data))
    if _wants_graph(a):
        def bw(gs):
            (g,) = gs
            a.accumulate(g / a.data)
        _attach(out, (a,), bw)
    return out


def clamp(a: Tensor, lo: float, hi: float) -> Tensor:
    """Clip to [lo, hi]; gradient passes only where unclipped."""
    y = np.clip(a.data, lo, hi)
    out = Tensor(y)
    if _wants_graph(a):
        mask = ((a.data > lo) & (a.data < hi)).astype(np.float64)
        def bw(gs):
            (g,) = gs
            a.accumulate(g * mask)
        _attach(out, (a,), bw)
    return out


# ---------------------------------------------------------------------------
# backward engine


def backward(loss: Tensor) -> None:
    """Populate .grad for every tensor the scalar loss depends on."""
    if loss.data.size != 1:
        raise ShapeError(f"backward: loss must be scalar, got shape {loss.data.shape}")
    loss.grad = np.ones_like(loss.data)
    if loss.node is None:
        return
    # iterative topological sort over nodes
    order: list[Node] = []
    state: dict[int, int] = {}  # 0 visiting, 1 done
    stack: list[tuple[Node, bool]] = [(loss.node, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            state[id(node)] = 1
            order.append(node)
            continue
        if id(node) in state:
            continue
        state[id(node)] = 0
        stack.append((node, True))
        for p in node.parents:
            if p.node is not None and id(p.node) not in state:
                stack.append((p.node, False))
    for node in reversed(order):
        gs = [o.grad for o in node.outputs]
        if all(g is None for g in gs):
            continue
        node.backward(gs)
