"""Dense tensors with reverse-mode gradients.

A Tensor wraps a numpy array plus an optional gradient buffer and a
backward closure. Operations record their parents so `backward()` can
replay the tape in reverse topological order. Only the layers the
caption model needs are provided; there is no general graph compiler.
"""

from __future__ import annotations

import contextlib
from typing import Callable, Iterable, Sequence

import numpy as np

from ..errors import InputError, NumericError, ShapeError

_GRAD_ENABLED = True


@contextlib.contextmanager
def no_grad():
    """Disable tape recording inside the block (read-only inference)."""
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
    """Dense array plus gradient slot. Data is row-major float32/float64."""

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float64)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self._parents: tuple = ()
        self._backward: Callable[[np.ndarray], None] | None = None

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def zero_grad(self) -> None:
        self.grad = None

    def accumulate_grad(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def backward(self) -> None:
        """Backpropagate from this (scalar) tensor through the tape."""
        if self.data.size != 1:
            raise ShapeError(f"backward() requires a scalar, got shape {self.shape}")
        order = _topo_order(self)
        self.grad = np.ones_like(self.data)
        for node in order:
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)


def _topo_order(root: Tensor) -> list[Tensor]:
    """Reverse topological order over the tape, iteratively (deep unrolls)."""
    order: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in visited:
                stack.append((parent, False))
    order.reverse()
    return order


def as_tensor(x, dtype=None) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x, dtype=dtype)


def _make(data: np.ndarray, parents: Sequence[Tensor], backward) -> Tensor:
    """Tape node: requires_grad iff recording and any parent does."""
    out = Tensor(data)
    if _GRAD_ENABLED and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum `g` down to `shape` (inverse of numpy broadcasting)."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# elementwise and linear ops
# ---------------------------------------------------------------------------


def add(a: Tensor, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = a.data + b.data

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(g, b.shape))

    return _make(data, (a, b), backward)


def mul(a: Tensor, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = a.data * b.data

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(g * a.data, b.shape))

    return _make(data, (a, b), backward)


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(g * c)

    return _make(a.data * c, (a,), backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product of a [m,k] and b [k,n]."""
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul shape mismatch: {a.shape} x {b.shape}")
    data = a.data @ b.data

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(g @ b.data.T)
        if b.requires_grad:
            b.accumulate_grad(a.data.T @ g)

    return _make(data, (a, b), backward)


def tanh(x: Tensor) -> Tensor:
    x = as_tensor(x)
    out_data = np.tanh(x.data)

    def backward(g):
        if x.requires_grad:
            x.accumulate_grad(g * (1.0 - out_data * out_data))

    return _make(out_data, (x,), backward)


def sigmoid(x: Tensor) -> Tensor:
    x = as_tensor(x)
    # piecewise form avoids overflow in exp for large |x|
    d = x.data
    out_data = np.where(d >= 0, 1.0 / (1.0 + np.exp(-np.abs(d))),
                        np.exp(-np.abs(d)) / (1.0 + np.exp(-np.abs(d))))

    def backward(g):
        if x.requires_grad:
            x.accumulate_grad(g * out_data * (1.0 - out_data))

    return _make(out_data, (x,), backward)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """Shift-invariant softmax along `axis`; rejects non-finite input."""
    x = as_tensor(x)
    if x.data.size == 0:
        raise ShapeError(f"softmax requires at least one element, got shape {x.shape}")
    if not np.all(np.isfinite(x.data)):
        raise NumericError("softmax input contains NaN or Inf")
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out_data = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        if x.requires_grad:
            inner = (g * out_data).sum(axis=axis, keepdims=True)
            x.accumulate_grad(out_data * (g - inner))

    return _make(out_data, (x,), backward)


# ---------------------------------------------------------------------------
# shape plumbing
# ---------------------------------------------------------------------------


def reshape(x: Tensor, shape: tuple) -> Tensor:
    x = as_tensor(x)
    data = x.data.reshape(shape)

    def backward(g):
        if x.requires_grad:
            x.accumulate_grad(g.reshape(x.shape))

    return _make(data, (x,), backward)


def concat_cols(tensors: Iterable[Tensor]) -> Tensor:
    """Concatenate 2-D tensors along the last axis."""
    ts = [as_tensor(t) for t in tensors]
    widths = [t.shape[1] for t in ts]
    data = np.concatenate([t.data for t in ts], axis=1)

    def backward(g):
        start = 0
        for t, w in zip(ts, widths):
            if t.requires_grad:
                t.accumulate_grad(g[:, start:start + w])
            start += w

    return _make(data, tuple(ts), backward)


def col_slice(x: Tensor, start: int, stop: int) -> Tensor:
    x = as_tensor(x)
    data = x.data[:, start:stop]

    def backward(g):
        if x.requires_grad:
            gx = np.zeros_like(x.data)
            gx[:, start:stop] = g
            x.accumulate_grad(gx)

    return _make(data, (x,), backward)


def row_slice(x: Tensor, start: int, stop: int) -> Tensor:
    x = as_tensor(x)
    data = x.data[start:stop]

    def backward(g):
        if x.requires_grad:
            gx = np.zeros_like(x.data)
            gx[start:stop] = g
            x.accumulate_grad(gx)

    return _make(data, (x,), backward)


def repeat_rows(x: Tensor, k: int) -> Tensor:
    """[B,H] -> [B*k,H], each row repeated k times consecutively."""
    x = as_tensor(x)
    b, h = x.shape
    data = np.repeat(x.data, k, axis=0)

    def backward(g):
        if x.requires_grad:
            x.accumulate_grad(g.reshape(b, k, h).sum(axis=1))

    return _make(data, (x,), backward)


def gather_cols(w: Tensor, indices: np.ndarray) -> Tensor:
    """Select columns of w [D,N] by index -> [len(indices),D] (embedding lookup)."""
    w = as_tensor(w)
    idx = np.asarray(indices, dtype=np.intp)
    if idx.size and (idx.min() < 0 or idx.max() >= w.shape[1]):
        raise IndexError(f"column index out of range for shape {w.shape}")
    data = w.data[:, idx].T

    def backward(g):
        if w.requires_grad:
            gw = np.zeros_like(w.data)
            np.add.at(gw.T, idx, g)
            w.accumulate_grad(gw)

    return _make(data, (w,), backward)


def region_weighted_sum(alpha: Tensor, regions: Tensor) -> Tensor:
    """Convex combination of region vectors: alpha [B,K], regions [B,K,D] -> [B,D]."""
    alpha, regions = as_tensor(alpha), as_tensor(regions)
    if alpha.data.ndim != 2 or regions.data.ndim != 3 or alpha.shape != regions.shape[:2]:
        raise ShapeError(f"weighted sum shape mismatch: {alpha.shape} vs {regions.shape}")
    data = np.einsum("bk,bkd->bd", alpha.data, regions.data)

    def backward(g):
        if alpha.requires_grad:
            alpha.accumulate_grad(np.einsum("bd,bkd->bk", g, regions.data))
        if regions.requires_grad:
            regions.accumulate_grad(np.einsum("bk,bd->bkd", alpha.data, g))

    return _make(data, (alpha, regions), backward)


# ---------------------------------------------------------------------------
# losses
# ---------------------------------------------------------------------------


def cross_entropy_rows(logits: Tensor, targets: np.ndarray,
                       mask: np.ndarray | None = None) -> Tensor:
    """Summed negative log-likelihood over rows of logits [B,V].

    `targets` holds one class index per row; rows where `mask` is 0
    contribute nothing to the value or the gradient.
    """
    logits = as_tensor(logits)
    if logits.data.ndim != 2:
        raise ShapeError(f"cross entropy expects [B,V] logits, got {logits.shape}")
    b, v = logits.shape
    t = np.asarray(targets, dtype=np.intp)
    if t.shape != (b,):
        raise ShapeError(f"targets shape {t.shape} does not match batch {b}")
    if t.size and (t.min() < 0 or t.max() >= v):
        raise IndexError(f"target index out of range for vocabulary of size {v}")
    m = np.ones(b, dtype=logits.dtype) if mask is None else np.asarray(mask, dtype=logits.dtype)

    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1)) + logits.data.max(axis=1)
    nll = lse - logits.data[np.arange(b), t]
    data = np.array((nll * m).sum(), dtype=logits.dtype)

    def backward(g):
        if logits.requires_grad:
            e = np.exp(shifted)
            probs = e / e.sum(axis=1, keepdims=True)
            probs[np.arange(b), t] -= 1.0
            logits.accumulate_grad(probs * (m * float(g))[:, None])

    return _make(data, (logits,), backward)


def cross_entropy(logits: Tensor, target_index: int) -> Tensor:
    """-log softmax(logits)[target] for a single 1-D logit vector."""
    logits = as_tensor(logits)
    if logits.data.ndim != 1:
        raise ShapeError(f"cross_entropy expects 1-D logits, got {logits.shape}")
    if not 0 <= target_index < logits.shape[0]:
        raise IndexError(
            f"target index {target_index} out of range for {logits.shape[0]} classes")
    rows = reshape(logits, (1, logits.shape[0]))
    return cross_entropy_rows(rows, np.array([target_index]))
