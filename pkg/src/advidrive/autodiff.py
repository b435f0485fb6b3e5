"""Minimal reverse-mode automatic differentiation on float64 arrays.

Provides exactly the tensor operations the driving controller needs:
dense matmul, elementwise arithmetic, concatenation, a small set of
activations, valid-padding 2-D convolution, explicit zero padding, and
a handful of structural helpers (reshape, row gather, full reduction).

Every forward result is checked for NaN/Inf; overflow raises instead of
propagating.  A :class:`Tape` records executed operations in order; the
record order is a topological order of the dataflow graph by
construction, so :func:`backward` is a single reverse sweep.

Tapes are thread-confined: ops record onto the tape active on the
current thread, distinct tapes may run concurrently.
"""

from __future__ import annotations

import threading
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "AutodiffError",
    "ShapeMismatchError",
    "DomainError",
    "NonFiniteError",
    "Tensor",
    "Tape",
    "apply_binary",
    "apply_unary",
    "matmul",
    "add",
    "sub",
    "mul_elementwise",
    "concat_axis",
    "tanh",
    "sigmoid",
    "relu",
    "softmax_lastaxis",
    "log",
    "absolute",
    "square",
    "neg",
    "conv2d",
    "pad2d",
    "reshape",
    "gather_rows",
    "stack_rows",
    "sum_all",
    "mean_all",
    "scale",
    "backward",
    "finite_diff_check",
]


class AutodiffError(Exception):
    """Base class for errors raised by this engine."""


class ShapeMismatchError(AutodiffError):
    """Operand shapes do not conform for the requested operation."""


class DomainError(AutodiffError):
    """An input lies outside the mathematical domain of the op."""


class NonFiniteError(AutodiffError):
    """A forward op produced NaN/Inf; overflow is an error, not a value."""



# Overflow in float64 must surface as NonFiniteError from _finish, not as a
# numpy warning; arithmetic that can overflow runs with warnings silenced.
def _quiet():
    return np.errstate(over="ignore", invalid="ignore")

_active = threading.local()


def _current_tape() -> "Tape | None":
    return getattr(_active, "tape", None)


class Tensor:
    """A dense float64 array with an optional gradient buffer."""

    __slots__ = ("data", "requires_grad", "grad")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise NonFiniteError("tensor created from non-finite data")
        self.data = arr
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeMismatchError(f"item() on tensor of shape {self.shape}")
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.data

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


class _Record:
    __slots__ = ("kind", "inputs", "output", "backward_fn")

    def __init__(self, kind, inputs, output, backward_fn):
        self.kind = kind
        self.inputs = inputs
        self.output = output
        self.backward_fn = backward_fn


class Tape:
    """Ordered record of executed ops; valid topological order by construction."""

    def __init__(self):
        self._records: list[_Record] = []

    def __enter__(self) -> "Tape":
        if _current_tape() is not None:
            raise AutodiffError("a tape is already active on this thread")
        _active.tape = self
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        _active.tape = None

    def __len__(self) -> int:
        return len(self._records)

    def _append(self, record: _Record) -> None:
        self._records.append(record)


def _finish(kind: str, out_data: np.ndarray, inputs: Sequence[Tensor],
            backward_fn: Callable[[np.ndarray], Iterable[np.ndarray | None]]) -> Tensor:
    """Wrap a forward result: finite check, then record if a tape is live."""
    if not np.all(np.isfinite(out_data)):
        raise NonFiniteError(f"non-finite value produced by op '{kind}'")
    tape = _current_tape()
    needs = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor.__new__(Tensor)
    out.data = out_data
    out.requires_grad = bool(needs)
    out.grad = None
    if needs:
        tape._append(_Record(kind, tuple(inputs), out, backward_fn))
    return out


# ---------------------------------------------------------------------------
# binary ops


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeMismatchError(
            f"matmul: shapes {a.shape} and {b.shape} do not conform")
    with _quiet():
        out = a.data @ b.data

    def back(g):
        return g @ b.data.T, a.data.T @ g

    return _finish("matmul", out, (a, b), back)


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ShapeMismatchError(f"add: shapes {a.shape} and {b.shape} differ")

    def back(g):
        return g, g

    with _quiet():
        out = a.data + b.data
    return _finish("add", out, (a, b), back)


def sub(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ShapeMismatchError(f"sub: shapes {a.shape} and {b.shape} differ")

    def back(g):
        return g, -g

    with _quiet():
        out = a.data - b.data
    return _finish("sub", out, (a, b), back)


def mul_elementwise(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ShapeMismatchError(
            f"mul_elementwise: shapes {a.shape} and {b.shape} differ")

    def back(g):
        return g * b.data, g * a.data

    with _quiet():
        out = a.data * b.data
    return _finish("mul_elementwise", out, (a, b), back)


def concat_axis(a: Tensor, b: Tensor, axis: int = 0) -> Tensor:
    sa, sb = list(a.shape), list(b.shape)
    if len(sa) != len(sb):
        raise ShapeMismatchError(
            f"concat_axis: ranks differ, {a.shape} vs {b.shape}")
    sa.pop(axis), sb.pop(axis)
    if sa != sb:
        raise ShapeMismatchError(
            f"concat_axis: shapes {a.shape} and {b.shape} differ off axis {axis}")
    split = a.shape[axis]

    def back(g):
        ga, gb = np.split(g, [split], axis=axis)
        return np.ascontiguousarray(ga), np.ascontiguousarray(gb)

    return _finish("concat_axis", np.concatenate([a.data, b.data], axis=axis),
                   (a, b), back)


_BINARY = {
    "matmul": matmul,
    "add": add,
    "mul_elementwise": mul_elementwise,
    "concat_axis": concat_axis,
}


def apply_binary(kind: str, a: Tensor, b: Tensor, **kw) -> Tensor:
    if kind not in _BINARY:
        raise AutodiffError(f"unknown binary op kind '{kind}'")
    return _BINARY[kind](a, b, **kw)


# ---------------------------------------------------------------------------
# unary ops


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.data)

    def back(g):
        return (g * (1.0 - y * y),)

    return _finish("tanh", y, (a,), back)


def sigmoid(a: Tensor) -> Tensor:
    x = a.data
    y = np.empty_like(x)
    pos = x >= 0
    y[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    y[~pos] = ex / (1.0 + ex)

    def back(g):
        return (g * y * (1.0 - y),)

    return _finish("sigmoid", y, (a,), back)


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0

    def back(g):
        return (g * mask,)

    return _finish("relu", np.where(mask, a.data, 0.0), (a,), back)


def softmax_lastaxis(a: Tensor) -> Tensor:
    x = a.data
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=-1, keepdims=True)

    def back(g):
        inner = (g * y).sum(axis=-1, keepdims=True)
        return (y * (g - inner),)

    return _finish("softmax_lastaxis", y, (a,), back)


def log(a: Tensor) -> Tensor:
    x = a.data
    if np.any(x <= 0):
        idx = int(np.argmax(x.reshape(-1) <= 0))
        raise DomainError(f"log: non-positive entry at flat index {idx}")

    def back(g):
        return (g / x,)

    return _finish("log", np.log(x), (a,), back)


def absolute(a: Tensor) -> Tensor:
    x = a.data

    def back(g):
        # subgradient 0 at the kink
        return (g * np.sign(x),)

    return _finish("abs", np.abs(x), (a,), back)


def square(a: Tensor) -> Tensor:
    x = a.data

    def back(g):
        return (g * 2.0 * x,)

    with _quiet():
        out = x * x
    return _finish("square", out, (a,), back)


def neg(a: Tensor) -> Tensor:
    def back(g):
        return (-g,)

    return _finish("neg", -a.data, (a,), back)


_UNARY = {
    "tanh": tanh,
    "sigmoid": sigmoid,
    "relu": relu,
    "softmax_lastaxis": softmax_lastaxis,
    "log": log,
    "abs": absolute,
    "square": square,
    "neg": neg,
}


def apply_unary(kind: str, a: Tensor) -> Tensor:
    if kind not in _UNARY:
        raise AutodiffError(f"unknown unary op kind '{kind}'")
    return _UNARY[kind](a)


# ---------------------------------------------------------------------------
# convolution


def conv2d(x: Tensor, kernels: Tensor, stride: int) -> Tensor:
    """Valid-padding convolution of an H*W*C input with k*k*C*F kernels."""
    if x.data.ndim != 3 or kernels.data.ndim != 4:
        raise ShapeMismatchError(
            f"conv2d: expected HWC input and kkCF kernels, "
            f"got {x.shape} and {kernels.shape}")
    h, w, c = x.shape
    k, k2, kc, f = kernels.shape
    if k != k2 or kc != c:
        raise ShapeMismatchError(
            f"conv2d: kernels {kernels.shape} do not match input {x.shape}")
    if stride < 1:
        raise ShapeMismatchError(f"conv2d: stride must be positive, got {stride}")
    if k > h or k > w:
        raise ShapeMismatchError(
            f"conv2d: kernel {k} exceeds input extents {h}x{w}")
    ho = (h - k) // stride + 1
    wo = (w - k) // stride + 1
    if ho < 1 or wo < 1:
        raise ShapeMismatchError(
            f"conv2d: non-positive output extent {ho}x{wo} "
            f"for input {h}x{w}, kernel {k}, stride {stride}")

    # patches: (ho, wo, c, k, k) view over x
    patches = np.lib.stride_tricks.sliding_window_view(
        x.data, (k, k), axis=(0, 1))[::stride, ::stride]
    with _quiet():
        out = np.tensordot(patches, kernels.data, axes=([2, 3, 4], [2, 0, 1]))

    def back(g):
        dk = np.tensordot(patches, g, axes=([0, 1], [0, 1]))  # (c, k, k, f)
        dk = dk.transpose(1, 2, 0, 3)
        dx = np.zeros((h, w, c))
        prod = np.tensordot(g, kernels.data, axes=([2], [3]))  # (ho, wo, k, k, c)
        for i in range(k):
            for j in range(k):
                dx[i:i + ho * stride:stride, j:j + wo * stride:stride, :] += \
                    prod[:, :, i, j, :]
        return dx, dk

    return _finish("conv2d", np.ascontiguousarray(out), (x, kernels), back)


def pad2d(x: Tensor, pads: tuple[int, int, int, int]) -> Tensor:
    """Zero-pad the leading two axes of an H*W*C tensor (top, bottom, left, right)."""
    t, b, l, r = pads
    if min(t, b, l, r) < 0:
        raise ShapeMismatchError(f"pad2d: negative pad {pads}")
    h, w = x.shape[0], x.shape[1]
    out = np.pad(x.data, ((t, b), (l, r), (0, 0)))

    def back(g):
        return (np.ascontiguousarray(g[t:t + h, l:l + w, :]),)

    return _finish("pad2d", out, (x,), back)


# ---------------------------------------------------------------------------
# structural helpers


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    if int(np.prod(shape)) != a.data.size:
        raise ShapeMismatchError(
            f"reshape: cannot view {a.shape} as {shape}")
    old = a.shape

    def back(g):
        return (g.reshape(old),)

    return _finish("reshape", a.data.reshape(shape), (a,), back)


def gather_rows(table: Tensor, ids: Sequence[int]) -> Tensor:
    """Select rows of a 2-D table; gradients scatter-add back by row id."""
    if table.data.ndim != 2:
        raise ShapeMismatchError(f"gather_rows: table must be 2-D, got {table.shape}")
    idx = np.asarray(ids, dtype=np.intp)
    if idx.ndim != 1 or idx.size == 0:
        raise ShapeMismatchError("gather_rows: ids must be a nonempty 1-D sequence")
    if idx.min() < 0 or idx.max() >= table.shape[0]:
        raise ShapeMismatchError(
            f"gather_rows: id out of range for table with {table.shape[0]} rows")

    def back(g):
        dt = np.zeros_like(table.data)
        np.add.at(dt, idx, g)
        return (dt,)

    return _finish("gather_rows", table.data[idx].copy(), (table,), back)


def stack_rows(tensors: Sequence[Tensor]) -> Tensor:
    """Stack same-shape tensors along a new leading axis."""
    if not tensors:
        raise ShapeMismatchError("stack_rows: empty sequence")
    shape = tensors[0].shape
    for t in tensors:
        if t.shape != shape:
            raise ShapeMismatchError(
                f"stack_rows: mixed shapes {shape} and {t.shape}")
    out = np.stack([t.data for t in tensors])

    def back(g):
        return tuple(g[i] for i in range(len(tensors)))

    return _finish("stack_rows", out, tuple(tensors), back)


def sum_all(a: Tensor) -> Tensor:
    shape = a.shape

    def back(g):
        return (np.broadcast_to(g, shape).copy(),)

    with _quiet():
        out = np.asarray(a.data.sum())
    return _finish("sum_all", out, (a,), back)


def mean_all(a: Tensor) -> Tensor:
    n = a.data.size
    shape = a.shape

    def back(g):
        return (np.broadcast_to(g / n, shape).copy(),)

    return _finish("mean_all", np.asarray(a.data.mean()), (a,), back)


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)

    def back(g):
        return (g * c,)

    with _quiet():
        out = a.data * c
    return _finish("scale", out, (a,), back)


# ---------------------------------------------------------------------------
# reverse sweep


def backward(loss: Tensor, tape: Tape) -> None:
    """Populate .grad for every requires_grad tensor the tape touched.

    Tensors recorded on the tape that do not influence the loss receive an
    all-zero gradient.  Gradients accumulate across fan-out within one sweep
    and across repeated sweeps; callers zero grads between optimizer steps.
    """
    if loss.data.size != 1:
        raise ShapeMismatchError(
            f"backward: loss must be scalar, got shape {loss.shape}")
    flowing: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    touched: dict[int, Tensor] = {}
    for rec in reversed(tape._records):
        for t in rec.inputs:
            if t.requires_grad:
                touched[id(t)] = t
        if rec.output.requires_grad:
            touched[id(rec.output)] = rec.output
        g = flowing.get(id(rec.output))
        if g is None:
            continue
        grads = rec.backward_fn(g)
        for t, gt in zip(rec.inputs, grads):
            if gt is None or not t.requires_grad:
                continue
            acc = flowing.get(id(t))
            flowing[id(t)] = gt if acc is None else acc + gt
    for tid, t in touched.items():
        g = flowing.get(tid)
        if g is None:
            g = np.zeros_like(t.data)
        t.grad = g if t.grad is None else t.grad + g


def finite_diff_check(f: Callable[[], Tensor], params: Sequence[Tensor],
                      eps: float = 1e-5) -> float:
    """Max relative error between analytic grads of f() and central differences.

    f must be a deterministic closure that rebuilds the scalar loss from the
    current contents of ``params``.  Relative error per entry is
    |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
    """
    if eps <= 0:
        raise AutodiffError("finite_diff_check: eps must be positive")
    for p in params:
        p.zero_grad()
    with Tape() as tape:
        loss = f()
    backward(loss, tape)
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy()
                for p in params]
    worst = 0.0
    for p, ana in zip(params, analytic):
        flat = p.data.reshape(-1)
        aflat = ana.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            fp = float(f().data)
            flat[i] = orig - eps
            fm = float(f().data)
            flat[i] = orig
            numeric = (fp - fm) / (2.0 * eps)
            err = abs(aflat[i] - numeric) / max(1e-8, abs(aflat[i]) + abs(numeric))
            if err > worst:
                worst = err
    return worst
