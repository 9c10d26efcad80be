"""Dense float64 tensors with reverse-mode automatic differentiation.

The recording model is a Wengert list: every differentiable operation
appends one record to the active ``Tape`` in execution order, so the list
is already topologically ordered (inputs precede consumers) and
``backward`` is a single reverse sweep.  Records may have several outputs
(the fused LSTM cell emits its hidden and cell states together), and
gradients accumulate additively across fan-out.

Conventions:

* float64 everywhere.  Problem sizes here are desk-scale, and the test
  suite leans on finite-difference comparisons that need the precision.
* The subgradient of relu / leaky_relu at the kink is the negative-side
  slope, so gradient checks must sample away from zero pre-activations.
* Tensors are treated as immutable while a tape referencing them is
  alive; optimizers mutate ``data`` in place only between tapes.
* A tape is single-threaded.  Separate tapes share nothing and may run
  concurrently; leaf gradients accumulate in ``Tensor.grad`` across
  backward calls until the caller clears them.
"""

from __future__ import annotations

import threading
from typing import Callable

import numpy as np

__all__ = [
    "Tensor",
    "Tape",
    "ShapeError",
    "backward",
    "check_gradients",
    "matmul",
    "concat",
    "slice1d",
    "add",
    "mul",
    "neg",
    "scale",
    "tsum",
    "softmax",
    "leaky_relu",
    "relu",
    "sigmoid",
    "tanh",
    "pointwise",
    "dropout",
    "cross_entropy",
    "set_debug_checks",
]


class ShapeError(ValueError):
    """Operand shapes cannot be combined."""


_DEBUG = False


def set_debug_checks(enabled: bool) -> None:
    """Toggle NaN/Inf detection on every op output (off by default)."""
    global _DEBUG
    _DEBUG = bool(enabled)


_STATE = threading.local()


def _tape_stack() -> list:
    stack = getattr(_STATE, "stack", None)
    if stack is None:
        stack = _STATE.stack = []
    return stack


def current_tape():
    stack = _tape_stack()
    return stack[-1] if stack else None


class Tensor:
    """A dense float64 array plus autodiff bookkeeping."""

    __slots__ = ("data", "requires_grad", "grad")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = None

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}{flag})"

    # operator sugar, filled in after the op definitions below
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, neg(other))

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return neg(self)


def _out(data: np.ndarray, requires_grad: bool) -> Tensor:
    if _DEBUG and not np.all(np.isfinite(data)):
        raise FloatingPointError("non-finite value produced by an operation")
    t = Tensor.__new__(Tensor)
    t.data = data
    t.requires_grad = requires_grad
    t.grad = None
    return t


class Tape:
    """Execution-ordered record of differentiable operations.

    ``nodes`` holds ``(outputs, backward_fn)`` pairs; ``backward_fn``
    receives one upstream gradient per output (zeros where unused) and
    returns ``(input_tensor, gradient)`` contributions.  After a backward
    pass ``gradients`` maps each participating leaf to its gradient.
    """

    __slots__ = ("nodes", "gradients")

    def __init__(self):
        self.nodes: list[tuple[tuple[Tensor, ...], Callable]] = []
        self.gradients: dict[Tensor, np.ndarray] = {}

    def __enter__(self) -> "Tape":
        _tape_stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        popped = _tape_stack().pop()
        if popped is not self:  # pragma: no cover - misuse guard
            raise RuntimeError("tape context exited out of order")
        return False

    def _record(self, outs: tuple, backward_fn: Callable) -> None:
        self.nodes.append((outs, backward_fn))

    def backward(self, loss: Tensor, into_grads: bool = True):
        return backward(self, loss, into_grads=into_grads)


def backward(tape: Tape, loss: Tensor, into_grads: bool = True) -> dict:
    """Reverse sweep from ``loss``; returns {leaf tensor: gradient}.

    Every ``requires_grad`` leaf reachable from ``loss`` receives a
    gradient of its own shape.  When ``into_grads`` is set the gradient is
    also added into ``Tensor.grad`` (the accumulation used for
    mini-batches); gradient checking passes ``into_grads=False`` to leave
    model state untouched.  A loss that was never recorded (a constant)
    yields an empty map.
    """
    if not isinstance(loss, Tensor) or loss.data.shape != ():
        raise ValueError("backward expects a scalar loss tensor")
    produced = set()
    for outs, _ in tape.nodes:
        for o in outs:
            produced.add(id(o))
    grads: dict[int, np.ndarray] = {}
    holders: dict[int, Tensor] = {}
    if loss.requires_grad or id(loss) in produced:
        grads[id(loss)] = np.ones((), dtype=np.float64)
        holders[id(loss)] = loss
    for outs, back in reversed(tape.nodes):
        gs = []
        live = False
        for o in outs:
            g = grads.pop(id(o), None)
            holders.pop(id(o), None)
            if g is not None:
                live = True
            gs.append(g)
        if not live:
            continue
        gs = tuple(
            g if g is not None else np.zeros(o.data.shape) for g, o in zip(gs, outs)
        )
        for t, tg in back(gs):
            if not t.requires_grad:
                continue
            k = id(t)
            if k in grads:
                grads[k] = grads[k] + tg
            else:
                grads[k] = tg
                holders[k] = t
    result: dict[Tensor, np.ndarray] = {}
    for k, g in grads.items():
        t = holders[k]
        if id(t) in produced or not t.requires_grad:
            continue
        g = np.asarray(g, dtype=np.float64)
        if g.shape != t.data.shape:  # pragma: no cover - op contract guard
            raise RuntimeError("corrupt tape: gradient shape mismatch")
        result[t] = g
        if into_grads:
            t.grad = g if t.grad is None else t.grad + g
    tape.gradients = result
    return result


# ---------------------------------------------------------------------------
# operations


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product for rank 1/2 operands (vector cases follow numpy)."""
    ad, bd = a.data, b.data
    if ad.ndim not in (1, 2) or bd.ndim not in (1, 2):
        raise ShapeError(f"matmul supports rank 1 or 2 operands, got {ad.shape} and {bd.shape}")
    if ad.shape[-1] != bd.shape[0]:
        raise ShapeError(f"matmul: inner dimensions differ: {ad.shape} vs {bd.shape}")
    req = a.requires_grad or b.requires_grad
    out = _out(ad @ bd, req)
    tape = current_tape()
    if req and tape is not None:

        def back(gs):
            (g,) = gs
            contribs = []
            if a.requires_grad:
                if ad.ndim == 2 and bd.ndim == 2:
                    ga = g @ bd.T
                elif ad.ndim == 2:
                    ga = np.outer(g, bd)
                elif bd.ndim == 2:
                    ga = bd @ g
                else:
                    ga = g * bd
                contribs.append((a, ga))
            if b.requires_grad:
                if bd.ndim == 2 and ad.ndim == 2:
                    gb = ad.T @ g
                elif bd.ndim == 2:
                    gb = np.outer(ad, g)
                elif ad.ndim == 2:
                    gb = ad.T @ g
                else:
                    gb = g * ad
                contribs.append((b, gb))
            return contribs

        tape._record((out,), back)
    return out


def concat(a: Tensor, b: Tensor) -> Tensor:
    """Concatenate two vectors; backward splits the upstream gradient."""
    if a.data.ndim != 1 or b.data.ndim != 1:
        raise ShapeError(f"concat expects rank-1 operands, got {a.data.shape} and {b.data.shape}")
    req = a.requires_grad or b.requires_grad
    out = _out(np.concatenate((a.data, b.data)), req)
    tape = current_tape()
    if req and tape is not None:
        m = a.data.shape[0]

        def back(gs):
            (g,) = gs
            contribs = []
            if a.requires_grad:
                contribs.append((a, g[:m]))
            if b.requires_grad:
                contribs.append((b, g[m:]))
            return contribs

        tape._record((out,), back)
    return out


def slice1d(x: Tensor, start: int, stop: int) -> Tensor:
    """Contiguous slice of a vector; the concat/slice pair round-trips."""
    if x.data.ndim != 1:
        raise ShapeError(f"slice1d expects a rank-1 operand, got {x.data.shape}")
    n = x.data.shape[0]
    if not (0 <= start <= stop <= n):
        raise ShapeError(f"slice1d bounds [{start}:{stop}] invalid for length {n}")
    out = _out(x.data[start:stop].copy(), x.requires_grad)
    tape = current_tape()
    if x.requires_grad and tape is not None:

        def back(gs):
            (g,) = gs
            full = np.zeros(n)
            full[start:stop] = g
            return ((x, full),)

        tape._record((out,), back)
    return out


def _elementwise_binary(a: Tensor, b: Tensor, name: str):
    if a.data.shape != b.data.shape:
        raise ShapeError(f"{name}: shapes differ: {a.data.shape} vs {b.data.shape}")


def add(a: Tensor, b: Tensor) -> Tensor:
    _elementwise_binary(a, b, "add")
    req = a.requires_grad or b.requires_grad
    out = _out(a.data + b.data, req)
    tape = current_tape()
    if req and tape is not None:

        def back(gs):
            (g,) = gs
            contribs = []
            if a.requires_grad:
                contribs.append((a, g))
            if b.requires_grad:
                contribs.append((b, g))
            return contribs

        tape._record((out,), back)
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise (Hadamard) product of same-shape tensors."""
    _elementwise_binary(a, b, "mul")
    req = a.requires_grad or b.requires_grad
    out = _out(a.data * b.data, req)
    tape = current_tape()
    if req and tape is not None:
        ad, bd = a.data, b.data

        def back(gs):
            (g,) = gs
            contribs = []
            if a.requires_grad:
                contribs.append((a, g * bd))
            if b.requires_grad:
                contribs.append((b, g * ad))
            return contribs

        tape._record((out,), back)
    return out


def neg(x: Tensor) -> Tensor:
    out = _out(-x.data, x.requires_grad)
    tape = current_tape()
    if x.requires_grad and tape is not None:
        tape._record((out,), lambda gs: ((x, -gs[0]),))
    return out


def scale(x: Tensor, c: float) -> Tensor:
    """Multiply by a python scalar constant (not differentiated w.r.t. c)."""
    c = float(c)
    out = _out(x.data * c, x.requires_grad)
    tape = current_tape()
    if x.requires_grad and tape is not None:
        tape._record((out,), lambda gs: ((x, gs[0] * c),))
    return out


def tsum(x: Tensor) -> Tensor:
    """Sum of all entries, as a scalar tensor."""
    out = _out(np.asarray(x.data.sum()), x.requires_grad)
    tape = current_tape()
    if x.requires_grad and tape is not None:
        shape = x.data.shape

        def back(gs):
            (g,) = gs
            return ((x, np.full(shape, float(g))),)

        tape._record((out,), back)
    return out


def softmax(x: Tensor) -> Tensor:
    """Stable softmax of a vector (max subtraction); output sums to one."""
    if x.data.ndim != 1:
        raise ShapeError(f"softmax expects a rank-1 operand, got {x.data.shape}")
    if x.data.shape[0] == 0:
        raise ValueError("softmax of an empty vector")
    z = x.data - x.data.max()
    e = np.exp(z)
    y = e / e.sum()
    out = _out(y, x.requires_grad)
    tape = current_tape()
    if x.requires_grad and tape is not None:

        def back(gs):
            (g,) = gs
            return ((x, y * (g - float(g @ y))),)

        tape._record((out,), back)
    return out


def leaky_relu(x: Tensor, alpha: float) -> Tensor:
    """max(x, alpha*x) elementwise; the subgradient at 0 is alpha."""
    alpha = float(alpha)
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"leaky_relu slope must lie in [0, 1), got {alpha}")
    xd = x.data
    out = _out(np.where(xd > 0, xd, alpha * xd), x.requires_grad)
    tape = current_tape()
    if x.requires_grad and tape is not None:

        def back(gs):
            (g,) = gs
            return ((x, g * np.where(xd > 0, 1.0, alpha)),)

        tape._record((out,), back)
    return out


def relu(x: Tensor) -> Tensor:
    return leaky_relu(x, 0.0)


def sigmoid(x: Tensor) -> Tensor:
    with np.errstate(over="ignore"):
        y = 1.0 / (1.0 + np.exp(-x.data))
    out = _out(y, x.requires_grad)
    tape = current_tape()
    if x.requires_grad and tape is not None:
        tape._record((out,), lambda gs: ((x, gs[0] * y * (1.0 - y)),))
    return out


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)
    out = _out(y, x.requires_grad)
    tape = current_tape()
    if x.requires_grad and tape is not None:
        tape._record((out,), lambda gs: ((x, gs[0] * (1.0 - y * y)),))
    return out


def pointwise(kind: str, x: Tensor) -> Tensor:
    """Dispatch for the gate nonlinearities: kind in {"sigmoid", "tanh"}."""
    if kind == "sigmoid":
        return sigmoid(x)
    if kind == "tanh":
        return tanh(x)
    raise ValueError(f"unknown pointwise kind {kind!r}")


def dropout(x: Tensor, p: float, training: bool, rng) -> Tensor:
    """Inverted dropout: zero with probability p, scale survivors by 1/(1-p).

    At inference (training=False) this is the identity, so trained nets
    need no rescaling.  ``rng`` is a socialtext.rng.Rng (or anything with
    a ``random(shape)`` method).
    """
    p = float(p)
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout rate must lie in [0, 1), got {p}")
    if not training or p == 0.0:
        return x
    keep = (rng.random(x.data.shape) >= p) / (1.0 - p)
    out = _out(x.data * keep, x.requires_grad)
    tape = current_tape()
    if x.requires_grad and tape is not None:
        tape._record((out,), lambda gs: ((x, gs[0] * keep),))
    return out


def cross_entropy(logits: Tensor, label: int) -> Tensor:
    """-log softmax(logits)[label], computed via log-sum-exp."""
    if logits.data.ndim != 1:
        raise ShapeError(f"cross_entropy expects rank-1 logits, got {logits.data.shape}")
    n = logits.data.shape[0]
    label = int(label)
    if not 0 <= label < n:
        raise IndexError(f"label {label} out of range for {n} classes")
    z = logits.data - logits.data.max()
    e = np.exp(z)
    s = e.sum()
    out = _out(np.asarray(np.log(s) - z[label]), logits.requires_grad)
    tape = current_tape()
    if logits.requires_grad and tape is not None:
        sm = e / s

        def back(gs):
            (g,) = gs
            gl = sm.copy()
            gl[label] -= 1.0
            return ((logits, gl * float(g)),)

        tape._record((out,), back)
    return out


def check_gradients(f, x: Tensor, eps: float = 1e-5) -> float:
    """Max relative error between reverse-mode and central differences.

    ``f`` must be a deterministic scalar-valued function of ``x`` (it is
    re-evaluated at coordinate perturbations without a tape).  The error
    for coordinate i is |analytic - central| / max(1e-8, |central|).
    Callers should keep inputs away from activation kinks.
    """
    if not isinstance(x, Tensor) or not x.requires_grad:
        raise ValueError("check_gradients needs a requires_grad tensor input")
    with Tape() as tape:
        out = f(x)
    if not isinstance(out, Tensor) or out.data.shape != ():
        raise ValueError("check_gradients needs a scalar-valued function")
    gmap = backward(tape, out, into_grads=False)
    analytic = gmap.get(x)
    if analytic is None:
        analytic = np.zeros_like(x.data)
    flat = x.data.reshape(-1)
    aflat = analytic.reshape(-1)
    worst = 0.0
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        fp = float(f(x).data)
        flat[i] = orig - eps
        fm = float(f(x).data)
        flat[i] = orig
        central = (fp - fm) / (2.0 * eps)
        err = abs(aflat[i] - central) / max(1e-8, abs(central))
        if err > worst:
            worst = err
    return worst
