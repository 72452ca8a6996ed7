"""
Differentiable operations over dense float64 arrays.

Each op computes its exact result with numpy, and when any operand depends on a
parameter leaf it records a node with a closure that pushes the incoming
gradient back to its operands. Broadcasting is limited to scalars, a trailing
row vector against a matrix, and a column against a matrix.
"""
import math
from typing import Callable, Dict, Sequence

import numpy as np
from scipy import linalg
from scipy.special import expit, logsumexp as _logsumexp

from exceptions.sbmcl_exceptions import SBMCLException, ShapeMismatchException

from .value import Value, as_value


def _node(data, parents: Sequence[Value], op: str, backward) -> Value:
    tracked = [p for p in parents if p.requires_grad]
    if not tracked:
        return Value(data, op=op)
    tape = tracked[0].tape
    if any(p.tape is not tape for p in tracked[1:]):
        raise SBMCLException(f"{op}: operands were recorded on different tapes")
    return tape.record(Value(data, parents, op, backward, requires_grad=True))


def _send(parent: Value, grad: np.ndarray) -> None:
    if parent.requires_grad:
        parent.accumulate(_unbroadcast(grad, parent.shape))


def _unbroadcast(grad: np.ndarray, shape) -> np.ndarray:
    grad = np.asarray(grad)
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


def _check_broadcast(op: str, a: Value, b: Value) -> None:
    sa, sb = a.shape, b.shape
    if sa == sb or a.data.size == 1 and a.ndim <= b.ndim or b.data.size == 1 and b.ndim <= a.ndim:
        return
    big, small = (sa, sb) if len(sa) >= len(sb) else (sb, sa)
    if len(big) == 2:
        n, d = big
        if small in ((d,), (1, d), (n, 1)):
            return
    raise ShapeMismatchException(op, [sa, sb])


# Elementwise binary ops

def add(a, b) -> Value:
    a, b = as_value(a), as_value(b)
    _check_broadcast("add", a, b)

    def backward(g):
        _send(a, g)
        _send(b, g)

    return _node(a.data + b.data, (a, b), "add", backward)


def sub(a, b) -> Value:
    a, b = as_value(a), as_value(b)
    _check_broadcast("sub", a, b)

    def backward(g):
        _send(a, g)
        _send(b, -g)

    return _node(a.data - b.data, (a, b), "sub", backward)


def mul(a, b) -> Value:
    a, b = as_value(a), as_value(b)
    _check_broadcast("mul", a, b)

    def backward(g):
        _send(a, g * b.data)
        _send(b, g * a.data)

    return _node(a.data * b.data, (a, b), "mul", backward)


def div(a, b) -> Value:
    a, b = as_value(a), as_value(b)
    _check_broadcast("div", a, b)
    out = a.data / b.data

    def backward(g):
        _send(a, g / b.data)
        _send(b, -g * out / b.data)

    return _node(out, (a, b), "div", backward)


# Elementwise unary ops

def neg(a) -> Value:
    a = as_value(a)
    return _node(-a.data, (a,), "neg", lambda g: _send(a, -g))


def exp(a) -> Value:
    a = as_value(a)
    out = np.exp(a.data)
    return _node(out, (a,), "exp", lambda g: _send(a, g * out))


def log(a) -> Value:
    a = as_value(a)
    return _node(np.log(a.data), (a,), "log", lambda g: _send(a, g / a.data))


def tanh(a) -> Value:
    a = as_value(a)
    out = np.tanh(a.data)
    return _node(out, (a,), "tanh", lambda g: _send(a, g * (1.0 - out * out)))


def relu(a) -> Value:
    a = as_value(a)
    mask = a.data > 0
    return _node(np.where(mask, a.data, 0.0), (a,), "relu", lambda g: _send(a, g * mask))


def softplus(a) -> Value:
    # log(1 + e^x) without overflow for large |x|
    a = as_value(a)
    out = np.logaddexp(0.0, a.data)
    return _node(out, (a,), "softplus", lambda g: _send(a, g * expit(a.data)))


def sigmoid(a) -> Value:
    a = as_value(a)
    out = expit(a.data)
    return _node(out, (a,), "sigmoid", lambda g: _send(a, g * out * (1.0 - out)))


def square(a) -> Value:
    a = as_value(a)
    return _node(a.data * a.data, (a,), "square", lambda g: _send(a, 2.0 * g * a.data))


def sqrt(a) -> Value:
    a = as_value(a)
    out = np.sqrt(a.data)
    return _node(out, (a,), "sqrt", lambda g: _send(a, g / (2.0 * out)))


def reciprocal(a) -> Value:
    a = as_value(a)
    out = 1.0 / a.data
    return _node(out, (a,), "reciprocal", lambda g: _send(a, -g * out * out))


# Reductions

def _exact_sum(data: np.ndarray, axis):
    if axis is None:
        return np.asarray(math.fsum(data.ravel()))
    return np.apply_along_axis(math.fsum, axis, data)


def sum_(a, axis=None, keepdims: bool = False, exact: bool = False) -> Value:
    """
    Sum over `axis` (all axes when None).

    With `exact=True` the sum is correctly rounded, so the result does not
    depend on the order of the summands.
    """
    a = as_value(a)
    if exact:
        out = _exact_sum(a.data, axis)
        if keepdims:
            out = np.expand_dims(out, axis) if axis is not None else out.reshape((1,) * a.ndim)
    else:
        out = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        _send(a, np.broadcast_to(g, a.shape))

    return _node(out, (a,), "sum", backward)


def mean(a, axis=None, keepdims: bool = False) -> Value:
    a = as_value(a)
    if axis is None:
        count = a.data.size
    else:
        axes = axis if isinstance(axis, tuple) else (axis,)
        count = int(np.prod([a.shape[ax] for ax in axes]))
    out = a.data.mean(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        _send(a, np.broadcast_to(g / count, a.shape))

    return _node(out, (a,), "mean", backward)


def logsumexp(a, axis: int = -1, keepdims: bool = False) -> Value:
    a = as_value(a)
    out_keep = _logsumexp(a.data, axis=axis, keepdims=True)
    out = out_keep if keepdims else np.squeeze(out_keep, axis=axis)

    def backward(g):
        g_keep = g if keepdims else np.expand_dims(g, axis)
        _send(a, g_keep * np.exp(a.data - out_keep))

    return _node(out, (a,), "logsumexp", backward)


# Structural ops

def matmul(a, b) -> Value:
    a, b = as_value(a), as_value(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeMismatchException("matmul", [a.shape, b.shape])

    def backward(g):
        _send(a, g @ b.data.T)
        _send(b, a.data.T @ g)

    return _node(a.data @ b.data, (a, b), "matmul", backward)


def concat(values: Sequence, axis: int = 0) -> Value:
    values = [as_value(v) for v in values]
    if not values:
        raise ShapeMismatchException("concat", [], "nothing to concatenate")
    try:
        out = np.concatenate([v.data for v in values], axis=axis)
    except ValueError as e:
        raise ShapeMismatchException("concat", [v.shape for v in values], str(e)) from e
    bounds = np.cumsum([v.shape[axis] for v in values])[:-1]

    def backward(g):
        for v, piece in zip(values, np.split(g, bounds, axis=axis)):
            _send(v, piece)

    return _node(out, values, "concat", backward)


def slice_(a, index) -> Value:
    a = as_value(a)
    try:
        out = np.array(a.data[index])
    except IndexError as e:
        raise ShapeMismatchException("slice", [a.shape], str(e)) from e

    def backward(g):
        full = np.zeros_like(a.data)
        np.add.at(full, index, g)
        _send(a, full)

    return _node(out, (a,), "slice", backward)


def transpose(a) -> Value:
    a = as_value(a)
    if a.ndim != 2:
        raise ShapeMismatchException("transpose", [a.shape], "expects a matrix")
    return _node(a.data.T.copy(), (a,), "transpose", lambda g: _send(a, g.T))


def reshape(a, shape) -> Value:
    a = as_value(a)
    try:
        out = a.data.reshape(shape)
    except ValueError as e:
        raise ShapeMismatchException("reshape", [a.shape, tuple(shape)]) from e
    return _node(out, (a,), "reshape", lambda g: _send(a, np.reshape(g, a.shape)))


def solve(A, B) -> Value:
    """X = A⁻¹ B for a square, non-singular A (vector or matrix right-hand side)."""
    A, B = as_value(A), as_value(B)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or B.ndim not in (1, 2) or B.shape[0] != A.shape[0]:
        raise ShapeMismatchException("solve", [A.shape, B.shape])
    X = linalg.solve(A.data, B.data)

    def backward(g):
        gB = linalg.solve(A.data.T, g)
        _send(B, gB)
        _send(A, -(np.outer(gB, X) if X.ndim == 1 else gB @ X.T))

    return _node(X, (A, B), "solve", backward)


OPS: Dict[str, Callable[..., Value]] = {
    "matmul": matmul,
    "add": add,
    "sub": sub,
    "mul": mul,
    "div": div,
    "neg": neg,
    "exp": exp,
    "log": log,
    "tanh": tanh,
    "relu": relu,
    "softplus": softplus,
    "sigmoid": sigmoid,
    "sum": sum_,
    "mean": mean,
    "logsumexp": logsumexp,
    "concat": lambda *values, axis=0: concat(values, axis=axis),
    "slice": slice_,
    "transpose": transpose,
    "reshape": reshape,
    "square": square,
    "sqrt": sqrt,
    "reciprocal": reciprocal,
    "solve": solve,
}


def forward_op(kind: str, *inputs, **attrs) -> Value:
    """
    Apply the op named `kind` to `inputs`.

    Raises:
        ValueError: If `kind` is not a known op
        ShapeMismatchException: If the input shapes are incompatible
    """
    try:
        fn = OPS[kind]
    except KeyError:
        raise ValueError(f"unknown op kind {kind!r}") from None
    return fn(*inputs, **attrs)
