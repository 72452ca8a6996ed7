"""
Value and Tape - reverse-mode automatic differentiation records

A Value carries a float64 array, its gradient accumulator and a reference to the
operation that produced it. A Tape is the append-only record of the operations
of one computation (typically one episode). Every node is appended after its
inputs, so replaying the tape backwards from the loss visits the graph in
reverse topological order.
"""
from typing import Callable, Dict, List, Mapping, Optional, Sequence

import numpy as np

from exceptions.sbmcl_exceptions import (
    SBMCLException,
    SecondOrderException,
    ShapeMismatchException,
)

BackwardFn = Callable[[np.ndarray], None]


class Value:
    """
    A node of the computation graph.

    Values that do not depend on any parameter leaf are constants: they are
    never recorded and receive no gradient.
    """

    __slots__ = ("data", "_grad", "parents", "op", "_backward", "requires_grad",
                 "tape", "name", "_index")

    # numpy defers mixed array/Value arithmetic to the Value operators
    __array_ufunc__ = None

    def __init__(self, data, parents: Sequence["Value"] = (), op: Optional[str] = None,
                 backward: Optional[BackwardFn] = None, requires_grad: bool = False,
                 name: Optional[str] = None):
        self.data = np.asarray(data, dtype=np.float64)
        self._grad: Optional[np.ndarray] = None
        self.parents = tuple(parents)
        self.op = op
        self._backward = backward
        self.requires_grad = requires_grad
        self.tape: Optional["Tape"] = None
        self.name = name
        self._index = -1

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def grad(self) -> np.ndarray:
        if self._grad is None:
            return np.zeros_like(self.data)
        return self._grad

    def accumulate(self, grad: np.ndarray) -> None:
        """Add an incoming gradient contribution."""
        if self._grad is None:
            self._grad = np.array(grad, dtype=np.float64).reshape(self.data.shape)
        else:
            self._grad += grad

    def zero_grad(self) -> None:
        self._grad = None

    def numpy(self) -> np.ndarray:
        """Return a copy of the underlying array."""
        return self.data.copy()

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        label = self.name or self.op or "const"
        return f"Value({label}, shape={self.shape})"

    # Operator overloads route through the op registry.
    def __add__(self, other):
        return ops.add(self, other)

    def __radd__(self, other):
        return ops.add(other, self)

    def __sub__(self, other):
        return ops.sub(self, other)

    def __rsub__(self, other):
        return ops.sub(other, self)

    def __mul__(self, other):
        return ops.mul(self, other)

    def __rmul__(self, other):
        return ops.mul(other, self)

    def __truediv__(self, other):
        return ops.div(self, other)

    def __rtruediv__(self, other):
        return ops.div(other, self)

    def __neg__(self):
        return ops.neg(self)

    def __matmul__(self, other):
        return ops.matmul(self, other)

    def __rmatmul__(self, other):
        return ops.matmul(other, self)

    def __getitem__(self, index):
        return ops.slice_(self, index)

    @property
    def T(self):
        return ops.transpose(self)


def as_value(x) -> Value:
    """Wrap arrays and scalars as constant Values; pass Values through."""
    if isinstance(x, Value):
        return x
    return Value(x)


class Tape:
    """
    Append-only record of the operations of a single computation.

    Parameters enter through `param`, which creates the leaves (roots) whose
    gradients `backward` reports. A Tape is used by one thread; separate
    episodes use separate tapes and share nothing mutable.
    """

    def __init__(self):
        self.nodes: List[Value] = []
        self.roots: Dict[str, Value] = {}
        self._replaying = False

    def param(self, name: str, array) -> Value:
        """Register a parameter leaf."""
        if name in self.roots:
            raise SBMCLException(f"parameter {name!r} registered twice on one tape")
        leaf = Value(array, requires_grad=True, name=name)
        leaf.tape = self
        self.roots[name] = leaf
        return leaf

    def params(self, arrays: Mapping[str, np.ndarray]) -> Dict[str, Value]:
        """Register every array of a parameter map, preserving its order."""
        return {name: self.param(name, array) for name, array in arrays.items()}

    def record(self, node: Value) -> Value:
        if self._replaying:
            raise SecondOrderException(
                f"op {node.op!r} recorded during a backward pass; "
                "second-order gradients are not supported"
            )
        node.tape = self
        node._index = len(self.nodes)
        self.nodes.append(node)
        return node

    def zero_grad(self) -> None:
        for node in self.nodes:
            node.zero_grad()
        for leaf in self.roots.values():
            leaf.zero_grad()

    def backward(self, loss: Value) -> Dict[str, np.ndarray]:
        """
        Gradient of `loss` with respect to every parameter leaf.

        Leaf gradients are reset first, so each call reports the gradient of
        its own loss and repeated calls never accumulate.

        Args:
            loss: scalar Value computed from this tape's leaves (or a constant)

        Returns:
            Dict[str, np.ndarray]: gradient per parameter name

        Raises:
            ShapeMismatchException: If the loss is not a scalar
        """
        loss = as_value(loss)
        if loss.data.shape != ():
            raise ShapeMismatchException("backward", [loss.shape], "loss must be a scalar")

        for leaf in self.roots.values():
            leaf.zero_grad()

        if loss.requires_grad:
            if loss.tape is not self:
                raise SBMCLException("loss was not computed on this tape")
            self._replay(loss)

        return {name: leaf.grad.copy() for name, leaf in self.roots.items()}

    def _replay(self, loss: Value) -> None:
        stop = loss._index + 1 if loss._index >= 0 else 0
        for node in self.nodes[:stop]:
            node.zero_grad()
        loss.accumulate(np.ones(()))

        self._replaying = True
        try:
            if loss._index < 0:
                return  # loss is itself a leaf
            for node in reversed(self.nodes[:stop]):
                if node._grad is not None and node._backward is not None:
                    node._backward(node._grad)
        finally:
            self._replaying = False


def backward(loss: Value, tape: Optional[Tape] = None) -> Dict[str, np.ndarray]:
    """Run the backward pass on `tape` (defaults to the loss's own tape)."""
    tape = tape or (loss.tape if isinstance(loss, Value) else None)
    if tape is None:
        return {}
    return tape.backward(loss)


from . import ops  # noqa: E402  (ops needs Value defined first)
