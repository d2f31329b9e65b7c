# autodiff/node.py
"""Tape-recorded computation graph nodes and reverse-mode traversal."""

import threading
from contextlib import contextmanager
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np


class AutodiffError(Exception):
    """Exception for graph construction and differentiation errors."""
    pass


class ShapeError(AutodiffError, ValueError):
    """Operand shapes do not conform for an op."""
    pass


BackwardFn = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]

_state = threading.local()


def grad_enabled() -> bool:
    """Whether ops currently record parents and backward rules (per thread)."""
    return getattr(_state, "enabled", True)


@contextmanager
def no_grad() -> Iterator[None]:
    """Evaluate ops without recording a graph."""
    previous = grad_enabled()
    _state.enabled = False
    try:
        yield
    finally:
        _state.enabled = previous


class Node:
    """A value in the computation graph.

    Leaves created with requires_grad=True are trainable parameters or
    inputs under differentiation; every op result that depends on one of
    them records its parents and a local backward rule.
    """

    __slots__ = ("value", "grad", "requires_grad", "parents", "backward_fn", "op", "name")

    def __init__(self, value, requires_grad: bool = False, parents: Sequence["Node"] = (),
                 backward_fn: Optional[BackwardFn] = None, op: str = "leaf",
                 name: Optional[str] = None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.parents: Tuple["Node", ...] = tuple(parents)
        self.backward_fn = backward_fn
        self.op = op
        self.name = name

    @property
    def shape(self) -> tuple:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.value)

    def detach(self) -> "Node":
        """Same value, cut from the graph."""
        return Node(self.value.copy())

    def backward(self) -> None:
        backward(self)

    def __repr__(self):
        label = f" name={self.name!r}" if self.name else ""
        return f"Node(op={self.op}{label}, shape={self.shape}, requires_grad={self.requires_grad})"

    # Operator sugar; the op implementations live in autodiff.ops
    def __add__(self, other):
        from autodiff import ops
        return ops.add(self, other)

    def __radd__(self, other):
        from autodiff import ops
        return ops.add(other, self)

    def __sub__(self, other):
        from autodiff import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from autodiff import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from autodiff import ops
        return ops.mul(self, other)

    def __rmul__(self, other):
        from autodiff import ops
        return ops.mul(other, self)

    def __truediv__(self, other):
        from autodiff import ops
        return ops.div(self, other)

    def __rtruediv__(self, other):
        from autodiff import ops
        return ops.div(other, self)

    def __neg__(self):
        from autodiff import ops
        return ops.neg(self)

    def __matmul__(self, other):
        from autodiff import ops
        return ops.matmul(self, other)

    def __getitem__(self, index):
        from autodiff import ops
        return ops.index(self, index)


def as_node(value) -> Node:
    """Wrap a constant as a non-differentiable leaf; Nodes pass through."""
    if isinstance(value, Node):
        return value
    return Node(value)


def parameter(value, name: Optional[str] = None) -> Node:
    """A trainable leaf."""
    node = Node(np.array(value, dtype=np.float64, copy=True), requires_grad=True, name=name)
    node.zero_grad()
    return node


def topological_order(root: Node) -> List[Node]:
    """Differentiable nodes reachable from root, each parent before its children."""
    order: List[Node] = []
    visited = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(loss: Node) -> None:
    """Accumulate d(loss)/d(node) into `grad` of every reachable differentiable node.

    Gradients accumulate across calls; call zero_grad on the leaves between steps.
    """
    if loss.value.size != 1:
        raise AutodiffError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        raise AutodiffError("loss does not depend on any differentiable node")

    pending = {id(loss): np.ones_like(loss.value)}
    for node in reversed(topological_order(loss)):
        grad = pending.pop(id(node), None)
        if grad is None:
            continue

        node.grad = grad.copy() if node.grad is None else node.grad + grad

        if node.backward_fn is None:
            continue
        parent_grads = node.backward_fn(grad)
        for parent, parent_grad in zip(node.parents, parent_grads):
            if parent_grad is None or not parent.requires_grad:
                continue
            key = id(parent)
            if key in pending:
                pending[key] = pending[key] + parent_grad
            else:
                pending[key] = parent_grad
