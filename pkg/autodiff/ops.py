# autodiff/ops.py
"""Differentiable operations over float64 arrays.

Each op computes its value eagerly and, when any operand is
differentiable and recording is enabled, returns a Node carrying its
parents and a rule mapping the output gradient to operand gradients.
Elementwise ops follow numpy broadcasting; gradients are summed back to
each operand's shape.
"""

from typing import Optional, Sequence, Tuple, Union

import numpy as np

from autodiff.node import Node, ShapeError, as_node, grad_enabled

Operand = Union[Node, np.ndarray, float, int]


def _make(value: np.ndarray, parents: Tuple[Node, ...], backward_fn, op: str) -> Node:
    if grad_enabled() and any(p.requires_grad for p in parents):
        return Node(value, requires_grad=True, parents=parents, backward_fn=backward_fn, op=op)
    return Node(value, op=op)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcast gradient back down to `shape`."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _check_broadcast(op: str, a: Node, b: Node) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: incompatible shapes {a.shape} and {b.shape}")


# Binary elementwise ops

def add(a: Operand, b: Operand) -> Node:
    a, b = as_node(a), as_node(b)
    _check_broadcast("add", a, b)

    def backward_fn(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _make(a.value + b.value, (a, b), backward_fn, "add")


def sub(a: Operand, b: Operand) -> Node:
    a, b = as_node(a), as_node(b)
    _check_broadcast("sub", a, b)

    def backward_fn(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _make(a.value - b.value, (a, b), backward_fn, "sub")


def mul(a: Operand, b: Operand) -> Node:
    a, b = as_node(a), as_node(b)
    _check_broadcast("mul", a, b)

    def backward_fn(g):
        return _unbroadcast(g * b.value, a.shape), _unbroadcast(g * a.value, b.shape)

    return _make(a.value * b.value, (a, b), backward_fn, "mul")


def div(a: Operand, b: Operand) -> Node:
    """Elementwise a / b."""
    a, b = as_node(a), as_node(b)
    _check_broadcast("div", a, b)
    out = a.value / b.value

    def backward_fn(g):
        return (_unbroadcast(g / b.value, a.shape),
                _unbroadcast(-g * out / b.value, b.shape))

    return _make(out, (a, b), backward_fn, "div")


def matmul(a: Operand, b: Operand) -> Node:
    """Matrix product for 1-D and 2-D operands."""
    a, b = as_node(a), as_node(b)
    if a.ndim not in (1, 2) or b.ndim not in (1, 2) or a.shape[-1] != b.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")

    def backward_fn(g):
        left, right = a.value, b.value
        if left.ndim == 2 and right.ndim == 2:
            return g @ right.T, left.T @ g
        if left.ndim == 2:
            return np.outer(g, right), left.T @ g
        if right.ndim == 2:
            return right @ g, np.outer(left, g)
        return g * right, g * left

    return _make(a.value @ b.value, (a, b), backward_fn, "matmul")


# Unary ops

def neg(a: Operand) -> Node:
    a = as_node(a)
    return _make(-a.value, (a,), lambda g: (-g,), "neg")


def scale(a: Operand, factor: float) -> Node:
    """Multiply by a constant scalar."""
    a = as_node(a)
    factor = float(factor)
    return _make(a.value * factor, (a,), lambda g: (g * factor,), "scale")


def _sigmoid_value(x: np.ndarray) -> np.ndarray:
    # exp(-log(1 + e^-x)) stays finite for any magnitude of x
    return np.exp(-np.logaddexp(0.0, -x))


def sigmoid(a: Operand) -> Node:
    a = as_node(a)
    out = _sigmoid_value(a.value)
    return _make(out, (a,), lambda g: (g * out * (1.0 - out),), "sigmoid")


def tanh(a: Operand) -> Node:
    a = as_node(a)
    out = np.tanh(a.value)
    return _make(out, (a,), lambda g: (g * (1.0 - out * out),), "tanh")


def relu(a: Operand) -> Node:
    a = as_node(a)
    mask = a.value > 0
    return _make(np.where(mask, a.value, 0.0), (a,), lambda g: (g * mask,), "relu")


def softplus(a: Operand) -> Node:
    """log(1 + e^x), the positivity map used for time constants and conductances."""
    a = as_node(a)
    out = np.logaddexp(0.0, a.value)
    slope = _sigmoid_value(a.value)
    return _make(out, (a,), lambda g: (g * slope,), "softplus")


def exp(a: Operand) -> Node:
    a = as_node(a)
    out = np.exp(a.value)
    return _make(out, (a,), lambda g: (g * out,), "exp")


def square(a: Operand) -> Node:
    a = as_node(a)
    return _make(a.value * a.value, (a,), lambda g: (2.0 * g * a.value,), "square")


# Reductions

def sum(a: Operand, axis: Optional[int] = None) -> Node:  # noqa: A001 - mirrors numpy naming
    a = as_node(a)
    out = a.value.sum(axis=axis)

    def backward_fn(g):
        if axis is None:
            return (np.broadcast_to(g, a.shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), a.shape).copy(),)

    return _make(out, (a,), backward_fn, "sum")


def mean(a: Operand, axis: Optional[int] = None) -> Node:
    a = as_node(a)
    count = a.value.size if axis is None else a.shape[axis]
    if count == 0:
        raise ShapeError(f"mean: empty operand of shape {a.shape}")
    out = a.value.mean(axis=axis)

    def backward_fn(g):
        if axis is None:
            return (np.broadcast_to(g / count, a.shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g / count, axis), a.shape).copy(),)

    return _make(out, (a,), backward_fn, "mean")


# Structural ops

def concat(nodes: Sequence[Operand], axis: int = 0) -> Node:
    nodes = tuple(as_node(n) for n in nodes)
    if not nodes:
        raise ShapeError("concat: no operands")
    try:
        out = np.concatenate([n.value for n in nodes], axis=axis)
    except ValueError:
        shapes = ", ".join(str(n.shape) for n in nodes)
        raise ShapeError(f"concat: incompatible shapes {shapes} along axis {axis}")
    bounds = np.cumsum([n.shape[axis] for n in nodes])[:-1]

    def backward_fn(g):
        return tuple(np.split(g, bounds, axis=axis))

    return _make(out, nodes, backward_fn, "concat")


def reshape(a: Operand, shape: tuple) -> Node:
    a = as_node(a)
    try:
        out = a.value.reshape(shape)
    except ValueError:
        raise ShapeError(f"reshape: cannot reshape {a.shape} to {shape}")
    return _make(out, (a,), lambda g: (g.reshape(a.shape),), "reshape")


def index(a: Operand, key) -> Node:
    """Basic slicing/indexing, a[key]."""
    a = as_node(a)
    out = np.array(a.value[key], dtype=np.float64)

    def backward_fn(g):
        grad = np.zeros_like(a.value)
        np.add.at(grad, key, g)
        return (grad,)

    return _make(out, (a,), backward_fn, "index")


def gather(a: Operand, indices: np.ndarray) -> Node:
    """Select rows of `a` along axis 0: out[k] = a[indices[k]]."""
    a = as_node(a)
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size and (indices.min() < 0 or indices.max() >= a.shape[0]):
        raise ShapeError(f"gather: indices out of range for shape {a.shape}")

    def backward_fn(g):
        grad = np.zeros_like(a.value)
        np.add.at(grad, indices, g)
        return (grad,)

    return _make(a.value[indices], (a,), backward_fn, "gather")


def scatter_sum(a: Operand, indices: np.ndarray, length: int) -> Node:
    """Segment sum along axis 0: out[i] = sum of a[k] over k with indices[k] == i."""
    a = as_node(a)
    indices = np.asarray(indices, dtype=np.int64)
    if indices.shape[0] != a.shape[0]:
        raise ShapeError(f"scatter_sum: {indices.shape[0]} indices for operand of shape {a.shape}")
    if indices.size and (indices.min() < 0 or indices.max() >= length):
        raise ShapeError(f"scatter_sum: indices out of range for length {length}")
    out = np.zeros((length,) + a.shape[1:], dtype=np.float64)
    np.add.at(out, indices, a.value)

    def backward_fn(g):
        return (g[indices],)

    return _make(out, (a,), backward_fn, "scatter_sum")
