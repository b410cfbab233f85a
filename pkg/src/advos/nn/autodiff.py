"""Tape-based reverse-mode autodiff over dense float64 arrays.

Ops executed while a :class:`Tape` is active are appended to it in execution
order, so the node list is topologically sorted by construction. Every op
carries a first-order vector-Jacobian product written in plain numpy. Ops
that are also needed for double backpropagation (the critic's gradient
penalty) additionally carry a VJP expressed with differentiable ops; calling
``Tape.gradient(..., create_graph=True)`` uses those and records the backward
computation on the same tape.

Example::

    w = Tensor([[3.0]], requires_grad=True)
    with Tape() as tape:
        loss = (w * w).sum()
    (g,) = tape.gradient(loss, [w])   # g == [[6.0]]
"""
from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from ..errors import ContractError, UnsupportedOpError

_ACTIVE: list["Tape"] = []


def _as_array(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


class Tensor:
    __slots__ = ("data", "requires_grad", "name")
    __array_priority__ = 100

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        self.data = _as_array(data)
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def T(self) -> "Tensor":
        return transpose(self)

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor({self.data!r}{flag})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            return mul(self, reciprocal(other))
        return mul(self, 1.0 / float(other))

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def sum(self, axis=None, keepdims=False):
        return sum_(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis=axis, keepdims=keepdims)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def values(x) -> np.ndarray:
    """Raw float64 array behind a Tensor or array-like (never ndarray.data)."""
    return x.data if isinstance(x, Tensor) else _as_array(x)


class Node:
    __slots__ = ("op", "inputs", "output", "fn", "vjp", "vjp_t")

    def __init__(self, op, inputs, output, fn, vjp, vjp_t):
        self.op = op
        self.inputs = inputs
        self.output = output
        self.fn = fn
        self.vjp = vjp
        self.vjp_t = vjp_t


class Tape:
    """Records differentiable ops executed inside its ``with`` block."""

    def __init__(self):
        self.nodes: list[Node] = []

    def __enter__(self) -> "Tape":
        _ACTIVE.append(self)
        return self

    def __exit__(self, *exc):
        _ACTIVE.remove(self)
        return False

    def __len__(self):
        return len(self.nodes)

    def record(self, node: Node) -> None:
        self.nodes.append(node)

    def gradient(self, target: Tensor, sources: Sequence[Tensor],
                 create_graph: bool = False, grad_output=None) -> list:
        """Gradients of ``target`` with respect to each of ``sources``.

        Without ``create_graph`` the results are plain Tensors detached from
        the graph. With it, they are tape nodes that can themselves be
        differentiated; every op on the path must have a second-order rule.
        """
        if grad_output is None:
            if target.data.size != 1:
                raise ContractError(f"gradient target must be scalar, got shape {target.shape}")
            seed = np.ones_like(target.data)
        else:
            seed = _as_array(grad_output)
            if seed.shape != target.shape:
                raise ContractError("grad_output shape does not match target")

        nodes = list(self.nodes)
        grads: dict[int, object] = {id(target): Tensor(seed) if create_graph else seed}
        if create_graph:
            _ACTIVE.append(self)
        try:
            for node in reversed(nodes):
                g = grads.get(id(node.output))
                if g is None:
                    continue
                if create_graph:
                    if node.vjp_t is None:
                        raise UnsupportedOpError(f"op '{node.op}' has no second-order rule")
                    in_grads = node.vjp_t(g, node.output)
                else:
                    in_grads = node.vjp(g, node.output.data)
                for inp, ig in zip(node.inputs, in_grads):
                    if ig is None or not inp.requires_grad:
                        continue
                    prev = grads.get(id(inp))
                    grads[id(inp)] = ig if prev is None else prev + ig
        finally:
            if create_graph:
                _ACTIVE.remove(self)

        out = []
        for s in sources:
            g = grads.get(id(s))
            if g is None:
                g = np.zeros_like(s.data)
                out.append(Tensor(g))
            else:
                out.append(g if isinstance(g, Tensor) else Tensor(g))
        return out

    def replay(self) -> bool:
        """Recompute every node from its inputs; True if all match bit-for-bit."""
        for node in self.nodes:
            again = node.fn(*[t.data for t in node.inputs])
            if not np.array_equal(again, node.output.data):
                return False
        return True


def current_tape() -> Optional[Tape]:
    return _ACTIVE[-1] if _ACTIVE else None


def _apply(op: str, fn: Callable, inputs: Sequence[Tensor], vjp: Callable,
           vjp_t: Optional[Callable] = None) -> Tensor:
    out = Tensor(fn(*[t.data for t in inputs]))
    tape = current_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        tape.record(Node(op, tuple(inputs), out, fn, vjp, vjp_t))
    return out


def unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Sum ``g`` down to ``shape`` (inverse of numpy broadcasting)."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


# --- structural ops -------------------------------------------------------

def sum_to(x, shape) -> Tensor:
    x = as_tensor(x)
    shape = tuple(shape)
    if x.shape == shape:
        return x
    return _apply("sum_to", lambda a: unbroadcast(a, shape), [x],
                  lambda g, o: (np.broadcast_to(g, x.shape).copy(),),
                  lambda g, o: (broadcast_to(g, x.shape),))


def broadcast_to(x, shape) -> Tensor:
    x = as_tensor(x)
    shape = tuple(shape)
    if x.shape == shape:
        return x
    return _apply("broadcast_to", lambda a: np.broadcast_to(a, shape).copy(), [x],
                  lambda g, o: (unbroadcast(g, x.shape),),
                  lambda g, o: (sum_to(g, x.shape),))


def transpose(x) -> Tensor:
    x = as_tensor(x)
    return _apply("transpose", lambda a: a.T.copy(), [x],
                  lambda g, o: (g.T,),
                  lambda g, o: (transpose(g),))


def concat_rows(parts: Sequence[Tensor]) -> Tensor:
    parts = [as_tensor(p) for p in parts]
    if len(parts) == 1:
        return parts[0]
    bounds = np.cumsum([p.shape[0] for p in parts])[:-1]
    return _apply("concat_rows", lambda *a: np.concatenate(a, axis=0), parts,
                  lambda g, o: tuple(np.split(g, bounds, axis=0)))


# --- arithmetic -----------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _apply("add", np.add, [a, b],
                  lambda g, o: (unbroadcast(g, a.shape), unbroadcast(g, b.shape)),
                  lambda g, o: (sum_to(g, a.shape), sum_to(g, b.shape)))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _apply("sub", np.subtract, [a, b],
                  lambda g, o: (unbroadcast(g, a.shape), unbroadcast(-g, b.shape)),
                  lambda g, o: (sum_to(g, a.shape), sum_to(neg(g), b.shape)))


def neg(a) -> Tensor:
    a = as_tensor(a)
    return _apply("neg", np.negative, [a],
                  lambda g, o: (-g,),
                  lambda g, o: (neg(g),))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _apply("mul", np.multiply, [a, b],
                  lambda g, o: (unbroadcast(g * b.data, a.shape), unbroadcast(g * a.data, b.shape)),
                  lambda g, o: (sum_to(mul(g, b), a.shape), sum_to(mul(g, a), b.shape)))


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _apply("matmul", np.matmul, [a, b],
                  lambda g, o: (g @ b.data.T, a.data.T @ g),
                  lambda g, o: (matmul(g, transpose(b)), matmul(transpose(a), g)))


def reciprocal(a) -> Tensor:
    a = as_tensor(a)
    return _apply("reciprocal", np.reciprocal, [a],
                  lambda g, o: (-g * o * o,),
                  lambda g, o: (neg(mul(g, square(o))),))


def square(a) -> Tensor:
    a = as_tensor(a)
    return _apply("square", np.square, [a],
                  lambda g, o: (2.0 * g * a.data,),
                  lambda g, o: (mul(g, mul(a, 2.0)),))


def sqrt(a) -> Tensor:
    a = as_tensor(a)
    return _apply("sqrt", np.sqrt, [a],
                  lambda g, o: (0.5 * g / o,),
                  lambda g, o: (mul(g, mul(reciprocal(o), 0.5)),))


def sum_(a, axis=None, keepdims=False) -> Tensor:
    a = as_tensor(a)
    shape = a.shape

    def _expand(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return np.broadcast_to(g, shape).copy()

    def _expand_t(g):
        if axis is not None and not keepdims:
            g = reshape(g, np.expand_dims(np.empty(g.shape), axis).shape)
        elif axis is None and not keepdims:
            g = reshape(g, (1,) * len(shape))
        return broadcast_to(g, shape)

    return _apply("sum", lambda x: np.sum(x, axis=axis, keepdims=keepdims), [a],
                  lambda g, o: (_expand(g),),
                  lambda g, o: (_expand_t(g),))


def mean(a, axis=None, keepdims=False) -> Tensor:
    a = as_tensor(a)
    n = a.size if axis is None else a.shape[axis]
    return mul(sum_(a, axis=axis, keepdims=keepdims), 1.0 / n)


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    shape = tuple(shape)
    if a.shape == shape:
        return a
    return _apply("reshape", lambda x: x.reshape(shape), [a],
                  lambda g, o: (g.reshape(a.shape),),
                  lambda g, o: (reshape(g, a.shape),))


# --- nonlinearities -------------------------------------------------------

def leaky_relu(a, slope: float = 0.2) -> Tensor:
    a = as_tensor(a)
    mask = np.where(a.data > 0, 1.0, slope)
    # d/dx of the mask is zero almost everywhere, so the mask is a constant
    # on the second-order path.
    return _apply("leaky_relu", lambda x: x * np.where(x > 0, 1.0, slope), [a],
                  lambda g, o: (g * mask,),
                  lambda g, o: (mul(g, Tensor(mask)),))


def relu(a) -> Tensor:
    return leaky_relu(a, 0.0)


def softmax(a) -> Tensor:
    """Row-wise softmax of a 2-D tensor."""
    a = as_tensor(a)

    def fn(x):
        e = np.exp(x - x.max(axis=1, keepdims=True))
        return e / e.sum(axis=1, keepdims=True)

    def vjp(g, s):
        return (s * (g - (g * s).sum(axis=1, keepdims=True)),)

    def vjp_t(g, s):
        return (mul(s, sub(g, sum_(mul(g, s), axis=1, keepdims=True))),)

    return _apply("softmax", fn, [a], vjp, vjp_t)


def log(a, floor: float = 0.0) -> Tensor:
    """Natural log of ``max(a, floor)``; zero gradient where clamped."""
    a = as_tensor(a)
    keep = a.data > floor if floor > 0 else np.ones(a.shape, dtype=bool)

    def fn(x):
        return np.log(np.maximum(x, floor)) if floor > 0 else np.log(x)

    return _apply("log", fn, [a],
                  lambda g, o: (np.where(keep, g / np.where(keep, a.data, 1.0), 0.0),))


def sigmoid(a) -> Tensor:
    a = as_tensor(a)

    def fn(x):
        return 0.5 * (1.0 + np.tanh(0.5 * x))

    return _apply("sigmoid", fn, [a], lambda g, o: (g * o * (1.0 - o),))


def pick(probs, classes) -> Tensor:
    """Column ``classes[r]`` of each row ``r``, shaped (n, 1)."""
    probs = as_tensor(probs)
    classes = np.asarray(classes, dtype=np.int64)
    onehot = np.zeros(probs.shape)
    onehot[np.arange(len(classes)), classes] = 1.0
    return sum_(mul(probs, Tensor(onehot)), axis=1, keepdims=True)
