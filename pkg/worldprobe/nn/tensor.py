# MIT License
#
# Copyright (c) 2024 worldprobe authors
#
# See LICENSE for the full license text.
"""
Reverse-mode differentiable tensor on top of numpy arrays.

Every operation records its parents and a backward closure. Calling
:meth:`Tensor.backward` on a scalar walks the graph in reverse topological
order and accumulates gradients into the leaves that require them.
"""
import contextlib
from typing import Callable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from worldprobe.exceptions import NonFiniteError, ShapeMismatchError

__all__ = [
    "Tensor",
    "get_default_dtype",
    "set_default_dtype",
    "precision",
    "concat",
    "stack",
    "minimum",
]

_default_dtype = np.float32

Grads = Tuple[Optional[np.ndarray], ...]


def get_default_dtype():
    return _default_dtype


def set_default_dtype(dtype) -> None:
    global _default_dtype
    _default_dtype = np.dtype(dtype).type


@contextlib.contextmanager
def precision(dtype) -> Iterator[None]:
    """
    Temporarily switch the dtype new tensors are created with.

    32-bit is used for training, 64-bit for gradient verification.
    """

    previous = get_default_dtype()
    set_default_dtype(dtype)
    try:
        yield
    finally:
        set_default_dtype(previous)


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad

    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)

    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)

    return grad


class Tensor:
    """Dense array with an optional gradient."""

    def __init__(self, data, requires_grad: bool = False,
                 name: Optional[str] = None, dtype=None):
        self.data: np.ndarray = np.array(data, dtype=dtype or _default_dtype)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.name = name
        self._parents: Tuple["Tensor", ...] = ()
        self._backward: Optional[Callable[[np.ndarray], Grads]] = None
        self._op = "leaf"

    @classmethod
    def _from_op(cls, data, parents: Sequence["Tensor"],
                 backward: Callable[[np.ndarray], Grads], op: str) -> "Tensor":
        data = np.asarray(data, dtype=parents[0].data.dtype)

        if not np.isfinite(data).all():
            raise NonFiniteError(f"{op} produced non-finite values.")

        out = cls.__new__(cls)
        out.data = data
        out.grad = None
        out.name = None
        out.requires_grad = any(p.requires_grad for p in parents)
        out._parents = tuple(parents) if out.requires_grad else ()
        out._backward = backward if out.requires_grad else None
        out._op = op
        return out

    def _lift(self, other) -> "Tensor":
        if isinstance(other, Tensor):
            return other
        return Tensor(other, dtype=self.data.dtype)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def __len__(self):
        return len(self.data)

    def __repr__(self):
        grad = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{grad})"

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy(), dtype=self.data.dtype)

    def zero_grad(self) -> None:
        self.grad = None

    # autograd

    def _topological_order(self) -> List["Tensor"]:
        order: List[Tensor] = []
        visited = set()
        stack = [(self, False)]

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

    def backward(self, grad: Optional[np.ndarray] = None) -> None:
        """
        Backpropagate from this tensor.

        :param grad: upstream gradient, required for non-scalar outputs.
        :return: None
        """

        if grad is None:
            if self.data.size != 1:
                raise ShapeMismatchError(
                    "backward without an explicit gradient"
                    f" needs a scalar, got shape {self.shape}.")
            grad = np.ones_like(self.data)

        grads = {id(self): np.asarray(grad, dtype=self.data.dtype)}

        for node in self._topological_order():
            g = grads.pop(id(node), None)

            if g is None or not node.requires_grad:
                continue

            if node._backward is None:
                node.grad = g if node.grad is None else node.grad + g
                continue

            for parent, parent_grad in zip(node._parents, node._backward(g)):
                if parent_grad is None or not parent.requires_grad:
                    continue

                if not np.isfinite(parent_grad).all():
                    raise NonFiniteError(
                        f"backward of {node._op} produced non-finite values.")

                key = id(parent)
                grads[key] = (grads[key] + parent_grad
                              if key in grads else parent_grad)

    # elementwise

    def __add__(self, other) -> "Tensor":
        other = self._lift(other)

        def backward(g):
            return (_unbroadcast(g, self.shape),
                    _unbroadcast(g, other.shape))

        return Tensor._from_op(self.data + other.data,
                               (self, other), backward, "add")

    def __radd__(self, other) -> "Tensor":
        return self.__add__(other)

    def __neg__(self) -> "Tensor":
        return Tensor._from_op(-self.data, (self,), lambda g: (-g,), "neg")

    def __sub__(self, other) -> "Tensor":
        return self.__add__(-self._lift(other))

    def __rsub__(self, other) -> "Tensor":
        return self._lift(other).__add__(-self)

    def __mul__(self, other) -> "Tensor":
        other = self._lift(other)

        def backward(g):
            return (_unbroadcast(g * other.data, self.shape),
                    _unbroadcast(g * self.data, other.shape))

        return Tensor._from_op(self.data * other.data,
                               (self, other), backward, "mul")

    def __rmul__(self, other) -> "Tensor":
        return self.__mul__(other)

    def __truediv__(self, other) -> "Tensor":
        other = self._lift(other)

        def backward(g):
            return (_unbroadcast(g / other.data, self.shape),
                    _unbroadcast(-g * self.data / other.data**2, other.shape))

        return Tensor._from_op(self.data / other.data,
                               (self, other), backward, "div")

    def __rtruediv__(self, other) -> "Tensor":
        return self._lift(other).__truediv__(self)

    def __pow__(self, power: float) -> "Tensor":
        def backward(g):
            return (g * power * self.data**(power - 1),)

        return Tensor._from_op(self.data**power, (self,), backward, "pow")

    def exp(self) -> "Tensor":
        out = np.exp(self.data)
        return Tensor._from_op(out, (self,), lambda g: (g * out,), "exp")

    def log(self) -> "Tensor":
        return Tensor._from_op(np.log(self.data), (self,),
                               lambda g: (g / self.data,), "log")

    def tanh(self) -> "Tensor":
        out = np.tanh(self.data)
        return Tensor._from_op(out, (self,),
                               lambda g: (g * (1.0 - out**2),), "tanh")

    def sigmoid(self) -> "Tensor":
        out = 0.5 * (np.tanh(0.5 * self.data) + 1.0)
        return Tensor._from_op(out, (self,),
                               lambda g: (g * out * (1.0 - out),), "sigmoid")

    def relu(self) -> "Tensor":
        mask = self.data > 0
        return Tensor._from_op(self.data * mask, (self,),
                               lambda g: (g * mask,), "relu")

    def elu(self, alpha: float = 1.0) -> "Tensor":
        positive = self.data > 0
        negative = alpha * np.expm1(np.minimum(self.data, 0.0))
        out = np.where(positive, self.data, negative)

        def backward(g):
            return (g * np.where(positive, 1.0, negative + alpha),)

        return Tensor._from_op(out, (self,), backward, "elu")

    def clip(self, low: float, high: float) -> "Tensor":
        inside = (self.data >= low) & (self.data <= high)
        return Tensor._from_op(np.clip(self.data, low, high), (self,),
                               lambda g: (g * inside,), "clip")

    # reductions and shaping

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        def backward(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, self.shape).copy(),)

        return Tensor._from_op(self.data.sum(axis=axis, keepdims=keepdims),
                               (self,), backward, "sum")

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        count = (self.data.size if axis is None else
                 int(np.prod([self.shape[a] for a in np.atleast_1d(axis)])))
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])

        try:
            out = self.data.reshape(shape)
        except ValueError as e:
            raise ShapeMismatchError(str(e)) from e

        return Tensor._from_op(out, (self,),
                               lambda g: (g.reshape(self.shape),), "reshape")

    def flatten(self, start: int = 1) -> "Tensor":
        return self.reshape(self.shape[:start] + (-1,))

    def transpose(self, *axes) -> "Tensor":
        axes = axes or tuple(reversed(range(self.ndim)))
        inverse = tuple(np.argsort(axes))
        return Tensor._from_op(self.data.transpose(axes), (self,),
                               lambda g: (g.transpose(inverse),), "transpose")

    @property
    def T(self) -> "Tensor":
        return self.transpose()

    def __getitem__(self, index) -> "Tensor":
        def backward(g):
            grad = np.zeros_like(self.data)
            np.add.at(grad, index, g)
            return (grad,)

        return Tensor._from_op(self.data[index], (self,), backward, "index")

    def __matmul__(self, other) -> "Tensor":
        other = self._lift(other)
        a, b = self.data, other.data

        if a.ndim > 2 or b.ndim > 2:
            raise ShapeMismatchError("matmul supports up to 2-D operands.")

        try:
            out = a @ b
        except ValueError as e:
            raise ShapeMismatchError(
                f"matmul of {a.shape} and {b.shape}.") from e

        def backward(g):
            if a.ndim == 1 and b.ndim == 1:
                return g * b, g * a
            if a.ndim == 1:
                return b @ g, np.outer(a, g)
            if b.ndim == 1:
                return np.outer(g, b), a.T @ g
            return g @ b.T, a.T @ g

        return Tensor._from_op(out, (self, other), backward, "matmul")


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    """Concatenate tensors along an existing axis."""

    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, splits, axis=axis))

    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as e:
        raise ShapeMismatchError(str(e)) from e

    return Tensor._from_op(out, tuple(tensors), backward, "concat")


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    """Stack same-shaped tensors along a new axis."""

    def backward(g):
        return tuple(np.moveaxis(g, axis, 0))

    try:
        out = np.stack([t.data for t in tensors], axis=axis)
    except ValueError as e:
        raise ShapeMismatchError(str(e)) from e

    return Tensor._from_op(out, tuple(tensors), backward, "stack")


def _select(a: Tensor, b, take_a: np.ndarray, op: str) -> Tensor:
    b = a._lift(b)

    def backward(g):
        return (_unbroadcast(g * take_a, a.shape),
                _unbroadcast(g * ~take_a, b.shape))

    return Tensor._from_op(np.where(take_a, a.data, b.data),
                           (a, b), backward, op)


def minimum(a: Tensor, b: Union[Tensor, np.ndarray, float]) -> Tensor:
    """Elementwise minimum, ties route the gradient to ``a``."""

    b_data = b.data if isinstance(b, Tensor) else np.asarray(b)
    return _select(a, b, np.broadcast_to(a.data <= b_data,
                                         np.broadcast_shapes(a.shape, np.shape(b_data))),
                   "minimum")
