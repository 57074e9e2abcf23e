"""Tensor type and the reverse-mode tape."""
import contextlib

import numpy as np

from ..errors import NumericFailure, ParameterError

_dtype = np.float32


def default_dtype():
    return _dtype


@contextlib.contextmanager
def precision(dtype):
    """Temporarily change the dtype used for new leaf tensors and parameters."""
    global _dtype
    previous, _dtype = _dtype, np.dtype(dtype).type
    try:
        yield
    finally:
        _dtype = previous


class Tensor:
    """A numpy array that remembers how it was computed.

    ``parents`` and ``backward_fn`` are filled in by ops; ``backward_fn``
    maps the gradient of this tensor to one gradient (or None) per parent.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, parents=(), backward_fn=None, dtype=None):
        if isinstance(data, Tensor):
            data = data.data
        arr = np.asarray(data)
        if dtype is not None:
            arr = arr.astype(dtype, copy=False)
        elif not parents:
            arr = arr.astype(_dtype, copy=False)
        if not parents and not arr.flags.c_contiguous:
            # leaves are edited in place (optimisers, gradient checks) through flat views
            arr = arr.copy(order="C")
        if not np.isfinite(arr).all():
            raise NumericFailure("non-finite value produced")
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self._parents = tuple(parents)
        self._backward = backward_fn
        # Leaves own a gradient buffer; intermediates never hold one.
        self.grad = np.zeros_like(arr) if (self.requires_grad and not parents) else None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def numpy(self):
        return self.data

    def zero_grad(self):
        if self.requires_grad:
            self.grad = np.zeros_like(self.data)

    def backward(self):
        """Accumulate d(self)/d(leaf) into every reachable leaf's ``grad``."""
        if self.data.size != 1:
            raise ParameterError(f"backward needs a scalar, got shape {self.shape}")
        if not self.requires_grad:
            return
        order = _topological(self)
        pending = {id(self): np.ones_like(self.data)}
        for node in reversed(order):
            g = pending.pop(id(node), None)
            if g is None:
                continue
            if not node._parents:
                node.grad += g
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in pending:
                    pending[key] = pending[key] + pg
                else:
                    pending[key] = pg

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


class Parameter(Tensor):
    __slots__ = ("name", "lr_multiplier")

    def __init__(self, data, name, lr_multiplier=1.0):
        super().__init__(data, requires_grad=True)
        if lr_multiplier < 0:
            raise ParameterError("lr_multiplier must be non-negative")
        self.name = name
        self.lr_multiplier = float(lr_multiplier)

    def __repr__(self):
        return f"Parameter({self.name}, shape={self.shape}, lr_multiplier={self.lr_multiplier})"


def _topological(root):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def result(data, parents, backward_fn):
    """Build an op output, recording the tape only if some parent needs it."""
    needs = any(p.requires_grad for p in parents)
    if needs:
        return Tensor(data, requires_grad=True, parents=parents, backward_fn=backward_fn)
    data = np.asarray(data)
    return Tensor(data, dtype=data.dtype)


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)
