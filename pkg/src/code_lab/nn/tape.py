"""Reverse-mode differentiation on an explicit tape.

A :class:`Tape` records every op applied during a forward pass. Each record
keeps the op's output value plus a closure that maps the output gradient to
gradients for its inputs. Inputs are either :class:`Var` (intermediate values
on the same tape) or :class:`Parameter` (trainable leaves whose ``grad``
buffer is accumulated into in place).
"""
from __future__ import annotations

import numpy as np


class DimensionError(ValueError):
    """Operand shapes do not fit the op."""


class DomainError(ValueError):
    """Operand values outside the op's domain (e.g. empty logits)."""


class TrainingFault(RuntimeError):
    """Non-finite gradients or losses during an update."""

    def __init__(self, message, iteration=None):
        if iteration is not None:
            message = f"iteration {iteration}: {message}"
        super().__init__(message)
        self.iteration = iteration


class Parameter:
    """A named trainable array with a gradient accumulator of the same shape."""

    __slots__ = ("name", "value", "grad")

    def __init__(self, name, value):
        self.name = name
        self.value = np.ascontiguousarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)

    @property
    def shape(self):
        return self.value.shape

    @property
    def size(self):
        return self.value.size

    def zero_grad(self):
        self.grad.fill(0.0)

    def _accumulate(self, g):
        self.grad += g

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.value.shape})"


class Var:
    """A value produced by an op on a tape."""

    __slots__ = ("value", "grad", "_backward", "_parents")

    def __init__(self, value, parents=(), backward=None):
        self.value = value
        self.grad = None
        self._parents = parents
        self._backward = backward

    @property
    def shape(self):
        return np.shape(self.value)

    def item(self):
        return float(self.value)

    def _accumulate(self, g):
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True)
        else:
            self.grad = self.grad + g

    def __repr__(self):
        return f"Var(shape={np.shape(self.value)})"


class Tape:
    """Ordered record of ops for one forward pass.

    Not thread-safe; use one tape per worker. ``backward`` may be called once
    per tape (gradients of intermediate nodes are consumed).
    """

    def __init__(self):
        self._nodes = []

    def __len__(self):
        return len(self._nodes)

    def const(self, value):
        return Var(np.asarray(value, dtype=np.float64))

    def record(self, value, parents, backward):
        node = Var(value, parents, backward)
        self._nodes.append(node)
        return node

    def backward(self, out, grad=None):
        """Propagate d(out)/d(.) to every parameter that fed ``out``."""
        if grad is None:
            if np.size(out.value) != 1:
                raise DimensionError("backward() without a seed gradient needs a scalar output")
            grad = np.ones_like(out.value)
        out._accumulate(grad)
        for node in reversed(self._nodes):
            g = node.grad
            if g is None or node._backward is None:
                continue
            grads = node._backward(g)
            for parent, pg in zip(node._parents, grads):
                if pg is not None and parent is not None:
                    parent._accumulate(pg)
            node.grad = None
        self._nodes = []


def value_of(x):
    """Underlying array of a Var, Parameter or plain array."""
    return x.value if isinstance(x, (Var, Parameter)) else np.asarray(x, dtype=np.float64)
