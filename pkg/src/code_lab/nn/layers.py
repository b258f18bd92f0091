"""Parameterised building blocks: dense layers, stacks and the LSTM cell."""
from __future__ import annotations

import numpy as np

from . import ops
from .tape import Parameter


def uniform_init(rng, shape, fan_in):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Module:
    """Anything that owns parameters, directly or through child modules."""

    def parameters(self):
        out = []
        for value in self.__dict__.values():
            if isinstance(value, Parameter):
                out.append(value)
            elif isinstance(value, Module):
                out.extend(value.parameters())
            elif isinstance(value, (list, tuple)):
                for item in value:
                    if isinstance(item, Module):
                        out.extend(item.parameters())
                    elif isinstance(item, Parameter):
                        out.append(item)
        return out

    def named_parameters(self):
        return {p.name: p for p in self.parameters()}

    def num_parameters(self):
        return sum(p.size for p in self.parameters())

    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()


class DenseLayer(Module):
    """``act(W x + b)`` with ``act`` in {"tanh", "identity"}."""

    def __init__(self, name, n_in, n_out, activation="tanh", rng=None):
        if activation not in ("tanh", "identity"):
            raise ValueError(f"unknown activation {activation!r}")
        self.name = name
        self.activation = activation
        if rng is None:
            w, b = np.zeros((n_out, n_in)), np.zeros(n_out)
        else:
            w, b = uniform_init(rng, (n_out, n_in), n_in), uniform_init(rng, n_out, n_in)
        self.weight = Parameter(f"{name}.weight", w)
        self.bias = Parameter(f"{name}.bias", b)

    @property
    def n_in(self):
        return self.weight.shape[1]

    @property
    def n_out(self):
        return self.weight.shape[0]

    def __call__(self, tape, x):
        return ops.dense(tape, self, x)


class DenseStack(Module):
    """Dense layers in sequence; tanh on every layer but the last."""

    def __init__(self, name, sizes, rng=None, final_activation="identity"):
        self.name = name
        self.layers = []
        for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
            act = final_activation if i == len(sizes) - 2 else "tanh"
            self.layers.append(DenseLayer(f"{name}.{i}", a, b, act, rng))

    @property
    def n_in(self):
        return self.layers[0].n_in

    @property
    def n_out(self):
        return self.layers[-1].n_out

    def __call__(self, tape, x):
        for layer in self.layers:
            x = layer(tape, x)
        return x


class LSTMCell(Module):
    """LSTM with one fused (4H, in + H) weight and a single bias, gates (i, f, g, o)."""

    def __init__(self, name, input_size, hidden_size, rng=None):
        self.name = name
        self.input_size = input_size
        self.hidden_size = hidden_size
        shape = (4 * hidden_size, input_size + hidden_size)
        fan_in = input_size + hidden_size
        if rng is None:
            w, b = np.zeros(shape), np.zeros(4 * hidden_size)
        else:
            w, b = uniform_init(rng, shape, fan_in), uniform_init(rng, 4 * hidden_size, fan_in)
        self.weight = Parameter(f"{name}.weight", w)
        self.bias = Parameter(f"{name}.bias", b)

    def initial_state(self):
        return np.zeros(2 * self.hidden_size)

    def step(self, tape, x, hc):
        return ops.lstm_step(tape, self, x, hc)

    def sequence(self, tape, X, hc0=None):
        return ops.lstm_sequence(tape, self, X, hc0)


def parameter_audit(module):
    """Per-parameter sizes plus the total, as an ordered list of (name, shape, size)."""
    rows = [(p.name, tuple(p.shape), p.size) for p in module.parameters()]
    return rows, sum(r[2] for r in rows)
