"""Differentiable ops recorded on a :class:`~code_lab.nn.tape.Tape`.

Every function takes the tape first and returns a new :class:`Var`. Operands
may be ``Var``, ``Parameter`` or plain arrays (treated as constants).
"""
from __future__ import annotations

import numpy as np

from .. import kernels
from .tape import DimensionError, DomainError, Parameter, Var, value_of


def _src(x):
    return x if isinstance(x, (Var, Parameter)) else None


def _unbroadcast(g, shape):
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


# -- elementwise / arithmetic -------------------------------------------------

def add(tape, a, b):
    av, bv = value_of(a), value_of(b)
    out = av + bv
    return tape.record(out, (_src(a), _src(b)),
                       lambda g: (_unbroadcast(g, av.shape), _unbroadcast(g, bv.shape)))


def sub(tape, a, b):
    av, bv = value_of(a), value_of(b)
    out = av - bv
    return tape.record(out, (_src(a), _src(b)),
                       lambda g: (_unbroadcast(g, av.shape), -_unbroadcast(g, bv.shape)))


def mul(tape, a, b):
    av, bv = value_of(a), value_of(b)
    out = av * bv
    return tape.record(out, (_src(a), _src(b)),
                       lambda g: (_unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape)))


def scale(tape, a, c):
    c = float(c)
    return tape.record(value_of(a) * c, (_src(a),), lambda g: (g * c,))


def tanh(tape, a):
    y = np.tanh(value_of(a))
    return tape.record(y, (_src(a),), lambda g: (g * (1.0 - y * y),))


def exp(tape, a):
    y = np.exp(value_of(a))
    return tape.record(y, (_src(a),), lambda g: (g * y,))


def log(tape, a):
    av = value_of(a)
    if np.any(av <= 0):
        raise DomainError("log of a non-positive value")
    return tape.record(np.log(av), (_src(a),), lambda g: (g / av,))


def square(tape, a):
    av = value_of(a)
    return tape.record(av * av, (_src(a),), lambda g: (2.0 * g * av,))


def total(tape, a):
    """Sum of all entries (scalar)."""
    av = value_of(a)
    return tape.record(np.asarray(av.sum()), (_src(a),), lambda g: (np.full(av.shape, float(g)),))


def mean(tape, a):
    av = value_of(a)
    n = av.size
    return tape.record(np.asarray(av.mean()), (_src(a),), lambda g: (np.full(av.shape, float(g) / n),))


def sum_rows(tape, a):
    """Column sums of a 2-D operand."""
    av = value_of(a)
    return tape.record(av.sum(axis=0), (_src(a),), lambda g: (np.broadcast_to(g, av.shape).copy(),))


def sum_cols(tape, a):
    """Row sums of a 2-D operand."""
    av = value_of(a)
    return tape.record(av.sum(axis=1), (_src(a),), lambda g: (np.repeat(g[:, None], av.shape[1], axis=1),))


# -- linear algebra -----------------------------------------------------------

def matmul(tape, a, b):
    av, bv = value_of(a), value_of(b)
    if av.shape[-1] != bv.shape[0]:
        raise DimensionError(f"matmul {av.shape} @ {bv.shape}")
    out = av @ bv

    def backward(g):
        if av.ndim == 1 and bv.ndim == 1:
            return g * bv, g * av
        if av.ndim == 1:
            return bv @ g, np.outer(av, g)
        if bv.ndim == 1:
            return np.outer(g, bv), av.T @ g
        return g @ bv.T, av.T @ g

    return tape.record(out, (_src(a), _src(b)), backward)


def transpose(tape, a):
    av = value_of(a)
    return tape.record(av.T.copy(), (_src(a),), lambda g: (g.T,))


# -- shape ops ----------------------------------------------------------------

def concat(tape, parts, axis=0):
    vals = [value_of(p) for p in parts]
    out = np.concatenate(vals, axis=axis)
    bounds = np.cumsum([0] + [v.shape[axis] for v in vals])

    def backward(g):
        idx = [slice(None)] * g.ndim
        grads = []
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            idx[axis] = slice(lo, hi)
            grads.append(g[tuple(idx)])
        return grads

    return tape.record(out, tuple(_src(p) for p in parts), backward)


def stack(tape, parts):
    vals = [value_of(p) for p in parts]
    out = np.stack(vals)
    return tape.record(out, tuple(_src(p) for p in parts), lambda g: list(g))


def take(tape, a, index):
    """Select ``a[index]`` along the first axis (int, slice or index list)."""
    av = value_of(a)
    out = av[index]
    if isinstance(out, np.ndarray):
        out = out.copy()

    def backward(g):
        full = np.zeros_like(av)
        np.add.at(full, index, g) if isinstance(index, (list, np.ndarray)) else full.__setitem__(index, g)
        return (full,)

    return tape.record(np.asarray(out, dtype=np.float64), (_src(a),), backward)


def reshape(tape, a, shape):
    av = value_of(a)
    return tape.record(av.reshape(shape), (_src(a),), lambda g: (g.reshape(av.shape),))


def embed_mean(tape, table, token_lists):
    """Mean of embedding rows per item: ``out[i] = mean(table[token_lists[i]])``.

    Items with no tokens get a zero row.
    """
    tv = value_of(table)
    out = np.zeros((len(token_lists), tv.shape[1]))
    for i, toks in enumerate(token_lists):
        if toks:
            out[i] = tv[toks].mean(axis=0)

    def backward(g):
        full = np.zeros_like(tv)
        for i, toks in enumerate(token_lists):
            if toks:
                np.add.at(full, toks, g[i] / len(toks))
        return (full,)

    return tape.record(out, (_src(table),), backward)


# -- softmax family -----------------------------------------------------------

def log_softmax(tape, logits, mask=None):
    """Log-softmax over a 1-D operand; entries where ``mask`` is False get -inf."""
    z = value_of(logits)
    if z.ndim != 1 or z.size == 0:
        raise DomainError("log_softmax needs non-empty 1-D logits")
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if not mask.any():
            raise DomainError("log_softmax mask excludes every entry")
        zm = np.where(mask, z, -np.inf)
    else:
        zm = z
    m = zm.max()
    shifted = zm - m
    lse = np.log(np.exp(shifted).sum())
    out = shifted - lse
    p = np.exp(out)

    def backward(g):
        gs = np.where(np.isfinite(out), g, 0.0)
        return (gs - p * gs.sum(),)

    return tape.record(out, (_src(logits),), backward)


def softmax(tape, logits):
    z = value_of(logits)
    if z.size == 0:
        raise DomainError("softmax of empty logits")
    e = np.exp(z - z.max())
    p = e / e.sum()
    return tape.record(p, (_src(logits),), lambda g: (p * (g - np.dot(g, p)),))


def pick(tape, a, i):
    """Scalar entry ``a[i]`` of a 1-D operand."""
    av = value_of(a)

    def backward(g):
        full = np.zeros_like(av)
        full[i] = g
        return (full,)

    return tape.record(np.asarray(av[i]), (_src(a),), backward)


def entropy_from_logp(tape, logp):
    """-sum p log p given log-probabilities (masked -inf entries contribute 0)."""
    lv = value_of(logp)
    finite = np.isfinite(lv)
    p = np.where(finite, np.exp(np.where(finite, lv, 0.0)), 0.0)
    lz = np.where(finite, lv, 0.0)
    h = -float(np.sum(p * lz))
    # d/dl_i of -sum exp(l) l = -p_i (l_i + 1)
    return tape.record(np.asarray(h), (_src(logp),), lambda g: (-float(g) * p * (lz + 1.0),))


# -- fused network ops --------------------------------------------------------

def dense(tape, layer, x):
    """``act(W x + b)`` for a :class:`~code_lab.nn.layers.DenseLayer`; x may be 1-D or (n, in)."""
    xv = value_of(x)
    W, b = layer.weight, layer.bias
    if xv.shape[-1] != W.value.shape[1]:
        raise DimensionError(f"dense layer {layer.name!r} expects width {W.value.shape[1]}, got {xv.shape[-1]}")
    use_tanh = layer.activation == "tanh"
    xc = np.ascontiguousarray(xv)
    y = kernels.dense_forward(W.value, b.value, xc, use_tanh)

    def backward(g):
        dx = kernels.dense_backward(W.value, xc, y, np.ascontiguousarray(g), use_tanh, W.grad, b.grad)
        return (dx,)

    return tape.record(y, (_src(x),), backward)


def lstm_step(tape, cell, x, hc):
    """One LSTM step. ``hc`` is the packed state ``[h; c]``; returns the next packed state."""
    xv = np.ascontiguousarray(value_of(x))
    hcv = np.ascontiguousarray(value_of(hc))
    if xv.shape != (cell.input_size,) or hcv.shape != (2 * cell.hidden_size,):
        raise DimensionError(
            f"lstm cell {cell.name!r} expects x {cell.input_size} and state {2 * cell.hidden_size}, "
            f"got {xv.shape} and {hcv.shape}")
    W, b = cell.weight, cell.bias
    out, cache = kernels.lstm_step_forward(W.value, b.value, xv, hcv)

    def backward(g):
        dx, dhc = kernels.lstm_step_backward(W.value, cache, np.ascontiguousarray(g), W.grad, b.grad)
        return dx, dhc

    return tape.record(out, (_src(x), _src(hc)), backward)


def lstm_sequence(tape, cell, X, hc0=None):
    """Run the cell over the rows of ``X``; returns the (T, H) matrix of hidden outputs."""
    Xv = np.ascontiguousarray(value_of(X))
    if Xv.ndim != 2 or Xv.shape[1] != cell.input_size:
        raise DimensionError(f"lstm cell {cell.name!r} expects rows of width {cell.input_size}, got {Xv.shape}")
    H = cell.hidden_size
    hcv = np.zeros(2 * H) if hc0 is None else np.ascontiguousarray(value_of(hc0))
    W, b = cell.weight, cell.bias
    hs, _, cache = kernels.lstm_seq_forward(W.value, b.value, Xv, hcv)

    def backward(g):
        dX, dhc = kernels.lstm_seq_backward(W.value, cache, np.ascontiguousarray(g), np.zeros(2 * H),
                                            W.grad, b.grad)
        return dX, dhc

    return tape.record(hs, (_src(X), _src(hc0)), backward)


def hidden_of(tape, cell, hc):
    """The ``h`` half of a packed LSTM state."""
    return take(tape, hc, slice(0, cell.hidden_size))
