"""Categorical action heads."""
from __future__ import annotations

import numpy as np

from . import ops
from .tape import DomainError, value_of


def categorical_head(tape, logits, rng=None, mask=None, index=None, greedy=False):
    """Sample (or score) one index from ``softmax(logits)``.

    Returns ``(index, log_prob, entropy)`` where the last two are tape
    variables. Pass ``index`` to score a given choice instead of sampling;
    ``greedy`` picks the argmax. ``mask`` excludes entries from the support.
    """
    z = value_of(logits)
    if z.ndim != 1 or z.size == 0:
        raise DomainError("categorical head needs non-empty 1-D logits")
    if not np.all(np.isfinite(z)):
        raise DomainError("categorical head got non-finite logits")
    logp = ops.log_softmax(tape, logits, mask)
    probs = np.exp(logp.value)
    if index is None:
        if greedy:
            index = int(np.argmax(probs))
        else:
            if rng is None:
                raise ValueError("sampling needs a random stream")
            index = rng.categorical(probs)
    elif not 0 <= index < z.size or probs[index] == 0.0:
        raise DomainError(f"index {index} outside the support")
    return int(index), ops.pick(tape, logp, index), ops.entropy_from_logp(tape, logp)


def softmax(z):
    """Plain numpy softmax (no tape)."""
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(z - z.max())
    return e / e.sum()
