"""Actor-critic losses."""
from __future__ import annotations

import numpy as np

from . import ops
from .tape import DimensionError


def discounted_returns(rewards, gamma, bootstrap=0.0):
    """G_t = sum_i gamma^i r_{t+i} (+ gamma^(T-t) bootstrap)."""
    out = np.empty(len(rewards))
    g = float(bootstrap)
    for t in range(len(rewards) - 1, -1, -1):
        g = rewards[t] + gamma * g
        out[t] = g
    return out


def a2c_losses(tape, log_probs, values, returns, entropy_coeff=0.0, entropies=None):
    """Return ``(policy_loss, value_loss, entropy_bonus)`` as tape variables.

    policy_loss = -sum (G - V_detached) log_prob
    value_loss = sum (G - V)^2
    entropy_bonus = entropy_coeff * sum H  (subtract it from the total loss)
    """
    returns = np.asarray(returns, dtype=np.float64)
    if not (len(log_probs) == len(values) == len(returns)):
        raise DimensionError(
            f"a2c_losses got {len(log_probs)} log-probs, {len(values)} values, {len(returns)} returns")
    if entropies is not None and len(entropies) != len(log_probs):
        raise DimensionError("entropies length differs from log-probs")
    if not np.all(np.isfinite(returns)):
        raise ValueError("non-finite returns")
    if len(log_probs) == 0:
        zero = tape.const(0.0)
        return zero, zero, zero
    lp = ops.stack(tape, log_probs)
    v = ops.stack(tape, values)
    adv = returns - v.value
    policy = ops.scale(tape, ops.total(tape, ops.mul(tape, lp, adv)), -1.0)
    value = ops.total(tape, ops.square(tape, ops.sub(tape, returns, v)))
    if entropies is None or entropy_coeff == 0.0:
        bonus = tape.const(0.0)
    else:
        bonus = ops.scale(tape, ops.total(tape, ops.stack(tape, entropies)), entropy_coeff)
    return policy, value, bonus
