"""Pure numpy implementations of the hot kernels.

These are the reference versions; ``_kernels.pyx`` mirrors every function
here with the same signature and must agree to floating point round-off.
All arrays are float64 and C-contiguous.

LSTM layout: one fused weight ``W`` of shape (4H, in + H) applied to the
concatenation ``[x; h]``, bias ``b`` of shape (4H,), gate order (i, f, g, o).
The recurrent state is carried as a single vector ``hc = [h; c]`` of length 2H.
"""
import numpy as np

BACKEND = "numpy"


def _sigmoid(z):
    return 0.5 * (np.tanh(0.5 * z) + 1.0)


def lstm_step_forward(W, b, x, hc):
    H = hc.shape[0] // 2
    xh = np.concatenate((x, hc[:H]))
    z = W @ xh + b
    gates = np.empty(4 * H)
    gates[:H] = _sigmoid(z[:H])
    gates[H:2 * H] = _sigmoid(z[H:2 * H])
    gates[2 * H:3 * H] = np.tanh(z[2 * H:3 * H])
    gates[3 * H:] = _sigmoid(z[3 * H:])
    c_prev = hc[H:]
    c = gates[H:2 * H] * c_prev + gates[:H] * gates[2 * H:3 * H]
    tc = np.tanh(c)
    out = np.empty(2 * H)
    out[:H] = gates[3 * H:] * tc
    out[H:] = c
    return out, (xh, gates, c_prev.copy(), tc)


def _lstm_gate_grads(dh, dc, gates, c_prev, tc, H):
    i = gates[:H]
    f = gates[H:2 * H]
    g = gates[2 * H:3 * H]
    o = gates[3 * H:]
    dc = dc + dh * o * (1.0 - tc * tc)
    dz = np.empty(4 * H)
    dz[:H] = dc * g * i * (1.0 - i)
    dz[H:2 * H] = dc * c_prev * f * (1.0 - f)
    dz[2 * H:3 * H] = dc * i * (1.0 - g * g)
    dz[3 * H:] = dh * tc * o * (1.0 - o)
    return dz, dc * f


def lstm_step_backward(W, cache, dhc, dW, db):
    """Accumulate into ``dW``/``db`` in place; return (dx, dhc_prev)."""
    xh, gates, c_prev, tc = cache
    H = tc.shape[0]
    dz, dc_prev = _lstm_gate_grads(dhc[:H], dhc[H:], gates, c_prev, tc, H)
    dW += np.outer(dz, xh)
    db += dz
    dxh = W.T @ dz
    n_in = xh.shape[0] - H
    dhc_prev = np.concatenate((dxh[n_in:], dc_prev))
    return dxh[:n_in].copy(), dhc_prev


def lstm_seq_forward(W, b, X, hc0):
    """Run the cell over the rows of ``X``. Returns (hidden rows (T, H), final hc, cache)."""
    T = X.shape[0]
    H = hc0.shape[0] // 2
    hs = np.empty((T, H))
    caches = []
    hc = hc0
    for t in range(T):
        hc, cache = lstm_step_forward(W, b, X[t], hc)
        hs[t] = hc[:H]
        caches.append(cache)
    return hs, hc, caches


def lstm_seq_backward(W, caches, dHs, dhc_final, dW, db):
    T = dHs.shape[0]
    H = dHs.shape[1]
    n_in = W.shape[1] - H
    dX = np.empty((T, n_in))
    dhc = dhc_final.copy()
    for t in range(T - 1, -1, -1):
        dhc[:H] += dHs[t]
        dX[t], dhc = lstm_step_backward(W, caches[t], dhc, dW, db)
    return dX, dhc


def dense_forward(W, b, x, tanh):
    z = x @ W.T + b
    return np.tanh(z) if tanh else z


def dense_backward(W, x, y, dy, tanh, dW, db):
    dz = dy * (1.0 - y * y) if tanh else dy
    if x.ndim == 1:
        dW += np.outer(dz, x)
        db += dz
    else:
        dW += dz.T @ x
        db += dz.sum(axis=0)
    return dz @ W


def chain_hit_counts(n_goal, budget, stay):
    """Count length-``budget`` action strings that reach ``n_goal`` within budget.

    Returns an int64 array ``counts[r]`` indexed by the number of right moves
    in the whole string. Left at the origin either stays put (``stay``) or
    moves to the (unbounded) left. Strings are enumerated exhaustively.
    """
    counts = np.zeros(budget + 1, dtype=np.int64)
    total = 1 << budget
    chunk = 1 << min(budget, 20)
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        pos = np.zeros(codes.shape[0], dtype=np.int64)
        hit = np.zeros(codes.shape[0], dtype=bool)
        for step in range(budget):
            right = (codes >> step) & 1
            move = np.where(right == 1, 1, -1)
            if stay:
                move = np.where((pos == 0) & (right == 0), 0, move)
            pos = np.where(hit, pos, pos + move)
            hit |= pos == n_goal
        rights = np.zeros(codes.shape[0], dtype=np.int64)
        for step in range(budget):
            rights += (codes >> step) & 1
        counts += np.bincount(rights[hit], minlength=budget + 1)
    return counts
