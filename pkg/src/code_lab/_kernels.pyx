# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot kernels in ``_kernels_py``.

Same signatures and semantics; matrix-vector products go through the BLAS
that scipy links against, the gate nonlinearities are fused loops.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport tanh, exp
from scipy.linalg.cython_blas cimport dgemv, dger

cnp.import_array()

BACKEND = "cython"


cdef inline double _sig(double z) noexcept nogil:
    return 0.5 * (tanh(0.5 * z) + 1.0)


cdef void _gemv_rowmajor(double[:, ::1] W, double* x, double* y, double beta) noexcept nogil:
    # y = W @ x + beta * y  for row-major W (rows x cols)
    cdef int m = W.shape[1]
    cdef int n = W.shape[0]
    cdef int inc = 1
    cdef double one = 1.0
    dgemv(b"T", &m, &n, &one, &W[0, 0], &m, x, &inc, &beta, y, &inc)


cdef void _gemv_t_rowmajor(double[:, ::1] W, double* x, double* y, double beta) noexcept nogil:
    # y = W.T @ x + beta * y
    cdef int m = W.shape[1]
    cdef int n = W.shape[0]
    cdef int inc = 1
    cdef double one = 1.0
    dgemv(b"N", &m, &n, &one, &W[0, 0], &m, x, &inc, &beta, y, &inc)


cdef void _ger_rowmajor(double[:, ::1] dW, double* dz, double* xh) noexcept nogil:
    # dW += outer(dz, xh)
    cdef int m = dW.shape[1]
    cdef int n = dW.shape[0]
    cdef int inc = 1
    cdef double one = 1.0
    dger(&m, &n, &one, xh, &inc, dz, &inc, &dW[0, 0], &m)


cdef void _cell_forward(double[:, ::1] W, double[::1] b, double* xh, double* hc,
                        double* gates, double* cprev, double* tcv, double* out, int H) noexcept nogil:
    cdef int j
    cdef double c
    for j in range(4 * H):
        gates[j] = b[j]
    _gemv_rowmajor(W, xh, gates, 1.0)
    for j in range(H):
        gates[j] = _sig(gates[j])
        gates[H + j] = _sig(gates[H + j])
        gates[2 * H + j] = tanh(gates[2 * H + j])
        gates[3 * H + j] = _sig(gates[3 * H + j])
        cprev[j] = hc[H + j]
        c = gates[H + j] * cprev[j] + gates[j] * gates[2 * H + j]
        tcv[j] = tanh(c)
        out[j] = gates[3 * H + j] * tcv[j]
        out[H + j] = c


cdef void _cell_backward(double[:, ::1] W, double* xh, double* gates, double* cprev,
                         double* tcv, double* dh, double* dc, double* dz, double* dxh,
                         double* dc_prev, double[:, ::1] dW, double[::1] db, int H) noexcept nogil:
    cdef int j
    cdef double i_, f_, g_, o_, dcj
    for j in range(H):
        i_ = gates[j]
        f_ = gates[H + j]
        g_ = gates[2 * H + j]
        o_ = gates[3 * H + j]
        dcj = dc[j] + dh[j] * o_ * (1.0 - tcv[j] * tcv[j])
        dz[j] = dcj * g_ * i_ * (1.0 - i_)
        dz[H + j] = dcj * cprev[j] * f_ * (1.0 - f_)
        dz[2 * H + j] = dcj * i_ * (1.0 - g_ * g_)
        dz[3 * H + j] = dh[j] * tcv[j] * o_ * (1.0 - o_)
        dc_prev[j] = dcj * f_
    for j in range(4 * H):
        db[j] += dz[j]
    _ger_rowmajor(dW, dz, xh)
    _gemv_t_rowmajor(W, dz, dxh, 0.0)


def lstm_step_forward(double[:, ::1] W, double[::1] b, double[::1] x, double[::1] hc):
    cdef int H = hc.shape[0] // 2
    cdef int n_in = x.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xh = np.empty(n_in + H)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] gates = np.empty(4 * H)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cprev = np.empty(H)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] tcv = np.empty(H)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(2 * H)
    cdef int j
    for j in range(n_in):
        xh[j] = x[j]
    for j in range(H):
        xh[n_in + j] = hc[j]
    _cell_forward(W, b, &xh[0], &hc[0], &gates[0], &cprev[0], &tcv[0], &out[0], H)
    return out, (xh, gates, cprev, tcv)


def lstm_step_backward(double[:, ::1] W, cache, double[::1] dhc, double[:, ::1] dW, double[::1] db):
    cdef double[::1] xh = cache[0]
    cdef double[::1] gates = cache[1]
    cdef double[::1] cprev = cache[2]
    cdef double[::1] tcv = cache[3]
    cdef int H = tcv.shape[0]
    cdef int D = xh.shape[0]
    cdef int n_in = D - H
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dz = np.empty(4 * H)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dxh = np.empty(D)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dhc_prev = np.empty(2 * H)
    _cell_backward(W, &xh[0], &gates[0], &cprev[0], &tcv[0], &dhc[0], &dhc[H],
                   &dz[0], &dxh[0], &dhc_prev[H], dW, db, H)
    for j in range(H):
        dhc_prev[j] = dxh[n_in + j]
    return dxh[:n_in].copy(), dhc_prev


def lstm_seq_forward(double[:, ::1] W, double[::1] b, double[:, ::1] X, double[::1] hc0):
    cdef int T = X.shape[0]
    cdef int n_in = X.shape[1]
    cdef int H = hc0.shape[0] // 2
    cdef int D = n_in + H
    cdef cnp.ndarray[cnp.float64_t, ndim=2] XH = np.empty((T, D))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] G = np.empty((T, 4 * H))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] CP = np.empty((T, H))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] TC = np.empty((T, H))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] hs = np.empty((T, H))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] hc = np.array(hc0, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] nxt = np.empty(2 * H)
    cdef int t, j
    for t in range(T):
        for j in range(n_in):
            XH[t, j] = X[t, j]
        for j in range(H):
            XH[t, n_in + j] = hc[j]
        _cell_forward(W, b, &XH[t, 0], &hc[0], &G[t, 0], &CP[t, 0], &TC[t, 0], &nxt[0], H)
        for j in range(2 * H):
            hc[j] = nxt[j]
        for j in range(H):
            hs[t, j] = hc[j]
    return hs, hc, (XH, G, CP, TC)


def lstm_seq_backward(double[:, ::1] W, caches, double[:, ::1] dHs, double[::1] dhc_final,
                      double[:, ::1] dW, double[::1] db):
    cdef double[:, ::1] XH = caches[0]
    cdef double[:, ::1] G = caches[1]
    cdef double[:, ::1] CP = caches[2]
    cdef double[:, ::1] TC = caches[3]
    cdef int T = XH.shape[0]
    cdef int D = XH.shape[1]
    cdef int H = TC.shape[1]
    cdef int n_in = D - H
    cdef cnp.ndarray[cnp.float64_t, ndim=2] dX = np.empty((T, n_in))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dhc = np.array(dhc_final, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dh = np.empty(H)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dz = np.empty(4 * H)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dxh = np.empty(D)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dcp = np.empty(H)
    cdef int t, j
    for t in range(T - 1, -1, -1):
        for j in range(H):
            dh[j] = dhc[j] + dHs[t, j]
        _cell_backward(W, &XH[t, 0], &G[t, 0], &CP[t, 0], &TC[t, 0], &dh[0], &dhc[H],
                       &dz[0], &dxh[0], &dcp[0], dW, db, H)
        for j in range(n_in):
            dX[t, j] = dxh[j]
        for j in range(H):
            dhc[j] = dxh[n_in + j]
            dhc[H + j] = dcp[j]
    return dX, dhc


def dense_forward(W, b, x, bint use_tanh):
    if x.ndim != 1:
        z = x @ W.T + b
        return np.tanh(z) if use_tanh else z
    return _dense_forward_vec(W, b, x, use_tanh)


cdef _dense_forward_vec(double[:, ::1] W, double[::1] b, double[::1] x, bint use_tanh):
    cdef int n = W.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] y = np.empty(n)
    cdef int j
    for j in range(n):
        y[j] = b[j]
    _gemv_rowmajor(W, &x[0], &y[0], 1.0)
    if use_tanh:
        for j in range(n):
            y[j] = tanh(y[j])
    return y


def dense_backward(W, x, y, dy, bint use_tanh, dW, db):
    if x.ndim != 1:
        dz = dy * (1.0 - y * y) if use_tanh else dy
        dW += dz.T @ x
        db += dz.sum(axis=0)
        return dz @ W
    return _dense_backward_vec(W, x, y, dy, use_tanh, dW, db)


cdef _dense_backward_vec(double[:, ::1] W, double[::1] x, double[::1] y, double[::1] dy,
                         bint use_tanh, double[:, ::1] dW, double[::1] db):
    cdef int n = W.shape[0]
    cdef int m = W.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dz = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dx = np.empty(m)
    cdef int j
    for j in range(n):
        dz[j] = dy[j] * (1.0 - y[j] * y[j]) if use_tanh else dy[j]
        db[j] += dz[j]
    _ger_rowmajor(dW, &dz[0], &x[0])
    _gemv_t_rowmajor(W, &dz[0], &dx[0], 0.0)
    return dx


def chain_hit_counts(int n_goal, int budget, bint stay):
    counts_arr = np.zeros(budget + 1, dtype=np.int64)
    cdef long long[::1] counts = counts_arr
    cdef long long code, total = 1LL << budget
    cdef int pos, step, rights, bit
    cdef bint hit
    with nogil:
        for code in range(total):
            pos = 0
            hit = False
            for step in range(budget):
                bit = (code >> step) & 1
                if bit:
                    pos += 1
                elif not (stay and pos == 0):
                    pos -= 1
                if pos == n_goal:
                    hit = True
                    break
            if hit:
                rights = 0
                for step in range(budget):
                    rights += (code >> step) & 1
                counts[rights] += 1
    return counts_arr
