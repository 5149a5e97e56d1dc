# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled minibatch training kernels; mirrors ``_reference``."""
import numpy as np

from libc.math cimport tanh, sqrt, pow, isfinite

from libc.stdint cimport uint64_t as u64

cdef extern from *:
    ctypedef unsigned long long u128 "unsigned __int128"

NAME = "cython"

cdef double BETA1 = 0.9
cdef double BETA2 = 0.999
cdef double EPS = 1e-8
cdef u64 GOLDEN_GAMMA = 0x9E3779B97F4A7C15ULL


cdef inline u64 _next(u64* state) noexcept nogil:
    cdef u64 z
    state[0] += GOLDEN_GAMMA
    z = state[0]
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline u64 _below(u64* state, u64 n) noexcept nogil:
    cdef u128 m = <u128>_next(state) * n
    cdef u64 low = <u64>m
    cdef u64 threshold
    if low < n:
        threshold = (0 - n) % n
        while low < threshold:
            m = <u128>_next(state) * n
            low = <u64>m
    return <u64>(m >> 64)


def permutation(rng, Py_ssize_t n):
    """Fisher-Yates shuffle driven by ``rng``'s SplitMix64 state (advanced in place)."""
    cdef u64 state = <u64>rng.state
    perm_arr = np.arange(n, dtype=np.int64)
    cdef long long[::1] perm = perm_arr
    cdef Py_ssize_t i, j
    cdef long long tmp
    with nogil:
        for i in range(n - 1, 0, -1):
            j = <Py_ssize_t>_below(&state, <u64>(i + 1))
            tmp = perm[i]
            perm[i] = perm[j]
            perm[j] = tmp
    rng.state = int(state)
    return perm_arr


cdef inline double _act(long long code, double z) noexcept nogil:
    if code == 1:
        return z if z > 0.0 else 0.0
    if code == 2:
        return tanh(z)
    return z


cdef inline double _act_grad(long long code, double z) noexcept nogil:
    cdef double t
    if code == 1:
        return 1.0 if z > 0.0 else 0.0
    if code == 2:
        t = tanh(z)
        return 1.0 - t * t
    return 1.0


def train_epoch(double[::1] theta, double[::1] m, double[::1] v,
                const long long[::1] dims, const long long[::1] acts,
                const double[:, ::1] X, const double[::1] y,
                const long long[::1] order, Py_ssize_t batch_size,
                double lr, long long t0, double[::1] batch_losses):
    """See ``_reference.train_epoch``."""
    cdef Py_ssize_t n_layers = acts.shape[0]
    cdef Py_ssize_t n = order.shape[0]
    cdef Py_ssize_t n_params = theta.shape[0]
    cdef Py_ssize_t width = 0, l, i, j, r, k, start, nb, fi, fo, p
    for l in range(n_layers + 1):
        if dims[l] > width:
            width = dims[l]

    # per-layer offsets into theta: W at w_off[l], b at w_off[l] + fi*fo
    w_off_arr = np.zeros(n_layers, dtype=np.int64)
    cdef long long[::1] w_off = w_off_arr
    p = 0
    for l in range(n_layers):
        w_off[l] = p
        p += dims[l] * dims[l + 1] + dims[l + 1]
    if p != n_params:
        raise ValueError(f"theta has {n_params} entries, dims need {p}")

    Z_arr = np.zeros((n_layers, batch_size, width))
    A_arr = np.zeros((n_layers, batch_size, width))
    D_arr = np.zeros((2, batch_size, width))
    G_arr = np.zeros(n_params)
    xb_arr = np.zeros((batch_size, dims[0]))
    cdef double[:, :, ::1] Z = Z_arr
    cdef double[:, :, ::1] A = A_arr
    cdef double[:, :, ::1] D = D_arr
    cdef double[::1] G = G_arr
    cdef double[:, ::1] xb = xb_arr

    cdef double acc, diff, loss, bc1, bc2, mh, vh, g
    cdef long long t = t0
    cdef long long code
    cdef Py_ssize_t batch = 0
    cdef Py_ssize_t in_cols = dims[0]
    cdef bint bad
    cdef Py_ssize_t cur
    cdef Py_ssize_t failed = -1

    with nogil:
        start = 0
        while start < n:
            nb = batch_size if start + batch_size <= n else n - start
            for r in range(nb):
                for i in range(in_cols):
                    xb[r, i] = X[order[start + r], i]

            # forward
            bad = False
            for l in range(n_layers):
                fi = dims[l]
                fo = dims[l + 1]
                code = acts[l]
                for r in range(nb):
                    for j in range(fo):
                        acc = 0.0
                        for i in range(fi):
                            if l == 0:
                                acc = acc + xb[r, i] * theta[w_off[l] + i * fo + j]
                            else:
                                acc = acc + A[l - 1, r, i] * theta[w_off[l] + i * fo + j]
                        acc = acc + theta[w_off[l] + fi * fo + j]
                        if not isfinite(acc):
                            bad = True
                        Z[l, r, j] = acc
                        A[l, r, j] = _act(code, acc)
            if bad:
                failed = batch
                break

            # loss and dL/d(output); output layer has width 1
            loss = 0.0
            l = n_layers - 1
            for r in range(nb):
                diff = A[l, r, 0] - y[order[start + r]]
                loss = loss + diff * diff
                D[0, r, 0] = 2.0 * diff / nb
            loss = loss / nb
            if not isfinite(loss):
                failed = batch
                break
            batch_losses[batch] = loss

            # backward; D[cur] holds dL/dA for the current layer
            cur = 0
            for l in range(n_layers - 1, -1, -1):
                fi = dims[l]
                fo = dims[l + 1]
                code = acts[l]
                for r in range(nb):
                    for j in range(fo):
                        D[cur, r, j] = D[cur, r, j] * _act_grad(code, Z[l, r, j])
                for i in range(fi):
                    for j in range(fo):
                        acc = 0.0
                        for r in range(nb):
                            if l == 0:
                                acc = acc + xb[r, i] * D[cur, r, j]
                            else:
                                acc = acc + A[l - 1, r, i] * D[cur, r, j]
                        G[w_off[l] + i * fo + j] = acc
                for j in range(fo):
                    acc = 0.0
                    for r in range(nb):
                        acc = acc + D[cur, r, j]
                    G[w_off[l] + fi * fo + j] = acc
                if l > 0:
                    for r in range(nb):
                        for i in range(fi):
                            acc = 0.0
                            for j in range(fo):
                                acc = acc + D[cur, r, j] * theta[w_off[l] + i * fo + j]
                            D[1 - cur, r, i] = acc
                    cur = 1 - cur

            # Adam
            t += 1
            bc1 = 1.0 - pow(BETA1, <double>t)
            bc2 = 1.0 - pow(BETA2, <double>t)
            for p in range(n_params):
                g = G[p]
                m[p] = BETA1 * m[p] + (1.0 - BETA1) * g
                v[p] = BETA2 * v[p] + (1.0 - BETA2) * (g * g)
                mh = m[p] / bc1
                vh = v[p] / bc2
                theta[p] = theta[p] - lr * mh / (sqrt(vh) + EPS)

            batch += 1
            start += batch_size
    return failed
