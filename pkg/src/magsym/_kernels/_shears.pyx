# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled shear-sequence kernel.

Applies a flat list of block operations to a stacked state ``Y = [q; p]`` of
shape ``(2r, k)`` in place. Op codes match ``magsym._kernels.ops``.
"""
import numpy as np

cdef enum:
    LOWER = 0
    UPPER = 1
    DRIFT = 2
    FULL = 3


cdef inline void _gemm_acc(const double[:, ::1] P, double[:, ::1] Y,
                           Py_ssize_t src, Py_ssize_t dst,
                           Py_ssize_t r, Py_ssize_t k) noexcept nogil:
    # Y[dst:dst+r] += P @ Y[src:src+r]
    cdef Py_ssize_t i, j, l
    cdef double pil
    for i in range(r):
        for l in range(r):
            pil = P[i, l]
            if pil != 0.0:
                for j in range(k):
                    Y[dst + i, j] += pil * Y[src + l, j]


def apply_ops(double[:, ::1] Y, const signed char[::1] kinds,
              const double[::1] scalars, const Py_ssize_t[::1] index,
              const double[:, :, ::1] payloads):
    cdef Py_ssize_t n = kinds.shape[0]
    cdef Py_ssize_t r = Y.shape[0] // 2
    cdef Py_ssize_t k = Y.shape[1]
    cdef Py_ssize_t op, i, j, l, ix
    cdef double s, acc_q, acc_p
    cdef double[:, ::1] tmp = np.empty((2 * r, k), dtype=np.float64)
    cdef signed char kind

    with nogil:
        for op in range(n):
            kind = kinds[op]
            ix = index[op]
            if kind == LOWER:
                _gemm_acc(payloads[ix], Y, 0, r, r, k)
            elif kind == UPPER:
                _gemm_acc(payloads[ix], Y, r, 0, r, k)
            elif kind == DRIFT:
                s = scalars[op]
                for i in range(r):
                    for j in range(k):
                        Y[i, j] += s * Y[r + i, j]
            elif kind == FULL:
                for i in range(r):
                    for j in range(k):
                        acc_q = 0.0
                        acc_p = 0.0
                        for l in range(r):
                            acc_q = acc_q + payloads[ix, i, l] * Y[l, j] \
                                + payloads[ix + 1, i, l] * Y[r + l, j]
                            acc_p = acc_p + payloads[ix + 2, i, l] * Y[l, j] \
                                + payloads[ix + 3, i, l] * Y[r + l, j]
                        tmp[i, j] = acc_q
                        tmp[r + i, j] = acc_p
                for i in range(2 * r):
                    for j in range(k):
                        Y[i, j] = tmp[i, j]
    return np.asarray(Y)
