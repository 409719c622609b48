# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled versions of the occupancy dynamic programs.

Same contracts as :mod:`mpnr_lab._kernels_py`.
"""

import numpy as np
from libc.math cimport lgamma, exp, pow


def occupancy_table(int n, int dim):
    cdef double[:, ::1] table = np.zeros((n + 1, dim))
    cdef int m, k
    cdef double inv_n = 1.0 / n
    table[0, 0] = 1.0
    for m in range(dim - 1):
        table[0, m + 1] = 0.0
        for k in range(1, n + 1):
            table[k, m + 1] = table[k, m] * k * inv_n \
                + table[k - 1, m] * (n - k + 1) * inv_n
    return np.asarray(table)


def weighted_occupancy(pis, int dim):
    cdef double[::1] p = np.ascontiguousarray(pis, dtype=np.float64)
    cdef int n = p.shape[0]
    cdef double[:, ::1] acc = np.zeros((dim, n + 1))
    cdef double[:, ::1] new = np.zeros((dim, n + 1))
    cdef double[:, ::1] binom = np.zeros((dim, dim))
    cdef double[::1] powers = np.zeros(dim)
    cdef int i, t, c, j
    cdef double w
    for t in range(dim):
        for c in range(t + 1):
            binom[t, c] = exp(lgamma(t + 1.0) - lgamma(c + 1.0) - lgamma(t - c + 1.0))
    acc[0, 0] = 1.0
    for i in range(n):
        for c in range(dim):
            powers[c] = pow(p[i], c)
        for t in range(dim):
            for j in range(n + 1):
                new[t, j] = acc[t, j]
        for c in range(1, dim):
            if powers[c] == 0.0:
                break
            for t in range(c, dim):
                w = binom[t, c] * powers[c]
                for j in range(1, i + 2):
                    new[t, j] += w * acc[t - c, j - 1]
        acc, new = new, acc
    return np.asarray(acc)
