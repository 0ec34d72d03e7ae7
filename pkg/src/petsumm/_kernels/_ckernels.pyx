# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: LCS length and bootstrap resampling reductions.

Function-for-function mirror of ``_pykernels``; both backends take the
same pre-built arrays (resample indices are generated by the caller so
results do not depend on which backend is loaded).
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def lcs_length(cnp.int64_t[::1] a, cnp.int64_t[::1] b):
    """Length of the longest common subsequence of two id sequences."""
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t m = b.shape[0]
    if n == 0 or m == 0:
        return 0
    cdef cnp.ndarray[cnp.int64_t, ndim=1] prev_arr = np.zeros(m + 1, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] curr_arr = np.zeros(m + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] prev = prev_arr
    cdef cnp.int64_t[::1] curr = curr_arr
    cdef cnp.int64_t[::1] tmp
    cdef Py_ssize_t i, j
    cdef cnp.int64_t best
    for i in range(n):
        for j in range(m):
            if a[i] == b[j]:
                best = prev[j] + 1
            else:
                best = prev[j + 1]
            if curr[j] > best:
                best = curr[j]
            curr[j + 1] = best
        tmp = prev
        prev = curr
        curr = tmp
        curr[0] = 0
    return int(prev[m])


def resample_means(cnp.float64_t[::1] values, cnp.int64_t[:, ::1] idx):
    """Per-row mean of ``values`` gathered at ``idx`` (trials, m)."""
    cdef Py_ssize_t trials = idx.shape[0]
    cdef Py_ssize_t m = idx.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_arr = np.empty(trials, dtype=np.float64)
    cdef cnp.float64_t[::1] out = out_arr
    cdef Py_ssize_t t, k
    cdef double acc
    for t in range(trials):
        acc = 0.0
        for k in range(m):
            acc += values[idx[t, k]]
        out[t] = acc / m
    return out_arr


def resample_mean_diffs(cnp.float64_t[::1] a, cnp.float64_t[::1] b,
                        cnp.int64_t[:, ::1] idx):
    """Per-row mean of ``a - b`` over paired resample indices."""
    cdef Py_ssize_t trials = idx.shape[0]
    cdef Py_ssize_t m = idx.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_arr = np.empty(trials, dtype=np.float64)
    cdef cnp.float64_t[::1] out = out_arr
    cdef Py_ssize_t t, k, j
    cdef double acc
    for t in range(trials):
        acc = 0.0
        for k in range(m):
            j = idx[t, k]
            acc += a[j] - b[j]
        out[t] = acc / m
    return out_arr
