# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled neighbor-search kernels. Mirrors advos._kernels_py exactly."""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY, isnan

cnp.import_array()


def sq_distances(const double[:, ::1] a, const double[:, ::1] b):
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0], d = a.shape[1]
    cdef Py_ssize_t i, j, f
    cdef double acc, diff
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(n):
            for j in range(m):
                acc = 0.0
                for f in range(d):
                    diff = a[i, f] - b[j, f]
                    acc = acc + diff * diff
                o[i, j] = acc
    return out


def knn_indices(const double[:, ::1] query, const double[:, ::1] ref, int k, bint exclude_self=False):
    cdef Py_ssize_t n = query.shape[0], m = ref.shape[0], d = query.shape[1]
    cdef Py_ssize_t i, j, f, p, filled
    cdef double acc, diff
    out = np.empty((n, k), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] o = out
    cdef double[::1] bd = np.empty(k, dtype=np.float64)
    cdef cnp.int64_t[::1] bi = np.empty(k, dtype=np.int64)
    with nogil:
        for i in range(n):
            filled = 0
            for j in range(m):
                if exclude_self and i == j:
                    continue
                acc = 0.0
                for f in range(d):
                    diff = query[i, f] - ref[j, f]
                    acc = acc + diff * diff
                if filled == k and acc >= bd[k - 1]:
                    continue
                p = filled if filled < k else k - 1
                while p > 0 and bd[p - 1] > acc:
                    bd[p] = bd[p - 1]
                    bi[p] = bi[p - 1]
                    p -= 1
                bd[p] = acc
                bi[p] = j
                if filled < k:
                    filled += 1
            for p in range(k):
                o[i, p] = bi[p]
    return out


def nan_distances(const double[:, ::1] a, const double[:, ::1] b):
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0], d = a.shape[1]
    cdef Py_ssize_t i, j, f, cnt
    cdef double acc, diff
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(n):
            for j in range(m):
                acc = 0.0
                cnt = 0
                for f in range(d):
                    if isnan(a[i, f]) or isnan(b[j, f]):
                        continue
                    diff = a[i, f] - b[j, f]
                    acc = acc + diff * diff
                    cnt += 1
                if cnt == 0:
                    o[i, j] = INFINITY
                else:
                    o[i, j] = acc * (<double>d / <double>cnt)
    return out
