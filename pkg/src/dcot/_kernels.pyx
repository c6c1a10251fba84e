# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: blocked distance matrices and the Sinkhorn scaling loop."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, isfinite

cnp.import_array()

NAME = "cython"

DEF BLOCK = 32


def cosine_distance(const double[:, ::1] A, const double[:, ::1] B):
    cdef Py_ssize_t m = A.shape[0], n = B.shape[0], d = A.shape[1]
    cdef Py_ssize_t i, j, k, i0, j0, i1, j1
    cdef double acc, s
    out_arr = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    na_arr = np.empty(m, dtype=np.float64)
    nb_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] na = na_arr, nb = nb_arr
    with nogil:
        for i in range(m):
            acc = 0.0
            for k in range(d):
                acc = acc + A[i, k] * A[i, k]
            na[i] = sqrt(acc)
        for j in range(n):
            acc = 0.0
            for k in range(d):
                acc = acc + B[j, k] * B[j, k]
            nb[j] = sqrt(acc)
        for i0 in range(0, m, BLOCK):
            i1 = min(i0 + BLOCK, m)
            for j0 in range(0, n, BLOCK):
                j1 = min(j0 + BLOCK, n)
                for i in range(i0, i1):
                    for j in range(j0, j1):
                        acc = 0.0
                        for k in range(d):
                            acc = acc + A[i, k] * B[j, k]
                        s = 1.0 - acc / (na[i] * nb[j])
                        if s < 0.0:
                            s = 0.0
                        elif s > 2.0:
                            s = 2.0
                        out[i, j] = s
    return out_arr


def euclidean_distance(const double[:, ::1] A, const double[:, ::1] B):
    cdef Py_ssize_t m = A.shape[0], n = B.shape[0], d = A.shape[1]
    cdef Py_ssize_t i, j, k, i0, j0, i1, j1
    cdef double acc, t
    out_arr = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    with nogil:
        for i0 in range(0, m, BLOCK):
            i1 = min(i0 + BLOCK, m)
            for j0 in range(0, n, BLOCK):
                j1 = min(j0 + BLOCK, n)
                for i in range(i0, i1):
                    for j in range(j0, j1):
                        acc = 0.0
                        for k in range(d):
                            t = A[i, k] - B[j, k]
                            acc = acc + t * t
                        out[i, j] = sqrt(acc)
    return out_arr


def sinkhorn_scaling(const double[:, ::1] K, const double[::1] a, const double[::1] b,
                     int max_iter, double tol):
    """Alternating scaling from u = v = 1; see ``_fallback.sinkhorn_scaling``."""
    cdef Py_ssize_t m = K.shape[0], n = K.shape[1]
    cdef Py_ssize_t i, j
    cdef int it, status = 0, iters = max_iter
    cdef bint converged = False
    cdef double acc, res, r
    u_arr = np.ones(m, dtype=np.float64)
    v_arr = np.ones(n, dtype=np.float64)
    Kv_arr = np.empty(m, dtype=np.float64)
    KTu_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] u = u_arr, v = v_arr, Kv = Kv_arr, KTu = KTu_arr
    with nogil:
        for i in range(m):
            acc = 0.0
            for j in range(n):
                acc = acc + K[i, j]
            Kv[i] = acc
        for it in range(1, max_iter + 1):
            for i in range(m):
                u[i] = a[i] / Kv[i]
            for j in range(n):
                KTu[j] = 0.0
            for i in range(m):
                for j in range(n):
                    KTu[j] = KTu[j] + K[i, j] * u[i]
            for j in range(n):
                v[j] = b[j] / KTu[j]
            for i in range(m):
                if not (isfinite(u[i]) and u[i] > 0.0):
                    status = it
            for j in range(n):
                if not (isfinite(v[j]) and v[j] > 0.0):
                    status = it
            if status != 0:
                iters = it
                break
            res = 0.0
            for i in range(m):
                acc = 0.0
                for j in range(n):
                    acc = acc + K[i, j] * v[j]
                Kv[i] = acc
                r = fabs(u[i] * acc - a[i])
                if r > res:
                    res = r
            for j in range(n):
                r = fabs(v[j] * KTu[j] - b[j])
                if r > res:
                    res = r
            if res <= tol:
                converged = True
                iters = it
                break
    return u_arr, v_arr, iters, converged, status
