# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the elementwise hot kernels in ``_kernels_py``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline double _shrink(double x, double tau) nogil:
    if x > tau:
        return x - tau
    if x < -tau:
        return x + tau
    return 0.0


def soft_threshold_matrix(M, double tau):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] A = np.ascontiguousarray(np.atleast_2d(M), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty_like(A)
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(A.shape[0]):
            for j in range(A.shape[1]):
                out[i, j] = _shrink(A[i, j], tau)
    return out.reshape(np.shape(M))


def sparse_and_dual_update(X, L, z1, double r1, double tau2):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Xa = np.ascontiguousarray(X, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] La = np.ascontiguousarray(L, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Za = np.ascontiguousarray(z1, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] M = np.empty_like(Xa)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Zn = np.empty_like(Xa)
    cdef Py_ssize_t i, j
    cdef double g, m
    with nogil:
        for i in range(Xa.shape[0]):
            for j in range(Xa.shape[1]):
                g = Xa[i, j] - La[i, j]
                m = _shrink(g + Za[i, j] / r1, tau2)
                M[i, j] = m
                Zn[i, j] = Za[i, j] + r1 * (g - m)
    return M, Zn


def project_laplacian(M):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] A = np.ascontiguousarray(M, dtype=np.float64)
    cdef Py_ssize_t p = A.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.zeros((p, p), dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef double v
    with nogil:
        for i in range(p):
            for j in range(i + 1, p):
                v = 0.5 * (A[i, j] + A[j, i])
                if v > 0.0:
                    v = 0.0
                out[i, j] = v
                out[j, i] = v
        for i in range(p):
            v = 0.0
            for j in range(p):
                if j != i:
                    v += out[i, j]
            out[i, i] = -v
    return out
