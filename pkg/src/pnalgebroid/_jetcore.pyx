# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for truncated-Taylor arithmetic.

Every kernel takes the multiplication table of a jet space as four flat
arrays ``(I, J, O, W)``: coefficient ``O[t]`` of a product receives
``W[t] * a[I[t]] * b[J[t]]``.  The pure-Python module ``_jetcore_py`` has the
same signatures.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs
from libc.stdlib cimport malloc, free
from libc.string cimport memset

cnp.import_array()

BACKEND = "cython"


cdef inline void _mul(const double* a, const double* b, double* out, Py_ssize_t m,
                      const Py_ssize_t* I, const Py_ssize_t* J, const Py_ssize_t* O,
                      const double* W, Py_ssize_t P) noexcept nogil:
    cdef Py_ssize_t t
    memset(out, 0, m * sizeof(double))
    for t in range(P):
        out[O[t]] += W[t] * a[I[t]] * b[J[t]]


cdef inline void _mul_add(const double* a, const double* b, double* out, double scale,
                          const Py_ssize_t* I, const Py_ssize_t* J, const Py_ssize_t* O,
                          const double* W, Py_ssize_t P) noexcept nogil:
    cdef Py_ssize_t t
    for t in range(P):
        out[O[t]] += scale * W[t] * a[I[t]] * b[J[t]]


cdef void _recip(const double* p, double* out, double* tmp, double* delta, Py_ssize_t m,
                 int K, const Py_ssize_t* I, const Py_ssize_t* J, const Py_ssize_t* O,
                 const double* W, Py_ssize_t P) noexcept nogil:
    # Horner on the Taylor series of 1/t around t = p[0].
    cdef double p0 = p[0]
    cdef double inv = 1.0 / p0
    cdef double coef
    cdef Py_ssize_t i
    cdef int k
    for i in range(m):
        delta[i] = p[i]
    delta[0] = 0.0
    coef = inv
    for k in range(K):
        coef = -coef * inv
    memset(out, 0, m * sizeof(double))
    out[0] = coef
    for k in range(K - 1, -1, -1):
        _mul(out, delta, tmp, m, I, J, O, W, P)
        coef = -coef * p0
        for i in range(m):
            out[i] = tmp[i]
        out[0] += coef


def mul(const double[:, ::1] a, const double[:, ::1] b, const Py_ssize_t[::1] I,
        const Py_ssize_t[::1] J, const Py_ssize_t[::1] O, const double[::1] W):
    cdef Py_ssize_t B = a.shape[0], m = a.shape[1], P = I.shape[0], row
    out = np.empty((B, m), dtype=np.float64)
    cdef double[:, ::1] o = out
    if B == 0 or m == 0:
        return out
    with nogil:
        for row in range(B):
            _mul(&a[row, 0], &b[row, 0], &o[row, 0], m, &I[0], &J[0], &O[0], &W[0], P)
    return out


def matmul(const double[:, :, ::1] A, const double[:, :, ::1] B, const Py_ssize_t[::1] I,
           const Py_ssize_t[::1] J, const Py_ssize_t[::1] O, const double[::1] W):
    cdef Py_ssize_t r = A.shape[0], s = A.shape[1], m = A.shape[2], t = B.shape[1]
    cdef Py_ssize_t P = I.shape[0], i, j, k
    out = np.zeros((r, t, m), dtype=np.float64)
    cdef double[:, :, ::1] o = out
    if r == 0 or t == 0 or s == 0:
        return out
    with nogil:
        for i in range(r):
            for k in range(t):
                for j in range(s):
                    _mul_add(&A[i, j, 0], &B[j, k, 0], &o[i, k, 0], 1.0,
                             &I[0], &J[0], &O[0], &W[0], P)
    return out


def reciprocal(const double[:, ::1] a, int K, const Py_ssize_t[::1] I, const Py_ssize_t[::1] J,
               const Py_ssize_t[::1] O, const double[::1] W):
    cdef Py_ssize_t B = a.shape[0], m = a.shape[1], P = I.shape[0], row
    out = np.empty((B, m), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef double* tmp = <double*> malloc(2 * m * sizeof(double))
    try:
        with nogil:
            for row in range(B):
                _recip(&a[row, 0], &o[row, 0], tmp, tmp + m, m, K,
                       &I[0], &J[0], &O[0], &W[0], P)
    finally:
        free(tmp)
    return out


def solve(const double[:, :, ::1] M_in, const double[:, :, ::1] B_in, int K, double rel_tol,
          const Py_ssize_t[::1] I, const Py_ssize_t[::1] J, const Py_ssize_t[::1] O,
          const double[::1] W):
    """Gaussian elimination with partial pivoting on order-0 magnitudes.

    Returns ``(X, det)`` or ``(None, None)`` when a pivot falls below
    ``rel_tol * max|M_0|``.
    """
    cdef Py_ssize_t r = M_in.shape[0], m = M_in.shape[2], s = B_in.shape[1]
    cdef Py_ssize_t P = I.shape[0]
    M_arr = np.array(np.asarray(M_in), dtype=np.float64, copy=True)
    B_arr = np.array(np.asarray(B_in), dtype=np.float64, copy=True)
    X_arr = np.zeros((r, s, m), dtype=np.float64)
    det_arr = np.zeros(m, dtype=np.float64)
    cdef double[:, :, ::1] M = M_arr
    cdef double[:, :, ::1] Bm = B_arr
    cdef double[:, :, ::1] X = X_arr
    cdef double[::1] det = det_arr
    cdef Py_ssize_t c, i, j, k, piv
    cdef double best, v, scale = 0.0, sign = 1.0
    cdef double* inv = <double*> malloc(4 * m * sizeof(double))
    cdef double* f = inv + m
    cdef double* tmp = inv + 2 * m
    cdef double* tmp2 = inv + 3 * m
    if r == 0:
        free(inv)
        det_arr[0] = 1.0
        return X_arr, det_arr
    try:
        for i in range(r):
            for j in range(r):
                v = fabs(M[i, j, 0])
                if v > scale:
                    scale = v
        if scale == 0.0:
            return None, None
        memset(&det[0], 0, m * sizeof(double))
        det[0] = 1.0
        for c in range(r):
            piv = c
            best = fabs(M[c, c, 0])
            for i in range(c + 1, r):
                v = fabs(M[i, c, 0])
                if v > best:
                    best = v
                    piv = i
            if best <= rel_tol * scale:
                return None, None
            if piv != c:
                sign = -sign
                for j in range(r):
                    for k in range(m):
                        v = M[c, j, k]; M[c, j, k] = M[piv, j, k]; M[piv, j, k] = v
                for j in range(s):
                    for k in range(m):
                        v = Bm[c, j, k]; Bm[c, j, k] = Bm[piv, j, k]; Bm[piv, j, k] = v
            _mul(&det[0], &M[c, c, 0], tmp, m, &I[0], &J[0], &O[0], &W[0], P)
            for k in range(m):
                det[k] = tmp[k]
            _recip(&M[c, c, 0], inv, tmp, tmp2, m, K, &I[0], &J[0], &O[0], &W[0], P)
            for i in range(c + 1, r):
                _mul(&M[i, c, 0], inv, f, m, &I[0], &J[0], &O[0], &W[0], P)
                for j in range(c, r):
                    _mul_add(f, &M[c, j, 0], &M[i, j, 0], -1.0, &I[0], &J[0], &O[0], &W[0], P)
                for j in range(s):
                    _mul_add(f, &Bm[c, j, 0], &Bm[i, j, 0], -1.0, &I[0], &J[0], &O[0], &W[0], P)
        # back substitution
        for c in range(r - 1, -1, -1):
            _recip(&M[c, c, 0], inv, tmp, tmp2, m, K, &I[0], &J[0], &O[0], &W[0], P)
            for j in range(s):
                for k in range(m):
                    tmp2[k] = Bm[c, j, k]
                for i in range(c + 1, r):
                    _mul_add(&M[c, i, 0], &X[i, j, 0], tmp2, -1.0, &I[0], &J[0], &O[0], &W[0], P)
                _mul(tmp2, inv, &X[c, j, 0], m, &I[0], &J[0], &O[0], &W[0], P)
        if sign < 0:
            for k in range(m):
                det[k] = -det[k]
    finally:
        free(inv)
    return X_arr, det_arr
