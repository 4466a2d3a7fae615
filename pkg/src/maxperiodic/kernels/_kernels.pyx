# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: branch-tracked evaluation of w on the hyperelliptic
curve and evaluation of rational 1-form coefficients at quadrature nodes.

The contracts mirror maxperiodic.kernels._fallback exactly.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs

cnp.import_array()

BACKEND = "cython"


cdef inline double complex csqrt_principal(double complex v) noexcept:
    # principal branch, cut on the negative real axis, sqrt(-a + 0j) = i sqrt(a);
    # the larger of the two components is computed first for stability
    cdef double re = v.real
    cdef double im = v.imag
    cdef double r = sqrt(re * re + im * im)
    cdef double a, b
    if im == 0.0:
        if re < 0.0:
            return sqrt(-re) * 1j
        return sqrt(re) + 0.0j
    if re >= 0.0:
        a = sqrt(0.5 * (r + re))
        b = 0.5 * im / a
    else:
        b = sqrt(0.5 * (r - re))
        if im < 0.0:
            b = -b
        a = 0.5 * im / b
    return a + b * 1j


def w_branch(z, branch):
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] zz = \
        np.ascontiguousarray(np.atleast_1d(np.asarray(z, dtype=complex)).ravel())
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cc = \
        np.ascontiguousarray(np.asarray(branch, dtype=float))
    cdef Py_ssize_t m = zz.shape[0]
    cdef Py_ssize_t nb = cc.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty(m, dtype=complex)
    cdef Py_ssize_t i, j
    cdef double complex acc
    for i in range(m):
        acc = 1.0 + 0.0j
        for j in range(nb):
            acc = acc * csqrt_principal(zz[i] - cc[j])
        out[i] = acc
    shaped = out.reshape(np.shape(np.asarray(z, dtype=complex)))
    return shaped


def w_branch_slit(x, branch, side):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xx = \
        np.ascontiguousarray(np.atleast_1d(np.asarray(x, dtype=float)).ravel())
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cc = \
        np.ascontiguousarray(np.asarray(branch, dtype=float))
    cdef double s = float(side)
    cdef Py_ssize_t m = xx.shape[0]
    cdef Py_ssize_t nb = cc.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty(m, dtype=complex)
    cdef Py_ssize_t i, j
    cdef double complex acc
    cdef double d
    for i in range(m):
        acc = 1.0 + 0.0j
        for j in range(nb):
            d = xx[i] - cc[j]
            if d >= 0.0:
                acc = acc * sqrt(d)
            else:
                acc = acc * (s * sqrt(-d) * 1j)
        out[i] = acc
    return out.reshape(np.shape(np.asarray(x, dtype=float)))


def eval_terms(z, w, terms):
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] zz = \
        np.ascontiguousarray(np.atleast_1d(np.asarray(z, dtype=complex)).ravel())
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] ww = \
        np.ascontiguousarray(np.atleast_1d(np.asarray(w, dtype=complex)).ravel())
    cdef Py_ssize_t m = zz.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.zeros(m, dtype=complex)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] A, B, C
    cdef Py_ssize_t i, j, na, nbb, nc
    cdef int k, has_b
    cdef double complex num, den, acc
    for term in terms:
        A = np.ascontiguousarray(np.asarray(term[0], dtype=complex))
        has_b = 1 if (term[1] is not None and len(term[1])) else 0
        if has_b:
            B = np.ascontiguousarray(np.asarray(term[1], dtype=complex))
            nbb = B.shape[0]
        else:
            B = np.zeros(1, dtype=complex)
            nbb = 0
        C = np.ascontiguousarray(np.asarray(term[2], dtype=complex))
        k = int(term[3])
        na = A.shape[0]
        nc = C.shape[0]
        for i in range(m):
            acc = 0.0
            for j in range(na - 1, -1, -1):
                acc = acc * zz[i] + A[j]
            num = acc
            if has_b:
                acc = 0.0
                for j in range(nbb - 1, -1, -1):
                    acc = acc * zz[i] + B[j]
                num = num + acc * ww[i]
            acc = 0.0
            for j in range(nc - 1, -1, -1):
                acc = acc * zz[i] + C[j]
            den = acc
            if k:
                den = den * ww[i]
            out[i] = out[i] + num / den
    return out.reshape(np.shape(np.asarray(z, dtype=complex)))
