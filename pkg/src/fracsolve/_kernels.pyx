# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled product-integration kernels.

Same contract as ``_pykernels``; sums run in ascending panel order so the
result does not depend on how callers parallelise over rows.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport pow

cnp.import_array()


cdef enum:
    SERIES_TERMS = 18
cdef double SERIES_RATIO = 0.125


def product_weights(const double[::1] nodes, double alpha, Py_ssize_t row_start=0):
    cdef Py_ssize_t n1 = nodes.shape[0]
    cdef Py_ssize_t nrows = n1 - row_start
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.zeros((nrows, n1))
    cdef double[:, ::1] w = out
    cdef double[::1] p = np.empty(n1)
    cdef double[::1] q = np.empty(n1)
    cdef double c[SERIES_TERMS]
    cdef double cl[SERIES_TERMS]
    cdef double cr[SERIES_TERMS]
    cdef Py_ssize_t r, i, j, k
    cdef double ti, d, a, b, h, m0, m1, ratio, sl, sr, scale
    cdef double inv_a = 1.0 / alpha
    cdef double inv_a1 = 1.0 / (alpha + 1.0)
    c[0] = 1.0
    for k in range(SERIES_TERMS - 1):
        c[k + 1] = c[k] * (k + 1.0 - alpha) / (k + 1.0)
    for k in range(SERIES_TERMS):
        cl[k] = c[k] / ((k + 1.0) * (k + 2.0))
        cr[k] = c[k] / (k + 2.0)
    for r in range(nrows):
        i = row_start + r
        ti = nodes[i]
        for j in range(i + 1):
            d = ti - nodes[j]
            if d < 0.0:
                d = 0.0
            p[j] = pow(d, alpha)
            q[j] = d * p[j]
        for j in range(i):
            b = ti - nodes[j]
            a = ti - nodes[j + 1]
            if a < 0.0:
                a = 0.0
            h = nodes[j + 1] - nodes[j]
            ratio = h / b
            if ratio < SERIES_RATIO:
                # closed-form moment differences cancel on short far panels
                scale = q[j] / h * ratio * ratio
                sl = cl[SERIES_TERMS - 1]
                sr = cr[SERIES_TERMS - 1]
                for k in range(SERIES_TERMS - 2, -1, -1):
                    sl = sl * ratio + cl[k]
                    sr = sr * ratio + cr[k]
                w[r, j] += scale * sl
                w[r, j + 1] += scale * sr
            else:
                m0 = (p[j] - p[j + 1]) * inv_a
                m1 = (q[j] - q[j + 1]) * inv_a1
                w[r, j] += (m1 - a * m0) / h
                w[r, j + 1] += (b * m0 - m1) / h
    return out


def lower_matvec(const double[:, ::1] weights, const double[::1] values, Py_ssize_t row_start=0):
    cdef Py_ssize_t nrows = weights.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(nrows)
    cdef double[::1] o = out
    cdef Py_ssize_t r, j, last
    cdef double acc
    for r in range(nrows):
        last = row_start + r
        acc = 0.0
        for j in range(last + 1):
            acc += weights[r, j] * values[j]
        o[r] = acc
    return out
