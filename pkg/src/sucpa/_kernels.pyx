# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: one map application, full orbit iteration, Jacobian.

Same contracts as ``sucpa._kernels_py``; plain C loops instead of numpy
temporaries, which pays off on the many-small-steps orbit workloads.
"""

import numpy as np

from libc.math cimport exp, fabs, isfinite, log


def step(const double[:, ::1] p, const double[::1] counts, const double[::1] beta):
    cdef Py_ssize_t n = p.shape[0]
    cdef Py_ssize_t k = p.shape[1]
    out_arr = np.empty(k, dtype=np.float64)
    e_arr = np.empty(k, dtype=np.float64)
    s_arr = np.zeros(k, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double[::1] e = e_arr
    cdef double[::1] s = s_arr
    cdef Py_ssize_t i, j
    cdef double m, d

    m = beta[0]
    for j in range(1, k):
        if beta[j] > m:
            m = beta[j]
    for j in range(k):
        e[j] = exp(beta[j] - m)
    for i in range(n):
        d = 0.0
        for j in range(k):
            d += p[i, j] * e[j]
        for j in range(k):
            s[j] += p[i, j] / d
    for j in range(k):
        out[j] = m + log(counts[j]) - log(s[j])
    return out_arr


def orbit(const double[:, ::1] p, const double[::1] counts, const double[::1] beta0,
          double tol, Py_ssize_t max_steps):
    cdef Py_ssize_t n = p.shape[0]
    cdef Py_ssize_t k = p.shape[1]
    points_arr = np.empty((max_steps + 1, k), dtype=np.float64)
    incs_arr = np.empty((max_steps, k), dtype=np.float64)
    e_arr = np.empty(k, dtype=np.float64)
    s_arr = np.empty(k, dtype=np.float64)
    cdef double[:, ::1] points = points_arr
    cdef double[:, ::1] incs = incs_arr
    cdef double[::1] e = e_arr
    cdef double[::1] s = s_arr
    cdef Py_ssize_t t, i, j, applied = 0
    cdef long conv_t = -1, bad = -1
    cdef double m, d, dmax, nxt
    cdef bint ok

    for j in range(k):
        points[0, j] = beta0[j]
    for t in range(max_steps):
        m = points[t, 0]
        for j in range(1, k):
            if points[t, j] > m:
                m = points[t, j]
        for j in range(k):
            e[j] = exp(points[t, j] - m)
            s[j] = 0.0
        for i in range(n):
            d = 0.0
            for j in range(k):
                d += p[i, j] * e[j]
            for j in range(k):
                s[j] += p[i, j] / d
        ok = 1
        dmax = 0.0
        for j in range(k):
            nxt = m + log(counts[j]) - log(s[j])
            if not isfinite(nxt):
                ok = 0
                break
            points[t + 1, j] = nxt
            incs[t, j] = nxt - points[t, j]
            if fabs(incs[t, j]) > dmax:
                dmax = fabs(incs[t, j])
        if not ok:
            bad = t
            break
        applied = t + 1
        if dmax <= tol:
            conv_t = t
            break
    return points_arr[: applied + 1].copy(), incs_arr[:applied].copy(), conv_t, bad


def jacobian(const double[:, ::1] p, const double[::1] beta):
    cdef Py_ssize_t n = p.shape[0]
    cdef Py_ssize_t k = p.shape[1]
    num_arr = np.zeros((k, k), dtype=np.float64)
    den_arr = np.zeros(k, dtype=np.float64)
    e_arr = np.empty(k, dtype=np.float64)
    w_arr = np.empty(k, dtype=np.float64)
    cdef double[:, ::1] num = num_arr
    cdef double[::1] den = den_arr
    cdef double[::1] e = e_arr
    cdef double[::1] w = w_arr
    cdef Py_ssize_t i, a, l
    cdef double d, ua

    for l in range(k):
        e[l] = exp(beta[l] - _vmax(beta, k))
    for i in range(n):
        d = 0.0
        for l in range(k):
            d += p[i, l] * e[l]
        for l in range(k):
            w[l] = p[i, l] * e[l] / d
        for a in range(k):
            ua = p[i, a] / d
            den[a] += ua
            for l in range(k):
                num[a, l] += ua * w[l]
    for a in range(k):
        for l in range(k):
            num[a, l] /= den[a]
    return num_arr


cdef inline double _vmax(const double[::1] v, Py_ssize_t k):
    cdef double m = v[0]
    cdef Py_ssize_t j
    for j in range(1, k):
        if v[j] > m:
            m = v[j]
    return m
