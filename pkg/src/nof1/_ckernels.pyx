# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Signatures mirror ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int8_t, uint8_t, int64_t

cnp.import_array()


def conv_linear(const double[::1] u, const double[::1] v):
    cdef Py_ssize_t n = u.shape[0], t, s
    cdef double acc
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for t in range(n):
            acc = 0.0
            for s in range(t + 1):
                acc += u[s] * v[t - s]
            o[t] = acc
    return out


def conv_circular(const double[::1] u, const double[::1] v):
    cdef Py_ssize_t n = u.shape[0], t, s
    cdef double acc
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for t in range(n):
            acc = 0.0
            for s in range(t + 1):
                acc += u[s] * v[t - s]
            for s in range(t + 1, n):
                acc += u[s] * v[n + t - s]
            o[t] = acc
    return out


def corr_linear(const double[::1] q, const double[::1] v):
    cdef Py_ssize_t n = q.shape[0], i, s
    cdef double acc
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            acc = 0.0
            for s in range(n - i):
                acc += q[s] * v[i + s]
            o[i] = acc
    return out


def corr_circular(const double[::1] q, const double[::1] v):
    cdef Py_ssize_t n = q.shape[0], i, s, k
    cdef double acc
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            acc = 0.0
            for s in range(n):
                k = i + s
                if k >= n:
                    k -= n
                acc += q[s] * v[k]
            o[i] = acc
    return out


cdef Py_ssize_t _support(const double[::1] a) nogil:
    cdef Py_ssize_t k = a.shape[0]
    while k > 0 and a[k - 1] == 0.0:
        k -= 1
    return k


def linear_quadratic_terms(const double[::1] q, const double[::1] g):
    cdef Py_ssize_t n = q.shape[0]
    cdef Py_ssize_t kq = _support(q), kg = _support(g)
    cdef Py_ssize_t d, m, j, la, lb, lmax, dmax
    cdef double a, b, a_sq, b_sq, ab, fro = 0.0, tr = 0.0, dg = 0.0
    dmax = kq if kq > kg else kg
    if dmax > n:
        dmax = n
    with nogil:
        for d in range(dmax):
            m = n - d
            la = kq - d
            if kg < la:
                la = kg
            if la < 0:
                la = 0
            if la > m:
                la = m
            lb = kg - d
            if kq < lb:
                lb = kq
            if lb < 0:
                lb = 0
            if lb > m:
                lb = m
            lmax = la if la > lb else lb
            a = 0.0
            b = 0.0
            a_sq = 0.0
            b_sq = 0.0
            ab = 0.0
            for j in range(lmax):
                if j < la:
                    a += q[d + j] * g[j]
                if j < lb:
                    b += q[j] * g[j + d]
                a_sq += a * a
                b_sq += b * b
                ab += a * b
            a_sq += (m - lmax) * a * a
            b_sq += (m - lmax) * b * b
            ab += (m - lmax) * a * b
            if d == 0:
                fro += a_sq
                tr += a_sq
                dg += a_sq
            else:
                fro += a_sq + b_sq
                tr += 2.0 * ab
    return fro, tr, dg


def lagged_cross(const int8_t[:, ::1] z, const double[:, ::1] y, Py_ssize_t nlags, bint circular):
    cdef Py_ssize_t r = y.shape[0], n = y.shape[1], i, k, t
    cdef double acc
    out = np.empty((r, nlags))
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(r):
            for k in range(nlags):
                acc = 0.0
                for t in range(k, n):
                    acc += z[i, t - k] * y[i, t]
                if circular:
                    for t in range(k):
                        acc += z[i, n + t - k] * y[i, t]
                o[i, k] = acc
    return out


def conv_linear_rows(const uint8_t[:, ::1] x, const double[::1] g, Py_ssize_t kg):
    cdef Py_ssize_t r = x.shape[0], n = x.shape[1], i, s, t
    out = np.zeros((r, n))
    cdef double[:, ::1] o = out
    if kg > n:
        kg = n
    with nogil:
        for i in range(r):
            for s in range(n):
                if x[i, s]:
                    for t in range(kg):
                        if s + t >= n:
                            break
                        o[i, s + t] += g[t]
    return out


def conv_circular_rows(const uint8_t[:, ::1] x, const double[::1] g, Py_ssize_t kg):
    cdef Py_ssize_t r = x.shape[0], n = x.shape[1], i, s, t, k
    out = np.zeros((r, n))
    cdef double[:, ::1] o = out
    if kg > n:
        kg = n
    with nogil:
        for i in range(r):
            for s in range(n):
                if x[i, s]:
                    for t in range(kg):
                        k = s + t
                        if k >= n:
                            k -= n
                        o[i, k] += g[t]
    return out


def enumerate_moments(const double[::1] g, const double[::1] q, const double[::1] e, bint circular):
    """Gray-code walk over all paths with O(T) incremental updates per step.

    Values are written back in lexicographic order (x_0 is the most
    significant bit).
    """
    cdef Py_ssize_t n = g.shape[0], t, s, k, pos
    cdef int64_t total = (<int64_t>1) << n, step, code = 0, bit
    cdef double sign, acc
    out = np.empty(total)
    cdef double[::1] o = out
    y_arr = np.array(e, dtype=np.float64)
    zq_arr = np.zeros(n)
    cdef double[::1] y = y_arr
    cdef double[::1] zq = zq_arr
    # x = 0, z = -1 everywhere
    for t in range(n):
        acc = 0.0
        if circular:
            for s in range(n):
                acc += q[s]
        else:
            for s in range(t + 1):
                acc += q[s]
        zq[t] = -acc
    with nogil:
        acc = 0.0
        for t in range(n):
            acc += zq[t] * y[t]
        o[0] = 2.0 * acc
        for step in range(1, total):
            bit = 0
            while not ((step >> bit) & 1):
                bit += 1
            code ^= (<int64_t>1) << bit
            pos = n - 1 - bit
            sign = 1.0 if (code >> bit) & 1 else -1.0
            for s in range(n):
                k = pos + s
                if k >= n:
                    if not circular:
                        break
                    k -= n
                y[k] += sign * g[s]
                zq[k] += 2.0 * sign * q[s]
            acc = 0.0
            for t in range(n):
                acc += zq[t] * y[t]
            o[code] = 2.0 * acc
    return out
