# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Gaussian-kernel reductions and the Frank-Wolfe inner loop.

Row sums are computed independently per row (sequential over columns), so
the result does not depend on the number of OpenMP threads.
"""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport parallel, prange
from libc.stdlib cimport free, malloc
from libc.math cimport exp

cnp.import_array()

BLOCK = 256

cdef enum:
    BUF = 512


cdef inline double _row_sum(const double[:, ::1] a, Py_ssize_t i,
                            const double[:, ::1] bt, double tau,
                            double* buf) noexcept nogil:
    # bt is b transposed (p x m) so the inner loops run over contiguous
    # columns and vectorize.
    cdef Py_ssize_t j, k, j0, jn
    cdef Py_ssize_t p = a.shape[1]
    cdef Py_ssize_t m = bt.shape[1]
    cdef double acc = 0.0, part, aik, diff
    j0 = 0
    while j0 < m:
        jn = min(<Py_ssize_t> BUF, m - j0)
        for j in range(jn):
            buf[j] = 0.0
        for k in range(p):
            aik = a[i, k]
            for j in range(jn):
                diff = aik - bt[k, j0 + j]
                buf[j] = buf[j] + diff * diff
        part = 0.0
        for j in range(jn):
            part = part + exp(-tau * buf[j])
        acc = acc + part
        j0 = j0 + BUF
    return acc


def kernel_row_sums(const double[:, ::1] a, const double[:, ::1] b, double tau,
                    Py_ssize_t block=BLOCK, int num_threads=1):
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i
    cdef double* buf
    cdef const double[:, ::1] bt = np.ascontiguousarray(np.asarray(b).T)
    out_arr = np.zeros(n)
    cdef double[::1] out = out_arr
    if num_threads < 1:
        num_threads = 1
    with nogil, parallel(num_threads=num_threads):
        buf = <double*> malloc(BUF * sizeof(double))
        for i in prange(n, schedule="static"):
            out[i] = _row_sum(a, i, bt, tau, buf)
        free(buf)
    return out_arr


def cross_kernel_sum(const double[:, ::1] a, const double[:, ::1] b, double tau,
                     Py_ssize_t block=BLOCK, int num_threads=1):
    rows = kernel_row_sums(a, b, tau, block, num_threads)
    cdef double[::1] r = rows
    cdef Py_ssize_t n = r.shape[0]
    cdef Py_ssize_t i0, i
    cdef double total = 0.0, part
    for i0 in range(0, n, block):
        part = 0.0
        for i in range(i0, min(i0 + block, n)):
            part = part + r[i]
        total = total + part
    return total


cdef void _column(const double[:, ::1] z, Py_ssize_t j, double tau,
                  double[::1] out) noexcept nogil:
    cdef Py_ssize_t i, k
    cdef double d2, diff
    for i in range(z.shape[0]):
        d2 = 0.0
        for k in range(z.shape[1]):
            diff = z[i, k] - z[j, k]
            d2 = d2 + diff * diff
        out[i] = exp(-tau * d2)


def kernel_column(const double[:, ::1] z, Py_ssize_t j, double tau):
    buf = np.empty(z.shape[0])
    cdef double[::1] c = buf
    _column(z, j, tau, c)
    return buf


cdef inline void _ensure(const double[:, ::1] z, Py_ssize_t j, double tau,
                         double[:, ::1] cache, unsigned char[::1] have) noexcept nogil:
    if not have[j]:
        _column(z, j, tau, cache[j])
        have[j] = 1


def fw_solve(const double[:, ::1] z, double tau, const double[::1] b,
             double mu_sq, double[::1] w, double[::1] gw, double wgw, double wb,
             int max_iter, double tol, double[:, ::1] cache,
             unsigned char[::1] have, double[::1] history, int mode=1):
    cdef Py_ssize_t n = z.shape[0]
    cdef Py_ssize_t i, j, a
    cdef int t, n_iter = 0
    cdef bint converged = False
    cdef double f = mu_sq - 2.0 * wb + wgw
    cdef double g, gmin, gmax, wg, gap, gd, dgd, s, s_max, gw_j, gw_a
    cdef double f_new, decrease, cjj
    with nogil:
        for t in range(max_iter):
            if f <= 0.0 and mode != 2:
                converged = True
                break
            j = 0
            a = -1
            gmin = gw[0] - b[0]
            gmax = 0.0
            wg = 0.0
            for i in range(n):
                g = gw[i] - b[i]
                wg = wg + w[i] * g
                if g < gmin:
                    gmin = g
                    j = i
                if w[i] > 0.0 and (a < 0 or g > gmax):
                    gmax = g
                    a = i
            gap = wg - gmin
            if gap <= 0.0 and mode != 2:
                converged = True
                break
            _ensure(z, j, tau, cache, have)
            cjj = cache[j, j]
            gw_j = gw[j]
            if mode == 1:
                if a == j or a < 0:
                    converged = True
                    break
                _ensure(z, a, tau, cache, have)
                gd = gmin - gmax
                dgd = cjj + cache[a, a] - 2.0 * cache[j, a]
                s_max = w[a]
                if dgd <= 0.0:
                    s = s_max
                else:
                    s = -gd / dgd
                    if s > s_max:
                        s = s_max
                gw_a = gw[a]
                w[j] = w[j] + s
                if s == s_max:
                    w[a] = 0.0
                else:
                    w[a] = w[a] - s
                for i in range(n):
                    gw[i] = gw[i] + s * (cache[j, i] - cache[a, i])
                wgw = wgw + 2.0 * s * (gw_j - gw_a) + s * s * dgd
                wb = wb + s * (b[j] - b[a])
            else:
                if mode == 2:
                    s = 2.0 / (t + 2.0)
                else:
                    gd = -gap
                    dgd = cjj - 2.0 * gw_j + wgw
                    if dgd <= 0.0:
                        s = 1.0
                    else:
                        s = -gd / dgd
                        if s > 1.0:
                            s = 1.0
                for i in range(n):
                    w[i] = w[i] * (1.0 - s)
                    gw[i] = gw[i] * (1.0 - s) + s * cache[j, i]
                w[j] = w[j] + s
                wgw = (1.0 - s) * (1.0 - s) * wgw + 2.0 * s * (1.0 - s) * gw_j + s * s * cjj
                wb = (1.0 - s) * wb + s * b[j]
            f_new = mu_sq - 2.0 * wb + wgw
            history[t] = f_new
            n_iter = t + 1
            decrease = f - f_new
            if mode == 2 and decrease < 0.0:
                decrease = -decrease
            f = f_new
            if decrease < tol * max(f + decrease, 0.0):
                converged = True
                break
    return f, wgw, wb, n_iter, bool(converged)
