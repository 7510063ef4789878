# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled lagged-correlation kernels.

Same contract as `_ccf_numpy` (see its module docstring): column-centered
float64 values with zeros at absent cells, uint8 presence masks, one-pass
moment accumulation per (pair, lag) window, |r| ties resolved toward the
smaller |lag| with negative lags first. all_pairs_best parallelizes over
pairs with OpenMP.
"""

import numpy as np

from cython.parallel cimport prange
from libc.math cimport fabs, isnan, sqrt, NAN

cdef double ZV_REL_EPS = 1e-13


cdef inline double _finish_r(double ne, double sx, double sy, double sxx,
                             double syy, double sxy, int* zv) nogil:
    """r from raw moments; sets *zv bits and returns NAN when undefined."""
    cdef double denx = ne * sxx - sx * sx
    cdef double deny = ne * syy - sy * sy
    cdef double den, r
    zv[0] = 0
    if denx <= ZV_REL_EPS * ne * sxx:
        zv[0] = zv[0] | 1
    if deny <= ZV_REL_EPS * ne * syy:
        zv[0] = zv[0] | 2
    if zv[0] != 0 or ne < 2.0:
        return NAN
    den = sqrt(denx * deny)
    r = (ne * sxy - sx * sy) / den
    if r > 1.0:
        r = 1.0
    elif r < -1.0:
        r = -1.0
    return r


def pair_ccf(double[::1] x, double[::1] y,
             unsigned char[::1] px, unsigned char[::1] py, int max_lag):
    cdef Py_ssize_t n = x.shape[0]
    cdef int w = 2 * max_lag + 1
    n_eff_arr = np.zeros(w, dtype=np.int64)
    r_arr = np.full(w, np.nan)
    zv_arr = np.zeros(w, dtype=np.uint8)
    cdef long long[::1] n_eff = n_eff_arr
    cdef double[::1] r_out = r_arr
    cdef unsigned char[::1] zv_out = zv_arr
    cdef Py_ssize_t k, t, nk
    cdef int lag_sign, slot, zv
    cdef double ne, sx, sy, sxx, syy, sxy, xv, yv, r
    for k in range(max_lag + 1):
        nk = n - k
        for lag_sign in range(-1, 2, 2):
            if k == 0 and lag_sign == -1:
                continue
            ne = 0.0; sx = 0.0; sy = 0.0; sxx = 0.0; syy = 0.0; sxy = 0.0
            if lag_sign > 0:
                for t in range(nk):
                    if px[t] and py[t + k]:
                        xv = x[t]; yv = y[t + k]
                        ne += 1.0
                        sx += xv; sy += yv
                        sxx += xv * xv; syy += yv * yv
                        sxy += xv * yv
                slot = max_lag + <int>k
            else:
                for t in range(nk):
                    if px[t + k] and py[t]:
                        xv = x[t + k]; yv = y[t]
                        ne += 1.0
                        sx += xv; sy += yv
                        sxx += xv * xv; syy += yv * yv
                        sxy += xv * yv
                slot = max_lag - <int>k
            r = _finish_r(ne, sx, sy, sxx, syy, sxy, &zv)
            n_eff[slot] = <long long>ne
            zv_out[slot] = <unsigned char>zv
            r_out[slot] = r
    return n_eff_arr, r_arr, zv_arr


def all_pairs_best(double[:, ::1] vals, unsigned char[:, ::1] pres,
                   int max_lag, int min_overlap):
    cdef Py_ssize_t m = vals.shape[0]
    cdef Py_ssize_t n = vals.shape[1]
    cdef Py_ssize_t npairs = m * (m - 1) // 2
    ii_arr = np.zeros(npairs, dtype=np.int64)
    jj_arr = np.zeros(npairs, dtype=np.int64)
    cdef long long[::1] ii = ii_arr
    cdef long long[::1] jj = jj_arr
    cdef Py_ssize_t i, j, p0 = 0
    for i in range(m):
        for j in range(i + 1, m):
            ii[p0] = i; jj[p0] = j
            p0 += 1

    best_lag_arr = np.zeros(npairs, dtype=np.int32)
    best_r_arr = np.full(npairs, np.nan)
    best_n_arr = np.zeros(npairs, dtype=np.int64)
    status_arr = np.zeros(npairs, dtype=np.uint8)
    cdef int[::1] best_lag = best_lag_arr
    cdef double[::1] best_r = best_r_arr
    cdef long long[::1] best_n = best_n_arr
    cdef unsigned char[::1] status = status_arr

    cdef Py_ssize_t p, t, k, nk, a, b
    cdef int zv_p, zv_n, st, bl
    cdef double ne_p, sx_p, sy_p, sxx_p, syy_p, sxy_p
    cdef double ne_n, sx_n, sy_n, sxx_n, syy_n, sxy_n
    cdef double xv, yv, r_p, r_n, babs, br, bn

    for p in prange(npairs, nogil=True, schedule="static"):
        a = ii[p]; b = jj[p]
        st = 0
        babs = -1.0; br = NAN; bl = 0; bn = 0
        for k in range(max_lag + 1):
            nk = n - k
            # lag +k: (col a at t, col b at t+k); lag -k swaps the roles.
            ne_p = 0.0; sx_p = 0.0; sy_p = 0.0; sxx_p = 0.0; syy_p = 0.0; sxy_p = 0.0
            ne_n = 0.0; sx_n = 0.0; sy_n = 0.0; sxx_n = 0.0; syy_n = 0.0; sxy_n = 0.0
            for t in range(nk):
                if pres[a, t] and pres[b, t + k]:
                    xv = vals[a, t]; yv = vals[b, t + k]
                    ne_p = ne_p + 1.0
                    sx_p = sx_p + xv; sy_p = sy_p + yv
                    sxx_p = sxx_p + xv * xv; syy_p = syy_p + yv * yv
                    sxy_p = sxy_p + xv * yv
                if k != 0 and pres[b, t] and pres[a, t + k]:
                    xv = vals[b, t]; yv = vals[a, t + k]
                    ne_n = ne_n + 1.0
                    sx_n = sx_n + xv; sy_n = sy_n + yv
                    sxx_n = sxx_n + xv * xv; syy_n = syy_n + yv * yv
                    sxy_n = sxy_n + xv * yv
            if k != 0:
                # negative lag first: r(-k) for (a, b) = r(+k) for (b, a)
                r_n = _finish_r(ne_n, sx_n, sy_n, sxx_n, syy_n, sxy_n, &zv_n)
                if zv_n != 0:
                    st = st | 1
                if ne_n < min_overlap:
                    st = st | 2
                if not isnan(r_n) and fabs(r_n) > babs:
                    babs = fabs(r_n); br = r_n; bl = -<int>k; bn = ne_n
            r_p = _finish_r(ne_p, sx_p, sy_p, sxx_p, syy_p, sxy_p, &zv_p)
            if zv_p != 0:
                st = st | 1
            if ne_p < min_overlap:
                st = st | 2
            if not isnan(r_p) and fabs(r_p) > babs:
                babs = fabs(r_p); br = r_p; bl = <int>k; bn = ne_p
        best_lag[p] = bl
        best_r[p] = br
        best_n[p] = <long long>bn
        status[p] = <unsigned char>st
    return best_lag_arr, best_r_arr, best_n_arr, status_arr
