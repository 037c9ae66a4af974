# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled DTW kernels.

Same contracts (and bit-identical outputs) as _dtw_py; plain C loops instead
of anti-diagonal vectorization.  Cost ids: 0 = squared diff, 1 = abs diff.
Tie order for predecessors is diagonal, down, right.
"""
from libc.math cimport ceil, fabs, INFINITY

import numpy as np


cdef inline double _cost(double x, double y, int cost_id) noexcept nogil:
    cdef double d = x - y
    if cost_id == 0:
        return d * d
    return fabs(d)


def full_dtw(a_in, b_in, long w, int cost_id):
    """Banded whole-sequence DTW; returns (raw_cost, path_len)."""
    cdef const double[::1] a = np.ascontiguousarray(a_in, dtype=np.float64)
    cdef const double[::1] b = np.ascontiguousarray(b_in, dtype=np.float64)
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t m = b.shape[0]

    buf_d = np.full((3, n + 1), np.inf)
    buf_l = np.zeros((3, n + 1), dtype=np.int64)
    cdef double[:, ::1] dmat = buf_d
    cdef long long[:, ::1] lmat = buf_l

    cdef Py_ssize_t pp = 0, p = 1, cur = 2, tmp
    cdef Py_ssize_t d, i, j, lo, hi, band_lo, band_hi
    cdef double cd, cdown, cright, best
    cdef int pick

    with nogil:
        for d in range(n + m - 1):
            lo = d - (m - 1)
            if lo < 0:
                lo = 0
            # truncating division matches floor here: negatives are clamped
            band_lo = (d - w + 1) // 2
            if band_lo > lo:
                lo = band_lo
            hi = d
            if hi > n - 1:
                hi = n - 1
            band_hi = (d + w) // 2
            if band_hi < hi:
                hi = band_hi
            for i in range(n + 1):
                dmat[cur, i] = INFINITY
                lmat[cur, i] = 0
            if d == 0:
                if lo <= 0 <= hi:
                    dmat[cur, 1] = _cost(a[0], b[0], cost_id)
                    lmat[cur, 1] = 1
            else:
                for i in range(lo, hi + 1):
                    j = d - i
                    cd = dmat[pp, i]
                    cdown = dmat[p, i]
                    cright = dmat[p, i + 1]
                    best = cd
                    pick = 0
                    if cdown < best:
                        best = cdown
                        pick = 1
                    if cright < best:
                        best = cright
                        pick = 2
                    dmat[cur, i + 1] = _cost(a[i], b[j], cost_id) + best
                    if pick == 0:
                        lmat[cur, i + 1] = lmat[pp, i] + 1
                    elif pick == 1:
                        lmat[cur, i + 1] = lmat[p, i] + 1
                    else:
                        lmat[cur, i + 1] = lmat[p, i + 1] + 1
            tmp = pp
            pp = p
            p = cur
            cur = tmp
    return float(dmat[p, n]), int(lmat[p, n])


def subseq_dtw_batch(template_in, windows_in, int cost_id, double band=1.0):
    """Open-begin/open-end DTW of a template against each window row.

    Candidate spans outside the band-implied stretch of the template
    length are discarded (with an unconstrained fallback if that empties
    the candidate set).  Returns (starts, ends_exclusive, raw_costs,
    path_lens) arrays.
    """
    cdef const double[::1] t = np.ascontiguousarray(template_in, dtype=np.float64)
    wmat_arr = np.ascontiguousarray(windows_in, dtype=np.float64)
    cdef const double[:, ::1] wmat = wmat_arr
    cdef Py_ssize_t n = t.shape[0]
    cdef Py_ssize_t nw = wmat.shape[0]
    cdef Py_ssize_t m = wmat.shape[1]

    out_start_arr = np.empty(nw, dtype=np.int64)
    out_end_arr = np.empty(nw, dtype=np.int64)
    out_raw_arr = np.empty(nw, dtype=np.float64)
    out_len_arr = np.empty(nw, dtype=np.int64)
    cdef long long[::1] out_start = out_start_arr
    cdef long long[::1] out_end = out_end_arr
    cdef double[::1] out_raw = out_raw_arr
    cdef long long[::1] out_len = out_len_arr

    buf_d = np.full((3, n + 1), np.inf)
    buf_l = np.zeros((3, n + 1), dtype=np.int64)
    buf_s = np.zeros((3, n + 1), dtype=np.int64)
    cdef double[:, ::1] dmat = buf_d
    cdef long long[:, ::1] lmat = buf_l
    cdef long long[:, ::1] smat = buf_s

    end_d_arr = np.empty(m, dtype=np.float64)
    end_l_arr = np.empty(m, dtype=np.int64)
    end_s_arr = np.empty(m, dtype=np.int64)
    cdef double[::1] end_d = end_d_arr
    cdef long long[::1] end_l = end_l_arr
    cdef long long[::1] end_s = end_s_arr

    cdef Py_ssize_t wi, d, i, j, lo, hi, pp, p, cur, tmp
    cdef double cd, cdown, cright, best, norm, best_norm
    cdef long long best_start, start, span, longer
    cdef Py_ssize_t best_j

    with nogil:
        for wi in range(nw):
            pp = 0
            p = 1
            cur = 2
            for i in range(n + 1):
                dmat[pp, i] = INFINITY
                dmat[p, i] = INFINITY
                lmat[pp, i] = 0
                lmat[p, i] = 0
                smat[pp, i] = 0
                smat[p, i] = 0
            for d in range(n + m - 1):
                lo = d - (m - 1)
                if lo < 0:
                    lo = 0
                hi = d
                if hi > n - 1:
                    hi = n - 1
                for i in range(n + 1):
                    dmat[cur, i] = INFINITY
                    lmat[cur, i] = 0
                    smat[cur, i] = 0
                if lo == 0:
                    dmat[cur, 1] = _cost(t[0], wmat[wi, d], cost_id)
                    lmat[cur, 1] = 1
                    smat[cur, 1] = d
                    lo = 1
                for i in range(lo, hi + 1):
                    j = d - i
                    cd = dmat[pp, i]
                    cdown = dmat[p, i]
                    cright = dmat[p, i + 1]
                    best = cd
                    if cdown < best:
                        best = cdown
                    if cright < best:
                        best = cright
                    dmat[cur, i + 1] = _cost(t[i], wmat[wi, j], cost_id) + best
                    if best == cd:
                        lmat[cur, i + 1] = lmat[pp, i] + 1
                        smat[cur, i + 1] = smat[pp, i]
                    elif best == cdown:
                        lmat[cur, i + 1] = lmat[p, i] + 1
                        smat[cur, i + 1] = smat[p, i]
                    else:
                        lmat[cur, i + 1] = lmat[p, i + 1] + 1
                        smat[cur, i + 1] = smat[p, i + 1]
                if hi == n - 1:
                    end_d[d - (n - 1)] = dmat[cur, n]
                    end_l[d - (n - 1)] = lmat[cur, n]
                    end_s[d - (n - 1)] = smat[cur, n]
                tmp = pp
                pp = p
                p = cur
                cur = tmp
            best_norm = INFINITY
            best_start = 0
            best_j = -1
            for j in range(m):
                start = end_s[j]
                span = (j + 1) - start
                longer = span if span > n else n
                if fabs(<double>(span - n)) > ceil(band * longer):
                    continue
                norm = end_d[j] / end_l[j]
                if (best_j < 0 or norm < best_norm
                        or (norm == best_norm and start < best_start)):
                    best_norm = norm
                    best_start = start
                    best_j = j
            if best_j < 0:
                # no span-feasible end; fall back to the unconstrained best
                for j in range(m):
                    norm = end_d[j] / end_l[j]
                    start = end_s[j]
                    if (best_j < 0 or norm < best_norm
                            or (norm == best_norm and start < best_start)):
                        best_norm = norm
                        best_start = start
                        best_j = j
            out_start[wi] = end_s[best_j]
            out_end[wi] = best_j + 1
            out_raw[wi] = end_d[best_j]
            out_len[wi] = end_l[best_j]
    return out_start_arr, out_end_arr, out_raw_arr, out_len_arr
