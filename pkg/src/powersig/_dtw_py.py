"""Pure-python (numpy) DTW kernels.

Fallback for the compiled extension; both backends must return bit-identical
results.  The dynamic programs run along anti-diagonals so numpy can
vectorize the inner loop: every cell on a diagonal depends only on the two
previous diagonals.  Diagonal buffers are padded with one leading +inf cell
so i-1 lookups never wrap.

Step set is (diagonal, down, right); ties prefer that order, implemented
with strict-less-than updates.  Cost ids: 0 = squared difference,
1 = absolute difference.
"""
from __future__ import annotations

import numpy as np

COST_SQUARED = 0
COST_ABS = 1


def _cost(a, b, cost_id):
    d = a - b
    if cost_id == COST_SQUARED:
        return d * d
    return np.abs(d)


def full_dtw(a: np.ndarray, b: np.ndarray, w: int, cost_id: int):
    """Banded whole-sequence DTW.

    Cells (i, j) with |i - j| > w are excluded.  Returns the raw cumulative
    cost and the cell count of one optimal path.  The caller guarantees
    w >= |len(a) - len(b)| so the end cell is reachable.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    n, m = a.size, b.size
    inf = np.inf
    d_pp = np.full(n + 1, inf)
    d_p = np.full(n + 1, inf)
    d_cur = np.full(n + 1, inf)
    l_pp = np.zeros(n + 1, dtype=np.int64)
    l_p = np.zeros(n + 1, dtype=np.int64)
    l_cur = np.zeros(n + 1, dtype=np.int64)
    for d in range(n + m - 1):
        lo = max(0, d - (m - 1), (d - w + 1) // 2)
        hi = min(n - 1, d, (d + w) // 2)
        d_cur[:] = inf
        l_cur[:] = 0
        if lo <= hi:
            i = np.arange(lo, hi + 1)
            c = _cost(a[i], b[d - i], cost_id)
            if d == 0:
                d_cur[1] = c[0]
                l_cur[1] = 1
            else:
                ip = i + 1
                best = d_pp[lo:hi + 1].copy()      # diagonal predecessor
                lens = l_pp[lo:hi + 1].copy()
                down = d_p[lo:hi + 1]
                mask = down < best
                best[mask] = down[mask]
                lens[mask] = l_p[lo:hi + 1][mask]
                right = d_p[ip]
                mask = right < best
                best[mask] = right[mask]
                lens[mask] = l_p[ip][mask]
                d_cur[ip] = c + best
                l_cur[ip] = lens + 1
        d_pp, d_p, d_cur = d_p, d_cur, d_pp
        l_pp, l_p, l_cur = l_p, l_cur, l_pp
    return float(d_p[n]), int(l_p[n])


def subseq_dtw_batch(template: np.ndarray, windows: np.ndarray, cost_id: int,
                     band: float = 1.0):
    """Open-begin/open-end DTW of one template against a batch of windows.

    Row 0 starts fresh at every stream column (zero accumulated cost), so
    the alignment may begin anywhere; every end column's cost, path length
    and start column are collected from the last row.  Candidate spans
    whose length differs from the template's by more than
    ceil(band * max(span, template)) cells are discarded - the same
    feasibility rule a banded whole-sequence DTW applies to that span -
    with an unconstrained fallback if that empties the candidate set.
    Per window the winner minimizes (raw/path_len, start, end)
    lexicographically.

    Returns (starts, ends_exclusive, raw_costs, path_lens) arrays, one
    entry per window.
    """
    t = np.ascontiguousarray(template, dtype=np.float64)
    wmat = np.ascontiguousarray(windows, dtype=np.float64)
    n = t.size
    nw, m = wmat.shape
    inf = np.inf
    d_pp = np.full((nw, n + 1), inf)
    d_p = np.full((nw, n + 1), inf)
    d_cur = np.full((nw, n + 1), inf)
    l_pp = np.zeros((nw, n + 1), dtype=np.int64)
    l_p = np.zeros((nw, n + 1), dtype=np.int64)
    l_cur = np.zeros((nw, n + 1), dtype=np.int64)
    s_pp = np.zeros((nw, n + 1), dtype=np.int64)
    s_p = np.zeros((nw, n + 1), dtype=np.int64)
    s_cur = np.zeros((nw, n + 1), dtype=np.int64)

    d_end = np.full((nw, m), inf)
    l_end = np.ones((nw, m), dtype=np.int64)
    s_end = np.zeros((nw, m), dtype=np.int64)

    for d in range(n + m - 1):
        lo = max(0, d - (m - 1))
        hi = min(n - 1, d)
        d_cur[:] = inf
        l_cur[:] = 0
        s_cur[:] = 0
        if lo == 0:
            d_cur[:, 1] = _cost(t[0], wmat[:, d], cost_id)
            l_cur[:, 1] = 1
            s_cur[:, 1] = d
            lo = 1
        if lo <= hi:
            i = np.arange(lo, hi + 1)
            ip = i + 1
            c = _cost(t[i][None, :], wmat[:, d - i], cost_id)
            best = d_pp[:, lo:hi + 1].copy()       # diagonal predecessor
            lens = l_pp[:, lo:hi + 1].copy()
            strt = s_pp[:, lo:hi + 1].copy()
            down = d_p[:, lo:hi + 1]
            mask = down < best
            best[mask] = down[mask]
            lens[mask] = l_p[:, lo:hi + 1][mask]
            strt[mask] = s_p[:, lo:hi + 1][mask]
            right = d_p[:, ip]
            mask = right < best
            best[mask] = right[mask]
            lens[mask] = l_p[:, ip][mask]
            strt[mask] = s_p[:, ip][mask]
            d_cur[:, ip] = c + best
            l_cur[:, ip] = lens + 1
            s_cur[:, ip] = strt
        if hi == n - 1:
            j_end = d - (n - 1)
            d_end[:, j_end] = d_cur[:, n]
            l_end[:, j_end] = l_cur[:, n]
            s_end[:, j_end] = s_cur[:, n]
        d_pp, d_p, d_cur = d_p, d_cur, d_pp
        l_pp, l_p, l_cur = l_p, l_cur, l_pp
        s_pp, s_p, s_cur = s_p, s_cur, s_pp

    norm = d_end / l_end
    span = (np.arange(m) + 1)[None, :] - s_end
    allowed = np.ceil(band * np.maximum(span, n))
    norm = np.where(np.abs(span - n) <= allowed, norm, inf)

    out_start = np.empty(nw, dtype=np.int64)
    out_end = np.empty(nw, dtype=np.int64)
    out_raw = np.empty(nw, dtype=np.float64)
    out_len = np.empty(nw, dtype=np.int64)
    for wi in range(nw):
        row = norm[wi]
        if not np.isfinite(row.min()):
            # no end column whose cheapest start is span-feasible; fall back
            # to the unconstrained optimum rather than returning nothing
            row = d_end[wi] / l_end[wi]
        cols = np.flatnonzero(row == row.min())
        if cols.size > 1:
            cand_starts = s_end[wi, cols]
            cols = cols[cand_starts == cand_starts.min()]
        j = int(cols[0])
        out_start[wi] = s_end[wi, j]
        out_end[wi] = j + 1
        out_raw[wi] = d_end[wi, j]
        out_len[wi] = l_end[wi, j]
    return out_start, out_end, out_raw, out_len
