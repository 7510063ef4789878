"""Vectorized lagged-correlation kernels (numpy fallback).

Both kernel implementations in this package expose the same contract.
Inputs are column-centered float64 values with 0.0 written at absent
cells, plus uint8 presence masks; centering upstream keeps the one-pass
moment formulas well conditioned.

pair_ccf(x, y, px, py, max_lag)
    -> (n_eff int64[w], r float64[w], zv uint8[w]) with w = 2*max_lag + 1;
    window slot l holds lag l - max_lag. r(k) is the Pearson correlation
    of the overlapped pairs (x_t, y_{t+k}), with moments taken over the
    overlap. r is NaN where n_eff < 2 or a window is constant; zv bit 1
    flags the x side, bit 2 the y side. Finite r is clamped into [-1, 1].

all_pairs_best(vals, pres, max_lag, min_overlap)
    vals/pres shaped (m, n), one row per column. Returns, per unordered
    pair (i, j) with i < j in i-major order:
    (best_lag int32, best_r float64, best_n int64, status uint8).
    status bit 1 = some window constant at some lag, bit 2 = overlap
    below min_overlap at some lag; best_* are meaningful for status == 0.
    Ties in |r| resolve to the smaller |lag|, negative before positive.
"""

from __future__ import annotations

import numpy as np

# Relative floor under which a window's sum of squares counts as constant.
ZV_REL_EPS = 1e-13


def _moments_to_r(ne, sx, sy, sxx, syy, sxy):
    """Pearson r plus zero-variance flags from raw overlap moments."""
    denx = ne * sxx - sx * sx
    deny = ne * syy - sy * sy
    zvx = denx <= ZV_REL_EPS * ne * sxx
    zvy = deny <= ZV_REL_EPS * ne * syy
    with np.errstate(invalid="ignore", divide="ignore"):
        r = (ne * sxy - sx * sy) / np.sqrt(np.maximum(denx, 0.0) * np.maximum(deny, 0.0))
        r = np.clip(r, -1.0, 1.0)
    return r, zvx, zvy


def pair_ccf(x, y, px, py, max_lag):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    pxf = np.asarray(px, dtype=np.float64)
    pyf = np.asarray(py, dtype=np.float64)
    n = x.shape[0]
    w = 2 * max_lag + 1
    n_eff = np.zeros(w, dtype=np.int64)
    r_out = np.full(w, np.nan)
    zv = np.zeros(w, dtype=np.uint8)
    for k in range(max_lag + 1):
        nk = n - k
        for lag in ((k,) if k == 0 else (-k, k)):
            if lag >= 0:
                xw, yw = x[:nk], y[k:]
                pxw, pyw = pxf[:nk], pyf[k:]
            else:
                xw, yw = x[k:], y[:nk]
                pxw, pyw = pxf[k:], pyf[:nk]
            ne = float(np.dot(pxw, pyw))
            sx = float(np.dot(xw, pyw))
            sy = float(np.dot(pxw, yw))
            sxx = float(np.dot(xw * xw, pyw))
            syy = float(np.dot(pxw, yw * yw))
            sxy = float(np.dot(xw, yw))
            r, zvx, zvy = _moments_to_r(ne, sx, sy, sxx, syy, sxy)
            slot = lag + max_lag
            n_eff[slot] = int(ne)
            zv[slot] = (1 if zvx else 0) | (2 if zvy else 0)
            r_out[slot] = np.nan if (zv[slot] or ne < 2) else float(r)
    return n_eff, r_out, zv


def all_pairs_best(vals, pres, max_lag, min_overlap):
    vals = np.asarray(vals, dtype=np.float64)
    pres_b = np.asarray(pres).astype(bool, copy=False)
    m, n = vals.shape
    V = np.ascontiguousarray(vals.T)  # (n, m)
    P = pres_b.T
    full = bool(P.all())
    Pf = np.ascontiguousarray(P, dtype=np.float64)
    V2 = V * V

    best_abs = np.full((m, m), -1.0)
    best_r = np.full((m, m), np.nan)
    best_lag = np.zeros((m, m), dtype=np.int32)
    best_n = np.zeros((m, m), dtype=np.int64)
    status = np.zeros((m, m), dtype=np.uint8)

    def consider(lag, r_mat, ne_mat):
        nonlocal best_abs
        with np.errstate(invalid="ignore"):
            absr = np.abs(r_mat)
            upd = absr > best_abs  # NaN compares False: invalid never selected
        best_abs[upd] = absr[upd]
        best_r[upd] = r_mat[upd]
        best_lag[upd] = lag
        best_n[upd] = ne_mat[upd] if isinstance(ne_mat, np.ndarray) else ne_mat

    for k in range(max_lag + 1):
        nk = n - k
        A, B = V[:nk], V[k:]
        if full:
            ne = float(nk)
            sxa, sxb = A.sum(axis=0), B.sum(axis=0)
            ssa, ssb = V2[:nk].sum(axis=0), V2[k:].sum(axis=0)
            sxy = A.T @ B
            dena = ne * ssa - sxa * sxa
            denb = ne * ssb - sxb * sxb
            zva = dena <= ZV_REL_EPS * ne * ssa
            zvb = denb <= ZV_REL_EPS * ne * ssb
            with np.errstate(invalid="ignore", divide="ignore"):
                r = (ne * sxy - np.outer(sxa, sxb)) / np.sqrt(
                    np.outer(np.maximum(dena, 0.0), np.maximum(denb, 0.0))
                )
                r = np.clip(r, -1.0, 1.0)
            invalid = zva[:, None] | zvb[None, :]
            if nk < 2:
                invalid |= True
            r[invalid] = np.nan
            zpair = zva[:, None] | zvb[None, :]
            status |= zpair
            status |= zpair.T
            if nk < min_overlap:
                status |= 2
            ne_mat = np.int64(nk)
            r_neg, ne_neg = r.T, ne_mat
        else:
            pa, pb = Pf[:nk], Pf[k:]
            ne = pa.T @ pb
            sx = A.T @ pb
            sy = pa.T @ B
            sxx = V2[:nk].T @ pb
            syy = pa.T @ V2[k:]
            sxy = A.T @ B
            r, zvx, zvy = _moments_to_r(ne, sx, sy, sxx, syy, sxy)
            invalid = zvx | zvy | (ne < 2)
            r = np.where(invalid, np.nan, r)
            zpair = (zvx | zvy).astype(np.uint8)
            status |= zpair
            status |= zpair.T
            ins = (ne < min_overlap).astype(np.uint8) * 2
            status |= ins
            status |= ins.T
            ne_mat = ne.astype(np.int64)
            r_neg, ne_neg = r.T, ne_mat.T
        if k == 0:
            consider(0, r, ne_mat)
        else:
            consider(-k, r_neg, ne_neg)
            consider(k, r, ne_mat)

    iu, ju = np.triu_indices(m, 1)
    return (
        np.ascontiguousarray(best_lag[iu, ju]),
        np.ascontiguousarray(best_r[iu, ju]),
        np.ascontiguousarray(best_n[iu, ju]),
        np.ascontiguousarray(status[iu, ju]),
    )
