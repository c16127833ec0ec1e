"""Grouped radius-matching kernels.

Synthetic rows arrive sorted by (categorical group key, first continuous
column).  For each target the kernel locates its group by binary search on
the key, narrows to the candidate slice by binary search on the first
continuous column, then scans the slice checking the remaining interval
dimensions and the normalized-ball criterion (euclidean mode).

Layout contract shared by both backends:
  tkey    int64[n_t]        target group keys
  s_lo/s_hi float64[n_t]    search bounds on sorted column 0 (exact interval
                            bounds when column 0 is an interval dim, widened
                            bounding box when it is a ball dim)
  ilo/ihi float64[n_t, Di]  closed interval bounds, dim 0 first
  bc/bw   float64[n_t, Db]  ball centers / half-widths; bw == 0 demands
                            exact equality on that dim
  skey    int64[n_s]        sorted synthetic keys
  scont   float64[n_s, Di+Db] synthetic continuous values, sorted row order
  srow    int64[n_s]        original row index of each sorted synthetic row

The hot path is compiled with numba; set IDRISK_NO_NUMBA=1 to force the
pure-numpy fallback (also used automatically when numba is unavailable).
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and os.environ.get("IDRISK_NO_NUMBA", "").lower() not in ("1", "true", "yes")


def _grouped_counts_py(tkey, s_lo, s_hi, ilo, ihi, bc, bw, skey, scont, srow):
    n_t = tkey.shape[0]
    n_int = ilo.shape[1]
    n_ball = bc.shape[1]
    d_total = n_int + n_ball
    c_out = np.zeros(n_t, np.int64)
    t_out = np.zeros(n_t, np.int64)
    for i in range(n_t):
        k = tkey[i]
        g0 = _lower_bound(skey, 0, skey.shape[0], k)
        if g0 == skey.shape[0] or skey[g0] != k:
            continue
        g1 = _upper_bound(skey, g0, skey.shape[0], k)
        if d_total > 0:
            col0 = scont[:, 0]
            a = _lower_bound(col0, g0, g1, s_lo[i])
            b = _upper_bound(col0, a, g1, s_hi[i])
        else:
            a, b = g0, g1
        cc = 0
        tt = 0
        for j in range(a, b):
            ok = True
            for d in range(1, n_int):
                v = scont[j, d]
                if v < ilo[i, d] or v > ihi[i, d]:
                    ok = False
                    break
            if ok and n_ball > 0:
                s = 0.0
                for d in range(n_ball):
                    w = bw[i, d]
                    v = scont[j, n_int + d]
                    ctr = bc[i, d]
                    if w == 0.0:
                        if v != ctr:
                            ok = False
                            break
                    else:
                        z = (v - ctr) / w
                        s += z * z
                if ok and s > 1.0:
                    ok = False
            if ok:
                cc += 1
                if srow[j] == i:
                    tt = 1
        c_out[i] = cc
        t_out[i] = tt
    return c_out, t_out


def _lower_bound_py(arr, lo, hi, v):
    # first index in [lo, hi) with arr[idx] >= v
    while lo < hi:
        mid = (lo + hi) // 2
        if arr[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    return lo


def _upper_bound_py(arr, lo, hi, v):
    # first index in [lo, hi) with arr[idx] > v
    while lo < hi:
        mid = (lo + hi) // 2
        if arr[mid] <= v:
            lo = mid + 1
        else:
            hi = mid
    return lo


if HAS_NUMBA:
    _lower_bound = njit(cache=True, nogil=True)(_lower_bound_py)
    _upper_bound = njit(cache=True, nogil=True)(_upper_bound_py)
    _grouped_counts_nb = njit(cache=True, nogil=True)(_grouped_counts_py)
else:
    _lower_bound = _lower_bound_py
    _upper_bound = _upper_bound_py
    _grouped_counts_nb = None


def grouped_counts_numpy(tkey, s_lo, s_hi, ilo, ihi, bc, bw, skey, scont, srow):
    """Vectorized-per-target fallback; identical decisions to the numba kernel."""
    n_t = tkey.shape[0]
    n_int = ilo.shape[1]
    n_ball = bc.shape[1]
    d_total = n_int + n_ball
    c_out = np.zeros(n_t, np.int64)
    t_out = np.zeros(n_t, np.int64)
    col0 = scont[:, 0] if d_total > 0 else None
    for i in range(n_t):
        g0, g1 = np.searchsorted(skey, tkey[i], side="left"), np.searchsorted(skey, tkey[i], side="right")
        if g0 == g1:
            continue
        if col0 is not None:
            a = g0 + np.searchsorted(col0[g0:g1], s_lo[i], side="left")
            b = a + np.searchsorted(col0[a:g1], s_hi[i], side="right")
        else:
            a, b = g0, g1
        if a == b:
            continue
        ok = np.ones(b - a, dtype=bool)
        for d in range(1, n_int):
            v = scont[a:b, d]
            ok &= (v >= ilo[i, d]) & (v <= ihi[i, d])
        if n_ball > 0:
            s = np.zeros(b - a, dtype=np.float64)
            for d in range(n_ball):
                w = bw[i, d]
                v = scont[a:b, n_int + d]
                if w == 0.0:
                    ok &= v == bc[i, d]
                else:
                    z = (v - bc[i, d]) / w
                    s += z * z
            ok &= s <= 1.0
        c_out[i] = int(np.count_nonzero(ok))
        if c_out[i] and np.any(ok & (srow[a:b] == i)):
            t_out[i] = 1
    return c_out, t_out


def grouped_counts_numba(tkey, s_lo, s_hi, ilo, ihi, bc, bw, skey, scont, srow):
    if _grouped_counts_nb is None:
        raise RuntimeError("numba is not available; use grouped_counts_numpy")
    return _grouped_counts_nb(tkey, s_lo, s_hi, ilo, ihi, bc, bw, skey, scont, srow)


def grouped_counts(tkey, s_lo, s_hi, ilo, ihi, bc, bw, skey, scont, srow):
    """Backend-dispatching entry point used by the risk evaluator."""
    if USE_NUMBA:
        return grouped_counts_numba(tkey, s_lo, s_hi, ilo, ihi, bc, bw, skey, scont, srow)
    return grouped_counts_numpy(tkey, s_lo, s_hi, ilo, ihi, bc, bw, skey, scont, srow)
