"""Compiled inner loops: nearest-point scans and the grid-hashed half-word join."""

from __future__ import annotations

import math

import numba as nb
import numpy as np

_EMPTY = np.int64(-(2**62))
_GOLD = np.uint64(0x9E3779B97F4A7C15)


@nb.njit(cache=True)
def _sq_dist(p, t0, t1, t2, t3):
    dot = p[0] * t0 + p[1] * t1 + p[2] * t2 + p[3] * t3
    s = 1.0 if dot >= 0 else -1.0
    d0 = p[0] - s * t0
    d1 = p[1] - s * t1
    d2 = p[2] - s * t2
    d3 = p[3] - s * t3
    return d0 * d0 + d1 * d1 + d2 * d2 + d3 * d3


@nb.njit(cache=True)
def nearest_many(quats, hi, targets):
    """Index of the first minimizer of the projective distance in quats[:hi], per target."""
    T = targets.shape[0]
    best = np.full(T, np.inf)
    arg = np.zeros(T, dtype=np.int64)
    for i in range(hi):
        p = quats[i]
        for k in range(T):
            d = _sq_dist(p, targets[k, 0], targets[k, 1], targets[k, 2], targets[k, 3])
            if d < best[k]:
                best[k] = d
                arg[k] = i
    return arg, np.sqrt(best)


@nb.njit(cache=True)
def nearest_bounded(quats, lens, max_len, target):
    """First minimizer among points whose word length is <= max_len."""
    best = np.inf
    arg = -1
    for i in range(quats.shape[0]):
        if lens[i] > max_len:
            continue
        d = _sq_dist(quats[i], target[0], target[1], target[2], target[3])
        if d < best:
            best = d
            arg = i
    return arg, math.sqrt(best)


@nb.njit(cache=True)
def collect_within(quats, hi, target, radius, cap):
    """Indices i < hi with projective distance to target below radius, ascending."""
    out = np.empty(cap, dtype=np.int64)
    n = 0
    r2 = radius * radius
    for i in range(hi):
        if _sq_dist(quats[i], target[0], target[1], target[2], target[3]) < r2:
            if n < cap:
                out[n] = i
            n += 1
    return out, n


@nb.njit(cache=True)
def cell_keys(quats, h, base, span):
    n = quats.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        key = np.int64(0)
        for k in range(4):
            c = np.int64(math.floor(quats[i, k] / h)) + base
            key = key * span + c
        out[i] = key
    return out


@nb.njit(cache=True)
def _slot(key, mask):
    return np.int64((np.uint64(key) * _GOLD) >> np.uint64(16)) & mask


@nb.njit(cache=True)
def build_hash(sorted_keys, table_bits):
    size = np.int64(1) << table_bits
    mask = size - 1
    tkeys = np.full(size, _EMPTY, dtype=np.int64)
    tstart = np.zeros(size, dtype=np.int64)
    tcount = np.zeros(size, dtype=np.int64)
    n = sorted_keys.shape[0]
    i = 0
    while i < n:
        j = i
        while j < n and sorted_keys[j] == sorted_keys[i]:
            j += 1
        s = _slot(sorted_keys[i], mask)
        while tkeys[s] != _EMPTY:
            s = (s + 1) & mask
        tkeys[s] = sorted_keys[i]
        tstart[s] = i
        tcount[s] = j - i
        i = j
    return tkeys, tstart, tcount


@nb.njit(cache=True)
def _lookup(key, tkeys, mask):
    s = _slot(key, mask)
    while True:
        k = tkeys[s]
        if k == key:
            return s
        if k == _EMPTY:
            return -1
        s = (s + 1) & mask


@nb.njit(cache=True)
def _scan_ball(pts, tkeys, tstart, tcount, mask, h, base, span, r, radius, out, nout, cap):
    """Append to out every sorted position j with |pts[j] - r| < radius."""
    lo = np.empty(4, dtype=np.int64)
    hi = np.empty(4, dtype=np.int64)
    for k in range(4):
        lo[k] = max(np.int64(math.floor((r[k] - radius) / h)), 1 - base)
        hi[k] = min(np.int64(math.floor((r[k] + radius) / h)), base - 1)
    rad2 = radius * radius
    for c0 in range(lo[0], hi[0] + 1):
        for c1 in range(lo[1], hi[1] + 1):
            for c2 in range(lo[2], hi[2] + 1):
                for c3 in range(lo[3], hi[3] + 1):
                    key = (((c0 + base) * span + (c1 + base)) * span + (c2 + base)) * span + (c3 + base)
                    s = _lookup(key, tkeys, mask)
                    if s < 0:
                        continue
                    st = tstart[s]
                    for j in range(st, st + tcount[s]):
                        d0 = pts[j, 0] - r[0]
                        d1 = pts[j, 1] - r[1]
                        d2 = pts[j, 2] - r[2]
                        d3 = pts[j, 3] - r[3]
                        dd = d0 * d0 + d1 * d1 + d2 * d2 + d3 * d3
                        if dd < rad2:
                            if nout < cap:
                                out[nout] = j
                            nout += 1
    return nout


@nb.njit(cache=True)
def query_ball(pts, tkeys, tstart, tcount, mask, h, base, span, q, radius, cap):
    """Sorted positions within `radius` of +q or -q (q0 >= 0 assumed for pts)."""
    out = np.empty(cap, dtype=np.int64)
    r = q.copy()
    if r[0] < 0:
        r = -r
    n = _scan_ball(pts, tkeys, tstart, tcount, mask, h, base, span, r, radius, out, 0, cap)
    if r[0] < radius:
        n = _scan_ball(pts, tkeys, tstart, tcount, mask, h, base, span, -r, radius, out, n, cap)
    return out, n


@nb.njit(cache=True)
def join_scan(pts, lens, left_max, right_max, tkeys, tstart, tcount, mask, h, base, span,
              target, radius, slack, best, hits_i, hits_j, hits_d):
    """For every left point u (length <= left_max) find right points v
    (length <= right_max) with
    |conj(u) * target -+ v| below min(radius, best + slack).

    Records hits (left pos, right pos, approx distance); returns
    (number of hits, best approx distance). If the hit count exceeds the buffer
    the caller must retry with a bigger one.
    """
    cap = hits_i.shape[0]
    nh = 0
    t0, t1, t2, t3 = target[0], target[1], target[2], target[3]
    r = np.empty(4)
    lo = np.empty(4, dtype=np.int64)
    hi = np.empty(4, dtype=np.int64)
    for i in range(pts.shape[0]):
        if lens[i] > left_max:
            continue
        a0 = np.float64(pts[i, 0])
        a1 = -np.float64(pts[i, 1])
        a2 = -np.float64(pts[i, 2])
        a3 = -np.float64(pts[i, 3])
        # conj(u) * t with the SU(2) product convention
        r[0] = a0 * t0 - a1 * t1 - a2 * t2 - a3 * t3
        r[1] = a0 * t1 + t0 * a1 - (a2 * t3 - a3 * t2)
        r[2] = a0 * t2 + t0 * a2 - (a3 * t1 - a1 * t3)
        r[3] = a0 * t3 + t0 * a3 - (a1 * t2 - a2 * t1)
        if r[0] < 0:
            for k in range(4):
                r[k] = -r[k]
        for sign_pass in range(2):
            rad = min(radius, best + slack)
            if sign_pass == 1:
                if r[0] >= rad:
                    break
                for k in range(4):
                    r[k] = -r[k]
            for k in range(4):
                lo[k] = max(np.int64(math.floor((r[k] - rad) / h)), 1 - base)
                hi[k] = min(np.int64(math.floor((r[k] + rad) / h)), base - 1)
            for c0 in range(lo[0], hi[0] + 1):
                for c1 in range(lo[1], hi[1] + 1):
                    for c2 in range(lo[2], hi[2] + 1):
                        for c3 in range(lo[3], hi[3] + 1):
                            key = (((c0 + base) * span + (c1 + base)) * span + (c2 + base)) * span + (c3 + base)
                            s = _lookup(key, tkeys, mask)
                            if s < 0:
                                continue
                            st = tstart[s]
                            for j in range(st, st + tcount[s]):
                                if lens[j] > right_max:
                                    continue
                                d0 = pts[j, 0] - r[0]
                                d1 = pts[j, 1] - r[1]
                                d2 = pts[j, 2] - r[2]
                                d3 = pts[j, 3] - r[3]
                                dd = d0 * d0 + d1 * d1 + d2 * d2 + d3 * d3
                                if dd < rad * rad:
                                    d = math.sqrt(dd)
                                    if nh < cap:
                                        hits_i[nh] = i
                                        hits_j[nh] = j
                                        hits_d[nh] = d
                                    nh += 1
                                    if d < best:
                                        best = d
                                        rad = min(radius, best + slack)
    return nh, best
