"""Hot simulation loops, compiled with numba.

Only the q-scaled optimal-available policy lives here: its speed rule must
be re-evaluated at every tick over multi-day horizons and the q sweep runs
hundreds of such simulations, so the boundary loop is the one place where
interpreter overhead actually hurts.  Semantics are identical to the generic
loop in ``simulator`` (same boundaries, same completion and miss rules);
the test suite checks the two against an independent reference simulator.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def qoa_sim(rels, dls, works, ids, q, tick, eps_work):
    """Simulate EDF under speed = q * max prefix density of remaining work.

    Returns (starts, ends, speeds, seg_jobs, n_seg, miss_ids, miss_dls,
    miss_res, n_miss); segment arrays are oversized, use the counts.
    """
    n = len(rels)
    # active set sorted by (deadline, id); EDF head at index lo
    ad = np.empty(n + 1)
    aid = np.empty(n + 1, np.int64)
    apos = np.empty(n + 1, np.int64)
    arem = np.empty(n + 1)
    lo = 0
    hi = 0

    horizon = 0.0
    for i in range(n):
        if dls[i] > horizon:
            horizon = dls[i]
    cap = int((horizon - rels[0]) / tick) + 4 * n + 64
    seg_s = np.empty(cap)
    seg_e = np.empty(cap)
    seg_v = np.empty(cap)
    seg_j = np.empty(cap, np.int64)
    n_seg = 0
    miss_ids = np.empty(n, np.int64)
    miss_dls = np.empty(n)
    miss_res = np.empty(n)
    n_miss = 0

    ptr = 0
    t = rels[0]
    while True:
        # arrivals at exactly t
        while ptr < n and rels[ptr] <= t:
            d = dls[ptr]
            jid = ids[ptr]
            i = lo
            while i < hi and (ad[i] < d or (ad[i] == d and aid[i] < jid)):
                i += 1
            for k in range(hi, i, -1):
                ad[k] = ad[k - 1]
                aid[k] = aid[k - 1]
                apos[k] = apos[k - 1]
                arem[k] = arem[k - 1]
            ad[i] = d
            aid[i] = jid
            apos[i] = ptr
            arem[i] = works[ptr]
            hi += 1
            ptr += 1
        # deadline misses at the head
        while lo < hi and ad[lo] <= t:
            if arem[lo] > works[apos[lo]] * eps_work:
                miss_ids[n_miss] = aid[lo]
                miss_dls[n_miss] = ad[lo]
                miss_res[n_miss] = arem[lo]
                n_miss += 1
            lo += 1
        if lo == hi:
            if ptr >= n:
                break
            t = rels[ptr]
            continue

        # policy speed: q times the max density of remaining work over
        # future deadlines
        cum = 0.0
        s = 0.0
        for i in range(lo, hi):
            cum += arem[i]
            val = cum / (ad[i] - t)
            if val > s:
                s = val
        s *= q

        next_rel = rels[ptr] if ptr < n else np.inf
        k_grid = int(math.floor(t / tick)) + 1
        g = k_grid * tick
        while g <= t:
            k_grid += 1
            g = k_grid * tick
        nb = g
        if next_rel < nb:
            nb = next_rel
        if ad[lo] < nb:
            nb = ad[lo]
        if s > 0.0:
            t_done = t + arem[lo] / s
            if t_done <= t:  # below time resolution: treat as complete
                arem[lo] = 0.0
                lo += 1
                continue
            if t_done < nb:
                nb = t_done
            arem[lo] -= s * (nb - t)
            if (
                n_seg > 0
                and seg_e[n_seg - 1] == t
                and seg_v[n_seg - 1] == s
                and seg_j[n_seg - 1] == aid[lo]
            ):
                seg_e[n_seg - 1] = nb
            else:
                seg_s[n_seg] = t
                seg_e[n_seg] = nb
                seg_v[n_seg] = s
                seg_j[n_seg] = aid[lo]
                n_seg += 1
            if arem[lo] <= works[apos[lo]] * eps_work:
                arem[lo] = 0.0
                lo += 1
        t = nb

    return seg_s, seg_e, seg_v, seg_j, n_seg, miss_ids, miss_dls, miss_res, n_miss
