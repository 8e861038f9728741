"""Offline energy-optimal scheduling under a convex power function.

The optimal schedule repeatedly finds the maximum-intensity ("critical")
time interval, runs exactly its jobs there at constant speed, and excises
the interval from the timeline, compressing the remaining jobs' windows.
Speeds fall round over round, and the result is energy-optimal for every
power exponent alpha > 1 simultaneously.

``yds_schedule`` runs this loop on flat numpy arrays with a pruned search
for the critical interval, then attributes jobs to segments by EDF under
the resulting speed profile.  ``yds_schedule_reference`` is a plain
object-level rendering of the same loop (per-round EDF packing, explicit
time compression records); it is quadratic and kept as a cross-check.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .model import Instance, SpeedSchedule, merge_segments

_COMPLETE_REL = 1e-11  # sweep-internal completion threshold, << EPS_WORK


@dataclass(frozen=True)
class CriticalInterval:
    """Maximum-intensity interval and the jobs it must contain."""

    t1: float
    t2: float
    work: float
    job_ids: tuple[int, ...]

    @property
    def intensity(self) -> float:
        return self.work / (self.t2 - self.t1)


@dataclass(frozen=True)
class CompressionRecord:
    """One timeline excision: times above t1 shifted down by ``shift``."""

    t1: float
    shift: float


def _max_intensity_window(rels, dls, works):
    """Max of w(t1,t2)/(t2-t1) over (release, deadline) candidate pairs.

    ``rels`` must be sorted ascending.  Release candidates are visited in
    decreasing order of an upper bound (all trailing work over the smallest
    trailing window), so the scan usually stops after a few rows.  Ties
    break to the earliest t1, then the earliest t2.

    Returns (t1, t2, work).
    """
    rels_u, first_pos = np.unique(rels, return_index=True)
    dls_u = np.unique(dls)
    d_idx = np.searchsorted(dls_u, dls)
    # tightest possible window per release candidate: all work released at or
    # after it, over the gap to the earliest deadline among those jobs
    suf_min_d = np.minimum.accumulate(dls[::-1])[::-1]
    suf_work = np.concatenate([np.cumsum(works[::-1])[::-1], [0.0]])
    ub = suf_work[first_pos] / (suf_min_d[first_pos] - rels_u)

    order = np.argsort(-ub, kind="stable")
    best = -np.inf
    best_t1 = best_t2 = best_w = 0.0
    for i in order:
        if ub[i] < best:
            break
        t1 = rels_u[i]
        pos = first_pos[i]
        cnt = np.bincount(d_idx[pos:], weights=works[pos:], minlength=len(dls_u))
        cum = np.cumsum(cnt)
        lo = int(np.searchsorted(dls_u, t1, side="right"))
        if lo == len(dls_u):
            continue
        vals = cum[lo:] / (dls_u[lo:] - t1)
        j = int(np.argmax(vals))
        val = float(vals[j])
        t2 = float(dls_u[lo + j])
        if val > best or (
            val == best and (t1 < best_t1 or (t1 == best_t1 and t2 < best_t2))
        ):
            best = val
            best_t1, best_t2, best_w = float(t1), t2, float(cum[lo + j])
    return best_t1, best_t2, best_w


def find_critical_interval(instance: Instance) -> CriticalInterval:
    """Interval [t1, t2] maximizing released-and-due work over length.

    Candidates are (release, deadline) pairs, which is lossless: any
    maximum-intensity interval can be shrunk to a release on the left and a
    deadline on the right without dropping jobs.
    """
    if not len(instance):
        raise ValueError("empty instance has no critical interval")
    t1, t2, w = _max_intensity_window(
        instance.releases, instance.deadlines, instance.works
    )
    mask = (instance.releases >= t1) & (instance.deadlines <= t2)
    return CriticalInterval(t1, t2, w, tuple(int(i) for i in instance.ids[mask]))


def compress_time(
    instance: Instance, t1: float, t2: float
) -> tuple[Instance, CompressionRecord]:
    """Remove the window [t1, t2] from the timeline of the remaining jobs.

    Releases and deadlines above t1 shift down by (t2 - t1), clamped at t1.
    The caller must have dropped the jobs scheduled inside the window.  The
    returned record lets compressed times be expanded back (see
    ``expand_rows``).
    """
    shift = t2 - t1
    jobs = []
    for j in instance:
        r = max(t1, j.release - shift) if j.release > t1 else j.release
        d = max(t1, j.deadline - shift) if j.deadline > t1 else j.deadline
        jobs.append(type(j)(j.id, r, d, j.work))
    return Instance(jobs), CompressionRecord(t1, shift)


def expand_rows(rows, records) -> list[tuple[float, float, float, int]]:
    """Map segment rows back to the original timeline through ``records``.

    Records are undone newest-first.  A segment straddling an excised window
    splits into two pieces around it.
    """
    for rec in reversed(records):
        t1, shift = rec.t1, rec.shift
        out = []
        for s, e, v, j in rows:
            if e <= t1:
                out.append((s, e, v, j))
            elif s >= t1:
                out.append((s + shift, e + shift, v, j))
            else:
                out.append((s, t1, v, j))
                out.append((t1 + shift, e + shift, v, j))
        rows = out
    return rows


def optimal_speed_profile(instance: Instance):
    """Breakpoints and speeds of the energy-optimal profile, via the
    critical-interval loop on flat arrays.

    Returns (times, speeds) with speeds[i] holding on [times[i], times[i+1]];
    zero-speed stretches are idle.
    """
    if not len(instance):
        return np.asarray([]), np.asarray([])
    rels = instance.releases.copy()
    dls = instance.deadlines.copy()
    works = instance.works.copy()
    records: list[CompressionRecord] = []
    pieces: list[tuple[float, float, float, int]] = []
    while len(rels):
        t1, t2, w = _max_intensity_window(rels, dls, works)
        speed = w / (t2 - t1)
        pieces.extend(expand_rows([(t1, t2, speed, -1)], records))
        keep = ~((rels >= t1) & (dls <= t2))
        rels = rels[keep]
        dls = dls[keep]
        works = works[keep]
        if not len(rels):
            break
        shift = t2 - t1
        rels = np.where(rels > t1, np.maximum(t1, rels - shift), rels)
        dls = np.where(dls > t1, np.maximum(t1, dls - shift), dls)
        records.append(CompressionRecord(t1, shift))

    pieces.sort(key=lambda p: p[0])
    times = [pieces[0][0]]
    speeds = []
    for s, e, v, _ in pieces:
        if s > times[-1]:
            speeds.append(0.0)
            times.append(s)
        if e > times[-1]:  # clamp sub-ulp overlaps between rounds
            speeds.append(v)
            times.append(e)
    return np.asarray(times), np.asarray(speeds)


def _edf_at_profile(instance: Instance, times, speeds):
    """Run EDF job selection under a piecewise-constant speed profile."""
    n = len(instance)
    rels = instance.releases
    remaining = instance.works.copy()
    ids = instance.ids
    heap: list[tuple[float, int, int]] = []  # (deadline, id, index)
    rows = []
    ptr = 0
    t = float(times[0])
    piece = 0
    n_pieces = len(speeds)
    while piece < n_pieces:
        piece_end = float(times[piece + 1])
        if t >= piece_end:
            piece += 1
            continue
        while ptr < n and rels[ptr] <= t:
            heapq.heappush(heap, (float(instance.deadlines[ptr]), int(ids[ptr]), ptr))
            ptr += 1
        speed = float(speeds[piece])
        next_rel = float(rels[ptr]) if ptr < n else np.inf
        if not heap or speed <= 0.0:
            t = min(piece_end, next_rel) if not heap else piece_end
            continue
        d, jid, idx = heap[0]
        t_done = t + remaining[idx] / speed
        t_next = min(piece_end, t_done, next_rel)
        if t_next > t:
            remaining[idx] -= speed * (t_next - t)
            rows.append((t, t_next, speed, jid))
        if remaining[idx] <= instance.works[idx] * _COMPLETE_REL or t_next <= t:
            heapq.heappop(heap)
        t = t_next
    return merge_segments(rows)


def yds_schedule(instance: Instance) -> SpeedSchedule:
    """Energy-optimal feasible schedule (constant speed on each critical
    interval, EDF job order within it)."""
    if not len(instance):
        return SpeedSchedule.empty()
    times, speeds = optimal_speed_profile(instance)
    return SpeedSchedule.from_rows(_edf_at_profile(instance, times, speeds))


# ---------------------------------------------------------------------------
# Reference construction: object-level loop with per-round EDF packing
# ---------------------------------------------------------------------------


def _edf_pack(jobs, t1, t2, speed):
    """EDF-pack jobs (all inside [t1, t2]) at constant speed; exact fill."""
    heap: list[tuple[float, int, int]] = []
    remaining = [j.work for j in jobs]
    order = sorted(range(len(jobs)), key=lambda i: (jobs[i].release, jobs[i].id))
    ptr = 0
    t = t1
    rows = []
    while ptr < len(order) or heap:
        while ptr < len(order) and jobs[order[ptr]].release <= t + 1e-12:
            i = order[ptr]
            heapq.heappush(heap, (jobs[i].deadline, jobs[i].id, i))
            ptr += 1
        if not heap:
            t = jobs[order[ptr]].release
            continue
        d, jid, i = heap[0]
        t_done = t + remaining[i] / speed
        next_rel = jobs[order[ptr]].release if ptr < len(order) else np.inf
        t_next = min(t_done, next_rel)
        if t_next > t:
            remaining[i] -= speed * (t_next - t)
            rows.append((t, t_next, speed, jid))
        if remaining[i] <= jobs[i].work * _COMPLETE_REL or t_next <= t:
            heapq.heappop(heap)
        t = t_next
    if rows:
        s, e, v, j = rows[-1]
        if abs(e - t2) < 1e-9 * max(1.0, t2 - t1):
            rows[-1] = (s, t2, v, j)
    return rows


def yds_schedule_reference(instance: Instance) -> SpeedSchedule:
    """Literal per-round construction; use for cross-checks and small inputs."""
    if not len(instance):
        return SpeedSchedule.empty()
    remaining = instance
    records: list[CompressionRecord] = []
    out = []
    while len(remaining):
        crit = find_critical_interval(remaining)
        chosen = set(crit.job_ids)
        in_jobs = [j for j in remaining if j.id in chosen]
        rows = _edf_pack(in_jobs, crit.t1, crit.t2, crit.intensity)
        out.extend(expand_rows(rows, records))
        rest = [j for j in remaining if j.id not in chosen]
        if not rest:
            break
        remaining, rec = compress_time(Instance(rest), crit.t1, crit.t2)
        records.append(rec)
    out.sort(key=lambda r: r[0])
    return SpeedSchedule.from_rows(merge_segments(out))
