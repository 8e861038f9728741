"""Discrete-tick online simulation: EDF job selection under a speed policy.

Time advances between boundaries; the policy speed is evaluated once per
boundary and held constant until the next one.  Boundaries are

* the tick grid (multiples of the tick length),
* every job release,
* every job completion,
* the running job's deadline (so work is never attributed outside a job's
  window, and misses are detected exactly at the deadline).

For policies whose formula is piecewise constant between job events (AVR,
e*p(t)), tick boundaries where the speed provably cannot change are skipped;
the resulting schedule is identical segment-for-segment to the literal
tick-by-tick evaluation after merging equal-speed segments.

A job is complete once its remaining work is within EPS_WORK (relative) of
zero.  A job that reaches its deadline unfinished is recorded as a miss and
abandoned; the schedule is still produced so it can be inspected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import EPS_WORK, Instance, SpeedSchedule, merge_segments
from .policies import E, POLICIES, BkpEvEngine, PEvaluator, make_engine


@dataclass(frozen=True)
class SimConfig:
    """Simulation parameters: which policy, its q, and the tick length."""

    policy: str
    q: float = 1.5
    tick: float = 1.0
    audit_vp: bool = False  # record v(t) vs p(t) at every evaluation (BKP only)

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}; expected one of {POLICIES}")
        if self.tick <= 0:
            raise ValueError(f"tick must be positive, got {self.tick}")
        if self.q < 1:
            raise ValueError(f"q must be >= 1, got {self.q}")


@dataclass(frozen=True)
class DeadlineMiss:
    job_id: int
    deadline: float
    residual: float  # remaining work at the deadline


@dataclass
class VpAudit:
    """Observed v(t)/p(t) at policy-evaluation boundaries of a BKP run."""

    evaluations: int = 0
    max_violation: float = -math.inf  # max of v - p; <= 0 means v <= p held

    def record(self, v: float, p: float) -> None:
        self.evaluations += 1
        gap = v - p
        if gap > self.max_violation:
            self.max_violation = gap


@dataclass
class SimResult:
    schedule: SpeedSchedule
    misses: list[DeadlineMiss] = field(default_factory=list)
    audit: VpAudit | None = None

    @property
    def feasible(self) -> bool:
        return not self.misses


class _ActiveSet:
    """Released unfinished jobs, sorted by (deadline, id); EDF head at lo."""

    def __init__(self, n: int):
        self.d = np.empty(n + 1)
        self.ids = np.empty(n + 1, dtype=np.int64)
        self.pos = np.empty(n + 1, dtype=np.int64)  # instance position
        self.rem = np.empty(n + 1)
        self.lo = 0
        self.hi = 0

    def __len__(self) -> int:
        return self.hi - self.lo

    def insert(self, d: float, jid: int, pos: int, rem: float) -> None:
        i = self.lo + int(np.searchsorted(self.d[self.lo : self.hi], d, side="left"))
        while i < self.hi and self.d[i] == d and self.ids[i] < jid:
            i += 1
        for arr, val in ((self.d, d), (self.ids, jid), (self.pos, pos), (self.rem, rem)):
            arr[i + 1 : self.hi + 1] = arr[i : self.hi]
            arr[i] = val
        self.hi += 1

    def pop_head(self) -> None:
        self.lo += 1


def _next_grid(t: float, tick: float) -> float:
    k = math.floor(t / tick) + 1
    g = k * tick
    while g <= t:  # float safety near exact grid points
        k += 1
        g = k * tick
    return g


def _grid_after(x: float, t: float, tick: float) -> float:
    """First grid point strictly after both x and t (inf if x is inf)."""
    if x == math.inf:
        return math.inf
    return _next_grid(max(x, t), tick)


def _simulate_qoa(instance: Instance, q: float, tick: float) -> SimResult:
    from ._kernels import qoa_sim

    out = qoa_sim(
        instance.releases, instance.deadlines, instance.works, instance.ids,
        q, tick, EPS_WORK,
    )
    seg_s, seg_e, seg_v, seg_j, n_seg, miss_ids, miss_dls, miss_res, n_miss = out
    schedule = SpeedSchedule(
        seg_s[:n_seg].copy(), seg_e[:n_seg].copy(),
        seg_v[:n_seg].copy(), seg_j[:n_seg].copy(),
    )
    misses = [
        DeadlineMiss(int(miss_ids[i]), float(miss_dls[i]), float(miss_res[i]))
        for i in range(n_miss)
    ]
    return SimResult(schedule, misses)


def simulate(instance: Instance, config: SimConfig) -> SimResult:
    """Run one policy over one instance and return its speed schedule."""
    n = len(instance)
    if n == 0:
        return SimResult(SpeedSchedule.empty())
    if config.policy in ("qoa", "oa"):
        return _simulate_qoa(
            instance, config.q if config.policy == "qoa" else 1.0, config.tick
        )
    rels = instance.releases
    dls = instance.deadlines
    works = instance.works
    ids = instance.ids
    tick = config.tick

    active = _ActiveSet(n)
    engine = make_engine(config.policy, config.q, instance, active)

    audit = None
    audit_v = audit_p = None
    if config.audit_vp and config.policy in ("bkp_ev", "bkp_ep"):
        audit = VpAudit()
        if config.policy == "bkp_ev":
            audit_p = PEvaluator(instance)
            audit_v = engine
        else:
            audit_v = BkpEvEngine(instance)
            audit_p = engine.p

    rows: list[tuple[float, float, float, int]] = []
    misses: list[DeadlineMiss] = []
    ptr = 0
    t = float(rels[0])
    while True:
        # arrivals at exactly t
        if ptr < n and rels[ptr] <= t:
            start = ptr
            while ptr < n and rels[ptr] <= t:
                active.insert(float(dls[ptr]), int(ids[ptr]), ptr, float(works[ptr]))
                ptr += 1
            engine.on_release(t, range(start, ptr))
            if audit_v is not None and audit_v is not engine:
                audit_v.on_release(t, range(start, ptr))
        # deadline misses: active head past (or at) its deadline, unfinished
        while len(active) and active.d[active.lo] <= t:
            i = active.lo
            residual = float(active.rem[i])
            if residual > works[active.pos[i]] * EPS_WORK:
                misses.append(DeadlineMiss(int(active.ids[i]), float(active.d[i]), residual))
            active.pop_head()
        if not len(active):
            if ptr >= n:
                break
            t = float(rels[ptr])  # idle: speed is 0 until new work arrives
            continue

        if audit is None:
            s = float(engine.speed(t))
        elif config.policy == "bkp_ev":
            v = engine.v_value(t)
            s = E * v
            audit.record(v, audit_p.value(t))
        else:
            s = float(engine.speed(t))
            audit.record(audit_v.v_value(t), audit_p.value(t))

        next_rel = float(rels[ptr]) if ptr < n else math.inf
        head_d = float(active.d[active.lo])
        if engine.stepwise:
            nb = min(next_rel, head_d, _grid_after(engine.next_change(t), t, tick))
        else:
            nb = min(next_rel, head_d, _next_grid(t, tick))
        if s > 0.0:
            head = active.lo
            t_done = t + active.rem[head] / s
            if t_done <= t:  # remaining work below time resolution
                active.rem[head] = 0.0
                active.pop_head()
                continue
            nb = min(nb, t_done)
            active.rem[head] -= s * (nb - t)
            rows.append((t, nb, s, int(active.ids[head])))
            if active.rem[head] <= works[active.pos[head]] * EPS_WORK:
                active.rem[head] = 0.0
                active.pop_head()
        t = nb

    schedule = SpeedSchedule.from_rows(merge_segments(rows))
    return SimResult(schedule, misses, audit)
