"""Online speed policies: AVR, OA/qOA, and the two BKP variants.

Each policy has a direct, stateless implementation (``speed_avr`` and
friends) that computes the rule from a :class:`PolicyState` snapshot; these
define the semantics and are used by tests and small studies.  The simulator
uses incremental engine classes (same values, event-driven updates) because
policy speeds are re-evaluated hundreds of thousands of times over a
multi-day trace.

Conventions shared by all policies:

* A job is visible only from its release time on (online model).
* qOA/OA see *remaining* work of unfinished arrived jobs; AVR and BKP see
  *arrived* work including jobs the simulator already finished.
* When no arrived job is unfinished the effective speed is 0 regardless of
  the formula value (idling rule); the simulator enforces this.
* Jobs that pass their deadline unfinished are abandoned (their remaining
  work is zeroed after the miss is recorded), so formulas never chase work
  that can no longer meet any deadline.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .model import Instance

E = math.e

POLICIES = ("avr", "oa", "qoa", "bkp_ev", "bkp_ep")


@dataclass
class PolicyState:
    """An online policy's view of the world at time ``now``.

    ``arrived`` and ``remaining`` are aligned with the instance's job order;
    completed (or abandoned) jobs have remaining == 0 but stay part of the
    arrived history.
    """

    now: float
    instance: Instance
    arrived: np.ndarray
    remaining: np.ndarray

    @classmethod
    def at(cls, instance: Instance, now: float, remaining=None) -> "PolicyState":
        arrived = instance.releases <= now
        if remaining is None:
            remaining = np.where(arrived, instance.works, 0.0)
        return cls(now, instance, arrived, np.asarray(remaining, dtype=np.float64))

    def has_live_work(self) -> bool:
        return bool(np.any(self.arrived & (self.remaining > 0.0)))


def speed_avr(state: PolicyState) -> float:
    """Sum of average rates w/span of jobs whose window contains ``now``."""
    if not state.has_live_work():
        return 0.0
    inst = state.instance
    active = state.arrived & (inst.deadlines >= state.now)
    spans = inst.deadlines[active] - inst.releases[active]
    return float(np.sum(inst.works[active] / spans))


def speed_qoa(state: PolicyState, q: float = 1.5) -> float:
    """q times the maximum density of remaining work over future deadlines."""
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    inst = state.instance
    mask = state.arrived & (state.remaining > 0.0)
    if not np.any(mask):
        return 0.0
    dls = inst.deadlines[mask]
    rem = state.remaining[mask]
    order = np.argsort(dls, kind="stable")
    dls = dls[order]
    cum = np.cumsum(rem[order])
    future = dls > state.now
    if not np.any(future):
        return 0.0
    return q * float(np.max(cum[future] / (dls[future] - state.now)))


def speed_oa(state: PolicyState) -> float:
    return speed_qoa(state, 1.0)


def speed_bkp_p(state: PolicyState) -> float:
    """e times the max intensity of arrived work over windows containing now.

    Windows [t1, t2] satisfy t1 < now <= t2 and count arrived work released
    at or after t1 and due by t2 -- including jobs already completed or past
    their deadline.  Candidate t1 are arrived releases; candidate t2 are
    arrived deadlines at or after now, plus now itself: when the t2 >= now
    constraint binds, the best window ends exactly at now and holds only
    already-due work.
    """
    if not state.has_live_work():
        return 0.0
    inst = state.instance
    arr = state.arrived
    rels = inst.releases[arr]
    dls = inst.deadlines[arr]
    works = inst.works[arr]
    t1s = np.unique(rels)
    t2s = np.unique(np.append(dls[dls >= state.now], state.now))
    best = 0.0
    for t1 in t1s:
        for t2 in t2s:
            if t2 <= t1:
                continue
            w = works[(rels >= t1) & (dls <= t2)].sum()
            best = max(best, w / (t2 - t1))
    return E * best


def speed_bkp_v(state: PolicyState) -> float:
    """e times v(now), the scaled-window variant of the BKP lower bound.

    v(now) maximizes, over t' > now, the arrived work inside the window
    [e*now - (e-1)*t', t'] divided by e*(t' - now).  A job enters the
    numerator once t' reaches max(deadline, (e*now - release)/(e-1)), so
    those entry points are the complete candidate set for the maximum.
    """
    if not state.has_live_work():
        return 0.0
    inst = state.instance
    arr = state.arrived
    rels = inst.releases[arr]
    dls = inst.deadlines[arr]
    works = inst.works[arr]
    entries = np.maximum(dls, (E * state.now - rels) / (E - 1.0))
    best = 0.0
    for t_prime in entries:
        mass = works[entries <= t_prime].sum()
        best = max(best, mass / (E * (t_prime - state.now)))
    return E * best


# ---------------------------------------------------------------------------
# Precomputed profile of p(t) over a whole instance
# ---------------------------------------------------------------------------
#
# p(t) depends only on which jobs have arrived and which candidate windows
# still contain t, so it is piecewise constant with breakpoints at release
# and deadline times.  Building the whole profile once per instance makes
# the e*p(t) policy (and the v <= p audit) cheap for every simulation run.


@dataclass(frozen=True)
class PProfile:
    """Piecewise-constant p(t): value AT each event and on the open interval
    after it."""

    events: np.ndarray
    at_event: np.ndarray
    after_event: np.ndarray

    def value(self, t: float) -> float:
        i = int(np.searchsorted(self.events, t, side="right")) - 1
        if i < 0:
            return 0.0
        if self.events[i] == t:
            return float(self.at_event[i])
        return float(self.after_event[i])

    def next_event(self, t: float) -> float:
        i = int(np.searchsorted(self.events, t, side="right"))
        return float(self.events[i]) if i < len(self.events) else math.inf


class _PSweep:
    """Chronological maximizer of w(t1,t2)/(t2-t1) over arrived pairs.

    The standing best pair is maintained exactly (arrivals inside its window
    raise its value in O(log)).  A recompute scans release candidates against
    per-candidate upper bounds: a candidate's last exact value plus the work
    arrived since, spread over its shortest valid window.  Each evaluation
    refreshes the candidate's cached value, so bounds tighten as the sweep
    proceeds and only a handful of rows are touched per event.
    """

    def __init__(self, rels, dls, works):
        self.rels = rels  # release-sorted instance arrays
        self.dls = dls
        self.works = works
        self.rel_vals = np.unique(rels)
        k1 = len(self.rel_vals)
        self.stale_val = np.zeros(k1)  # last exact value per release candidate
        self.stamp_w = np.zeros(k1)  # arrived-work total at that evaluation
        # candidate window ends: every deadline of the instance.  Columns for
        # deadlines that have not arrived yet carry no work and never win,
        # but keeping them makes the cached per-row values valid bounds even
        # after new deadlines appear between two evaluations of a row.
        self.all_d = np.sort(dls)
        self.ptr = 0
        self.n_rel = 0
        self.w_total = 0.0
        self.best_val = 0.0
        self.best_t1 = -np.inf
        self.best_t2 = -np.inf

    def arrive(self, x: float) -> None:
        new_ptr = self.ptr + int(
            np.searchsorted(self.rels[self.ptr :], x, side="right")
        )
        batch_w = self.works[self.ptr : new_ptr]
        self.w_total += float(batch_w.sum())
        if self.best_t2 >= x >= self.best_t1:
            # new jobs land inside the standing window iff their deadline fits
            inside = self.dls[self.ptr : new_ptr] <= self.best_t2
            if np.any(inside):
                self.best_val += float(batch_w[inside].sum()) / (
                    self.best_t2 - self.best_t1
                )
        self.ptr = new_ptr
        self.n_rel += 1

    def _row_value(self, t1, cand_d):
        """Best intensity over windows [t1, t2], t2 in cand_d, among arrived."""
        pos = int(np.searchsorted(self.rels[: self.ptr], t1, side="left"))
        if pos == self.ptr or not len(cand_d):
            return 0.0, -np.inf
        cols = np.searchsorted(cand_d, self.dls[pos : self.ptr], side="left")
        cnt = np.bincount(
            cols, weights=self.works[pos : self.ptr], minlength=len(cand_d) + 1
        )[: len(cand_d)]
        cum = np.cumsum(cnt)
        ok = cand_d > t1
        if not np.any(ok):
            return 0.0, -np.inf
        vals = cum[ok] / (cand_d[ok] - t1)
        j = int(np.argmax(vals))
        return float(vals[j]), float(cand_d[ok][j])

    def recompute(self, x: float, strict: bool) -> None:
        """Refresh the best pair among arrived jobs with t2 >= x (> if strict)."""
        side = "right" if strict else "left"
        lo = int(np.searchsorted(self.all_d, x, side=side))
        cand_d = self.all_d[lo:]
        n_rel = self.n_rel
        rel_v = self.rel_vals[:n_rel]
        standing_ok = self.best_t2 > x if strict else self.best_t2 >= x
        if not len(cand_d):
            self.best_val, self.best_t1, self.best_t2 = 0.0, -np.inf, -np.inf
            return
        if standing_ok:
            best, bt1, bt2 = self.best_val, self.best_t1, self.best_t2
        else:
            best, bt1, bt2 = 0.0, -np.inf, -np.inf
        # the newest candidate has no usable bound yet; always evaluate it
        t1 = float(rel_v[-1])
        val, t2 = self._row_value(t1, cand_d)
        self.stale_val[n_rel - 1] = val
        self.stamp_w[n_rel - 1] = self.w_total
        if val > best:
            best, bt1, bt2 = val, t1, t2
        if n_rel > 1:
            older = slice(0, n_rel - 1)
            ub = self.stale_val[older] + (self.w_total - self.stamp_w[older]) / (
                x - rel_v[:-1]
            )
            live = np.nonzero(ub > best)[0]
            for i in live[np.argsort(-ub[live], kind="stable")]:
                if ub[i] <= best:
                    break
                t1 = float(rel_v[i])
                val, t2 = self._row_value(t1, cand_d)
                self.stale_val[i] = val
                self.stamp_w[i] = self.w_total
                if val > best:
                    best, bt1, bt2 = val, t1, t2
        self.best_val, self.best_t1, self.best_t2 = best, bt1, bt2


def build_p_profile(instance: Instance) -> PProfile:
    """Exact p(t) profile via one chronological sweep over the events.

    p(t) can rise only at releases and fall only when the deadline of the
    current best window passes, so a full recompute happens at releases and
    at best-pair expiries; every other event reuses the standing maximum.
    """
    n = len(instance)
    if n == 0:
        return PProfile(np.empty(0), np.empty(0), np.empty(0))
    rels = instance.releases
    dls = instance.deadlines
    works = instance.works
    events = np.unique(np.concatenate([rels, dls]))
    is_release = np.zeros(len(events), dtype=bool)
    is_release[np.searchsorted(events, np.unique(rels))] = True

    at_event = np.zeros(len(events))
    after_event = np.zeros(len(events))
    sweep = _PSweep(rels, dls, works)

    for k, x in enumerate(events):
        if is_release[k]:
            sweep.arrive(x)
            sweep.recompute(x, strict=False)
            at_event[k] = sweep.best_val
            if sweep.best_t2 <= x:
                sweep.recompute(x, strict=True)
            after_event[k] = sweep.best_val
        else:
            # pairs with t2 >= x are exactly those with t2 > previous event
            at_event[k] = after_event[k - 1] if k else 0.0
            if sweep.best_t2 <= x:
                sweep.recompute(x, strict=True)
            after_event[k] = sweep.best_val

    return PProfile(events, at_event, after_event)


def get_p_profile(instance: Instance) -> PProfile:
    """Memoized per-instance profile (pure function of the job arrivals)."""
    cached = instance.__dict__.get("_p_profile")
    if cached is None:
        cached = build_p_profile(instance)
        instance.__dict__["_p_profile"] = cached
    return cached


# ---------------------------------------------------------------------------
# Incremental engines used by the simulator
# ---------------------------------------------------------------------------


class AvrEngine:
    """Incremental sum of w/span over jobs whose window contains now."""

    # speed changes only at releases and when a window closes
    stepwise = True

    def __init__(self, instance: Instance):
        self.inst = instance
        self.rates = instance.works / (instance.deadlines - instance.releases)
        self.rate_sum = 0.0
        self.expiry: list[tuple[float, float]] = []

    def on_release(self, t: float, positions) -> None:
        for i in positions:
            self.rate_sum += self.rates[i]
            heapq.heappush(self.expiry, (float(self.inst.deadlines[i]), self.rates[i]))

    def speed(self, t: float) -> float:
        while self.expiry and self.expiry[0][0] < t:
            self.rate_sum -= heapq.heappop(self.expiry)[1]
        return self.rate_sum

    def next_change(self, t: float) -> float:
        # first moment a window that currently counts stops counting
        return self.expiry[0][0] if self.expiry else math.inf


class _ArrivedWindows:
    """Arrived-job bookkeeping shared by the BKP rules.

    ``open``: arrived jobs whose deadline has not passed, sorted by deadline.
    ``closed``: arrived jobs past their deadline, sorted by release, with
    suffix work sums.  Completion state is deliberately ignored: both BKP
    bounds are defined over arrived work.
    """

    def __init__(self):
        self.open_d = np.empty(0)
        self.open_r = np.empty(0)
        self.open_w = np.empty(0)
        self.closed_r = np.empty(0)
        self.closed_w = np.empty(0)
        self.closed_suf = np.asarray([0.0])

    def add(self, rels, dls, works) -> None:
        order = np.argsort(dls, kind="stable")  # keep open_d sorted after merge
        dls = dls[order]
        pos = np.searchsorted(self.open_d, dls)
        self.open_d = np.insert(self.open_d, pos, dls)
        self.open_r = np.insert(self.open_r, pos, rels[order])
        self.open_w = np.insert(self.open_w, pos, works[order])

    def advance(self, t: float) -> None:
        cut = int(np.searchsorted(self.open_d, t, side="left"))
        if cut == 0:
            return
        order = np.argsort(self.open_r[:cut], kind="stable")
        move_r = self.open_r[:cut][order]
        move_w = self.open_w[:cut][order]
        pos = np.searchsorted(self.closed_r, move_r)
        self.closed_r = np.insert(self.closed_r, pos, move_r)
        self.closed_w = np.insert(self.closed_w, pos, move_w)
        self.closed_suf = np.concatenate([np.cumsum(self.closed_w[::-1])[::-1], [0.0]])
        self.open_d = self.open_d[cut:]
        self.open_r = self.open_r[cut:]
        self.open_w = self.open_w[cut:]


class BkpEvEngine:
    """Speed e*v(t) with v maximized over numerator entry points."""

    stepwise = False

    def __init__(self, instance: Instance):
        self.inst = instance
        self.win = _ArrivedWindows()

    def on_release(self, t: float, positions) -> None:
        idx = np.asarray(positions, dtype=np.int64)
        self.win.add(self.inst.releases[idx], self.inst.deadlines[idx], self.inst.works[idx])

    def v_value(self, t: float) -> float:
        win = self.win
        win.advance(t)
        best = 0.0
        closed_r = win.closed_r
        closed_suf = win.closed_suf
        k_open = len(win.open_d)
        if k_open:
            rd = (E * t - win.open_r) / (E - 1.0)
            entries = np.maximum(win.open_d, rd)
            order = np.argsort(entries, kind="stable")
            ent = entries[order]
            cum_open = np.cumsum(win.open_w[order])
            closed_mass = closed_suf[
                np.searchsorted(closed_r, E * t - (E - 1.0) * ent, side="left")
            ]
            den = ent - t  # > 0 mathematically; guard sub-ulp cancellation
            ok = den > 0
            if np.any(ok):
                best = float(np.max((cum_open[ok] + closed_mass[ok]) / (E * den[ok])))
        else:
            ent = np.empty(0)
            cum_open = np.empty(0)
        if len(closed_r):
            ent_c = (E * t - closed_r) / (E - 1.0)
            open_mass = (
                np.concatenate([[0.0], cum_open])[
                    np.searchsorted(ent, ent_c, side="right")
                ]
                if k_open
                else np.zeros(len(closed_r))
            )
            den = ent_c - t
            ok = den > 0
            if np.any(ok):
                vals = (closed_suf[:-1][ok] + open_mass[ok]) / (E * den[ok])
                best = max(best, float(np.max(vals)))
        return best

    def speed(self, t: float) -> float:
        return E * self.v_value(t)

    def next_change(self, t: float) -> float:
        return math.inf


class PEvaluator:
    """True p(t) for one instance, queried at nondecreasing times.

    Combines the precomputed standing-window profile (windows ending at a
    future deadline) with the window ending exactly at now: when the
    t2 >= now constraint binds, the best window holds only work already due,
    and its value decays continuously as the lookback stretches.  That part
    is re-evaluated per query over the already-due jobs.
    """

    def __init__(self, instance: Instance):
        self.inst = instance
        self.profile = get_p_profile(instance)
        self.win = _ArrivedWindows()
        self.ptr = 0

    def value(self, t: float) -> float:
        inst = self.inst
        rels = inst.releases
        n = len(inst)
        if self.ptr < n and rels[self.ptr] <= t:
            start = self.ptr
            while self.ptr < n and rels[self.ptr] <= t:
                self.ptr += 1
            idx = np.arange(start, self.ptr)
            self.win.add(rels[idx], inst.deadlines[idx], inst.works[idx])
        self.win.advance(t)
        return max(self.profile.value(t), self._now_window(t))

    def _now_window(self, t: float) -> float:
        win = self.win
        closed_r = win.closed_r
        closed_suf = win.closed_suf
        cut = int(np.searchsorted(win.open_d, t, side="right"))  # due exactly now
        if cut == 0:
            if not len(closed_r):
                return 0.0
            den = t - closed_r
            ok = den > 0
            if not np.any(ok):
                return 0.0
            return float(np.max(closed_suf[:-1][ok] / den[ok]))
        order = np.argsort(win.open_r[:cut], kind="stable")
        ex_r = win.open_r[:cut][order]
        ex_suf = np.concatenate([np.cumsum(win.open_w[:cut][order][::-1])[::-1], [0.0]])
        cands = np.concatenate([closed_r, ex_r])
        den = t - cands
        ok = den > 0
        if not np.any(ok):
            return 0.0
        closed_mass = closed_suf[np.searchsorted(closed_r, cands, side="left")]
        extra_mass = ex_suf[np.searchsorted(ex_r, cands, side="left")]
        return float(np.max((closed_mass + extra_mass)[ok] / den[ok]))


class BkpEpEngine:
    """Speed e*p(t); the now-window part varies within tick gaps, so the
    policy is re-evaluated at every boundary like the other continuous rules."""

    stepwise = False

    def __init__(self, instance: Instance):
        self.p = PEvaluator(instance)

    def on_release(self, t: float, positions) -> None:
        pass  # the evaluator tracks arrivals itself

    def speed(self, t: float) -> float:
        return E * self.p.value(t)

    def next_change(self, t: float) -> float:
        return math.inf


def make_engine(policy: str, q: float, instance: Instance, active):
    # the q-scaled optimal-available rule runs in the compiled kernel, not here
    if policy == "avr":
        return AvrEngine(instance)
    if policy == "bkp_ev":
        return BkpEvEngine(instance)
    if policy == "bkp_ep":
        return BkpEpEngine(instance)
    raise ValueError(f"unknown policy {policy!r}")
