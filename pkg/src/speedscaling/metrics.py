"""Schedule evaluation: energy, maximum speed, maximum temperature,
feasibility audit, and energy ratios against the offline optimum."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import EPS_WORK, Instance, SpeedSchedule

# Best known worst-case competitive-ratio bounds at alpha = 3 for the online
# policies (OA exact; qOA bound is for q = 1.54).
RATIO_BOUNDS_ALPHA3 = {
    "oa": 27.0,
    "avr": 108.0,
    "qoa_154": 6.7,
    "bkp": 135.6,
}


def avr_ratio_bound(alpha: float) -> float:
    """General-alpha upper bound for AVR: 2^(a-1) * a^a."""
    return 2 ** (alpha - 1) * alpha**alpha


def oa_ratio_bound(alpha: float) -> float:
    """General-alpha bound for OA: a^a (tight)."""
    return alpha**alpha


def bkp_ratio_bound(alpha: float) -> float:
    """General-alpha upper bound for BKP: 2 * (a/(a-1))^a * e^a."""
    return 2.0 * (alpha / (alpha - 1.0)) ** alpha * math.e**alpha


@dataclass(frozen=True)
class PowerModel:
    """Polynomial power law P = s^alpha."""

    alpha: float = 3.0

    def __post_init__(self):
        if not self.alpha > 1:
            raise ValueError(f"alpha must exceed 1, got {self.alpha}")


@dataclass(frozen=True)
class CoolingModel:
    """Newton cooling T' = P - b*T with ambient temperature scaled to zero,
    integrated by forward Euler at step dt."""

    b: float
    dt: float = 0.1
    t0: float = 0.0

    def __post_init__(self):
        if not self.b > 0:
            raise ValueError(f"cooling parameter b must be positive, got {self.b}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")


def energy(schedule: SpeedSchedule, power: PowerModel) -> float:
    """Integral of s^alpha over the schedule (exact for piecewise-constant)."""
    if not len(schedule):
        return 0.0
    return float(np.sum(schedule.speeds**power.alpha * schedule.durations))


def _euler_span(temp: float, p: float, b: float, dt: float, length: float) -> float:
    """Temperature after forward-Euler stepping a constant-power span.

    Steps of dt, with one final shorter step when dt does not divide the
    span.  T moves monotonically toward p/b under each step (given the
    stability condition b*dt < 1), so extrema occur at span ends.
    """
    decay = 1.0 - b * dt
    steps = int(length / dt)
    if steps:
        shrink = decay**steps
        temp = temp * shrink + (p / b) * (1.0 - shrink)
    rest = length - steps * dt
    if rest > 1e-12 * max(1.0, length):
        temp = temp * (1.0 - b * rest) + rest * p
    return temp


def max_temperature(
    schedule: SpeedSchedule, cooling: CoolingModel, power: PowerModel
) -> float:
    """Peak temperature of the forward-Euler recurrence T += dt*(P - b*T).

    Idle gaps between segments are stepped at P = 0.  Raises when the Euler
    step is unstable (b*dt >= 1), since the recurrence then diverges or
    oscillates and the reported maximum would be meaningless.
    """
    if cooling.b * cooling.dt >= 1.0:
        raise ValueError(
            f"unstable Euler step: b*dt = {cooling.b * cooling.dt:.3g} >= 1"
        )
    temp = cooling.t0
    peak = temp
    if not len(schedule):
        return peak
    prev_end = float(schedule.starts[0])
    for start, end, speed in zip(schedule.starts, schedule.ends, schedule.speeds):
        if start > prev_end:
            temp = _euler_span(temp, 0.0, cooling.b, cooling.dt, start - prev_end)
            peak = max(peak, temp)  # decay only; max is at the gap start anyway
        p = speed**power.alpha
        temp = _euler_span(temp, p, cooling.b, cooling.dt, end - start)
        peak = max(peak, temp)
        prev_end = end
    return peak


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    misses: list[tuple[int, float]]  # (job id, residual work)
    violations: list[str]  # structural problems (work outside a job's window)


def verify_feasibility(schedule: SpeedSchedule, instance: Instance) -> FeasibilityReport:
    """Check every job gets its work within [release, deadline].

    A job passes when its allocated work is at least (1 - EPS_WORK) of its
    requirement; any segment attributing work outside the job's window is a
    hard violation regardless of totals.
    """
    by_id = {int(j.id): j for j in instance.jobs}
    violations: list[str] = []
    allocated: dict[int, float] = {}
    for s, e, v, jid in zip(
        schedule.starts, schedule.ends, schedule.speeds, schedule.job_ids
    ):
        job = by_id.get(int(jid))
        if job is None:
            violations.append(f"segment [{s}, {e}] references unknown job {jid}")
            continue
        slack = 1e-9 * max(1.0, abs(job.release), abs(job.deadline))
        if s < job.release - slack or e > job.deadline + slack:
            violations.append(
                f"job {jid} runs in [{s}, {e}] outside its window "
                f"[{job.release}, {job.deadline}]"
            )
        allocated[int(jid)] = allocated.get(int(jid), 0.0) + float(v) * (e - s)
    misses = []
    for jid, job in by_id.items():
        residual = job.work - allocated.get(jid, 0.0)
        if residual > job.work * EPS_WORK * (1.0 + 1e-6):
            misses.append((jid, float(residual)))
    return FeasibilityReport(not misses and not violations, misses, violations)


def empirical_ratio(
    alg_schedule: SpeedSchedule, opt_schedule: SpeedSchedule, power: PowerModel
) -> float | None:
    """energy(alg) / energy(optimal); None when the optimum is zero energy."""
    opt = energy(opt_schedule, power)
    if opt == 0.0:
        return None
    return energy(alg_schedule, power) / opt


@dataclass(frozen=True)
class MetricsReport:
    """One row of the report CSV for a (instance, policy) run."""

    instance: str
    policy: str
    q: float | None
    alpha: float
    b: float | None
    energy: float
    energy_over_optimal: float | None
    max_speed: float
    max_temperature: float | None
    feasible: bool
    misses: list[tuple[int, float]] = field(default_factory=list)
