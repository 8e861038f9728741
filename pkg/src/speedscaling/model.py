"""Core data model: jobs, instances, speed schedules, and interval work.

Times are double-precision seconds, work is double-precision work units
(bytes for the web-trace workloads).  Instances and schedules are immutable
after construction and safe to share between threads.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

# A job counts as complete once its remaining work drops to this fraction of
# its total work; discrete-tick simulation of continuous policies accumulates
# bounded rounding, so exact zero is unattainable.
EPS_WORK = 1e-6


@dataclass(frozen=True)
class Job:
    """One deadline-constrained task."""

    id: int
    release: float
    deadline: float
    work: float

    def __post_init__(self):
        if not self.deadline > self.release:
            raise ValueError(
                f"job {self.id}: deadline {self.deadline} must exceed release {self.release}"
            )
        if not self.work > 0:
            raise ValueError(f"job {self.id}: work must be positive, got {self.work}")

    @property
    def span(self) -> float:
        return self.deadline - self.release


def span(job: Job) -> float:
    """Length of the job's feasibility window (deadline minus release)."""
    return job.deadline - job.release


class Instance:
    """A finite set of jobs, sorted by release time; the unit of simulation.

    Exposes parallel numpy views (``releases``, ``deadlines``, ``works``)
    indexed in the sorted order, plus ``ids`` mapping back to job ids.
    """

    def __init__(self, jobs: Iterable[Job]):
        jobs = sorted(jobs, key=lambda j: (j.release, j.id))
        self.jobs: tuple[Job, ...] = tuple(jobs)
        ids = [j.id for j in self.jobs]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate job ids in instance")
        self.ids = np.asarray(ids, dtype=np.int64)
        self.releases = np.asarray([j.release for j in self.jobs], dtype=np.float64)
        self.deadlines = np.asarray([j.deadline for j in self.jobs], dtype=np.float64)
        self.works = np.asarray([j.work for j in self.jobs], dtype=np.float64)
        for arr in (self.ids, self.releases, self.deadlines, self.works):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return len(self.jobs)

    def __iter__(self) -> Iterator[Job]:
        return iter(self.jobs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        return self.jobs == other.jobs

    @property
    def horizon(self) -> float:
        """Largest deadline, or 0.0 for an empty instance."""
        return float(self.deadlines.max()) if len(self.jobs) else 0.0

    def job_by_id(self, job_id: int) -> Job:
        for j in self.jobs:
            if j.id == job_id:
                return j
        raise KeyError(job_id)

    @classmethod
    def from_arrays(cls, releases, deadlines, works, ids=None) -> "Instance":
        releases = np.asarray(releases, dtype=np.float64)
        if ids is None:
            ids = range(len(releases))
        return cls(
            Job(int(i), float(r), float(d), float(w))
            for i, r, d, w in zip(ids, releases, deadlines, works)
        )


@dataclass(frozen=True)
class IntervalWork:
    """Work released-and-due inside [t1, t2], and its intensity."""

    t1: float
    t2: float
    work: float

    @property
    def intensity(self) -> float:
        return self.work / (self.t2 - self.t1)


def interval_work(instance: Instance, t1: float, t2: float) -> IntervalWork:
    """Total work of jobs with release >= t1 and deadline <= t2.

    The intensity of the interval (work over length) lower-bounds the maximum
    speed of any feasible schedule.  Rejects empty or reversed intervals.
    """
    if not t2 > t1:
        raise ValueError(f"need t2 > t1, got [{t1}, {t2}]")
    mask = (instance.releases >= t1) & (instance.deadlines <= t2)
    return IntervalWork(t1, t2, float(instance.works[mask].sum()))


class SpeedSchedule:
    """Piecewise-constant speed function with per-segment job attribution.

    Segments are non-overlapping, sorted, and always attribute a running job;
    idle time (speed 0) is the gaps between segments.
    """

    def __init__(self, starts, ends, speeds, job_ids, validate: bool = True):
        self.starts = np.asarray(starts, dtype=np.float64)
        self.ends = np.asarray(ends, dtype=np.float64)
        self.speeds = np.asarray(speeds, dtype=np.float64)
        self.job_ids = np.asarray(job_ids, dtype=np.int64)
        if validate:
            self._validate()
        for arr in (self.starts, self.ends, self.speeds, self.job_ids):
            arr.setflags(write=False)

    def _validate(self):
        n = len(self.starts)
        if not (len(self.ends) == len(self.speeds) == len(self.job_ids) == n):
            raise ValueError("segment arrays must have equal length")
        if n == 0:
            return
        if not np.all(self.ends > self.starts):
            raise ValueError("segments must have start < end")
        if not np.all(self.starts[1:] >= self.ends[:-1] - 1e-12):
            raise ValueError("segments must be sorted and non-overlapping")
        if not np.all(self.speeds > 0):
            raise ValueError("segments must have positive speed (idle is a gap)")

    @classmethod
    def from_rows(cls, rows: Sequence[tuple], validate: bool = True) -> "SpeedSchedule":
        """Build from (start, end, speed, job_id) tuples."""
        if not rows:
            return cls([], [], [], [], validate=False)
        starts, ends, speeds, jobs = zip(*rows)
        return cls(starts, ends, speeds, jobs, validate=validate)

    @classmethod
    def empty(cls) -> "SpeedSchedule":
        return cls([], [], [], [], validate=False)

    def __len__(self) -> int:
        return len(self.starts)

    def rows(self) -> list[tuple[float, float, float, int]]:
        return [
            (float(s), float(e), float(v), int(j))
            for s, e, v, j in zip(self.starts, self.ends, self.speeds, self.job_ids)
        ]

    @property
    def durations(self) -> np.ndarray:
        return self.ends - self.starts

    def max_speed(self) -> float:
        return float(self.speeds.max()) if len(self) else 0.0

    def total_work(self) -> float:
        return float((self.speeds * self.durations).sum())

    def work_by_job(self) -> dict[int, float]:
        """Allocated work per job id; jobs never scheduled are absent."""
        out: dict[int, float] = {}
        if not len(self):
            return out
        ids, inverse = np.unique(self.job_ids, return_inverse=True)
        sums = np.zeros(len(ids))
        np.add.at(sums, inverse, self.speeds * self.durations)
        return {int(i): float(w) for i, w in zip(ids, sums)}


def allocated_work(schedule: SpeedSchedule, job_id: int) -> float:
    """Work the schedule performs on one job (0.0 if never scheduled)."""
    if not len(schedule):
        return 0.0
    mask = schedule.job_ids == job_id
    return float((schedule.speeds[mask] * schedule.durations[mask]).sum())


def merge_segments(rows: Iterable[tuple[float, float, float, int]]):
    """Coalesce adjacent segments with identical speed and job."""
    merged: list[list] = []
    for s, e, v, j in rows:
        if merged and merged[-1][1] == s and merged[-1][2] == v and merged[-1][3] == j:
            merged[-1][1] = e
        else:
            merged.append([s, e, v, j])
    return [tuple(m) for m in merged]


# ---------------------------------------------------------------------------
# CSV interchange formats
# ---------------------------------------------------------------------------

INSTANCE_CSV_HEADER = ["id", "release", "deadline", "work"]
SCHEDULE_CSV_HEADER = ["start", "end", "speed", "job_id"]


def write_instance_csv(instance: Instance, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(INSTANCE_CSV_HEADER)
        for j in instance:
            writer.writerow([j.id, repr(j.release), repr(j.deadline), repr(j.work)])


def read_instance_csv(path) -> Instance:
    jobs = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != INSTANCE_CSV_HEADER:
            raise ValueError(f"unexpected instance CSV header: {header}")
        for row in reader:
            jobs.append(Job(int(row[0]), float(row[1]), float(row[2]), float(row[3])))
    return Instance(jobs)


def write_schedule_csv(schedule: SpeedSchedule, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SCHEDULE_CSV_HEADER)
        for s, e, v, j in zip(
            schedule.starts, schedule.ends, schedule.speeds, schedule.job_ids
        ):
            writer.writerow([repr(float(s)), repr(float(e)), repr(float(v)), int(j)])


def read_schedule_csv(path) -> SpeedSchedule:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != SCHEDULE_CSV_HEADER:
            raise ValueError(f"unexpected schedule CSV header: {header}")
        for row in reader:
            rows.append((float(row[0]), float(row[1]), float(row[2]), int(row[3])))
    return SpeedSchedule.from_rows(rows)
