"""Turn timed request records into deadline-constrained job instances.

Four deadline schemes with different levels of load spikiness:

* flat            -- span proportional to work, d = r + 0.4 w
* fixed_span      -- constant span, d = r + 1000
* moderately_spiky -- proportional span with the tighter factor 0.1
* highly_spiky    -- proportional span (0.4) plus extra jobs injected during
                     periodic high-load intervals, with randomized spans
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Instance, Job

WORKLOAD_KINDS = ("flat", "fixed_span", "moderately_spiky", "highly_spiky")

FLAT_SCALE = 0.4
MODERATE_SCALE = 0.1
DEFAULT_FIXED_SPAN = 1000.0
DEFAULT_LIGHT_LEN = 200.0
DEFAULT_HEAVY_LEN = 50.0


@dataclass(frozen=True)
class WorkloadSpec:
    """Parameters of one workload construction (recorded in run metadata)."""

    kind: str
    scale: float = FLAT_SCALE
    fixed_span: float = DEFAULT_FIXED_SPAN
    light_len: float = DEFAULT_LIGHT_LEN
    heavy_len: float = DEFAULT_HEAVY_LEN
    rng_seed: int = 0

    def __post_init__(self):
        if self.kind not in WORKLOAD_KINDS:
            raise ValueError(f"unknown workload kind {self.kind!r}")
        if self.scale <= 0 or self.fixed_span <= 0:
            raise ValueError("scale and fixed_span must be positive")
        if not self.light_len > self.heavy_len > 0:
            raise ValueError("need light_len > heavy_len > 0")

    @classmethod
    def for_kind(cls, kind: str, rng_seed: int = 0, **overrides) -> "WorkloadSpec":
        """Spec with the conventional scale for the kind (0.1 for moderate)."""
        if kind == "moderately_spiky":
            overrides.setdefault("scale", MODERATE_SCALE)
        return cls(kind=kind, rng_seed=rng_seed, **overrides)


def _jobs_proportional(records, scale):
    return [
        Job(i, r.timestamp, r.timestamp + scale * r.size, float(r.size))
        for i, r in enumerate(records)
    ]


def gen_flat(records, scale: float = FLAT_SCALE) -> Instance:
    """One job per record with deadline = release + scale * work."""
    return Instance(_jobs_proportional(records, scale))


def gen_moderately_spiky(records) -> Instance:
    """Flat construction with the tighter scale factor 0.1."""
    return gen_flat(records, MODERATE_SCALE)


def gen_fixed_span(records, fixed_span: float = DEFAULT_FIXED_SPAN) -> Instance:
    """Every job gets the same span regardless of its work."""
    return Instance(
        Job(i, r.timestamp, r.timestamp + fixed_span, float(r.size))
        for i, r in enumerate(records)
    )


def triangle(x: float, h_start: float, heavy_len: float) -> float:
    """Symmetric triangular bump over [h_start, h_start + heavy_len).

    Rises linearly from 0 at the interval start to a peak of 2 at the
    midpoint, then falls back to 0; returns 0 outside the interval.
    """
    if not h_start <= x < h_start + heavy_len:
        return 0.0
    return 2.0 * (1.0 - abs(2.0 * (x - h_start) / heavy_len - 1.0))


def _draw_span_multiplier(rng) -> float:
    # Uniform over (0, 2]; exactly 1.0 would clone the base job, so re-draw.
    while True:
        n = 2.0 * (1.0 - rng.random())
        if n != 1.0:
            return n


def gen_highly_spiky(
    records,
    scale: float = FLAT_SCALE,
    light_len: float = DEFAULT_LIGHT_LEN,
    heavy_len: float = DEFAULT_HEAVY_LEN,
    rng=None,
) -> Instance:
    """Proportional-span jobs plus randomized extra jobs in high-load bursts.

    The time line alternates light/heavy intervals of lengths ``light_len``
    and ``heavy_len`` starting with a light interval at t=0.  A record whose
    release falls in a heavy interval spawns ceil(f(r)) extra jobs, f being
    the triangular bump over that interval, each with the same release and
    work but span multiplied by an independent uniform draw from (0, 2].
    """
    if rng is None:
        rng = np.random.default_rng(0)
    period = light_len + heavy_len
    jobs = []
    next_id = 0
    for rec in records:
        release = rec.timestamp
        work = float(rec.size)
        base_span = scale * work
        jobs.append(Job(next_id, release, release + base_span, work))
        next_id += 1
        pos = release % period
        if pos >= light_len:
            h_start = release - pos + light_len
            extra = int(np.ceil(triangle(release, h_start, heavy_len)))
            for _ in range(extra):
                mult = _draw_span_multiplier(rng)
                jobs.append(Job(next_id, release, release + mult * base_span, work))
                next_id += 1
    return Instance(jobs)


def generate(records, spec: WorkloadSpec) -> Instance:
    """Dispatch on the workload kind described by ``spec``."""
    if spec.kind in ("flat", "moderately_spiky"):
        return gen_flat(records, spec.scale)
    if spec.kind == "fixed_span":
        return gen_fixed_span(records, spec.fixed_span)
    rng = np.random.default_rng(spec.rng_seed)
    return gen_highly_spiky(records, spec.scale, spec.light_len, spec.heavy_len, rng)
