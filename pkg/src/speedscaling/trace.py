"""Ingest ITA-style HTTP server logs into timed request records.

The expected line layout is the epa-http variant of the Internet Traffic
Archive format::

    host [DD:HH:MM:SS] "request line" status bytes

where ``bytes`` is an integer or ``-`` for responses without a body.  The
cleanup / decimation / replication helpers below turn one day of requests
into the multi-day request sets the workload generators consume.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, replace

log = logging.getLogger(__name__)

SECONDS_PER_DAY = 86400.0

# Size substituted for empty (0 or "-") responses: approximates the header
# bytes that still cross the wire on 304/404 responses.
EMPTY_RESPONSE_BYTES = 50

_LINE_RE = re.compile(
    r'^\S+\s+\[(\d+):(\d+):(\d+):(\d+)\]\s+"[^"]*"\s+\S+\s+(\d+|-)\s*$'
)


@dataclass(frozen=True)
class TraceRecord:
    """One request: arrival time (seconds since trace epoch) and response size."""

    timestamp: float
    size: int | None  # None when the log reported "-"


@dataclass(frozen=True)
class ParsedTrace:
    records: list[TraceRecord]
    skipped: int


def parse_trace(lines) -> ParsedTrace:
    """Parse log lines into records, skipping (and counting) malformed ones.

    Timestamps are normalized so the first record keeps its time-of-day
    offset within day 0: later days shift by whole multiples of 86400 s.
    """
    records: list[TraceRecord] = []
    skipped = 0
    first_day: int | None = None
    for line in lines:
        if not line.strip():
            continue
        m = _LINE_RE.match(line)
        if m is None:
            skipped += 1
            continue
        day, hh, mm, ss = (int(m.group(i)) for i in range(1, 5))
        if first_day is None:
            first_day = day
        t = (day - first_day) * SECONDS_PER_DAY + hh * 3600.0 + mm * 60.0 + ss
        raw = m.group(5)
        size = None if raw == "-" else int(raw)
        records.append(TraceRecord(t, size))
    if skipped:
        log.warning("skipped %d unparseable trace lines", skipped)
    return ParsedTrace(records, skipped)


def substitute_empty_responses(records) -> list[TraceRecord]:
    """Replace missing or zero response sizes with EMPTY_RESPONSE_BYTES."""
    return [
        replace(r, size=EMPTY_RESPONSE_BYTES) if not r.size else r for r in records
    ]


def decimate(records, stride: int, offset: int = 1) -> list[TraceRecord]:
    """Keep every stride-th record, starting at 1-based position ``offset``."""
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    if not 1 <= offset <= stride:
        raise ValueError(f"offset must be in [1, {stride}], got {offset}")
    return list(records[offset - 1 :: stride])


def replicate_days(records, copies: int, day_length: float = SECONDS_PER_DAY):
    """Concatenate ``copies`` shifted copies of the records, sorted by time.

    Copy k is shifted by k * day_length, so within-day inter-arrival gaps are
    preserved exactly.
    """
    if copies < 1:
        raise ValueError(f"copies must be >= 1, got {copies}")
    if not day_length > 0:
        raise ValueError(f"day_length must be positive, got {day_length}")
    out = [
        replace(r, timestamp=r.timestamp + k * day_length)
        for k in range(copies)
        for r in records
    ]
    out.sort(key=lambda r: r.timestamp)
    return out
