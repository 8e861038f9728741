#!/usr/bin/env python3
"""Generate a synthetic one-day HTTP trace in the ITA epa-http line format.

Arrival times follow a smooth diurnal envelope (quiet overnight, late-morning
main peak, secondary afternoon peak) interpolated at one-second resolution.
Response sizes are heavy-tailed lognormal -- most responses are around a
kilobyte, with occasional transfers in the hundreds of kilobytes -- and a
fraction of requests get empty (304/404) responses.  Output is deterministic
for a given seed.

The committed data/synthetic_day.log was produced with the defaults below.
"""

import argparse
from pathlib import Path

import numpy as np

PATHS = [
    "/", "/index.html", "/docs/guide.html", "/images/logo.gif",
    "/data/results.csv", "/cgi-bin/query?id=%d", "/news/today.html",
    "/pub/archive%d.zip", "/icons/back.gif", "/software/readme.txt",
]

METHODS = ["GET", "GET", "GET", "GET", "HEAD", "POST"]

# relative request rate per hour of day, interpolated smoothly over seconds
HOURLY = np.array([
    0.35, 0.25, 0.18, 0.15, 0.15, 0.20,  # 00-05
    0.35, 0.60, 1.10, 1.70, 2.30, 2.70,  # 06-11
    2.40, 2.20, 2.50, 2.65, 2.30, 1.90,  # 12-17
    1.40, 1.10, 0.95, 0.80, 0.60, 0.45,  # 18-23
])


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="data/synthetic_day.log")
    ap.add_argument("--requests", type=int, default=2500)
    ap.add_argument("--seed", type=int, default=20240)
    ap.add_argument("--day", type=int, default=29, help="DD field of the timestamps")
    ap.add_argument("--size-mu", type=float, default=7.0, help="lognormal location")
    ap.add_argument("--size-sigma", type=float, default=1.8, help="lognormal shape")
    ap.add_argument("--size-cap", type=float, default=2e6, help="max response bytes")
    ap.add_argument("--empty-frac", type=float, default=0.12,
                    help="fraction of 304/404 responses with no body")
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    n = args.requests

    # the record-defining draws come first so the trace is reproducible even
    # if the cosmetic fields (hosts, paths) change
    t = np.arange(86400.0)
    env = np.interp(t / 3600.0, np.arange(25), np.append(HOURLY, HOURLY[0]))
    secs = np.sort(rng.choice(86400, size=n, p=env / env.sum()))
    sizes = np.minimum(rng.lognormal(args.size_mu, args.size_sigma, n), args.size_cap)
    sizes = np.maximum(sizes.astype(np.int64), 1)
    empty = rng.random(n) < args.empty_frac

    lines = []
    for i in range(n):
        ts = int(secs[i])
        hh, rem = divmod(ts, 3600)
        mm, ss = divmod(rem, 60)
        host = f"host{int(rng.integers(1, 400)):03d}.example.com"
        path = PATHS[int(rng.integers(len(PATHS)))]
        if "%d" in path:
            path = path % int(rng.integers(1, 5000))
        method = METHODS[int(rng.integers(len(METHODS)))]
        if empty[i]:
            status = 304 if rng.random() < 0.7 else 404
            size_field = "-" if rng.random() < 0.6 else "0"
        else:
            status = 200
            size_field = str(int(sizes[i]))
        lines.append(
            f'{host} [{args.day:02d}:{hh:02d}:{mm:02d}:{ss:02d}] '
            f'"{method} {path} HTTP/1.0" {status} {size_field}'
        )

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines) + "\n")
    print(f"wrote {len(lines)} requests to {out}")


if __name__ == "__main__":
    main()
