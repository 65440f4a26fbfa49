#!/usr/bin/env python3
"""Regenerate data/synthetic_transactions.csv, the checked-in stand-in for
the DataCo export. Deterministic (splitmix64, fixed seed): rerunning this
script reproduces the file byte for byte.

The series spans exactly 162 Monday-anchored weeks (2015-01-05 through the
week of 2018-02-05) with a growth trend, a multiplicative intra-month
cycle, a yearly cycle, and noise. Mode shares and delivery-day means mimic
the real dataset (Same Day ~1d, First ~2d, Second ~3d, Standard ~4d). A
handful of deliberately malformed rows exercise the ingest audit trail.
"""

from __future__ import annotations

import datetime as dt
import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from shipcast.rng import SplitMix64  # noqa: E402

SEED = 20240913
N_WEEKS = 162
START = dt.date(2015, 1, 5)  # a Monday

MODES = [
    # (label, order share, delivery mean, delivery sd, price mean)
    ("Standard Class", 0.42, 4.0, 1.3, 95.0),
    ("Second Class", 0.20, 3.0, 1.6, 110.0),
    ("First Class", 0.30, 2.0, 0.7, 130.0),
    ("Same Day", 0.08, 1.0, 0.4, 150.0),
]

HEADER = (
    "order date (DateOrders),Order Item Quantity,Shipping Mode,"
    "Days for shipping (real),Product Price"
)


def weekly_units(w: int) -> int:
    level = 90.0 + 0.55 * w
    short = 1.0 + 0.25 * math.sin(2.0 * math.pi * w / 4.0)
    yearly = 18.0 * math.sin(2.0 * math.pi * w / 52.0)
    return max(8, int(round(level * short + yearly)))


def pick_mode(u: float) -> tuple[str, float, float, float]:
    acc = 0.0
    for label, share, d_mean, d_sd, p_mean in MODES:
        acc += share
        if u < acc:
            return label, d_mean, d_sd, p_mean
    return MODES[-1][0], MODES[-1][2], MODES[-1][3], MODES[-1][4]


def main() -> None:
    rng = SplitMix64(SEED)
    rows: list[str] = []
    for w in range(N_WEEKS):
        week_start = START + dt.timedelta(days=7 * w)
        remaining = weekly_units(w)
        while remaining > 0:
            qty = min(remaining, 1 + rng.next_u64() % 4)
            remaining -= qty
            day = week_start + dt.timedelta(days=rng.next_u64() % 7)
            hour = rng.next_u64() % 24
            minute = rng.next_u64() % 60
            label, d_mean, d_sd, p_mean = pick_mode(rng.uniform())
            days = max(0.0, d_mean + d_sd * rng.normal())
            price = max(5.0, p_mean * (0.6 + 0.8 * rng.uniform()))
            rows.append(
                f"{day.month}/{day.day}/{day.year} {hour}:{minute:02d},"
                f"{qty},{label},{days:.1f},{price:.2f}"
            )
    # Malformed rows: wrong mode, bad date, non-positive quantity, bad number.
    rows.append("6/15/2016 10:30,3,Carrier Pigeon,2.0,50.00")
    rows.append("not-a-date,2,Standard Class,4.0,80.00")
    rows.append("7/2/2016 9:12,0,Second Class,3.0,65.00")
    rows.append("7/3/2016 11:45,-2,First Class,2.0,70.00")
    rows.append("8/9/2017 14:05,two,Standard Class,4.0,90.00")
    rows.append("9/1/2017 16:20,1,Same Day,-1.0,120.00")

    out = Path(__file__).resolve().parent.parent / "data" / "synthetic_transactions.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(HEADER + "\n" + "\n".join(rows) + "\n", encoding="utf-8")
    print(f"wrote {out} ({len(rows)} data rows)")


if __name__ == "__main__":
    main()
