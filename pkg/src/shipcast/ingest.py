"""Transaction-log ingestion: CSV parsing with an audit trail, weekly
aggregation, per-mode operational statistics, and the temporal split."""

from __future__ import annotations

import csv
import datetime as dt
import io
from dataclasses import dataclass, field

import numpy as np

from .series import WeeklySeries

KNOWN_MODES = ("First Class", "Same Day", "Second Class", "Standard Class")

#: Logical field -> column header, defaulting to the DataCo export layout.
DEFAULT_SCHEMA = {
    "order_timestamp": "order date (DateOrders)",
    "quantity": "Order Item Quantity",
    "shipping_mode": "Shipping Mode",
    "actual_delivery_days": "Days for shipping (real)",
    "unit_price": "Product Price",
}


class DataError(ValueError):
    """Unrecoverable input problem (missing column, empty file, bad split)."""


@dataclass(frozen=True)
class TransactionRecord:
    order_timestamp: dt.datetime
    quantity: int
    shipping_mode: str
    actual_delivery_days: float
    unit_price: float


@dataclass(frozen=True)
class ModeStats:
    mode: str
    mean_delivery_days: float
    order_count: int
    volume_share: float


@dataclass
class IngestReport:
    rows_read: int = 0
    rows_skipped: int = 0
    skip_reasons: dict[str, int] = field(default_factory=dict)

    @property
    def rows_accepted(self) -> int:
        return self.rows_read - self.rows_skipped

    def skip(self, reason: str) -> None:
        self.rows_skipped += 1
        self.skip_reasons[reason] = self.skip_reasons.get(reason, 0) + 1

    def to_dict(self) -> dict:
        return {
            "rows_read": self.rows_read,
            "rows_accepted": self.rows_accepted,
            "rows_skipped": self.rows_skipped,
            "skip_reasons": dict(sorted(self.skip_reasons.items())),
        }


def _parse_timestamp(raw: str) -> dt.datetime:
    raw = raw.strip()
    try:
        return dt.datetime.strptime(raw, "%m/%d/%Y %H:%M")
    except ValueError:
        pass
    try:
        return dt.datetime.fromisoformat(raw)
    except ValueError as exc:
        raise ValueError(f"unparseable timestamp {raw!r}") from exc


def parse_transactions(
    source: bytes | io.IOBase, schema: dict[str, str] | None = None
) -> tuple[list[TransactionRecord], IngestReport]:
    """Parse a transaction CSV, skipping and counting malformed rows.

    Hard errors (DataError) are reserved for structural problems: an empty
    stream or a schema column missing from the header. Row-level problems
    (bad dates, non-positive quantities, unknown shipping modes, negative
    delivery days, unparseable numbers) are skipped and tallied by reason.
    """
    schema = dict(DEFAULT_SCHEMA if schema is None else schema)
    missing_keys = set(DEFAULT_SCHEMA) - set(schema)
    if missing_keys:
        raise DataError(f"schema is missing logical fields: {sorted(missing_keys)}")

    data = source if isinstance(source, bytes) else source.read()
    if isinstance(data, str):
        text = data
    else:
        text = data.decode("utf-8-sig", errors="replace")
    if not text.strip():
        raise DataError("empty transaction file")

    reader = csv.DictReader(io.StringIO(text))
    header = reader.fieldnames or []
    for logical, column in schema.items():
        if column not in header:
            raise DataError(
                f"column {column!r} (field {logical!r}) not found in header"
            )

    records: list[TransactionRecord] = []
    report = IngestReport()
    for row in reader:
        report.rows_read += 1
        try:
            ts = _parse_timestamp(row[schema["order_timestamp"]] or "")
        except ValueError:
            report.skip("bad_date")
            continue
        try:
            quantity = int(float(row[schema["quantity"]]))
            days = float(row[schema["actual_delivery_days"]])
            price = float(row[schema["unit_price"]])
        except (TypeError, ValueError):
            report.skip("malformed_number")
            continue
        mode = (row[schema["shipping_mode"]] or "").strip()
        if quantity < 1:
            report.skip("nonpositive_quantity")
            continue
        if days < 0:
            report.skip("negative_delivery_days")
            continue
        if price < 0:
            report.skip("negative_price")
            continue
        if mode not in KNOWN_MODES:
            report.skip("unknown_shipping_mode")
            continue
        records.append(
            TransactionRecord(
                order_timestamp=ts,
                quantity=quantity,
                shipping_mode=mode,
                actual_delivery_days=days,
                unit_price=price,
            )
        )
    return records, report


def week_bucket(day: dt.date, anchor: int = 0) -> dt.date:
    """Start date of the week containing ``day`` (anchor 0 = Monday)."""
    return day - dt.timedelta(days=(day.weekday() - anchor) % 7)


def aggregate_weekly(
    records: list[TransactionRecord], anchor: int = 0
) -> WeeklySeries:
    """Sum quantities into contiguous weekly buckets.

    Covers every week from the first to the last transaction; weeks with
    no transactions appear as zeros, so sum(series) always equals the sum
    of the accepted quantities exactly.
    """
    if not records:
        raise DataError("no records to aggregate")
    buckets: dict[dt.date, int] = {}
    for rec in records:
        key = week_bucket(rec.order_timestamp.date(), anchor)
        buckets[key] = buckets.get(key, 0) + rec.quantity
    first = min(buckets)
    last = max(buckets)
    n_weeks = (last - first).days // 7 + 1
    values = np.zeros(n_weeks, dtype=np.float64)
    for key, qty in buckets.items():
        values[(key - first).days // 7] = qty
    return WeeklySeries(start_week=first, values=values)


def extract_mode_stats(records: list[TransactionRecord]) -> list[ModeStats]:
    """Per-mode mean delivery days, order counts, and share of orders."""
    if not records:
        raise DataError("no records for mode statistics")
    total = len(records)
    groups: dict[str, list[TransactionRecord]] = {}
    for rec in records:
        groups.setdefault(rec.shipping_mode, []).append(rec)
    stats = []
    for mode in sorted(groups):
        rows = groups[mode]
        stats.append(
            ModeStats(
                mode=mode,
                mean_delivery_days=float(
                    np.mean([r.actual_delivery_days for r in rows])
                ),
                order_count=len(rows),
                volume_share=len(rows) / total,
            )
        )
    return stats


def mean_unit_price(records: list[TransactionRecord], mode: str | None = None) -> float:
    rows = [r for r in records if mode is None or r.shipping_mode == mode]
    if not rows:
        raise DataError(f"no records for mode {mode!r}")
    return float(np.mean([r.unit_price for r in rows]))


def temporal_split(
    series: WeeklySeries, train_len: int
) -> tuple[WeeklySeries, WeeklySeries]:
    """Fixed split: first ``train_len`` weeks train, the rest test; the two
    parts concatenate back to the input exactly."""
    n = len(series)
    if not (0 < train_len < n):
        raise DataError(f"train_len must lie in (0, {n}), got {train_len}")
    train = WeeklySeries(series.start_week, series.values[:train_len].copy())
    test = WeeklySeries(
        series.week_start(train_len), series.values[train_len:].copy()
    )
    return train, test
