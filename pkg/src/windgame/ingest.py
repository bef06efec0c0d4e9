"""Load, clean, normalize and time-align historic wind and demand series.

Gaps are dropped and reported, never interpolated: the downstream sampler is
the mechanism that papers over missing history, so ingestion must not invent
values. Input resolution is fixed at one hour; sub-hourly files are rejected.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import IngestError

ONE_HOUR = np.timedelta64(3600, "s")


def _parse_iso_timestamp(raw: str) -> np.datetime64:
    """Parse an ISO-8601 timestamp; aware inputs are converted to UTC."""
    text = raw.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is not None:
        dt = dt.astimezone(timezone.utc).replace(tzinfo=None)
    return np.datetime64(dt, "s")


@dataclass(frozen=True)
class GapReport:
    """Counts of rows removed while loading one CSV series."""

    label: str
    rows_read: int
    rows_kept: int
    dropped_missing: int = 0
    dropped_unparseable: int = 0
    dropped_invalid: int = 0
    dropped_duplicate: int = 0

    @property
    def dropped_total(self) -> int:
        return (self.dropped_missing + self.dropped_unparseable
                + self.dropped_invalid + self.dropped_duplicate)

    def summary(self) -> str:
        return (f"{self.label}: read {self.rows_read} rows, kept {self.rows_kept} "
                f"(dropped: {self.dropped_missing} missing, "
                f"{self.dropped_unparseable} unparseable, "
                f"{self.dropped_invalid} invalid, "
                f"{self.dropped_duplicate} duplicate timestamps)")


@dataclass(frozen=True)
class TimeSeries:
    """One hourly-resolution series, strictly increasing in time.

    Values must be finite and nonnegative (wind speed in m/s, demand in MW).
    """

    timestamps: np.ndarray
    values: np.ndarray
    label: str

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype="datetime64[s]")
        vals = np.asarray(self.values, dtype=np.float64)
        if ts.ndim != 1 or vals.ndim != 1 or len(ts) != len(vals):
            raise IngestError(f"{self.label}: timestamps and values must be "
                              f"1-D arrays of equal length")
        if len(ts) == 0:
            raise IngestError(f"{self.label}: series is empty")
        if len(ts) > 1 and not np.all(np.diff(ts) > np.timedelta64(0, "s")):
            raise IngestError(f"{self.label}: timestamps must be strictly increasing")
        if not np.all(np.isfinite(vals)):
            raise IngestError(f"{self.label}: values must be finite")
        if np.any(vals < 0.0):
            raise IngestError(f"{self.label}: values must be nonnegative")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)

    def mean(self) -> float:
        return float(self.values.mean())

    def coverage(self) -> str:
        return f"{self.timestamps[0]} .. {self.timestamps[-1]} ({len(self)} rows)"


@dataclass(frozen=True)
class JointSeries:
    """Time-aligned triples (w1, w2, demand) over a common set of instants."""

    timestamps: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    p_d: np.ndarray

    def __post_init__(self):
        n = len(self.timestamps)
        if n == 0:
            raise IngestError("joint series is empty")
        for name in ("w1", "w2", "p_d"):
            arr = getattr(self, name)
            if len(arr) != n:
                raise IngestError(f"joint series field {name} has mismatched length")
            if not np.all(np.isfinite(arr)) or np.any(arr < 0.0):
                raise IngestError(f"joint series field {name} must be finite and nonnegative")

    def __len__(self) -> int:
        return len(self.timestamps)

    def means(self) -> tuple[float, float, float]:
        """Historic means (mu_w1, mu_w2, mu_pd) of the aligned record."""
        return (float(self.w1.mean()), float(self.w2.mean()), float(self.p_d.mean()))


def load_series_csv(path: str | Path,
                    column_map: Mapping[str, str],
                    label: str | None = None) -> tuple[TimeSeries, GapReport]:
    """Load one hourly series from a CSV file.

    ``column_map`` binds the roles ``timestamp`` and ``value`` to header
    names. Rows with missing cells, unparseable fields, or negative or
    non-finite values are dropped and counted in the returned report; among
    duplicated timestamps the first occurrence wins. Raises
    :class:`IngestError` for a missing file, absent columns, no valid rows,
    or sub-hourly sampling.
    """
    path = Path(path)
    try:
        ts_col = column_map["timestamp"]
        val_col = column_map["value"]
    except KeyError as exc:
        raise IngestError(f"column_map must bind 'timestamp' and 'value'; missing {exc}") from None
    if label is None:
        label = val_col

    if not path.is_file():
        raise IngestError(f"{label}: file not found: {path}")

    rows_read = 0
    dropped_missing = 0
    dropped_unparseable = 0
    dropped_invalid = 0
    dropped_duplicate = 0
    seen: dict[np.datetime64, float] = {}

    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        for needed in (ts_col, val_col):
            if needed not in header:
                raise IngestError(f"{label}: column '{needed}' not in header "
                                  f"{header} of {path}")
        for row in reader:
            rows_read += 1
            raw_ts = row.get(ts_col)
            raw_val = row.get(val_col)
            if raw_ts is None or raw_val is None or not raw_ts.strip() or not raw_val.strip():
                dropped_missing += 1
                continue
            try:
                ts = _parse_iso_timestamp(raw_ts)
            except ValueError:
                dropped_unparseable += 1
                continue
            try:
                value = float(raw_val)
            except ValueError:
                dropped_unparseable += 1
                continue
            if not np.isfinite(value) or value < 0.0:
                dropped_invalid += 1
                continue
            if ts in seen:
                dropped_duplicate += 1
                continue
            seen[ts] = value

    if not seen:
        raise IngestError(f"{label}: no valid rows in {path} "
                          f"({rows_read} read, all dropped)")

    timestamps = np.array(sorted(seen), dtype="datetime64[s]")
    values = np.array([seen[t] for t in timestamps], dtype=np.float64)

    if len(timestamps) > 1 and np.diff(timestamps).min() < ONE_HOUR:
        raise IngestError(f"{label}: sub-hourly sampling detected in {path}; "
                          f"this pipeline is hourly only")

    report = GapReport(label=label, rows_read=rows_read, rows_kept=len(values),
                       dropped_missing=dropped_missing,
                       dropped_unparseable=dropped_unparseable,
                       dropped_invalid=dropped_invalid,
                       dropped_duplicate=dropped_duplicate)
    return TimeSeries(timestamps=timestamps, values=values, label=label), report


def normalize_demand(series: TimeSeries, target_mean: float) -> TimeSeries:
    """Scale a demand series so its mean equals ``target_mean``.

    A single global factor preserves the demand profile's shape.
    """
    if target_mean <= 0.0:
        raise IngestError(f"{series.label}: target mean must be positive, got {target_mean}")
    current = series.mean()
    if current <= 0.0:
        raise IngestError(f"{series.label}: cannot normalize a series with mean {current}")
    scale = target_mean / current
    return TimeSeries(timestamps=series.timestamps,
                      values=series.values * scale,
                      label=series.label)


def align_series(w1: TimeSeries, w2: TimeSeries, demand: TimeSeries) -> JointSeries:
    """Inner-join three series on timestamp, preserving time order.

    Only instants present in all three inputs survive. An empty intersection
    raises :class:`IngestError` with per-series coverage statistics.
    """
    common = np.intersect1d(w1.timestamps, w2.timestamps)
    common = np.intersect1d(common, demand.timestamps)
    if len(common) == 0:
        detail = "; ".join(s.coverage() for s in (w1, w2, demand))
        raise IngestError(f"no common timestamps across inputs ({detail})")

    def pick(series: TimeSeries) -> np.ndarray:
        idx = np.searchsorted(series.timestamps, common)
        return series.values[idx]

    return JointSeries(timestamps=common, w1=pick(w1), w2=pick(w2), p_d=pick(demand))
