"""Ingestion of raw sensor and reference time series.

Covers window-mean resampling, timestamp alignment into a clean modeling
table, the temporal train/test split, and strict CSV readers/writers for
the three on-disk schemas (sensor, reference, aligned).
"""

import csv
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import NamedTuple, Optional

import numpy as np

__all__ = [
    "SensorRecord",
    "ReferenceRecord",
    "RawSensorSeries",
    "ReferenceSeries",
    "AlignedDataset",
    "CsvFormatError",
    "EmptyOverlapError",
    "resample_average",
    "resample_reference",
    "align",
    "temporal_split",
    "read_sensor_csv",
    "read_reference_csv",
    "read_aligned_csv",
    "write_aligned_csv",
]

UTC = timezone.utc

SENSOR_COLUMNS = ("timestamp", "op1_mv", "op2_mv", "temp_c")
REFERENCE_COLUMNS = ("timestamp", "co_ref")
ALIGNED_COLUMNS = ("timestamp", "op1_mv", "op2_mv", "temp_c", "co_ref")


class CsvFormatError(ValueError):
    """Malformed CSV content; message carries file and line context."""


class EmptyOverlapError(ValueError):
    """Two series share no valid timestamps."""


class SensorRecord(NamedTuple):
    timestamp: datetime
    op1_mv: Optional[float]
    op2_mv: Optional[float]
    temp_c: Optional[float]


class ReferenceRecord(NamedTuple):
    timestamp: datetime
    co_ref: Optional[float]


def _check_increasing(timestamps, what: str):
    for i in range(1, len(timestamps)):
        if timestamps[i] <= timestamps[i - 1]:
            raise ValueError(
                f"{what} timestamps must be strictly increasing "
                f"(violated at record {i}: {timestamps[i].isoformat()})"
            )


def _check_value(value, what: str, i: int):
    if value is not None and not math.isfinite(value):
        raise ValueError(f"{what} record {i} has non-finite value {value!r}")


@dataclass(frozen=True)
class RawSensorSeries:
    """Electrode voltages and onboard temperature from one sensor unit."""

    sensor_id: str
    records: tuple

    def __post_init__(self):
        if len(self.sensor_id) != 4:
            raise ValueError(f"sensor_id must be 4 characters, got {self.sensor_id!r}")
        object.__setattr__(self, "records", tuple(self.records))
        _check_increasing([r.timestamp for r in self.records], "sensor")
        for i, r in enumerate(self.records):
            for v in (r.op1_mv, r.op2_mv, r.temp_c):
                _check_value(v, "sensor", i)

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class ReferenceSeries:
    """Reference analyzer CO readings in ppm."""

    records: tuple

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        _check_increasing([r.timestamp for r in self.records], "reference")
        for i, r in enumerate(self.records):
            _check_value(r.co_ref, "reference", i)

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class AlignedDataset:
    """Complete modeling table: one row per shared timestamp.

    Holds the raw temperature (temp_c) alongside a min-max normalized copy
    (z) computed over these records; norm_params stores the (min, max)
    used so downstream fits can normalize unseen data consistently.
    """

    t: tuple
    x1: np.ndarray
    x2: np.ndarray
    temp_c: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t", tuple(self.t))
        n = len(self.t)
        if n < 1:
            raise ValueError("AlignedDataset needs at least one record")
        _check_increasing(self.t, "aligned")
        for name in ("x1", "x2", "temp_c", "y"):
            a = np.asarray(getattr(self, name), dtype=float)
            if a.shape != (n,):
                raise ValueError(f"{name} must have shape ({n},), got {a.shape}")
            if not np.all(np.isfinite(a)):
                raise ValueError(f"{name} contains non-finite values")
            object.__setattr__(self, name, a)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def norm_params(self) -> tuple:
        return float(self.temp_c.min()), float(self.temp_c.max())

    @property
    def z(self) -> np.ndarray:
        """Min-max normalized temperature, in [0, 1] by construction."""
        zmin, zmax = self.norm_params
        scale = zmax - zmin
        if scale <= 0.0:
            scale = 1.0
        return (self.temp_c - zmin) / scale

    def features(self) -> np.ndarray:
        """(n, 3) design matrix with columns x1, x2, temp_c."""
        return np.column_stack([self.x1, self.x2, self.temp_c])

    def subset(self, indices) -> "AlignedDataset":
        """New dataset from a sorted index selection (order preserved)."""
        idx = np.asarray(indices, dtype=int)
        return AlignedDataset(
            t=[self.t[i] for i in idx],
            x1=self.x1[idx], x2=self.x2[idx],
            temp_c=self.temp_c[idx], y=self.y[idx],
        )


def _window_key(ts: datetime, window_s: int) -> int:
    return int(math.floor(ts.timestamp() / window_s))


def _window_groups(records, window_s: int):
    groups = {}
    for r in records:
        groups.setdefault(_window_key(r.timestamp, window_s), []).append(r)
    return groups


def resample_average(raw: RawSensorSeries, window_minutes: int = 15,
                     min_valid_frac: float = 0.5) -> RawSensorSeries:
    """Window-mean resampling onto boundaries aligned to the epoch.

    A record counts as valid when all three fields are present; each
    output field is the mean of the valid records in its window.  Windows
    where the valid fraction falls below ``min_valid_frac`` (or that hold
    no valid record at all) are dropped.
    """
    if window_minutes <= 0:
        raise ValueError(f"window_minutes must be > 0, got {window_minutes}")
    if not 0.0 <= min_valid_frac <= 1.0:
        raise ValueError(f"min_valid_frac must lie in [0, 1], got {min_valid_frac}")
    window_s = int(window_minutes) * 60
    out = []
    for key, recs in sorted(_window_groups(raw.records, window_s).items()):
        valid = [r for r in recs if None not in (r.op1_mv, r.op2_mv, r.temp_c)]
        if not valid or len(valid) / len(recs) < min_valid_frac:
            continue
        ts = datetime.fromtimestamp(key * window_s, tz=UTC)
        out.append(SensorRecord(
            ts,
            sum(r.op1_mv for r in valid) / len(valid),
            sum(r.op2_mv for r in valid) / len(valid),
            sum(r.temp_c for r in valid) / len(valid),
        ))
    return RawSensorSeries(sensor_id=raw.sensor_id, records=out)


def resample_reference(ref: ReferenceSeries, window_minutes: int = 15,
                       min_valid_frac: float = 0.5) -> ReferenceSeries:
    """Window-mean resampling of the reference series (same rules)."""
    if window_minutes <= 0:
        raise ValueError(f"window_minutes must be > 0, got {window_minutes}")
    if not 0.0 <= min_valid_frac <= 1.0:
        raise ValueError(f"min_valid_frac must lie in [0, 1], got {min_valid_frac}")
    window_s = int(window_minutes) * 60
    out = []
    for key, recs in sorted(_window_groups(ref.records, window_s).items()):
        valid = [r for r in recs if r.co_ref is not None]
        if not valid or len(valid) / len(recs) < min_valid_frac:
            continue
        ts = datetime.fromtimestamp(key * window_s, tz=UTC)
        out.append(ReferenceRecord(ts, sum(r.co_ref for r in valid) / len(valid)))
    return ReferenceSeries(records=out)


def align(sensor: RawSensorSeries, ref: ReferenceSeries) -> AlignedDataset:
    """Intersect the two series on timestamps where both are fully valid."""
    ref_by_ts = {r.timestamp: r.co_ref for r in ref.records if r.co_ref is not None}
    t, x1, x2, temp, y = [], [], [], [], []
    for r in sensor.records:
        if None in (r.op1_mv, r.op2_mv, r.temp_c):
            continue
        co = ref_by_ts.get(r.timestamp)
        if co is None:
            continue
        t.append(r.timestamp)
        x1.append(r.op1_mv)
        x2.append(r.op2_mv)
        temp.append(r.temp_c)
        y.append(co)
    if not t:
        raise EmptyOverlapError("sensor and reference series share no valid timestamps")
    return AlignedDataset(t=t, x1=x1, x2=x2, temp_c=temp, y=y)


def temporal_split(ds: AlignedDataset, train_frac: float = 0.8):
    """Order-preserving split: first ceil(train_frac * n) records to train."""
    if not 0.0 < train_frac < 1.0:
        raise ValueError(f"train_frac must lie in (0, 1), got {train_frac}")
    n = len(ds)
    if n < 2:
        raise ValueError(f"need at least 2 records to split, got {n}")
    # tiny slack so exact products like 0.8 * 5 do not round up a bin
    n_train = int(math.ceil(train_frac * n - 1e-9))
    if n_train < 1 or n_train >= n:
        raise ValueError(
            f"train_frac {train_frac} leaves an empty side for {n} records"
        )
    return ds.subset(range(n_train)), ds.subset(range(n_train, n))


def _parse_timestamp(text: str, where: str) -> datetime:
    try:
        ts = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError:
        raise CsvFormatError(f"{where}: unparseable timestamp {text!r}") from None
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=UTC)
    return ts


def _parse_value(text: str, column: str, where: str, required: bool):
    text = text.strip()
    if text == "":
        if required:
            raise CsvFormatError(f"{where}: column {column!r} must not be empty")
        return None
    try:
        v = float(text)
    except ValueError:
        raise CsvFormatError(f"{where}: unparseable number {text!r} in column {column!r}") from None
    if not math.isfinite(v):
        raise CsvFormatError(f"{where}: non-finite value {text!r} in column {column!r}")
    return v


def _open_csv(path: str, required_columns):
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise CsvFormatError(f"{path}: cannot open ({exc})") from None
    reader = csv.DictReader(fh)
    header = reader.fieldnames
    if header is None:
        fh.close()
        raise CsvFormatError(f"{path}: empty file, expected a header row")
    for col in required_columns:
        if col not in header:
            fh.close()
            raise CsvFormatError(f"{path}: header is missing column {col!r}")
    return fh, reader


def read_sensor_csv(path: str, sensor_id: str = "0000") -> RawSensorSeries:
    """Read the sensor schema; empty value fields become missing readings."""
    fh, reader = _open_csv(path, SENSOR_COLUMNS)
    records = []
    with fh:
        for lineno, row in enumerate(reader, start=2):
            where = f"{path}:{lineno}"
            ts = _parse_timestamp((row["timestamp"] or "").strip(), where)
            records.append(SensorRecord(
                ts,
                _parse_value(row["op1_mv"] or "", "op1_mv", where, required=False),
                _parse_value(row["op2_mv"] or "", "op2_mv", where, required=False),
                _parse_value(row["temp_c"] or "", "temp_c", where, required=False),
            ))
    return RawSensorSeries(sensor_id=sensor_id, records=records)


def read_reference_csv(path: str) -> ReferenceSeries:
    fh, reader = _open_csv(path, REFERENCE_COLUMNS)
    records = []
    with fh:
        for lineno, row in enumerate(reader, start=2):
            where = f"{path}:{lineno}"
            ts = _parse_timestamp((row["timestamp"] or "").strip(), where)
            records.append(ReferenceRecord(
                ts, _parse_value(row["co_ref"] or "", "co_ref", where, required=False)))
    return ReferenceSeries(records=records)


def read_aligned_csv(path: str) -> AlignedDataset:
    """Read the aligned schema; every field is required on every row."""
    fh, reader = _open_csv(path, ALIGNED_COLUMNS)
    t, x1, x2, temp, y = [], [], [], [], []
    with fh:
        for lineno, row in enumerate(reader, start=2):
            where = f"{path}:{lineno}"
            t.append(_parse_timestamp((row["timestamp"] or "").strip(), where))
            x1.append(_parse_value(row["op1_mv"] or "", "op1_mv", where, required=True))
            x2.append(_parse_value(row["op2_mv"] or "", "op2_mv", where, required=True))
            temp.append(_parse_value(row["temp_c"] or "", "temp_c", where, required=True))
            y.append(_parse_value(row["co_ref"] or "", "co_ref", where, required=True))
    if not t:
        raise CsvFormatError(f"{path}: no data rows")
    return AlignedDataset(t=t, x1=x1, x2=x2, temp_c=temp, y=y)


def write_aligned_csv(ds: AlignedDataset, path: str):
    """Write the aligned schema with full-precision values (round-trips)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ALIGNED_COLUMNS)
        for i in range(len(ds)):
            writer.writerow([
                ds.t[i].isoformat(),
                repr(float(ds.x1[i])),
                repr(float(ds.x2[i])),
                repr(float(ds.temp_c[i])),
                repr(float(ds.y[i])),
            ])
