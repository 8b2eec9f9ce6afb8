"""Regularly sampled time series: CSV loading, windowing and resampling."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import datetime, timedelta
from functools import reduce
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .config import TIMESTAMP_FORMAT
from .errors import (
    AllValuesMissing,
    DataError,
    DuplicateTimestamp,
    FileUnreadable,
    UnparsableRow,
    WindowOutsideData,
)

MISSING_MARKERS = frozenset({"", "na", "nan", "null", "none", "?", "-"})

TEMPERATURE = "temperature"
OCCUPANCY = "occupancy"


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Samples at ``start + k * step`` seconds; NaN marks a missing sample."""

    start: datetime
    step: int
    values: np.ndarray

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("step must be positive")
        values = np.array(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return (
            self.start == other.start
            and self.step == other.step
            and self.values.shape == other.values.shape
            and bool(np.array_equal(self.values, other.values, equal_nan=True))
        )

    @property
    def stop(self) -> datetime:
        return self.start + timedelta(seconds=self.step * len(self.values))

    @property
    def has_missing(self) -> bool:
        return bool(np.isnan(self.values).any())

    def times(self) -> list[datetime]:
        return [self.start + timedelta(seconds=self.step * k) for k in range(len(self))]


def parse_csv_timestamp(text: str) -> datetime:
    text = text.strip()
    try:
        return datetime.strptime(text, TIMESTAMP_FORMAT)
    except ValueError:
        return datetime.fromisoformat(text)


def _parse_value(text: str) -> float:
    if text.strip().lower() in MISSING_MARKERS:
        return math.nan
    return float(text)


def _read_rows(path) -> list[tuple[int, list[str]]]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise FileUnreadable(path, exc.strerror or str(exc)) from None
    out = []
    for lineno, row in enumerate(rows, start=1):
        if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
            continue
        # an optional header row: first cell starts with a letter
        if not out and row[0].strip()[:1].isalpha():
            continue
        out.append((lineno, row))
    return out


def _matches(row: list[str], match: Mapping[int, object]) -> bool:
    for col, want in match.items():
        cell = row[col].strip()
        if isinstance(want, (int, float)):
            try:
                if float(cell) != float(want):
                    return False
            except ValueError:
                return False
        elif cell != str(want):
            return False
    return True


def _assemble(samples: list[tuple[datetime, float]], step: int | None) -> TimeSeries:
    samples.sort(key=lambda s: s[0])
    for (t0, _), (t1, _) in zip(samples, samples[1:]):
        if t0 == t1:
            raise DuplicateTimestamp(t1)
    offsets = [int((t - samples[0][0]).total_seconds()) for t, _ in samples]
    if step is None:
        diffs = [b - a for a, b in zip(offsets, offsets[1:])]
        if not diffs:
            raise DataError("cannot infer the sampling step from a single row")
        step = reduce(math.gcd, diffs)
    values = np.full(offsets[-1] // step + 1, np.nan)
    for off, (_, v) in zip(offsets, samples):
        if off % step:
            raise DataError(f"timestamp offset {off}s is not a multiple of step {step}s")
        values[off // step] = v
    return TimeSeries(samples[0][0], step, values)


def load_csv_series(
    path,
    column: int = 1,
    match: Mapping[int, object] | None = None,
    step: int | None = None,
) -> TimeSeries:
    """Read ``timestamp,value[,...]`` rows into a regular series.

    ``column`` selects the value column; ``match`` keeps only rows whose
    cells equal the given values (e.g. ``{1: 1, 2: 3}`` for zone 1, room 3).
    Timestamps absent from the file become missing samples.
    """
    rows = _read_rows(path)
    samples: list[tuple[datetime, float]] = []
    for lineno, row in rows:
        try:
            if match and not _matches(row, match):
                continue
            samples.append((parse_csv_timestamp(row[0]), _parse_value(row[column])))
        except (ValueError, IndexError) as exc:
            raise UnparsableRow(lineno, str(exc)) from None
    if not samples:
        raise UnparsableRow(0, "no data rows")
    return _assemble(samples, step)


def load_occupancy(path, rooms: int, step: int | None = None) -> list[TimeSeries]:
    """Per-room occupancy series.

    Rows are ``timestamp,zone,room,bit``; a two-column file
    (``timestamp,bit``) is zone-level occupancy and is broadcast to every room.
    """
    rows = _read_rows(path)
    if not rows:
        raise UnparsableRow(0, "no data rows")
    width = len(rows[0][1])
    if width == 2:
        return [load_csv_series(path, column=1, step=step)] * rooms
    keys: set[tuple[int, int]] = set()
    for lineno, row in rows:
        try:
            keys.add((int(row[1]), int(row[2])))
        except (ValueError, IndexError) as exc:
            raise UnparsableRow(lineno, str(exc)) from None
    ordered = sorted(keys)
    if len(ordered) != rooms:
        raise DataError(f"occupancy file lists {len(ordered)} rooms, config has {rooms}")
    return [load_csv_series(path, column=3, match={1: i, 2: j}, step=step) for i, j in ordered]


def write_csv_series(path, series: TimeSeries, header: str = "timestamp,value") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for t, v in zip(series.times(), series.values):
            fh.write(f"{t.strftime(TIMESTAMP_FORMAT)},{'' if np.isnan(v) else repr(float(v))}\n")


def slice_window(series: TimeSeries, start: datetime, stop: datetime) -> TimeSeries:
    """Samples covering exactly ``[start, stop)``.

    Parts of the window not covered by the data become missing samples, to be
    filled by :func:`preprocess`.
    """
    if stop <= start:
        raise WindowOutsideData(f"empty window [{start}, {stop})")
    if stop <= series.start or start >= series.stop:
        raise WindowOutsideData(
            f"window [{start}, {stop}) does not overlap data [{series.start}, {series.stop})"
        )
    lead = int((start - series.start).total_seconds())
    span = int((stop - start).total_seconds())
    if lead % series.step or span % series.step:
        raise DataError(f"window [{start}, {stop}) is not aligned to the {series.step}s grid")
    first = lead // series.step
    n = span // series.step
    out = np.full(n, np.nan)
    lo, hi = max(first, 0), min(first + n, len(series))
    out[lo - first:hi - first] = series.values[lo:hi]
    return TimeSeries(start, series.step, out)


def _fill_linear(values: np.ndarray) -> np.ndarray:
    good = ~np.isnan(values)
    idx = np.arange(len(values))
    return np.interp(idx, idx[good], values[good])


def _fill_hold(values: np.ndarray) -> np.ndarray:
    good = ~np.isnan(values)
    idx = np.where(good, np.arange(len(values)), 0)
    np.maximum.accumulate(idx, out=idx)
    out = values[idx]
    # leading gap: back-fill from the first known sample
    first = int(np.argmax(good))
    out[:first] = values[first]
    return out


def preprocess(series: TimeSeries, target_step: int, kind: str = TEMPERATURE) -> TimeSeries:
    """Fill missing samples and resample to ``target_step`` seconds.

    Temperatures are gap-filled and resampled by linear interpolation.
    Occupancy is gap-filled by holding the previous value, thresholded to
    {0, 1}, downsampled by per-bucket majority (ties count as occupied) and
    upsampled by repetition.
    """
    if kind not in (TEMPERATURE, OCCUPANCY):
        raise ValueError(f"unknown series kind {kind!r}")
    if len(series) == 0:
        raise DataError("empty series")
    values = series.values
    if np.isnan(values).all():
        raise AllValuesMissing("series has no valid samples")
    span = series.step * len(series)
    if target_step <= 0 or span % target_step:
        raise DataError(f"span of {span}s is not a multiple of the target step {target_step}s")
    n_out = span // target_step

    if kind == TEMPERATURE:
        filled = _fill_linear(values)
        if target_step != series.step:
            src = np.arange(len(filled)) * series.step
            filled = np.interp(np.arange(n_out) * target_step, src, filled)
        return TimeSeries(series.start, target_step, filled)

    bits = (_fill_hold(values) >= 0.5).astype(float)
    if target_step == series.step:
        out = bits
    elif target_step % series.step == 0:
        factor = target_step // series.step
        out = (2 * bits.reshape(n_out, factor).sum(axis=1) >= factor).astype(float)
    elif series.step % target_step == 0:
        out = np.repeat(bits, series.step // target_step)
    else:
        raise DataError(
            f"occupancy cannot be resampled from {series.step}s to {target_step}s "
            "(steps must divide one another)"
        )
    return TimeSeries(series.start, target_step, out)


def concat(parts: Iterable[TimeSeries]) -> TimeSeries:
    parts = list(parts)
    for a, b in zip(parts, parts[1:]):
        if a.step != b.step or a.stop != b.start:
            raise DataError("series are not contiguous")
    return TimeSeries(parts[0].start, parts[0].step, np.concatenate([p.values for p in parts]))
