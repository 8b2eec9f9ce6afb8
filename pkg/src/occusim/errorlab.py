"""Day-wise occupancy strings, the pairwise Hamming error matrix, and
selection of reference/erroneous strings at a target error level.

Random draws use numpy's ``default_rng`` (PCG64), whose output for a given
integer seed is stable across platforms and numpy releases.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from datetime import date, timedelta
from typing import Sequence

import numpy as np

from .errors import (
    DataError,
    EmptyDatabase,
    LengthMismatch,
    NoCandidateAtAnyTolerance,
    PartialDay,
    TooFewStrings,
)
from .series import TimeSeries

# float slack when comparing matrix percentages against a tolerance band
_EPS = 1e-9


@dataclass(frozen=True, eq=False)
class OccupancyString:
    day: date
    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 1 or not np.isin(bits, (0, 1)).all():
            raise ValueError("occupancy bits must be a 1-d vector of 0/1")
        bits = bits.astype(np.uint8)
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_text(cls, day: date, text: str) -> "OccupancyString":
        return cls(day, np.array([int(c) for c in text], dtype=np.uint8))

    def __len__(self) -> int:
        return len(self.bits)

    def __eq__(self, other) -> bool:
        if not isinstance(other, OccupancyString):
            return NotImplemented
        return self.day == other.day and np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash((self.day, self.bits.tobytes()))

    def __str__(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)

    @property
    def fraction(self) -> float:
        return float(self.bits.mean())


@dataclass(frozen=True, eq=False)
class ErrorMatrix:
    strings: tuple[OccupancyString, ...]
    cells: np.ndarray  # n x n, percent

    @property
    def days(self) -> list[date]:
        return [s.day for s in self.strings]

    def index_of(self, string: OccupancyString) -> int:
        for i, s in enumerate(self.strings):
            if s.day == string.day and np.array_equal(s.bits, string.bits):
                return i
        raise KeyError(f"string for {string.day} is not a row of the matrix")


@dataclass(frozen=True)
class ErrorPair:
    reference: OccupancyString
    erroneous: OccupancyString
    achieved_error: float
    tolerance: float  # final band half-width after any widening


def to_day_strings(occupancy: TimeSeries) -> list[OccupancyString]:
    """Split a preprocessed occupancy series into one string per calendar day."""
    if 86400 % occupancy.step:
        raise PartialDay(f"step {occupancy.step}s does not divide a day")
    per_day = 86400 // occupancy.step
    start = occupancy.start
    if (start.hour, start.minute, start.second, start.microsecond) != (0, 0, 0, 0):
        raise PartialDay(f"series starts at {start}, not at midnight")
    if len(occupancy) == 0 or len(occupancy) % per_day:
        raise PartialDay(f"{len(occupancy)} samples is not a whole number of days of {per_day}")
    if occupancy.has_missing:
        raise DataError("occupancy series has missing samples; preprocess it first")
    rows = occupancy.values.reshape(-1, per_day)
    return [
        OccupancyString(start.date() + timedelta(days=k), row.astype(np.uint8))
        for k, row in enumerate(rows)
    ]


def hamming_error(a: OccupancyString, b: OccupancyString) -> float:
    """Percentage of positions at which two equal-length strings differ."""
    if len(a) != len(b):
        raise LengthMismatch(f"strings of length {len(a)} and {len(b)}")
    if len(a) == 0:
        return 0.0
    return 100.0 * int(np.count_nonzero(a.bits != b.bits)) / len(a)


def build_error_matrix(strings: Sequence[OccupancyString]) -> ErrorMatrix:
    if len(strings) < 2:
        raise TooFewStrings(f"need at least 2 strings, got {len(strings)}")
    length = len(strings[0])
    if any(len(s) != length for s in strings):
        raise LengthMismatch("occupancy strings have unequal lengths")
    bits = np.stack([s.bits for s in strings]).astype(np.int64)
    # Hamming distance between 0/1 rows: a.(1-b) + (1-a).b
    counts = bits @ (1 - bits).T
    counts = counts + counts.T
    cells = 100.0 * counts / length
    cells.setflags(write=False)
    return ErrorMatrix(tuple(strings), cells)


def select_reference(day_string: OccupancyString, database: Sequence[OccupancyString]) -> OccupancyString:
    """Database string closest in Hamming distance; ties go to the earliest date."""
    if not database:
        raise EmptyDatabase("reference database is empty")
    return min(database, key=lambda s: (hamming_error(day_string, s), s.day))


def select_erroneous(
    reference: OccupancyString,
    matrix: ErrorMatrix,
    target: float,
    tolerance: float = 1.0,
    rng_seed: int = 0,
) -> ErrorPair:
    """Draw a string whose error against ``reference`` is ``target`` +- ``tolerance``.

    The band widens one percentage point at a time until it holds at least one
    candidate. A zero target returns the reference itself; otherwise the
    reference row is not a candidate.
    """
    if not 0 <= target <= 100:
        raise ValueError(f"target error {target} outside [0, 100]")
    row = matrix.index_of(reference)
    if target == 0:
        return ErrorPair(reference, reference, 0.0, tolerance)
    if len(matrix.strings) < 2:
        raise NoCandidateAtAnyTolerance("error matrix has a single row")
    errors = np.asarray(matrix.cells[row], dtype=float)
    others = np.array([j for j in range(len(errors)) if j != row])
    tol = float(tolerance)
    while True:
        hit = others[np.abs(errors[others] - target) <= tol + _EPS]
        if hit.size:
            break
        tol += 1.0
    rng = np.random.default_rng(rng_seed)
    pick = int(hit[rng.integers(hit.size)])
    return ErrorPair(reference, matrix.strings[pick], float(errors[pick]), tol)


def inject_error(
    day_string: OccupancyString,
    matrix: ErrorMatrix,
    target: float,
    tolerance: float = 1.0,
    rng_seed: int = 0,
) -> ErrorPair:
    """Reference for ``day_string`` (its closest other day) plus an erroneous draw.

    The simulated day then runs with the reference as true occupancy and the
    erroneous string as the controller's forecast.
    """
    others = [s for s in matrix.strings if s.day != day_string.day]
    reference = select_reference(day_string, others)
    return select_erroneous(reference, matrix, target, tolerance, rng_seed)


def replicate_seed(seed: int, *parts) -> int:
    """Stable 63-bit seed derived from a global seed and identifying parts.

    blake2b over the text ``seed|part1|part2|...``; identical on every platform.
    """
    text = "|".join(str(p) for p in (seed, *parts))
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


def write_matrix_csv(path, matrix: ErrorMatrix) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["day"] + [d.isoformat() for d in matrix.days])
        for d, row in zip(matrix.days, matrix.cells):
            w.writerow([d.isoformat()] + [repr(float(v)) for v in row])


def read_matrix_csv(path) -> tuple[list[date], np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    days = [date.fromisoformat(d) for d in rows[0][1:]]
    cells = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    return days, cells
