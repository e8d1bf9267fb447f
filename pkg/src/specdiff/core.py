"""Domain types and CSV ingestion shared by the rest of the package."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MIN_LENGTH = 8


class SeriesError(ValueError):
    """Raised for invalid or degenerate series input."""


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float).ravel()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """A labelled, finite, non-constant real series of length >= 8."""

    values: np.ndarray
    label: str = "series"

    def __post_init__(self):
        arr = _frozen_array(self.values)
        object.__setattr__(self, "values", arr)
        if arr.size < MIN_LENGTH:
            raise SeriesError(
                f"series '{self.label}' has {arr.size} observations, need at least {MIN_LENGTH}"
            )
        if not np.all(np.isfinite(arr)):
            raise SeriesError(f"series '{self.label}' contains non-finite values")
        if np.all(arr == arr[0]):
            raise SeriesError(f"series '{self.label}' is constant")

    @property
    def n(self) -> int:
        return int(self.values.size)

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return self.label == other.label and np.array_equal(self.values, other.values)

    __hash__ = None

    def centered(self) -> "TimeSeries":
        return TimeSeries(self.values - self.values.mean(), self.label)

    def scaled(self, c: float) -> "TimeSeries":
        return TimeSeries(c * self.values, self.label)


@dataclass(frozen=True, eq=False)
class FourierGrid:
    """Fourier frequencies 2*pi*k/n1, k = 1..floor(n1/2), of the shorter series."""

    n1: int
    frequencies: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if int(self.n1) != self.n1 or self.n1 < 2:
            raise ValueError(f"grid size must be an integer >= 2, got {self.n1}")
        k = np.arange(1, self.n1 // 2 + 1)
        object.__setattr__(self, "frequencies", _frozen_array(2.0 * np.pi * k / self.n1))

    def __len__(self):
        return self.n1 // 2


@dataclass(frozen=True)
class ComparisonInput:
    """Two series ordered so that ``short.n <= long.n``."""

    short: TimeSeries
    long: TimeSeries
    swapped: bool = False

    def __post_init__(self):
        if self.short.n > self.long.n:
            raise SeriesError("short series is longer than long series")

    @property
    def n1(self) -> int:
        return self.short.n

    @property
    def n2(self) -> int:
        return self.long.n

    @property
    def q(self) -> float:
        return self.n2 / self.n1

    @property
    def grid(self) -> FourierGrid:
        return FourierGrid(self.n1)


def prepare_comparison(a: TimeSeries, b: TimeSeries, center: bool = True) -> ComparisonInput:
    """Order two series by length and optionally subtract each one's mean.

    Ties keep the caller's order. Centering removes leakage of the long
    series' mean into frequencies that are not its own Fourier frequencies.
    """
    if center:
        a, b = a.centered(), b.centered()
    if b.n < a.n:
        return ComparisonInput(short=b, long=a, swapped=True)
    return ComparisonInput(short=a, long=b, swapped=False)


def _column_index(header: list[str] | None, column) -> int:
    if column is None:
        return 0
    if isinstance(column, int):
        return column
    if isinstance(column, str) and column.lstrip("-").isdigit():
        return int(column)
    if header is None:
        raise SeriesError(f"column '{column}' requested but file has no header row")
    try:
        return [h.strip() for h in header].index(column)
    except ValueError:
        raise SeriesError(f"column '{column}' not found in header {header}") from None


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def load_csv(path, column=None, label: str | None = None) -> TimeSeries:
    """Read one numeric column from a CSV file.

    Parameters
    ----------
    path : str or Path
        File to read (UTF-8, comma separated).
    column : int or str, optional
        Column index or header name; defaults to the first column.
    label : str, optional
        Overrides the default label (the header name if present, else the
        file stem).

    Raises
    ------
    SeriesError
        If the file cannot be read, a cell is not numeric (the 1-based row
        number is reported), or the resulting series is invalid.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = [(i, r) for i, r in enumerate(csv.reader(fh), start=1)]
    except (OSError, UnicodeDecodeError) as exc:
        raise SeriesError(f"{path}: cannot read file ({exc})") from None

    rows = [(i, r) for i, r in rows if r and any(c.strip() for c in r)]
    header = None
    if rows and not all(_is_number(c.strip()) for c in rows[0][1] if c.strip()):
        header = rows[0][1]
        rows = rows[1:]
    idx = _column_index(header, column)

    values = []
    for lineno, row in rows:
        try:
            cell = row[idx].strip()
        except IndexError:
            raise SeriesError(f"{path}: row {lineno} has no column {idx}") from None
        try:
            x = float(cell)
        except ValueError:
            raise SeriesError(f"{path}: row {lineno}: non-numeric value {cell!r}") from None
        if not math.isfinite(x):
            raise SeriesError(f"{path}: row {lineno}: non-finite value {cell!r}")
        values.append(x)

    if label is None:
        label = header[idx].strip() if header is not None else path.stem
    try:
        return TimeSeries(values, label)
    except SeriesError as exc:
        raise SeriesError(f"{path}: {exc}") from None


def write_csv(series: TimeSeries, path, header: bool = True) -> None:
    """Write a series as a single column, full precision (round-trips via ``load_csv``)."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow([series.label])
        for x in series.values:
            w.writerow([repr(float(x))])
