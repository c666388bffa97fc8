"""Hourly power time series and the arithmetic the simulator needs.

All series share a fixed one-hour step, so a value in kW is numerically the
energy in kWh delivered during that hour.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Literal

import numpy as np

STEP = timedelta(hours=1)


class AlignmentError(ValueError):
    """Two series do not share start, step and length."""


class CoverageError(ValueError):
    """A series does not cover the period an operation requires."""


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Hourly power samples in kW anchored to an hour-aligned start."""

    start: datetime
    values: np.ndarray

    def __post_init__(self):
        if self.start.minute or self.start.second or self.start.microsecond:
            raise ValueError(f"start must be hour-aligned, got {self.start}")
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 1:
            raise ValueError("values must be one-dimensional")
        if not np.all(np.isfinite(vals)):
            raise ValueError("values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def step(self) -> timedelta:
        return STEP

    @property
    def end(self) -> datetime:
        return self.start + len(self) * STEP

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other):
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return self.start == other.start and np.array_equal(self.values, other.values)

    def total(self) -> float:
        """Energy over the whole series in kWh."""
        return float(self.values.sum())

    def with_values(self, values) -> "TimeSeries":
        values = np.asarray(values, dtype=float)
        if values.shape != self.values.shape:
            raise AlignmentError("replacement values change the series length")
        return TimeSeries(self.start, values)

    def scaled(self, factor: float) -> "TimeSeries":
        return TimeSeries(self.start, self.values * factor)

    def timestamps(self) -> np.ndarray:
        base = np.datetime64(self.start, "h")
        return base + np.arange(len(self)).astype("timedelta64[h]")

    def month_index(self) -> np.ndarray:
        """Calendar month (1..12) of every sample."""
        months = self.timestamps().astype("datetime64[M]").astype(int) % 12
        return months + 1

    def weekday_index(self) -> np.ndarray:
        """Weekday (Monday=0) of every sample."""
        days = self.timestamps().astype("datetime64[D]").astype(int)
        # 1970-01-01 was a Thursday
        return (days + 3) % 7

    @classmethod
    def zeros(cls, start: datetime, n: int) -> "TimeSeries":
        return cls(start, np.zeros(n))

    @classmethod
    def constant(cls, start: datetime, n: int, value: float) -> "TimeSeries":
        return cls(start, np.full(n, float(value)))


def exact_sum(values) -> float:
    """Correctly rounded sum, independent of summation order."""
    return math.fsum(np.asarray(values, dtype=float).tolist())


def check_aligned(a: TimeSeries, b: TimeSeries) -> None:
    if a.start != b.start or len(a) != len(b):
        raise AlignmentError(
            f"series not aligned: ({a.start}, {len(a)}) vs ({b.start}, {len(b)})"
        )


def ts_binary(
    a: TimeSeries, b: TimeSeries, op: Literal["add", "sub_clamped_at_zero", "min"]
) -> TimeSeries:
    """Elementwise combination of two aligned series."""
    check_aligned(a, b)
    if op == "add":
        out = a.values + b.values
    elif op == "sub_clamped_at_zero":
        out = np.maximum(a.values - b.values, 0.0)
    elif op == "min":
        out = np.minimum(a.values, b.values)
    else:
        raise ValueError(f"unknown op {op!r}")
    return TimeSeries(a.start, out)


def year_hours(year: int) -> int:
    return int((datetime(year + 1, 1, 1) - datetime(year, 1, 1)) / STEP)


def is_calendar_year(s: TimeSeries) -> bool:
    st = s.start
    return (
        st.month == 1 and st.day == 1 and st.hour == 0
        and len(s) == year_hours(st.year)
    )


def ts_monthly_max(s: TimeSeries) -> np.ndarray:
    """Maximum sample of each calendar month, for a series spanning one year.

    Raises
    ------
    CoverageError
        If the series is not exactly January 1st to December 31st.
    """
    if not is_calendar_year(s):
        raise CoverageError(
            f"monthly maxima need exactly one calendar year, got start={s.start} "
            f"length={len(s)}"
        )
    months = s.month_index()
    out = np.full(12, -np.inf)
    np.maximum.at(out, months - 1, s.values)
    return out
