"""Monthly series ingestion: FRED CSV parsing, monthly aggregation, alignment.

All model inputs are ``MonthlySeries`` values: a named vector of one
observation per calendar month.  Rates and spreads are kept in percentage
points as published; total-return index levels stay as levels; log returns
are natural-log decimals per month.
"""

from __future__ import annotations

import datetime as _dt
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import AlignmentError, CsvParseError, DataDomainError, EmptySeriesError

__all__ = [
    "RawCsvRecord",
    "MonthlySeries",
    "AlignedPanel",
    "parse_fred_csv",
    "to_monthly",
    "align",
    "derive_log_returns",
    "derive_difference",
]


def month_ordinal(year: int, month: int) -> int:
    """Encode a calendar month as a single integer (consecutive months differ by 1)."""
    if not 1 <= month <= 12:
        raise ValueError(f"month out of range: {month}")
    return year * 12 + (month - 1)


def ordinal_to_ym(ordinal: int) -> tuple[int, int]:
    return ordinal // 12, ordinal % 12 + 1


def format_month(ordinal: int) -> str:
    y, m = ordinal_to_ym(int(ordinal))
    return f"{y:04d}-{m:02d}"


@dataclass(frozen=True)
class RawCsvRecord:
    """One row of a FRED-style export: a calendar date and an optional value."""

    date: _dt.date
    value: float | None


@dataclass(frozen=True)
class MonthlySeries:
    """A named monthly series: ``months`` are encoded month ordinals.

    Months must be strictly increasing.  Gaps are allowed before alignment
    (monthly aggregation drops empty months); ``align`` rejects them.
    """

    name: str
    months: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        months = np.asarray(self.months, dtype=int)
        values = np.asarray(self.values, dtype=float)
        if months.ndim != 1 or values.ndim != 1:
            raise ValueError("months and values must be one-dimensional")
        if len(months) != len(values):
            raise ValueError(
                f"series {self.name!r}: {len(months)} months vs {len(values)} values"
            )
        if len(months) == 0:
            raise EmptySeriesError(f"series {self.name!r} is empty")
        if np.any(np.diff(months) <= 0):
            raise ValueError(f"series {self.name!r}: months must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise DataDomainError(f"series {self.name!r} contains non-finite values")
        object.__setattr__(self, "months", months)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_pairs(
        cls, name: str, months: Iterable[tuple[int, int]], values: Iterable[float]
    ) -> "MonthlySeries":
        ords = np.array([month_ordinal(y, m) for y, m in months], dtype=int)
        return cls(name, ords, np.asarray(list(values), dtype=float))

    def __len__(self) -> int:
        return len(self.months)

    @property
    def month_pairs(self) -> list[tuple[int, int]]:
        return [ordinal_to_ym(int(o)) for o in self.months]

    @property
    def is_contiguous(self) -> bool:
        return bool(np.all(np.diff(self.months) == 1))

    def range_label(self) -> str:
        return f"{format_month(self.months[0])}..{format_month(self.months[-1])}"

    def restrict(self, first: int, last: int) -> "MonthlySeries":
        """Slice to months in [first, last] (month ordinals, inclusive)."""
        mask = (self.months >= first) & (self.months <= last)
        if not mask.any():
            raise AlignmentError(
                f"series {self.name!r} ({self.range_label()}) has no months in "
                f"{format_month(first)}..{format_month(last)}"
            )
        return MonthlySeries(self.name, self.months[mask], self.values[mask])

    def rename(self, name: str) -> "MonthlySeries":
        return MonthlySeries(name, self.months, self.values)


@dataclass(frozen=True)
class AlignedPanel:
    """Column-aligned series over one common, gap-free month range."""

    columns: dict[str, MonthlySeries] = field(default_factory=dict)

    def __post_init__(self):
        if not self.columns:
            raise ValueError("panel needs at least one column")
        ref = next(iter(self.columns.values()))
        if not ref.is_contiguous:
            raise AlignmentError(f"panel column {ref.name!r} has month gaps")
        for name, s in self.columns.items():
            if name != s.name:
                raise ValueError(f"column key {name!r} does not match series name {s.name!r}")
            if not np.array_equal(s.months, ref.months):
                raise AlignmentError(
                    f"panel column {name!r} does not share the common month grid"
                )

    @property
    def months(self) -> np.ndarray:
        return next(iter(self.columns.values())).months

    @property
    def range(self) -> tuple[tuple[int, int], tuple[int, int]]:
        m = self.months
        return ordinal_to_ym(int(m[0])), ordinal_to_ym(int(m[-1]))

    def __len__(self) -> int:
        return len(self.months)

    def __getitem__(self, name: str) -> MonthlySeries:
        return self.columns[name]


def parse_fred_csv(text: str) -> list[RawCsvRecord]:
    """Parse a FRED export: header ``DATE,<NAME>`` then ``YYYY-MM-DD,<value|".">`` rows.

    Missing observations ("." or empty) become ``None``.  Raises
    :class:`CsvParseError` naming the offending data row (1-based, header
    excluded) on malformed dates or non-numeric values.
    """
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise CsvParseError("empty CSV input")
    header = [h.strip().strip('"') for h in lines[0].split(",")]
    if len(header) < 2 or header[0].upper() not in ("DATE", "OBSERVATION_DATE"):
        raise CsvParseError(f"expected a 'DATE,<NAME>' header, got {lines[0]!r}")
    records: list[RawCsvRecord] = []
    for i, line in enumerate(lines[1:], start=1):
        parts = [p.strip().strip('"') for p in line.split(",")]
        if len(parts) < 2:
            raise CsvParseError(f"row {i}: expected two fields, got {line!r}", row=i)
        try:
            date = _dt.date.fromisoformat(parts[0])
        except ValueError as exc:
            raise CsvParseError(f"row {i}: bad date {parts[0]!r}: {exc}", row=i) from None
        raw = parts[1]
        if raw in (".", ""):
            value: float | None = None
        else:
            try:
                value = float(raw)
            except ValueError:
                raise CsvParseError(f"row {i}: non-numeric value {raw!r}", row=i) from None
        records.append(RawCsvRecord(date, value))
    return records


def to_monthly(
    records: Sequence[RawCsvRecord], rule: str, name: str = "series"
) -> MonthlySeries:
    """Aggregate dated records to one value per calendar month.

    ``rule`` is ``"end_of_month"`` (last non-missing observation in the month)
    or ``"monthly_average"`` (arithmetic mean of non-missing observations).
    Months with no usable observation are dropped.
    """
    if rule not in ("end_of_month", "monthly_average"):
        raise ValueError(f"unknown aggregation rule {rule!r}")
    buckets: dict[int, list[tuple[_dt.date, float]]] = {}
    for rec in records:
        if rec.value is None:
            continue
        key = month_ordinal(rec.date.year, rec.date.month)
        buckets.setdefault(key, []).append((rec.date, rec.value))
    if not buckets:
        raise EmptySeriesError(f"series {name!r}: no non-missing observations")
    months = sorted(buckets)
    values = []
    for key in months:
        obs = buckets[key]
        if rule == "end_of_month":
            values.append(max(obs, key=lambda dv: dv[0])[1])
        else:
            values.append(math.fsum(v for _, v in obs) / len(obs))
    return MonthlySeries(name, np.array(months, dtype=int), np.array(values))


def align(series: Sequence[MonthlySeries]) -> AlignedPanel:
    """Restrict series to the intersection of their month ranges.

    Every series must cover every month in the intersection; an interior
    missing month is an error rather than an interpolation target.
    """
    series = list(series)
    if not series:
        raise ValueError("align needs at least one series")
    first = max(int(s.months[0]) for s in series)
    last = min(int(s.months[-1]) for s in series)
    if first > last:
        ranges = ", ".join(f"{s.name}: {s.range_label()}" for s in series)
        raise AlignmentError(f"series have no common months ({ranges})")
    expected = np.arange(first, last + 1)
    columns: dict[str, MonthlySeries] = {}
    for s in series:
        if s.name in columns:
            raise ValueError(f"duplicate series name {s.name!r}")
        cut = s.restrict(first, last)
        if len(cut) != len(expected) or not np.array_equal(cut.months, expected):
            missing = sorted(set(expected.tolist()) - set(cut.months.tolist()))
            shown = ", ".join(format_month(m) for m in missing[:6])
            raise AlignmentError(
                f"series {s.name!r} is missing {len(missing)} month(s) inside "
                f"{format_month(first)}..{format_month(last)}: {shown}"
            )
        columns[s.name] = cut
    return AlignedPanel(columns)


def derive_log_returns(index: MonthlySeries, name: str | None = None) -> MonthlySeries:
    """Month-over-month log returns of a positive index level series."""
    if np.any(index.values <= 0):
        raise DataDomainError(f"series {index.name!r} has nonpositive levels")
    if len(index) < 2:
        raise EmptySeriesError(f"series {index.name!r}: need two points for returns")
    if not index.is_contiguous:
        raise AlignmentError(
            f"series {index.name!r} has month gaps; log returns need consecutive months"
        )
    vals = np.diff(np.log(index.values))
    return MonthlySeries(name or f"{index.name}.logret", index.months[1:], vals)


def derive_difference(
    a: MonthlySeries, b: MonthlySeries, name: str | None = None
) -> MonthlySeries:
    """Pointwise a - b for identically indexed series (yield minus bill, etc.)."""
    if not np.array_equal(a.months, b.months):
        raise AlignmentError(
            f"cannot difference {a.name!r} ({a.range_label()}) against "
            f"{b.name!r} ({b.range_label()}): month grids differ"
        )
    return MonthlySeries(name or f"{a.name}-{b.name}", a.months, a.values - b.values)
