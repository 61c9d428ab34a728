"""Dataset registry and panel assembly from a directory of FRED CSV exports.

Files are addressed as ``<SERIES>.csv`` inside the data directory.  The
volatility index is aggregated as a monthly average; every other series
keeps its last observation per month.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BondvixError
from .series import (
    MonthlySeries,
    align,
    derive_difference,
    derive_log_returns,
    month_ordinal,
    parse_fred_csv,
    to_monthly,
)

__all__ = [
    "DatasetSpec",
    "DATASETS",
    "CASES",
    "VIX_SERIES",
    "DEFAULT_BILL_SERIES",
    "MissingSeriesError",
    "FitInputs",
    "load_dataset",
    "read_series",
]

VIX_SERIES = "VIXCLS"
DEFAULT_BILL_SERIES = "DTB3"
CASES = ("yield", "spread", "excess")


class MissingSeriesError(BondvixError, FileNotFoundError):
    """Required series files are absent; carries the missing names."""

    def __init__(self, data_dir, missing: list[str]):
        super().__init__(
            f"missing series file(s) in {data_dir}: "
            + ", ".join(f"{name}.csv" for name in missing)
        )
        self.missing = tuple(missing)


@dataclass(frozen=True)
class DatasetSpec:
    key: str
    kind: str  # "moodys" | "bofa"
    label: str
    rate_series: str | None = None  # moodys: spread over the 10-year Treasury
    yield_series: str | None = None
    oas_series: str | None = None
    index_series: str | None = None
    default_window: tuple[tuple[int, int], tuple[int, int]] = ((1986, 1), (2024, 8))

    def required_series(self, case: str | None, bill_series: str) -> list[str]:
        if self.kind == "moodys":
            return [self.rate_series, VIX_SERIES]
        names = [self.yield_series, self.oas_series, self.index_series, VIX_SERIES]
        if case in ("spread", "excess"):
            names.append(bill_series)
        return names


DATASETS: dict[str, DatasetSpec] = {
    "moodys_aaa": DatasetSpec(
        key="moodys_aaa",
        kind="moodys",
        label="Moody's AAA spread over 10-year Treasury",
        rate_series="AAA10Y",
        default_window=((1986, 1), (2024, 8)),
    ),
    "moodys_baa": DatasetSpec(
        key="moodys_baa",
        kind="moodys",
        label="Moody's BAA spread over 10-year Treasury",
        rate_series="BAA10Y",
        default_window=((1986, 1), (2024, 8)),
    ),
    "bofa_quality": DatasetSpec(
        key="bofa_quality",
        kind="bofa",
        label="BofA investment-grade corporate portfolio",
        yield_series="BAMLC0A0CMEY",
        oas_series="BAMLC0A0CM",
        index_series="BAMLCC0A0CMTRIV",
        default_window=((1996, 12), (2024, 3)),
    ),
    "bofa_junk": DatasetSpec(
        key="bofa_junk",
        kind="bofa",
        label="BofA high-yield corporate portfolio",
        yield_series="BAMLH0A0HYM2EY",
        oas_series="BAMLH0A0HYM2",
        index_series="BAMLHYH0A0HYM2TRIV",
        default_window=((1996, 12), (2024, 3)),
    ),
}


@dataclass(frozen=True)
class FitInputs:
    """Aligned model inputs for one dataset (and case, for return models)."""

    dataset: str
    case: str | None
    rate: MonthlySeries
    vix: MonthlySeries
    returns: MonthlySeries | None = None

    @property
    def window_label(self) -> str:
        return self.rate.range_label()


def read_series(data_dir, name: str, rule: str) -> MonthlySeries:
    path = Path(data_dir) / f"{name}.csv"
    if not path.exists():
        raise MissingSeriesError(data_dir, [name])
    return to_monthly(parse_fred_csv(path.read_text()), rule, name=name)


def _check_files(data_dir, names: list[str]) -> None:
    missing = [n for n in names if not (Path(data_dir) / f"{n}.csv").exists()]
    if missing:
        raise MissingSeriesError(data_dir, missing)


def _clip(series: MonthlySeries, window) -> MonthlySeries:
    (y0, m0), (y1, m1) = window
    return series.restrict(month_ordinal(y0, m0), month_ordinal(y1, m1))


def load_dataset(
    data_dir,
    dataset: str,
    case: str | None = None,
    window: tuple[tuple[int, int], tuple[int, int]] | None = None,
    bill_series: str = DEFAULT_BILL_SERIES,
) -> FitInputs:
    """Assemble the aligned (rate, vix[, returns]) inputs for one dataset.

    ``case`` selects the BofA rate/return pairing: ``yield`` regresses raw
    total returns on the effective yield; ``spread`` and ``excess`` regress
    premia (returns minus the 3-month-bill accrual) on the option-adjusted
    spread and on yield-minus-bill respectively.  Moody's datasets take no
    case.  ``window`` defaults to the dataset's standard range.
    """
    if dataset not in DATASETS:
        raise ValueError(f"unknown dataset {dataset!r}; expected one of {sorted(DATASETS)}")
    spec = DATASETS[dataset]
    if spec.kind == "moodys":
        if case is not None:
            raise ValueError(f"dataset {dataset!r} takes no case")
    elif case not in CASES:
        raise ValueError(f"dataset {dataset!r} needs a case from {CASES}, got {case!r}")
    window = window or spec.default_window
    _check_files(data_dir, spec.required_series(case, bill_series))

    vix = _clip(read_series(data_dir, VIX_SERIES, "monthly_average"), window)
    if spec.kind == "moodys":
        rate = _clip(read_series(data_dir, spec.rate_series, "end_of_month"), window)
        panel = align([rate, vix])
        return FitInputs(
            dataset=dataset,
            case=None,
            rate=panel[spec.rate_series],
            vix=panel[VIX_SERIES],
        )

    yld = _clip(read_series(data_dir, spec.yield_series, "end_of_month"), window)
    index = _clip(read_series(data_dir, spec.index_series, "end_of_month"), window)
    returns = derive_log_returns(align([index])[spec.index_series], name="total_return")

    if case == "yield":
        rate, q = yld, returns
    else:
        bill = _clip(read_series(data_dir, bill_series, "end_of_month"), window)
        # monthly risk-free accrual from the annualized bill rate in percent
        riskfree = MonthlySeries("riskfree", bill.months, bill.values / 1200.0)
        rq = align([returns, riskfree])
        q = derive_difference(rq["total_return"], rq["riskfree"], name="premium")
        if case == "spread":
            rate = _clip(read_series(data_dir, spec.oas_series, "end_of_month"), window)
        else:
            yb = align([yld, bill])
            rate = derive_difference(
                yb[spec.yield_series], yb[bill_series], name="excess_yield"
            )

    panel = align([rate, q, vix])
    return FitInputs(
        dataset=dataset,
        case=case,
        rate=panel[rate.name],
        vix=panel[VIX_SERIES],
        returns=panel[q.name],
    )
