"""Command-line front end: ingest -> fit -> diagnose -> simulate -> report.

Every command is deterministic for a fixed seed: output files carry no
timestamps (those go to the sidecar ``run.log``), so reruns on unchanged
inputs are byte-identical.
"""

from __future__ import annotations

import csv
import datetime as _dt
import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import datasets as ds
from . import models as md
from . import simulate as sim
from .diagnostics import acf, adf_test, correlation, jarque_bera, ljung_box, moments, qq_points
from .errors import BondvixError
from .series import month_ordinal

EXIT_ERROR = 1
EXIT_BLOCKED = 3


def handle_errors(fn):
    """Surface package errors as clean CLI failures (exit code 1)."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except BondvixError as exc:
            raise click.ClickException(str(exc)) from exc

    return wrapper

CASE_LETTER = {"yield": "a", "spread": "b", "excess": "c"}


def _parse_window(text: str | None):
    if text is None:
        return None
    try:
        lo, hi = text.split(":")
        y0, m0 = (int(p) for p in lo.split("-"))
        y1, m1 = (int(p) for p in hi.split("-"))
        if month_ordinal(y0, m0) > month_ordinal(y1, m1):
            raise ValueError("window start is after its end")
        return ((y0, m0), (y1, m1))
    except ValueError as exc:
        raise click.BadParameter(f"window must look like 1997-01:2024-03 ({exc})")


def _log_line(out_dir: Path, message: str) -> None:
    with open(out_dir / "run.log", "a") as fh:
        fh.write(f"{_dt.datetime.now().isoformat(timespec='seconds')} {message}\n")


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(value: float, digits: int = 6) -> str:
    return f"{value:.{digits}g}"


def _fit_all(inputs: ds.FitInputs) -> dict[str, object]:
    """Fit the model battery for one dataset/case on its aligned panel."""
    fitted: dict[str, object] = {
        "rate_ar": md.RateAr().fit(inputs.rate),
        "rate_vol": md.RateVolModel().fit(inputs.rate, inputs.vix),
        "vix_ar": md.VixAr().fit(inputs.vix),
    }
    if inputs.returns is not None:
        fitted["returns_single"] = md.ReturnsModel(md.VARIANT_SINGLE).fit(
            inputs.returns, inputs.rate
        )
        fitted["returns_lagged"] = md.ReturnsModel(md.VARIANT_LAGGED).fit(
            inputs.returns, inputs.rate
        )
        fitted["returns_vol_single"] = md.ReturnsVolModel(md.VARIANT_SINGLE).fit(
            inputs.returns, inputs.rate, inputs.vix
        )
        fitted["returns_vol_lagged"] = md.ReturnsVolModel(md.VARIANT_LAGGED).fit(
            inputs.returns, inputs.rate, inputs.vix
        )
    return fitted


def _dataset_slug(dataset: str, case: str | None) -> str:
    return dataset if case is None else f"{dataset}_{case}"


_PARAM_ROWS = {
    "rate_ar": lambda m: [("a", m.a_), ("b", m.b_), ("b_minus_1", m.b_ - 1.0)],
    "rate_vol": lambda m: [
        ("a", m.a_),
        ("b", m.b_),
        ("b_minus_1", m.b_ - 1.0),
        ("c", m.c_),
    ],
    "vix_ar": lambda m: [("alpha", m.alpha_), ("beta", m.beta_)],
    "returns_single": lambda m: [("k", m.k_), ("duration", m.duration_), ("h", m.h_)],
    "returns_lagged": lambda m: [("k", m.k_), ("duration", m.duration_), ("h", m.h_)],
    "returns_vol_single": lambda m: [
        ("k", m.k_),
        ("duration", m.duration_),
        ("h", m.h_),
        ("l", m.l_),
    ],
    "returns_vol_lagged": lambda m: [
        ("k", m.k_),
        ("duration", m.duration_),
        ("h", m.h_),
        ("l", m.l_),
    ],
}


def _summary_rows(fitted: dict[str, object]) -> list[list[str]]:
    rows: list[list[str]] = []
    for kind, model in fitted.items():
        for name, value in _PARAM_ROWS[kind](model):
            rows.append([kind, name, _fmt(value)])
        for coef in model.ols_.summary_rows():
            rows.append([kind, f"p[{coef['name']}]", _fmt(coef["p_value"])])
        rows.append([kind, "r_squared", _fmt(model.ols_.r_squared)])
        rows.append([kind, "adj_r_squared", _fmt(model.ols_.adj_r_squared)])
    return rows


@click.group()
@click.version_option(package_name="bondvix")
def main():
    """Volatility-linked corporate bond models: fit, diagnose, simulate, report."""


_shared = [
    click.option("--data-dir", type=click.Path(exists=True, file_okay=False), required=True),
    click.option(
        "--dataset", type=click.Choice(sorted(ds.DATASETS)), required=True, help="Input dataset."
    ),
    click.option(
        "--case",
        type=click.Choice(ds.CASES),
        default=None,
        help="Return/rate pairing (BofA datasets only).",
    ),
    click.option("--window", default=None, help="Month range like 1997-01:2024-03."),
    click.option(
        "--bill-series", default=ds.DEFAULT_BILL_SERIES, show_default=True,
        help="3-month bill series for excess yields and premia.",
    ),
    click.option(
        "--out", type=click.Path(file_okay=False), default="out", show_default=True,
        help="Output directory.",
    ),
]


def shared_options(fn):
    for opt in reversed(_shared):
        fn = opt(fn)
    return fn


def _load_inputs(data_dir, dataset, case, window, bill_series) -> ds.FitInputs:
    if ds.DATASETS[dataset].kind == "bofa" and case is None:
        case = "yield"
    return ds.load_dataset(
        data_dir, dataset, case=case, window=_parse_window(window), bill_series=bill_series
    )


@main.command()
@shared_options
@handle_errors
def fit(data_dir, dataset, case, window, bill_series, out):
    """Fit the model battery and write model JSON files plus a summary table."""
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    inputs = _load_inputs(data_dir, dataset, case, window, bill_series)
    fitted = _fit_all(inputs)
    slug = _dataset_slug(inputs.dataset, inputs.case)
    for kind, model in fitted.items():
        md.save_model(model, out_dir / f"{slug}_{kind}.json")
    _write_csv(
        out_dir / f"{slug}_fit_summary.csv",
        ["model", "item", "value"],
        _summary_rows(fitted),
    )
    _log_line(out_dir, f"fit {slug} window={inputs.window_label}")
    click.echo(f"fitted {len(fitted)} models for {slug} over {inputs.window_label}")


@main.command()
@shared_options
@click.option("--lags", default=15, show_default=True, help="Unit-root test lag count.")
@handle_errors
def diagnose(data_dir, dataset, case, window, bill_series, out, lags):
    """Residual moment comparisons, test battery, and ACF/QQ point files."""
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    inputs = _load_inputs(data_dir, dataset, case, window, bill_series)
    fitted = _fit_all(inputs)
    slug = _dataset_slug(inputs.dataset, inputs.case)

    rate_ar, rate_vol, vix_ar = fitted["rate_ar"], fitted["rate_vol"], fitted["vix_ar"]
    v = inputs.vix.values[1:]
    blocks = {"rate": (rate_ar.residuals_, v, rate_vol.residuals_)}
    if inputs.returns is not None:
        blocks["returns"] = (
            fitted["returns_single"].residuals_,
            v,
            fitted["returns_vol_single"].residuals_,
        )

    moment_rows = []
    for block, (orig, vol, refit) in blocks.items():
        comp = md.compare_residuals(orig, vol, refit)
        for label, summary in (
            ("original", comp.original),
            ("normalized", comp.normalized),
            ("refit", comp.refit_normalized),
        ):
            moment_rows.append(
                [block, label]
                + [_fmt(x) for x in (summary.mean, summary.std, summary.skewness, summary.excess_kurtosis)]
            )
    _write_csv(
        out_dir / f"{slug}_residual_moments.csv",
        ["block", "residual", "mean", "std", "skewness", "excess_kurtosis"],
        moment_rows,
    )

    z = rate_vol.residuals_
    lb_lags = max(1, min(20, len(z) // 4 - 1))
    tests = [
        ("adf_rate", adf_test(inputs.rate.values, lags=lags)),
        ("jarque_bera_z", jarque_bera(z)),
        ("ljung_box_z", ljung_box(z, lb_lags)),
        ("ljung_box_abs_z", ljung_box(np.abs(z), lb_lags)),
    ]
    test_rows = [
        [label, _fmt(t.statistic), _fmt(t.p_value), json.dumps(t.nuisance, sort_keys=True)]
        for label, t in tests
    ]
    test_rows.append(
        ["corr_z_w", _fmt(correlation(z, vix_ar.innovations_)), "", "{}"]
    )
    if inputs.returns is not None:
        jb_u = jarque_bera(fitted["returns_vol_single"].residuals_)
        test_rows.append(
            ["jarque_bera_returns", _fmt(jb_u.statistic), _fmt(jb_u.p_value), json.dumps(jb_u.nuisance, sort_keys=True)]
        )
    _write_csv(
        out_dir / f"{slug}_tests.csv",
        ["test", "statistic", "p_value", "nuisance"],
        test_rows,
    )

    max_lag = max(1, min(40, len(z) // 2 - 1))
    for label, series in (("z", z), ("abs_z", np.abs(z))):
        res = acf(series, max_lag)
        _write_csv(
            out_dir / f"{slug}_acf_{label}.csv",
            ["lag", "value"],
            [[int(lag), _fmt(val, 10)] for lag, val in zip(res.lags, res.values)],
        )
    _write_csv(
        out_dir / f"{slug}_qq_z.csv",
        ["theoretical", "sample"],
        [[_fmt(a, 10), _fmt(b, 10)] for a, b in qq_points(z)],
    )
    _log_line(out_dir, f"diagnose {slug} lags={lags}")
    click.echo(f"diagnostics written for {slug}")


def _apply_overrides(spec: sim.JointModelSpec, overrides: tuple[str, ...]) -> sim.JointModelSpec:
    vix = {"alpha": spec.vix.alpha, "beta": spec.vix.beta}
    rate = {"a": spec.rate.a, "b": spec.rate.b, "c": spec.rate.c}
    ret = (
        None
        if spec.returns is None
        else {"k": spec.returns.k, "m": spec.returns.m, "h": spec.returns.h, "l": spec.returns.l}
    )
    for item in overrides:
        if "=" not in item:
            raise click.BadParameter(f"override must look like b=0.97, got {item!r}")
        key, _, raw = item.partition("=")
        key = key.strip()
        try:
            value = float(raw)
        except ValueError:
            raise click.BadParameter(f"override value for {key!r} is not a number: {raw!r}")
        if key in vix:
            vix[key] = value
        elif key in rate:
            rate[key] = value
        elif ret is not None and key in ret:
            ret[key] = value
        else:
            raise click.BadParameter(f"unknown override target {key!r}")
    return sim.JointModelSpec(
        vix=sim.VixParams(**vix),
        rate=sim.RateParams(**rate),
        returns=None if ret is None else sim.ReturnsParams(**ret),
        innovations=spec.innovations,
    )


@main.command()
@click.option("--spec", "spec_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON chain spec (alternative to --models-dir).")
@click.option("--models-dir", type=click.Path(exists=True, file_okay=False), default=None,
              help="Directory holding model JSON files written by `fit`.")
@click.option("--dataset", type=click.Choice(sorted(ds.DATASETS)), default=None)
@click.option("--case", type=click.Choice(ds.CASES), default=None)
@click.option("--innovations", type=click.Choice(["bootstrap", "gaussian", "vg"]),
              default="bootstrap", show_default=True)
@click.option("--returns-variant", type=click.Choice(["single", "with_lagged_rate", "none"]),
              default="single", show_default=True,
              help="Which fitted returns equation enters the chain.")
@click.option("--steps", "-T", default=5000, show_default=True, help="Steps per path.")
@click.option("--paths", default=1, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--burn-in", default=None, type=int)
@click.option("--n-pairs", default=5, show_default=True,
              help="Chain pairs for the convergence diagnostic.")
@click.option("--override", "overrides", multiple=True,
              help="Parameter override like b=0.97 (repeatable).")
@click.option("--force", is_flag=True, help="Simulate even with violated premises.")
@click.option("--out", type=click.Path(file_okay=False), default="out", show_default=True)
@handle_errors
def simulate(spec_path, models_dir, dataset, case, innovations, returns_variant,
             steps, paths, seed, burn_in, n_pairs, overrides, force, out):
    """Simulate the joint chain and write path CSVs plus a convergence report."""
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)

    if spec_path is not None:
        with open(spec_path) as fh:
            spec = sim.JointModelSpec.from_dict(json.load(fh))
    elif models_dir is not None:
        if dataset is None:
            raise click.UsageError("--models-dir needs --dataset (and --case for BofA)")
        if ds.DATASETS[dataset].kind == "bofa" and case is None:
            case = "yield"
        slug = _dataset_slug(dataset, case if ds.DATASETS[dataset].kind == "bofa" else None)
        prefix = Path(models_dir) / slug
        vix_model = md.load_model(f"{prefix}_vix_ar.json")
        rate_model = md.load_model(f"{prefix}_rate_vol.json")
        returns_model = None
        if returns_variant != "none" and ds.DATASETS[dataset].kind == "bofa":
            suffix = "returns_vol_single" if returns_variant == "single" else "returns_vol_lagged"
            returns_model = md.load_model(f"{prefix}_{suffix}.json")
        spec = md.build_joint_spec(vix_model, rate_model, returns_model, innovations=innovations)
    else:
        raise click.UsageError("give either --spec or --models-dir")

    spec = _apply_overrides(spec, overrides)

    findings = sim.validate_assumptions(spec)
    violations = [f for f in findings if f.severity == "violation"]
    for f in findings:
        click.echo(f"[{f.severity}] {f.check}: {f.message}")
    if violations and not force:
        click.echo(
            f"refusing to simulate: {len(violations)} violated premise(s); rerun with --force to override",
            err=True,
        )
        sys.exit(EXIT_BLOCKED)

    initial = sim.anchor_state(spec)
    for i in range(paths):
        path = sim.simulate(spec, steps, seed=[seed, i], initial=initial)
        path.write_csv(out_dir / f"path_{i:03d}.csv")

    report = sim.ergodicity_diagnostic(
        spec, steps, burn_in=burn_in, n_pairs=n_pairs, seed=seed
    )
    report.to_json(out_dir / "convergence.json")
    with open(out_dir / "findings.json", "w") as fh:
        json.dump([f.as_dict() for f in findings], fh, indent=2, sort_keys=True)
        fh.write("\n")
    _log_line(out_dir, f"simulate T={steps} paths={paths} seed={seed}")
    status = "passed" if report.passed else "FAILED"
    click.echo(f"convergence diagnostic {status}: max KS = {report.max_ks:.4f}")
    if not report.passed and not force:
        sys.exit(EXIT_BLOCKED)


def _pct(x: float) -> str:
    return f"{100.0 * x:.1f}"


def _r3(x: float) -> str:
    return f"{x:.3f}"


@main.command()
@click.option("--data-dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--bill-series", default=ds.DEFAULT_BILL_SERIES, show_default=True)
@click.option("--window", default=None, help="Override the standard month ranges.")
@click.option("--lags", default=15, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default="out", show_default=True)
@handle_errors
def report(data_dir, bill_series, window, lags, out):
    """Regenerate the summary tables (rates, scaled regressions, returns) as CSV."""
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    win = _parse_window(window)

    full: dict = {"tables": {}, "moodys": {}}
    ratings = ("bofa_quality", "bofa_junk")
    cells: dict[tuple[str, str], dict] = {}
    for dataset in ratings:
        for case in ds.CASES:
            inputs = ds.load_dataset(data_dir, dataset, case=case, window=win, bill_series=bill_series)
            fitted = _fit_all(inputs)
            rate_comp = md.compare_residuals(
                fitted["rate_ar"].residuals_, inputs.vix.values[1:], fitted["rate_vol"].residuals_
            )
            ret_comp = md.compare_residuals(
                fitted["returns_single"].residuals_,
                inputs.vix.values[1:],
                fitted["returns_vol_single"].residuals_,
            )
            cells[(dataset, case)] = {
                "inputs": inputs,
                "fitted": fitted,
                "rate_comp": rate_comp,
                "ret_comp": ret_comp,
                "adf": adf_test(inputs.rate.values, lags=lags),
                "provenance": f"{dataset}/{case} {inputs.rate.name} {inputs.window_label}",
            }

    col_keys = [(d, c) for d in ratings for c in ds.CASES]
    headers = ["statistic"] + [f"{d.split('_')[1]}_{c}" for d, c in col_keys] + ["provenance"]

    def table_rows(spec_rows):
        rows = []
        for label, getter in spec_rows:
            rows.append(
                [label]
                + [getter(cells[key]) for key in col_keys]
                + [f"{label} from " + "; ".join(cells[key]["provenance"] for key in col_keys)]
            )
        return rows

    table1 = table_rows(
        [
            ("slope_b_minus_1", lambda c: _r3(c["fitted"]["rate_ar"].b_ - 1.0)),
            ("intercept_a", lambda c: _r3(c["fitted"]["rate_ar"].a_)),
            ("slope_t_test_p", lambda c: _r3(c["fitted"]["rate_ar"].ols_.p_value("rate_lag"))),
            ("adf_p", lambda c: _r3(c["adf"].p_value)),
            ("original_residual_skewness", lambda c: _r3(c["rate_comp"].original.skewness)),
            ("normalized_residual_skewness", lambda c: _r3(c["rate_comp"].normalized.skewness)),
            ("original_residual_kurtosis", lambda c: _r3(c["rate_comp"].original.excess_kurtosis)),
            ("normalized_residual_kurtosis", lambda c: _r3(c["rate_comp"].normalized.excess_kurtosis)),
        ]
    )
    _write_csv(out_dir / "table1.csv", headers, table1)

    table2 = table_rows(
        [
            ("intercept_a", lambda c: _r3(c["fitted"]["rate_vol"].a_)),
            ("slope_b_minus_1", lambda c: _r3(c["fitted"]["rate_vol"].b_ - 1.0)),
            ("vol_coefficient_c", lambda c: _r3(c["fitted"]["rate_vol"].c_)),
            ("p_a", lambda c: _r3(c["fitted"]["rate_vol"].ols_.p_value("inv_vol"))),
            ("p_b_minus_1", lambda c: _r3(c["fitted"]["rate_vol"].ols_.p_value("rate_lag_over_vol"))),
            ("p_c", lambda c: _r3(c["fitted"]["rate_vol"].ols_.p_value("const"))),
            ("r_squared", lambda c: _r3(c["fitted"]["rate_vol"].ols_.r_squared)),
            ("residual_skewness", lambda c: _r3(c["rate_comp"].refit_normalized.skewness)),
            ("residual_kurtosis", lambda c: _r3(c["rate_comp"].refit_normalized.excess_kurtosis)),
        ]
    )
    _write_csv(out_dir / "table2.csv", headers, table2)

    table3_rows = []
    for case in ds.CASES:
        row = [f"case_{CASE_LETTER[case]}_{case}"]
        for dataset in ratings:
            c = cells[(dataset, case)]
            row += [
                _pct(c["fitted"]["returns_vol_single"].ols_.adj_r_squared),
                _pct(c["fitted"]["returns_vol_lagged"].ols_.adj_r_squared),
                _pct(c["fitted"]["returns_vol_lagged"].ols_.p_value("rate_lag_over_vol")),
            ]
        row.append("; ".join(cells[(d, case)]["provenance"] for d in ratings))
        table3_rows.append(row)
    _write_csv(
        out_dir / "table3.csv",
        ["case", "quality_adj_r2_single_pct", "quality_adj_r2_lagged_pct", "quality_p_k_pct",
         "junk_adj_r2_single_pct", "junk_adj_r2_lagged_pct", "junk_p_k_pct", "provenance"],
        table3_rows,
    )

    table4_rows = []
    for dataset in ratings:
        for case in ds.CASES:
            c = cells[(dataset, case)]["ret_comp"]
            table4_rows.append(
                [f"{dataset.split('_')[1]}_{CASE_LETTER[case]}_{case}",
                 _r3(c.original.skewness), _r3(c.normalized.skewness), _r3(c.refit_normalized.skewness),
                 _r3(c.original.excess_kurtosis), _r3(c.normalized.excess_kurtosis), _r3(c.refit_normalized.excess_kurtosis),
                 cells[(dataset, case)]["provenance"]]
            )
    _write_csv(
        out_dir / "table4.csv",
        ["case", "skewness_original", "skewness_normalized", "skewness_refit",
         "kurtosis_original", "kurtosis_normalized", "kurtosis_refit", "provenance"],
        table4_rows,
    )

    moodys_rows = []
    for dataset in ("moodys_aaa", "moodys_baa"):
        inputs = ds.load_dataset(data_dir, dataset, window=win, bill_series=bill_series)
        fitted = _fit_all(inputs)
        comp = md.compare_residuals(
            fitted["rate_ar"].residuals_, inputs.vix.values[1:], fitted["rate_vol"].residuals_
        )
        rv, va = fitted["rate_vol"], fitted["vix_ar"]
        w_m = moments(va.innovations_)
        moodys_rows.append(
            [dataset, _r3(rv.a_), _r3(rv.b_ - 1.0), _r3(rv.c_),
             _r3(rv.ols_.p_value("inv_vol")), _r3(rv.ols_.p_value("rate_lag_over_vol")), _r3(rv.ols_.p_value("const")),
             _r3(comp.original.skewness), _r3(comp.original.excess_kurtosis),
             _r3(comp.normalized.skewness), _r3(comp.normalized.excess_kurtosis),
             _r3(comp.refit_normalized.skewness), _r3(comp.refit_normalized.excess_kurtosis),
             _r3(correlation(rv.residuals_, va.innovations_)),
             _r3(va.alpha_), _r3(va.beta_), _r3(w_m.skewness), _r3(w_m.excess_kurtosis),
             f"{dataset} {inputs.rate.name} {inputs.window_label}"]
        )
        full["moodys"][dataset] = {
            "a": rv.a_, "b": rv.b_, "c": rv.c_,
            "alpha": va.alpha_, "beta": va.beta_,
            "corr_z_w": correlation(rv.residuals_, va.innovations_),
        }
    _write_csv(
        out_dir / "moodys_summary.csv",
        ["dataset", "a", "b_minus_1", "c", "p_a", "p_b_minus_1", "p_c",
         "original_skewness", "original_kurtosis", "normalized_skewness", "normalized_kurtosis",
         "refit_skewness", "refit_kurtosis", "corr_z_w", "vix_alpha", "vix_beta",
         "w_skewness", "w_kurtosis", "provenance"],
        moodys_rows,
    )

    for key, c in cells.items():
        full["tables"][f"{key[0]}/{key[1]}"] = {
            "rate_ar": {"a": c["fitted"]["rate_ar"].a_, "b": c["fitted"]["rate_ar"].b_},
            "rate_vol": {
                "a": c["fitted"]["rate_vol"].a_,
                "b": c["fitted"]["rate_vol"].b_,
                "c": c["fitted"]["rate_vol"].c_,
                "r_squared": c["fitted"]["rate_vol"].ols_.r_squared,
            },
            "adj_r2_single": c["fitted"]["returns_vol_single"].ols_.adj_r_squared,
            "adj_r2_lagged": c["fitted"]["returns_vol_lagged"].ols_.adj_r_squared,
            "p_k": c["fitted"]["returns_vol_lagged"].ols_.p_value("rate_lag_over_vol"),
            "adf_p": c["adf"].p_value,
        }
    with open(out_dir / "report.json", "w") as fh:
        json.dump(full, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _log_line(out_dir, "report")
    click.echo(f"tables written to {out_dir}")


if __name__ == "__main__":
    main()
