"""Command-line interface.

Exit codes: 0 success, 1 invalid input (including usage errors and bad
files), 2 numerical failure.  Diagnostics go to standard error.
"""

from __future__ import annotations

import csv
import json
import logging
import sys
from pathlib import Path

import click
import numpy as np

from .armagarch import DEFAULT_SPECS, ArmaGarchSpec, fit, forecast, integrate_forecast
from .backtest import run_backtest
from .config import load_config, parse_config, read_config
from .data import DEFAULT_MATURITY, SERIES_NAMES, load_dataset, write_dataset
from .diagnostics import acf, adf_test, arch_lm_test, information_criteria, pacf
from .errors import InvalidInputError, NumericalError, SmilecastError
from .market import MarketSnapshot, OptionQuote, forward_rate
from .report import write_report
from .sabr import SabrParams, build_smile, calibrate, check_static_arbitrage, sabr_atm_vol
from .strategy import run_strategy
from .transform import TransformedParams, from_unconstrained

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERICAL = 2

DATASET_FILE = "dataset.csv"

log = logging.getLogger("smilecast")


def _floats(text: str, n: int | None, what: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise InvalidInputError(f"{what}: cannot parse {text!r}") from None
    if n is not None and len(values) != n:
        raise InvalidInputError(f"{what}: expected {n} comma-separated values, got {len(values)}")
    return values


def _orders(text: str) -> tuple[int, int]:
    p, q = _floats(text, 2, "--orders")
    if p != int(p) or q != int(q):
        raise InvalidInputError("--orders must be integers p,q")
    return int(p), int(q)


def _emit(payload) -> None:
    click.echo(json.dumps(payload, indent=2, sort_keys=True))


def _fit_payload(f) -> dict:
    aic, bic = information_criteria(f.loglik, f.spec.n_params, f.n_obs)
    return {
        "spec": {"p": f.spec.p, "q": f.spec.q, "mean": f.spec.include_mean},
        "params": f.params.as_dict(f.spec),
        "stderrs": f.stderrs,
        "loglik": f.loglik,
        "aic": aic,
        "bic": bic,
        "n_obs": f.n_obs,
    }


def _spec_for(series: str, orders: str | None, mean: bool | None) -> ArmaGarchSpec:
    base = DEFAULT_SPECS[series]
    p, q = _orders(orders) if orders else (base.p, base.q)
    return ArmaGarchSpec(p, q, base.include_mean if mean is None else mean)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to standard error.")
def cli(verbose: bool) -> None:
    """SABR smile dynamics: fitting, forecasting, backtesting and trading."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


@cli.command()
@click.option("--config", "config_path", type=click.Path(dir_okay=False), required=True)
@click.option("--seed", type=click.IntRange(min=0), required=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
def simulate(config_path: str, seed: int, out_dir: str) -> None:
    """Generate a synthetic dataset CSV into OUT/dataset.csv."""
    raw = read_config(config_path)
    if raw.get("data") is not None:
        raise InvalidInputError("simulate needs a synthetic config, not a data path")
    raw.setdefault("synthetic", {})
    if raw["synthetic"] is None:
        raw["synthetic"] = {}
    raw["synthetic"] = {k: v for k, v in raw["synthetic"].items() if k != "seed"}
    raw["seed"] = seed
    cfg = parse_config(raw, base_dir=Path(config_path).parent)
    path = Path(out_dir) / DATASET_FILE
    write_dataset(cfg.dataset(), path)
    click.echo(str(path), err=True)


@cli.command("fit")
@click.option("--data", "data_path", type=click.Path(dir_okay=False), required=True)
@click.option("--series", type=click.Choice(SERIES_NAMES), required=True)
@click.option("--orders", default=None, help="ARMA orders p,q (default: the series' standard model).")
@click.option("--mean/--no-mean", default=None, help="Include a constant in the mean equation.")
@click.option("--maturity", type=float, default=DEFAULT_MATURITY, show_default=True)
def fit_cmd(data_path: str, series: str, orders: str | None, mean: bool | None, maturity: float) -> None:
    """Fit ARMA-GARCH-t to the differenced transformed series; prints JSON."""
    data = load_dataset(data_path, maturity=maturity)
    spec = _spec_for(series, orders, mean)
    result = fit(spec, np.diff(data.series(series)))
    _emit({"series": series, **_fit_payload(result)})


@cli.command()
@click.option("--data", "data_path", type=click.Path(dir_okay=False), required=True)
@click.option("--series", type=click.Choice(SERIES_NAMES), required=True)
@click.option("--orders", default=None, help="ARMA orders p,q for the residual fit.")
@click.option("--mean/--no-mean", default=None)
@click.option("--max-lag", type=click.IntRange(min=1), default=20, show_default=True)
@click.option("--arch-lags", type=click.IntRange(min=1), default=5, show_default=True)
@click.option("--maturity", type=float, default=DEFAULT_MATURITY, show_default=True)
def diagnose(data_path: str, series: str, orders: str | None, mean: bool | None,
             max_lag: int, arch_lags: int, maturity: float) -> None:
    """Unit-root, ARCH and autocorrelation diagnostics as JSON.

    ARCH-LM is run on the raw residuals of the ARMA-GARCH fit (ARCH effects
    present) and on its standardized residuals (effects removed).
    """
    data = load_dataset(data_path, maturity=maturity)
    levels = data.series(series)
    diffs = np.diff(levels)
    spec = _spec_for(series, orders, mean)
    result = fit(spec, diffs, compute_stderrs=False)
    _emit({
        "series": series,
        "adf_levels": adf_test(levels).as_dict(),
        "adf_differences": adf_test(diffs).as_dict(),
        "arch_lm_residuals": arch_lm_test(result.residuals, arch_lags).as_dict(),
        "arch_lm_standardized": arch_lm_test(result.standardized_residuals, arch_lags).as_dict(),
        "acf": acf(diffs, max_lag).tolist(),
        "pacf": pacf(diffs, max_lag).tolist(),
        "fit": _fit_payload(result),
    })


def _market_options(f):
    for opt in reversed([
        click.option("--spot", type=float, required=True),
        click.option("--rd", type=float, default=0.0, show_default=True, help="Domestic rate."),
        click.option("--rf", type=float, default=0.0, show_default=True, help="Foreign rate."),
        click.option("--T", "maturity", type=float, default=DEFAULT_MATURITY, show_default=True,
                     help="Maturity in years."),
    ]):
        f = opt(f)
    return f


@cli.command()
@click.option("--params", "coords", default=None, help="Transformed coordinates log(alpha),log(nu),logodds(rho).")
@click.option("--sabr", default=None, help="SABR parameters alpha,nu,rho.")
@_market_options
@click.option("--strikes", required=True, help="lo,hi,n: n evenly spaced strikes.")
def smile(coords, sabr, spot, rd, rf, maturity, strikes) -> None:
    """Print strike,vol,call CSV; the arbitrage report goes to stderr as JSON."""
    if (coords is None) == (sabr is None):
        raise InvalidInputError("give exactly one of --params or --sabr")
    if sabr is not None:
        params = SabrParams(*_floats(sabr, 3, "--sabr"))
    else:
        params = from_unconstrained(TransformedParams(*_floats(coords, 3, "--params")))
    lo, hi, n = _floats(strikes, 3, "--strikes")
    if n != int(n) or n < 2 or not 0 < lo < hi:
        raise InvalidInputError("--strikes needs 0 < lo < hi and an integer n >= 2")
    grid = build_smile(params, MarketSnapshot(spot, rd, rf, maturity), np.linspace(lo, hi, int(n)))
    out = click.get_text_stream("stdout")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["strike", "vol", "call"])
    for k, v, c in zip(grid.strikes, grid.vols, grid.calls):
        w.writerow([repr(float(k)), repr(float(v)), repr(float(c))])
    report = check_static_arbitrage(grid)
    click.echo(json.dumps({
        "clean": report.clean,
        "monotonicity_violations": report.monotonicity_violations,
        "convexity_violations": report.convexity_violations,
        "max_violation": report.max_violation,
    }, sort_keys=True), err=True)


def _read_quotes(path: str) -> list[OptionQuote]:
    quotes = []
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = [h.strip() for h in next(reader, [])]
            if header != ["strike", "implied_vol"]:
                raise InvalidInputError(f"{path}:1: header must be strike,implied_vol")
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                try:
                    quotes.append(OptionQuote(float(row[0]), float(row[1])))
                except (ValueError, IndexError) as exc:
                    raise InvalidInputError(f"{path}:{lineno}: {exc}") from None
    except FileNotFoundError:
        raise InvalidInputError(f"{path}: no such file") from None
    return quotes


@cli.command("calibrate")
@click.option("--quotes", "quotes_path", type=click.Path(dir_okay=False), required=True,
              help="CSV with header strike,implied_vol.")
@_market_options
@click.option("--initial", default=None, help="Starting alpha,nu,rho (default: ATM-matched alpha, nu=0.5, rho=0).")
def calibrate_cmd(quotes_path, spot, rd, rf, maturity, initial) -> None:
    """Least-squares SABR fit to quoted vols; prints JSON."""
    quotes = _read_quotes(quotes_path)
    snap = MarketSnapshot(spot, rd, rf, maturity)
    if initial is not None:
        start = SabrParams(*_floats(initial, 3, "--initial"))
    else:
        fwd = forward_rate(snap)
        atm = min(quotes, key=lambda q: abs(q.strike - fwd)).implied_vol if quotes else 0.1
        guess = SabrParams(1.0, 0.5, 0.0)
        # sigma_atm is close to linear in alpha for beta = 1/2
        start = SabrParams(atm / sabr_atm_vol(guess, fwd, maturity), 0.5, 0.0)
    p = calibrate(quotes, snap, start)
    _emit({"alpha": p.alpha, "nu": p.nu, "rho": p.rho})


@cli.command("forecast")
@click.option("--data", "data_path", type=click.Path(dir_okay=False), required=True)
@click.option("--horizon", type=click.IntRange(min=1), required=True)
@click.option("--maturity", type=float, default=DEFAULT_MATURITY, show_default=True)
def forecast_cmd(data_path: str, horizon: int, maturity: float) -> None:
    """Fit the standard models on the whole file and forecast (alpha, nu, rho)."""
    data = load_dataset(data_path, maturity=maturity)
    paths = []
    for name in SERIES_NAMES:
        levels = data.series(name)
        diffs = np.diff(levels)
        f = fit(DEFAULT_SPECS[name], diffs, compute_stderrs=False)
        paths.append(integrate_forecast(levels[-1], [m for m, _ in forecast(f, diffs, horizon)]))
    rows = []
    for h in range(1, horizon + 1):
        p = from_unconstrained(TransformedParams(*(float(path[h - 1]) for path in paths)))
        rows.append({"horizon": h, "alpha": p.alpha, "nu": p.nu, "rho": p.rho})
    _emit({"last_date": data.dates[-1], "forecasts": rows})


def _run_options(f):
    f = click.option("--seed", type=click.IntRange(min=0), default=None,
                     help="Override the config's synthetic seed.")(f)
    f = click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)(f)
    f = click.option("--config", "config_path", type=click.Path(dir_okay=False), required=True)(f)
    return f


@cli.command()
@_run_options
def backtest(config_path: str, out_dir: str, seed: int | None) -> None:
    """Rolling forecast-error backtest; writes backtest.csv/json to OUT."""
    cfg = load_config(config_path, seed=seed)
    report = run_backtest(cfg.dataset(), cfg.backtest)
    for path in write_report(report, out_dir, cfg.output_format):
        click.echo(str(path), err=True)


@cli.command()
@_run_options
def trade(config_path: str, out_dir: str, seed: int | None) -> None:
    """Threshold strangle / risk-reversal simulation; writes strategy files to OUT."""
    cfg = load_config(config_path, seed=seed)
    data = cfg.dataset()
    report = run_strategy(data, cfg.backtest, cfg.deltas)
    for path in write_report(report, out_dir, cfg.output_format):
        click.echo(str(path), err=True)


def main(argv: list[str] | None = None) -> int:
    """Entry point; returns (and exits with) the process status."""
    try:
        cli.main(args=argv, prog_name="smilecast", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        code = EXIT_INVALID
    except click.ClickException as exc:
        exc.show()
        code = EXIT_INVALID
    except NumericalError as exc:
        click.echo(f"error: numerical failure: {exc}", err=True)
        code = EXIT_NUMERICAL
    except (SmilecastError, ValueError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        code = EXIT_INVALID
    else:
        code = EXIT_OK
    if argv is None:
        sys.exit(code)
    return code


if __name__ == "__main__":
    main()
