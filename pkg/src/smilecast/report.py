"""Serialise backtest and strategy reports as CSV and JSON.

Numbers are written with 10 significant digits.  Files are written to a
temporary name and renamed into place.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from .backtest import BacktestReport, error_summary
from .data import _atomic_write
from .errors import InvalidInputError
from .strategy import STRUCTURES, StrategyReport

BACKTEST_COLUMNS = ["strike_rel", "horizon", "model_mae_bp", "rw_mae_bp"]
STRATEGY_COLUMNS = ["delta", "avg_return", "std_return", "standardized", "frequency", "n_trades"]


def fmt(value) -> str:
    if isinstance(value, (bool, int)) and not isinstance(value, float):
        return str(int(value))
    return f"{float(value):.10g}"


def _rounded(value):
    if isinstance(value, dict):
        return {k: _rounded(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_rounded(v) for v in value]
    if isinstance(value, float):
        return float(fmt(value))
    return value


def rows_to_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(row[c]) for c in columns])
    return buf.getvalue()


def read_csv_rows(path) -> list[dict]:
    """Parse a report CSV back into dicts of floats."""
    with open(path, newline="") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def _write_text(path: Path, text: str) -> None:
    _atomic_write(path, lambda fh: fh.write(text))


def backtest_payload(report: BacktestReport) -> dict:
    return _rounded({
        "columns": BACKTEST_COLUMNS,
        "rows": report.rows(),
        "summary": error_summary(report),
        "n_days": len(report.days),
        "failed_days": list(report.failed_days),
        "n_predicted_smiles": report.n_predicted_smiles,
        "arbitrage_violations": [list(v) for v in report.arbitrage_violations],
    })


def strategy_payload(report: StrategyReport) -> dict:
    return _rounded({
        "columns": STRATEGY_COLUMNS,
        "structures": {s: report.rows(s) for s in STRUCTURES},
        "n_days": report.n_days,
        "untradeable_days": list(report.untradeable_days),
        "failed_days": list(report.failed_days),
    })


def write_report(report, out_dir, fmt_: str = "both") -> list[Path]:
    """Write ``report`` into ``out_dir``; returns the paths written.

    Backtests produce ``backtest.csv`` / ``backtest.json``; strategy runs
    produce one CSV per structure plus ``strategy.json``.
    """
    if fmt_ not in ("csv", "json", "both"):
        raise InvalidInputError(f"unknown output format {fmt_!r}")
    out_dir = Path(out_dir)
    written: list[Path] = []
    want_csv = fmt_ in ("csv", "both")
    want_json = fmt_ in ("json", "both")

    if isinstance(report, BacktestReport):
        if want_csv:
            path = out_dir / "backtest.csv"
            _write_text(path, rows_to_csv(report.rows(), BACKTEST_COLUMNS))
            written.append(path)
        if want_json:
            path = out_dir / "backtest.json"
            _write_text(path, json.dumps(backtest_payload(report), indent=2, sort_keys=True) + "\n")
            written.append(path)
    elif isinstance(report, StrategyReport):
        if want_csv:
            for s in STRUCTURES:
                path = out_dir / f"strategy_{s}.csv"
                _write_text(path, rows_to_csv(report.rows(s), STRATEGY_COLUMNS))
                written.append(path)
        if want_json:
            path = out_dir / "strategy.json"
            _write_text(path, json.dumps(strategy_payload(report), indent=2, sort_keys=True) + "\n")
            written.append(path)
    else:
        raise InvalidInputError(f"cannot write a {type(report).__name__}")
    return written
