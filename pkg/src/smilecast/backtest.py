"""Rolling out-of-sample smile forecasts scored against a random walk.

For every origin day the three transformed parameter series are
differenced and refitted, forecast 1..H days ahead, cumulated and mapped
back to SABR parameters.  Predicted smiles use the origin day's spot and
rates (random walk for the forward); realised smiles use the realised
parameters and market data at the same strikes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .armagarch import DEFAULT_SPECS, MAX_ITER, ArmaGarchFit, ArmaGarchSpec, fit, forecast, integrate_forecast
from .data import SERIES_NAMES, Dataset
from .errors import InvalidInputError, SmilecastError
from .sabr import SabrParams, build_smile, check_static_arbitrage, strike_grid
from .transform import TransformedParams, from_unconstrained

log = logging.getLogger(__name__)

BP = 1e4  # vol basis points per unit of vol


@dataclass
class BacktestConfig:
    n_fit: int = 1000
    n_test: int = 360
    horizons: tuple[int, ...] = (1, 2, 3)
    n_strikes: int = 40
    strike_band: tuple[float, float] = (0.90, 1.10)
    specs: dict[str, ArmaGarchSpec] = field(default_factory=lambda: dict(DEFAULT_SPECS))
    refit_every: int = 1
    max_iter: int = MAX_ITER

    def __post_init__(self) -> None:
        self.horizons = tuple(int(h) for h in self.horizons)
        self.strike_band = tuple(float(b) for b in self.strike_band)
        if not self.horizons or min(self.horizons) < 1:
            raise InvalidInputError("horizons must be positive")
        if self.n_fit < 2 or self.n_test < 1:
            raise InvalidInputError("n_fit must be >= 2 and n_test >= 1")
        if not 0 < self.strike_band[0] < self.strike_band[1]:
            raise InvalidInputError("strike_band must be increasing and positive")
        if self.n_strikes < 3:
            raise InvalidInputError("n_strikes must be at least 3")
        if self.refit_every < 1:
            raise InvalidInputError("refit_every must be >= 1")
        if set(self.specs) != set(SERIES_NAMES):
            raise InvalidInputError(f"specs must cover {SERIES_NAMES}")

    def check_length(self, n: int) -> None:
        need = self.n_fit + self.n_test + max(self.horizons)
        if need > n:
            raise InvalidInputError(
                f"dataset has {n} days; n_fit + n_test + max(horizons) = {need}"
            )

    @property
    def strike_rel(self) -> np.ndarray:
        return strike_grid(1.0, self.strike_band, self.n_strikes)


@dataclass
class ForecastPath:
    """Predicted parameters per origin day, keyed by horizon."""

    origins: list[int]
    predicted: dict[int, dict[int, SabrParams]]
    failed: list[int]
    fits: dict[str, ArmaGarchFit | None]


def rolling_forecasts(data: Dataset, cfg: BacktestConfig) -> ForecastPath:
    """Refit-and-forecast over the test range.

    Origin ``o`` uses levels ``0..o``; the first origin is day ``n_fit - 1``
    so the first fit sees exactly ``n_fit`` levels.  Each refit is warm
    started at the previous optimum.
    """
    cfg.check_length(len(data))
    coords = data.transformed()
    max_h = max(cfg.horizons)
    fits: dict[str, ArmaGarchFit | None] = {name: None for name in SERIES_NAMES}
    predicted: dict[int, dict[int, SabrParams]] = {}
    origins, failed = [], []

    for k in range(cfg.n_test):
        o = cfg.n_fit - 1 + k
        origins.append(o)
        level_paths = []
        try:
            for col, name in enumerate(SERIES_NAMES):
                levels = coords[: o + 1, col]
                diffs = np.diff(levels)
                if np.ptp(diffs) == 0.0:
                    # no randomness to model: the difference repeats
                    level_paths.append(integrate_forecast(levels[-1], np.full(max_h, diffs[-1])))
                    continue
                current = fits[name]
                if current is None or k % cfg.refit_every == 0:
                    init = current.params if current is not None else None
                    current = fit(cfg.specs[name], diffs, init=init, max_iter=cfg.max_iter, compute_stderrs=False)
                    fits[name] = current
                means = [m for m, _ in forecast(current, diffs, max_h)]
                level_paths.append(integrate_forecast(levels[-1], means))
        except SmilecastError as exc:
            log.warning("origin day %d skipped: %s", o, exc)
            failed.append(o)
            continue
        predicted[o] = {
            h: _back_transform([float(path[h - 1]) for path in level_paths], coords[o], data.params[o])
            for h in cfg.horizons
        }
    return ForecastPath(origins, predicted, failed, fits)


def _back_transform(levels: list[float], today_levels: np.ndarray, today: SabrParams) -> SabrParams:
    # a level forecast equal to today's level maps back to today's value exactly,
    # sparing the log / tanh roundtrip its last-bit noise
    mapped = from_unconstrained(TransformedParams(*levels)).as_tuple()
    return SabrParams(*(t if lv == tl else m for lv, tl, m, t in zip(levels, today_levels, mapped, today.as_tuple())))


@dataclass
class BacktestReport:
    horizons: tuple[int, ...]
    strike_rel: np.ndarray
    days: list[int]
    model_errors_bp: dict[int, np.ndarray]
    rw_errors_bp: dict[int, np.ndarray]
    failed_days: list[int]
    n_predicted_smiles: int
    arbitrage_violations: list[tuple[int, int]]

    @property
    def model_mae_bp(self) -> dict[int, np.ndarray]:
        return {h: _column_mean(e, len(self.strike_rel)) for h, e in self.model_errors_bp.items()}

    @property
    def rw_mae_bp(self) -> dict[int, np.ndarray]:
        return {h: _column_mean(e, len(self.strike_rel)) for h, e in self.rw_errors_bp.items()}

    def rows(self) -> list[dict]:
        """One record per (horizon, strike): the delimited-output layout."""
        model, rw = self.model_mae_bp, self.rw_mae_bp
        return [
            {"strike_rel": float(k), "horizon": h, "model_mae_bp": float(model[h][i]), "rw_mae_bp": float(rw[h][i])}
            for h in self.horizons
            for i, k in enumerate(self.strike_rel)
        ]


def _column_mean(errors: np.ndarray, n: int) -> np.ndarray:
    if errors.size == 0:
        return np.zeros(n)
    return errors.mean(axis=0)


def run_backtest(data: Dataset, cfg: BacktestConfig, forecasts: ForecastPath | None = None) -> BacktestReport:
    if forecasts is None:
        forecasts = rolling_forecasts(data, cfg)
    strike_rel = cfg.strike_rel
    model_err = {h: [] for h in cfg.horizons}
    rw_err = {h: [] for h in cfg.horizons}
    days, violations = [], []
    n_smiles = 0
    for o in forecasts.origins:
        if o not in forecasts.predicted:
            continue
        today = data.snapshots[o]
        strikes = strike_grid(today.spot, cfg.strike_band, cfg.n_strikes)
        rw_smile = build_smile(data.params[o], today, strikes)
        days.append(o)
        for h in cfg.horizons:
            pred = build_smile(forecasts.predicted[o][h], today, strikes)
            n_smiles += 1
            if not check_static_arbitrage(pred).clean:
                violations.append((o, h))
            real = build_smile(data.params[o + h], data.snapshots[o + h], strikes)
            model_err[h].append(np.abs(pred.vols - real.vols) * BP)
            rw_err[h].append(np.abs(rw_smile.vols - real.vols) * BP)
    shape = (0, cfg.n_strikes)
    return BacktestReport(
        horizons=cfg.horizons,
        strike_rel=strike_rel,
        days=days,
        model_errors_bp={h: np.array(v) if v else np.empty(shape) for h, v in model_err.items()},
        rw_errors_bp={h: np.array(v) if v else np.empty(shape) for h, v in rw_err.items()},
        failed_days=list(forecasts.failed),
        n_predicted_smiles=n_smiles,
        arbitrage_violations=violations,
    )


def error_summary(report: BacktestReport) -> list[dict]:
    """Grand-mean error per horizon over strikes and days, in bp."""
    out = []
    for h in report.horizons:
        m, r = report.model_errors_bp[h], report.rw_errors_bp[h]
        out.append({
            "horizon": h,
            "model_mean_bp": float(m.mean()) if m.size else 0.0,
            "rw_mean_bp": float(r.mean()) if r.size else 0.0,
            "n_days": int(m.shape[0]),
        })
    return out
