import numpy as np
import pytest

from smilecast.backtest import (
    BacktestConfig,
    BacktestReport,
    ForecastPath,
    error_summary,
    rolling_forecasts,
    run_backtest,
)
from smilecast.data import Dataset, SyntheticSpec, business_days, generate_synthetic
from smilecast.errors import InvalidInputError
from smilecast.market import MarketSnapshot
from smilecast.sabr import SabrParams

SMALL = dict(n_fit=200, n_test=8, horizons=(1, 2, 3), n_strikes=40)


@pytest.fixture(scope="module")
def synthetic():
    return generate_synthetic(SyntheticSpec(n_days=215), seed=2)


@pytest.fixture(scope="module")
def small_run(synthetic):
    cfg = BacktestConfig(**SMALL)
    path = rolling_forecasts(synthetic, cfg)
    return cfg, path, run_backtest(synthetic, cfg, path)


def _static(n):
    p = SabrParams(1.0, 0.5, -0.2)
    s = MarketSnapshot(100.0, 0.01, 0.02)
    return Dataset(business_days("2020-01-01", n), [p] * n, [s] * n)


def test_static_world_has_zero_error():
    report = run_backtest(_static(215), BacktestConfig(**SMALL))
    assert report.failed_days == []
    assert len(report.days) == 8
    for h in (1, 2, 3):
        assert np.all(report.model_errors_bp[h] == 0.0)
        assert np.all(report.rw_errors_bp[h] == 0.0)


def test_forced_random_walk_forecast_equals_baseline(synthetic):
    cfg = BacktestConfig(**SMALL)
    origins = list(range(cfg.n_fit - 1, cfg.n_fit - 1 + cfg.n_test))
    path = ForecastPath(origins, {o: {h: synthetic.params[o] for h in cfg.horizons} for o in origins}, [], {})
    report = run_backtest(synthetic, cfg, path)
    for h in cfg.horizons:
        assert np.array_equal(report.model_errors_bp[h], report.rw_errors_bp[h])


def test_report_shape_and_signs(small_run):
    cfg, path, report = small_run
    assert report.days == path.origins
    assert report.days[0] == cfg.n_fit - 1
    assert report.n_predicted_smiles == 8 * 3
    assert report.arbitrage_violations == []
    for h in cfg.horizons:
        assert report.model_errors_bp[h].shape == (8, 40)
        assert np.all(report.model_errors_bp[h] >= 0) and np.all(report.rw_errors_bp[h] >= 0)
    assert report.strike_rel[0] == pytest.approx(0.9) and report.strike_rel[-1] == pytest.approx(1.1)
    rows = report.rows()
    assert len(rows) == 3 * 40
    assert set(rows[0]) == {"strike_rel", "horizon", "model_mae_bp", "rw_mae_bp"}


def test_first_fit_sees_n_fit_levels(synthetic):
    cfg = BacktestConfig(n_fit=200, n_test=1, horizons=(1,))
    path = rolling_forecasts(synthetic, cfg)
    assert path.fits["alpha"].n_obs == 199 - cfg.specs["alpha"].p


def test_deterministic(synthetic, small_run):
    cfg, _, report = small_run
    again = run_backtest(synthetic, cfg)
    for h in cfg.horizons:
        assert again.model_errors_bp[h].tobytes() == report.model_errors_bp[h].tobytes()


def test_refit_every(synthetic):
    cfg = BacktestConfig(n_fit=200, n_test=4, horizons=(1,), refit_every=10)
    path = rolling_forecasts(synthetic, cfg)
    assert sorted(path.predicted) == path.origins


def test_error_summary():
    zero = BacktestReport((1,), np.array([0.9, 1.0, 1.1]), [5], {1: np.zeros((1, 3))}, {1: np.zeros((1, 3))},
                          [], 1, [])
    assert error_summary(zero) == [{"horizon": 1, "model_mean_bp": 0.0, "rw_mean_bp": 0.0, "n_days": 1}]
    ones = BacktestReport((1,), np.array([0.9, 1.0, 1.1]), [5, 6], {1: np.ones((2, 3))}, {1: np.ones((2, 3))},
                          [], 2, [])
    assert error_summary(ones)[0]["model_mean_bp"] == 1.0


def test_config_validation(synthetic):
    with pytest.raises(InvalidInputError):
        BacktestConfig(horizons=())
    with pytest.raises(InvalidInputError):
        BacktestConfig(strike_band=(1.1, 0.9))
    with pytest.raises(InvalidInputError):
        BacktestConfig(refit_every=0)
    with pytest.raises(InvalidInputError, match="n_fit"):
        run_backtest(synthetic, BacktestConfig(n_fit=200, n_test=20))


def test_fit_failures_are_skipped(synthetic, monkeypatch):
    from smilecast import backtest as bt
    from smilecast.errors import ConvergenceError

    calls = {"n": 0}
    real_fit = bt.fit

    def flaky(*args, **kwargs):
        calls["n"] += 1
        if calls["n"] == 4:
            raise ConvergenceError("forced")
        return real_fit(*args, **kwargs)

    monkeypatch.setattr(bt, "fit", flaky)
    cfg = BacktestConfig(n_fit=200, n_test=3, horizons=(1,))
    report = run_backtest(synthetic, cfg)
    assert report.failed_days == [200]
    assert report.days == [199, 201]
