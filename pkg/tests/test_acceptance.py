"""Headline acceptance criteria, one test each, at their stated tolerances.

Each test appends a PASS/FAIL line that is printed in the session summary.
"""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from oracles import arma_garch_filter_loop, arma_garch_forecast_loop, sabr_vol_mp
from smilecast.armagarch import TABLE1, ArmaGarchParams, ArmaGarchSpec, _filter, fit, forecast, simulate
from smilecast.backtest import run_backtest
from smilecast.cli import EXIT_OK, main
from smilecast.data import SERIES_NAMES, SyntheticSpec, generate_synthetic
from smilecast.diagnostics import adf_test, arch_lm_test
from smilecast.errors import SmilecastError
from smilecast.market import bs_call, bs_vega, implied_vol
from smilecast.sabr import SabrParams, sabr_atm_vol, sabr_vol
from smilecast.strategy import Direction, TradeRecord, default_delta_grid, run_strategy

pytestmark = pytest.mark.slow


def record(name, ok, detail):
    ACCEPTANCE_LINES.append((name, bool(ok), detail))
    assert ok, f"{name}: {detail}"


def test_full_backtest_arbitrage_free(full_backtest):
    data, cfg, path, fit_seconds = full_backtest(0)
    start = time.perf_counter()
    report = run_backtest(data, cfg, path)
    seconds = fit_seconds + time.perf_counter() - start
    expected = cfg.n_test * len(cfg.horizons)
    ok = (report.n_predicted_smiles == expected and not report.arbitrage_violations and seconds < 600)
    record("arbitrage-free full backtest", ok,
           f"{report.n_predicted_smiles}/{expected} smiles, {len(report.arbitrage_violations)} violations, "
           f"{len(report.failed_days)} failed days, {seconds:.0f}s (limit 600s)")


def test_implied_vol_roundtrip_grid():
    sigmas = np.linspace(0.01, 2.0, 10)
    moneyness = np.linspace(0.5, 2.0, 10)
    maturities = np.linspace(1 / 52, 2.0, 5)
    f, r = 100.0, 0.01
    failures, worst = [], 0.0
    start = time.perf_counter()
    for s in sigmas:
        for m in moneyness:
            for t in maturities:
                try:
                    err = abs(implied_vol(bs_call(f, m * f, t, s, r), f, m * f, t, r) - s)
                except SmilecastError:
                    err = math.inf
                if not err < 1e-8:
                    # one ulp of price moves vol by ulp / vega: the float64 price cannot pin vol beyond that
                    price = bs_call(f, m * f, t, s, r)
                    vega = bs_vega(f, m * f, t, s, r)
                    failures.append(vega == 0.0 or np.spacing(price) / vega > 1e-8)
                else:
                    worst = max(worst, err)
    seconds = time.perf_counter() - start
    ok = not failures and seconds < 1.0
    record("implied-vol roundtrip", ok,
           f"{500 - len(failures)}/500 cells within 1e-8 (worst {worst:.1e}), {seconds:.2f}s (limit 1s); "
           f"{sum(failures)} of {len(failures)} failing cells have ulp(price)/vega > 1e-8, "
           f"so their float64 price does not determine vol to 1e-8")


def test_sabr_correctness():
    rng = np.random.default_rng(20240601)
    worst_atm = 0.0
    for _ in range(1000):
        p = SabrParams(rng.uniform(0.05, 3.0), rng.uniform(0.01, 2.0), rng.uniform(-0.99, 0.99))
        f, t = rng.uniform(0.5, 200.0), rng.uniform(1 / 52, 5.0)
        worst_atm = max(worst_atm, abs(sabr_vol(p, f, f, t) - sabr_atm_vol(p, f, t)))
    cases = [
        (1.0, 0.5, -0.2, 100.0, 90.0, 1 / 12), (1.0, 0.5, -0.2, 100.0, 110.0, 1 / 12),
        (0.3, 1.2, 0.6, 105.0, 80.0, 0.5), (2.5, 0.05, -0.9, 100.0, 130.0, 2.0), (0.8, 0.9, -0.5, 1.2, 1.1, 1.0),
    ]
    worst_golden = max(abs(sabr_vol(SabrParams(*c[:3]), *c[3:]) - float(sabr_vol_mp(*c))) for c in cases)
    record("SABR ATM limit and golden values", worst_atm < 1e-12 and worst_golden < 1e-10,
           f"ATM max error {worst_atm:.1e} (limit 1e-12), golden max error {worst_golden:.1e} (limit 1e-10)")


def _within_3se(spec, true, result):
    if result.stderrs is None:
        return False
    est, ref = result.params.as_dict(spec), true.as_dict(spec)
    return all(abs(est[k] - ref[k]) <= 3.0 * result.stderrs[k] for k in spec.param_names())


def test_mle_recovery():
    start = time.perf_counter()
    counts = {}
    for name in SERIES_NAMES:
        spec, true = TABLE1[name]
        counts[name] = sum(_within_3se(spec, true, fit(spec, simulate(spec, true, 20_000, seed=seed)))
                           for seed in range(20))
    seconds = time.perf_counter() - start
    ok = all(c >= 19 for c in counts.values()) and seconds < 300
    record("MLE recovery", ok,
           ", ".join(f"{k} {v}/20" for k, v in counts.items()) + f" seeds within 3 se (need 19), "
           f"{seconds:.0f}s (limit 300s)")


def _random_model(rng):
    p, q = int(rng.integers(0, 6)), int(rng.integers(0, 4))
    mean = bool(rng.integers(0, 2)) or p + q == 0
    phi = rng.uniform(-1, 1, p)
    phi *= rng.uniform(0.1, 0.9) / max(1.0, np.abs(phi).sum()) if p else 1.0
    theta = rng.uniform(-0.8, 0.8, q) / max(1, q)
    a = rng.uniform(0.0, 0.3)
    b = rng.uniform(0.0, 0.95 - a)
    params = ArmaGarchParams(mu=rng.normal(0, 0.01) if mean else 0.0, phi=tuple(phi), theta=tuple(theta),
                             omega=rng.uniform(1e-5, 1e-2), a_arch=a, b_garch=b, dof=rng.uniform(2.5, 30.0))
    return ArmaGarchSpec(p, q, mean), params


def test_forecast_oracle_equivalence():
    rng = np.random.default_rng(77)
    worst = 0.0
    for i in range(100):
        spec, params = _random_model(rng)
        x = simulate(spec, params, 400, seed=i)
        s0 = float(np.var(x))
        eps, sig2 = _filter(spec, params.to_vector(spec), x, s0)
        from smilecast.armagarch import ArmaGarchFit

        fitted = ArmaGarchFit(spec, params, None, 0.0, eps, sig2, eps.size)
        got = np.array(forecast(fitted, x, 10))
        e_ref, s_ref = arma_garch_filter_loop(params.mu, params.phi, params.theta, params.omega, params.a_arch,
                                              params.b_garch, list(x), s0)
        ref = np.array(arma_garch_forecast_loop(params.mu, params.phi, params.theta, params.omega,
                                                params.a_arch, params.b_garch, x, e_ref, s_ref, 10))
        worst = max(worst, float(np.max(np.abs(got - ref))))
    record("forecast oracle equivalence", worst < 1e-12, f"100 random specs, horizons 1-10, max diff {worst:.1e}")


def test_backtest_beats_random_walk(full_backtest):
    wins = []
    for seed in range(5):
        data, cfg, path, _ = full_backtest(seed)
        report = run_backtest(data, cfg, path)
        better = int(np.sum(report.model_mae_bp[1] <= report.rw_mae_bp[1]))
        wins.append(better)
    n_ok = sum(w > 20 for w in wins)
    record("backtest sanity vs random walk", n_ok >= 4,
           f"strikes with model <= random walk at h=1 per seed {wins} (majority > 20 of 40); {n_ok}/5 seeds (need 4)")


def test_strategy_invariants(full_backtest):
    data, cfg, path, _ = full_backtest(0)
    grid = default_delta_grid()
    report = run_strategy(data, cfg, np.concatenate((grid, [math.inf])), forecasts=path)
    monotone, zero_at_inf, antisym = True, True, True
    for s in ("strangle", "risk_reversal"):
        freq = [st.frequency for st in report.stats[s][: len(grid)]]
        monotone &= all(a >= b for a, b in zip(freq, freq[1:]))
        last = report.stats[s][-1]
        zero_at_inf &= last.n_trades == 0 and last.avg_return == 0.0
        for t in report.trades[s]:
            flipped = TradeRecord(t.day, t.structure, Direction(-int(t.direction)), t.entry, t.exit, t.notional)
            antisym &= flipped.pnl == -t.pnl and flipped.normalized_return == -t.normalized_return
    n_trades = sum(len(v) for v in report.trades.values())
    record("strategy invariants", monotone and zero_at_inf and antisym,
           f"frequency non-increasing {monotone}, zero trades at infinite delta {zero_at_inf}, "
           f"antisymmetry exact over {n_trades} trades {antisym}")


def test_diagnostics_calibration():
    adf_ok = {name: 0 for name in SERIES_NAMES}
    for seed in range(20):
        data = generate_synthetic(SyntheticSpec(), seed=seed)
        for name in SERIES_NAMES:
            levels = data.series(name)
            adf_ok[name] += (not adf_test(levels).reject) and adf_test(np.diff(levels)).reject
    raw_reject, std_accept = 0, 0
    for seed in range(20):
        spec, params = TABLE1["alpha"]
        x = simulate(spec, params, 5000, seed=100 + seed)
        raw_reject += arch_lm_test(x).reject
        result = fit(spec, x, compute_stderrs=False)
        std_accept += not arch_lm_test(result.standardized_residuals).reject
    ok = all(v > 10 for v in adf_ok.values()) and raw_reject > 10 and std_accept > 10
    record("diagnostics calibration", ok,
           "ADF levels-accept/differences-reject " + ", ".join(f"{k} {v}/20" for k, v in adf_ok.items())
           + f"; ARCH-LM rejects raw {raw_reject}/20, accepts standardized {std_accept}/20 (majority each)")


DETERMINISM_CONFIG = """\
synthetic:
  seed: 11
  n_days: 330
backtest:
  n_fit: 300
  n_test: 25
strategy:
  deltas: [1.0e-6, 1.0e-4, 1.0e-2]
"""


def test_cli_determinism(tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text(DETERMINISM_CONFIG)
    outputs = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["backtest", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
        assert main(["trade", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
        outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    same = outputs[0] == outputs[1] and len(outputs[0]) == 5
    record("CLI determinism", same, f"{len(outputs[0])} files per run, byte-identical {same}")
