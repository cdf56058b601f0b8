"""Model-building diagnostics: ACF/PACF, ADF unit-root test, ARCH-LM, AIC/BIC."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import DegenerateInputError, SingularMatrixError, TooShortError

# MacKinnon asymptotic values, constant-only regression
ADF_CRITICAL_VALUES = {"1%": -3.43, "5%": -2.86, "10%": -2.57}


@dataclass(frozen=True)
class TestResult:
    statistic: float
    critical_values: dict[str, float]
    reject: bool
    n_lags: int
    n_obs: int
    pvalue: float | None = None

    def as_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "critical_values": dict(self.critical_values),
            "reject": self.reject,
            "n_lags": self.n_lags,
            "n_obs": self.n_obs,
            "pvalue": self.pvalue,
        }


def _demeaned(series, max_lag: int) -> np.ndarray:
    x = np.asarray(series, dtype=float)
    if max_lag < 0:
        raise ValueError("max_lag must be non-negative")
    if x.size < 2 or max_lag >= x.size / 2:
        raise TooShortError(f"max_lag {max_lag} needs a series longer than {2 * max_lag}")
    x = x - x.mean()
    if not np.any(x):
        raise DegenerateInputError("series is constant; autocorrelation undefined")
    return x


def acf(series, max_lag: int) -> np.ndarray:
    """Sample autocorrelations for lags 0..max_lag (biased denominator)."""
    x = _demeaned(series, max_lag)
    denom = float(np.dot(x, x))
    n = x.size
    return np.array([1.0] + [float(np.dot(x[k:], x[:n - k])) / denom for k in range(1, max_lag + 1)])


def pacf(series, max_lag: int) -> np.ndarray:
    """Partial autocorrelations for lags 0..max_lag by Durbin-Levinson."""
    r = acf(series, max_lag)
    out = np.zeros(max_lag + 1)
    out[0] = 1.0
    phi = np.zeros(0)
    v = 1.0
    for k in range(1, max_lag + 1):
        kk = (r[k] - np.dot(phi, r[k - 1:0:-1])) / v
        phi = np.append(phi - kk * phi[::-1], kk)
        v *= 1.0 - kk * kk
        out[k] = kk
    return out


def _ols(y: np.ndarray, design: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    xtx = design.T @ design
    if np.linalg.cond(xtx) > 1e14:
        raise SingularMatrixError("regression design is singular")
    xtx_inv = np.linalg.inv(xtx)
    beta = xtx_inv @ design.T @ y
    resid = y - design @ beta
    return beta, resid, xtx_inv


def default_adf_lags(n: int) -> int:
    return int(math.floor((n - 1) ** (1.0 / 3.0)))


def adf_test(series, n_lags: int | None = None) -> TestResult:
    """Augmented Dickey-Fuller test with a constant and no trend.

    Regresses dy_t on (1, y_{t-1}, dy_{t-1}, ..., dy_{t-k}); the statistic is
    the t-ratio of the y_{t-1} coefficient.  Rejects a unit root at 5%.
    """
    y = np.asarray(series, dtype=float)
    if n_lags is None:
        n_lags = default_adf_lags(y.size)
    if y.size <= n_lags + 10:
        raise TooShortError(f"ADF with {n_lags} lags needs more than {n_lags + 10} observations")
    dy = np.diff(y)
    k = n_lags
    target = dy[k:]
    m = target.size
    cols = [np.ones(m), y[k:-1]]
    cols += [dy[k - i:dy.size - i] for i in range(1, k + 1)]
    design = np.column_stack(cols)
    beta, resid, xtx_inv = _ols(target, design)
    dof = m - design.shape[1]
    if dof <= 0:
        raise TooShortError("not enough observations for the ADF regression")
    s2 = float(resid @ resid) / dof
    stat = float(beta[1] / math.sqrt(s2 * xtx_inv[1, 1]))
    return TestResult(stat, dict(ADF_CRITICAL_VALUES), stat < ADF_CRITICAL_VALUES["5%"], k, m)


def arch_lm_test(residuals, n_lags: int = 5) -> TestResult:
    """Engle's LM test: T * R^2 of e_t^2 on its lags, against chi2(n_lags)."""
    e = np.asarray(residuals, dtype=float)
    if e.size <= n_lags + 10:
        raise TooShortError(f"ARCH-LM with {n_lags} lags needs more than {n_lags + 10} observations")
    e2 = e * e
    target = e2[n_lags:]
    m = target.size
    design = np.column_stack([np.ones(m)] + [e2[n_lags - i:e2.size - i] for i in range(1, n_lags + 1)])
    _, resid, _ = _ols(target, design)
    centred = target - target.mean()
    tss = float(centred @ centred)
    if tss == 0:
        raise DegenerateInputError("squared residuals are constant")
    r2 = 1.0 - float(resid @ resid) / tss
    stat = m * r2
    crit = {lvl: float(stats.chi2.ppf(1.0 - a, n_lags)) for lvl, a in (("1%", 0.01), ("5%", 0.05), ("10%", 0.10))}
    return TestResult(stat, crit, stat > crit["5%"], n_lags, m, float(stats.chi2.sf(stat, n_lags)))


def information_criteria(loglik: float, k_params: int, n_obs: int) -> tuple[float, float]:
    if n_obs <= 0:
        raise ValueError("n_obs must be positive")
    aic = -2.0 * loglik + 2.0 * k_params
    bic = -2.0 * loglik + k_params * math.log(n_obs)
    return aic, bic
