"""Black-Scholes pricing in forward terms, implied-vol inversion and parity.

All prices are in domestic currency per unit of foreign notional and all
vols are annualised decimals (0.10 is 10%).  Pricing functions broadcast
over numpy arrays.

The normal CDF is ``scipy.special.ndtr`` (Cephes, erf/erfc based with
relative error near double-precision epsilon across the real line).  In-the-money
calls are evaluated as intrinsic value plus the out-of-the-money put so that
the time value keeps its relative precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import ConvergenceError, InvalidInputError, NoSolutionError

IV_LOWER = 1e-6
IV_UPPER = 5.0
IV_MAX_ITER = 200
_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class MarketSnapshot:
    """Spot, continuously-compounded rates and maturity for one day."""

    spot: float
    rate_dom: float
    rate_for: float
    maturity: float = 1.0 / 12.0

    def __post_init__(self) -> None:
        for name in ("spot", "rate_dom", "rate_for", "maturity"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidInputError(f"{name} must be finite")
        if self.spot <= 0:
            raise InvalidInputError("spot must be positive")
        if self.maturity <= 0:
            raise InvalidInputError("maturity must be positive")

    @property
    def forward(self) -> float:
        return forward_rate(self)

    @property
    def discount(self) -> float:
        return math.exp(-self.rate_dom * self.maturity)


@dataclass(frozen=True)
class OptionQuote:
    strike: float
    implied_vol: float

    def __post_init__(self) -> None:
        if not (self.strike > 0 and math.isfinite(self.strike)):
            raise InvalidInputError("strike must be positive")
        if not (self.implied_vol > 0 and math.isfinite(self.implied_vol)):
            raise InvalidInputError("implied_vol must be positive")


def forward_rate(snapshot: MarketSnapshot) -> float:
    """Risk-neutral forward ``S0 * exp((r_d - r_f) T)``."""
    return snapshot.spot * math.exp((snapshot.rate_dom - snapshot.rate_for) * snapshot.maturity)


def _check_positive(**kwargs) -> None:
    for name, value in kwargs.items():
        arr = np.asarray(value, dtype=float)
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            raise InvalidInputError(f"{name} must be positive and finite")


def _undiscounted_call(forward, strike, maturity, vol):
    """Call value before discounting.  Handles vol == 0 as the intrinsic limit."""
    f = np.asarray(forward, dtype=float)
    k = np.asarray(strike, dtype=float)
    sd = np.asarray(vol, dtype=float) * np.sqrt(np.asarray(maturity, dtype=float))
    f, k, sd = np.broadcast_arrays(f, k, sd)
    intrinsic = np.maximum(f - k, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        d1 = np.log(f / k) / sd + 0.5 * sd
        d2 = d1 - sd
        otm_call = f * ndtr(d1) - k * ndtr(d2)
        otm_put = k * ndtr(-d2) - f * ndtr(-d1)
    value = np.where(k >= f, otm_call, (f - k) + otm_put)
    value = np.where(sd > 0, value, intrinsic)
    # keep inside the no-arbitrage band against rounding
    return np.clip(value, intrinsic, f)


def bs_call(forward, strike, maturity, vol, rate_dom=0.0):
    """Discounted Black-Scholes call on the forward.

    Returns a float for scalar inputs and an array otherwise.
    """
    _check_positive(forward=forward, strike=strike, maturity=maturity)
    if np.any(np.asarray(vol, dtype=float) < 0):
        raise InvalidInputError("vol must be non-negative")
    value = np.exp(-np.asarray(rate_dom, dtype=float) * np.asarray(maturity, dtype=float)) * _undiscounted_call(
        forward, strike, maturity, vol
    )
    return float(value) if np.ndim(value) == 0 else value


def bs_vega(forward, strike, maturity, vol, rate_dom=0.0):
    """dC/dsigma = exp(-r_d T) F N'(d+) sqrt(T)."""
    _check_positive(forward=forward, strike=strike, maturity=maturity, vol=vol)
    f = np.asarray(forward, dtype=float)
    t = np.asarray(maturity, dtype=float)
    sd = np.asarray(vol, dtype=float) * np.sqrt(t)
    d1 = np.log(f / np.asarray(strike, dtype=float)) / sd + 0.5 * sd
    value = np.exp(-np.asarray(rate_dom, dtype=float) * t) * f * np.exp(-0.5 * d1 * d1) / _SQRT_2PI * np.sqrt(t)
    return float(value) if np.ndim(value) == 0 else value


def put_from_call(call, forward, strike, maturity, rate_dom=0.0):
    """Put-call parity: P = C - exp(-r_d T) (F - K)."""
    value = np.asarray(call, dtype=float) - np.exp(-np.asarray(rate_dom) * np.asarray(maturity)) * (
        np.asarray(forward, dtype=float) - np.asarray(strike, dtype=float)
    )
    return float(value) if np.ndim(value) == 0 else value


def _otm_value_and_vega(f: float, k: float, t: float, vol: float) -> tuple[float, float]:
    # undiscounted out-of-the-money option value (call if k >= f else put) and its vega
    sd = vol * math.sqrt(t)
    d1 = math.log(f / k) / sd + 0.5 * sd
    d2 = d1 - sd
    if k >= f:
        value = f * ndtr(d1) - k * ndtr(d2)
    else:
        value = k * ndtr(-d2) - f * ndtr(-d1)
    vega = f * math.exp(-0.5 * d1 * d1) / _SQRT_2PI * math.sqrt(t)
    return float(value), vega


def implied_vol(price: float, forward: float, strike: float, maturity: float, rate_dom: float = 0.0) -> float:
    """Invert the Black-Scholes call price for its volatility.

    Works on the out-of-the-money side (parity-converted put for ``K < F``)
    with a bracketed Newton iteration on the log of the option value; any
    step leaving the current bracket is replaced by bisection.

    Raises
    ------
    NoSolutionError
        ``price`` is not strictly between the discounted intrinsic value and
        the discounted forward.
    ConvergenceError
        The iteration cap was reached before the price tolerance was met.
    """
    _check_positive(forward=forward, strike=strike, maturity=maturity)
    if not math.isfinite(price):
        raise InvalidInputError("price must be finite")
    f, k, t = float(forward), float(strike), float(maturity)
    df = math.exp(-rate_dom * t)
    if price <= df * max(f - k, 0.0):
        raise NoSolutionError(f"price {price!r} is at or below the intrinsic bound")
    if price >= df * f:
        raise NoSolutionError(f"price {price!r} is at or above the discounted forward")

    target = price / df
    if k < f:
        target -= f - k
    if target <= 0.0:
        raise NoSolutionError("time value lost to rounding; price indistinguishable from intrinsic")
    log_target = math.log(target)

    def objective(vol: float) -> tuple[float, float]:
        value, vega = _otm_value_and_vega(f, k, t, vol)
        if value <= 0.0:
            return -math.inf, 0.0
        return math.log(value) - log_target, vega / value

    lo, hi = IV_LOWER, IV_UPPER
    while objective(hi)[0] < 0.0:
        hi *= 2.0
        if hi > 1e3:
            raise NoSolutionError("price requires an implausibly large volatility")
    while objective(lo)[0] > 0.0:
        lo *= 0.5
        if lo < 1e-300:
            raise NoSolutionError("price requires a vanishing volatility")

    # start at the vega-maximising vol; Newton is well behaved from there
    vol = math.sqrt(2.0 * abs(math.log(f / k)) / t)
    if not lo < vol < hi:
        vol = 0.5 * (lo + hi) if hi <= 1.0 else min(0.2, 0.5 * (lo + hi))
    for _ in range(IV_MAX_ITER):
        fval, slope = objective(vol)
        if fval == 0.0:
            break
        if fval < 0.0:
            lo = vol
        else:
            hi = vol
        step_ok = slope > 0.0 and math.isfinite(fval)
        new = vol - fval / slope if step_ok else 0.5 * (lo + hi)
        if not lo < new < hi:
            new = 0.5 * (lo + hi)
        if abs(new - vol) <= 4e-16 * vol or hi - lo <= 4e-16 * hi:
            vol = new
            break
        vol = new
    else:
        raise ConvergenceError("implied vol iteration cap reached")

    achieved = bs_call(f, k, t, vol, rate_dom)
    if abs(achieved - price) > max(1e-12, 1e-10 * abs(price)):
        raise ConvergenceError(f"implied vol did not reprice: error {achieved - price:.3e}")
    return vol
