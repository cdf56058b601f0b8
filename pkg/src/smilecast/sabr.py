"""SABR smile with the CEV exponent fixed at 1/2.

Provides the Hagan implied-vol approximation, smile grids over strikes,
static-arbitrage checks on the resulting call curve, and least-squares
calibration to quoted vols.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .errors import ConvergenceError, DegenerateInputError, InvalidInputError
from .market import MarketSnapshot, OptionQuote, bs_call, forward_rate

# below this |z| the ratio z / x(z) is taken from its Taylor series
Z_SERIES_THRESHOLD = 1e-6

# coefficients of the beta = 1/2 expansion
C_LOG2 = 1.0 / (4.0 * 24.0)          # log^2(F/K) and alpha^2 / sqrt(FK) terms
C_LOG4 = 1.0 / (16.0 * 1920.0)       # log^4(F/K) term
C_SKEW = 1.0 / 4.0                   # multiplies (rho nu alpha / 2) / (FK)^(1/4)
C_CURV = 1.0 / 24.0                  # multiplies (2 - 3 rho^2) nu^2

CALIBRATION_MAX_ITER = 500
CALIBRATION_FTOL = 1e-14


@dataclass(frozen=True)
class SabrParams:
    """Risk-neutral triplet (alpha, nu, rho).

    ``alpha`` is in sqrt(price) vol units because beta is 1/2; the
    Black-equivalent ATM vol is roughly ``alpha / sqrt(F)``.
    """

    alpha: float
    nu: float
    rho: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise InvalidInputError(f"alpha must be positive, got {self.alpha!r}")
        if not (math.isfinite(self.nu) and self.nu > 0):
            raise InvalidInputError(f"nu must be positive, got {self.nu!r}")
        if not (math.isfinite(self.rho) and -1.0 < self.rho < 1.0):
            raise InvalidInputError(f"rho must lie in (-1, 1), got {self.rho!r}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.alpha, self.nu, self.rho)


@dataclass(frozen=True)
class SmileGrid:
    snapshot: MarketSnapshot
    strikes: np.ndarray
    vols: np.ndarray
    calls: np.ndarray

    def __post_init__(self) -> None:
        n = len(self.strikes)
        if len(self.vols) != n or len(self.calls) != n:
            raise InvalidInputError("strikes, vols and calls must have equal length")
        if n > 1 and np.any(np.diff(self.strikes) <= 0):
            raise InvalidInputError("strikes must be strictly increasing")

    @property
    def forward(self) -> float:
        return forward_rate(self.snapshot)


@dataclass
class ArbitrageReport:
    monotonicity_violations: list[tuple[int, int]] = field(default_factory=list)
    convexity_violations: list[tuple[int, int, int]] = field(default_factory=list)
    max_violation: float = 0.0

    @property
    def clean(self) -> bool:
        return not self.monotonicity_violations and not self.convexity_violations


def _z_over_x(z: np.ndarray, rho: float) -> np.ndarray:
    small = np.abs(z) < Z_SERIES_THRESHOLD
    series = 1.0 - 0.5 * rho * z + (2.0 - 3.0 * rho * rho) * z * z / 12.0
    zz = np.where(small, 1.0, z)  # placeholder keeps the direct branch finite
    root = np.sqrt(1.0 - 2.0 * rho * zz + zz * zz)
    root_m1 = zz * (zz - 2.0 * rho) / (root + 1.0)  # sqrt(D) - 1 without cancellation
    # sqrt(D) + z - rho == (1 - rho^2) / (sqrt(D) - z + rho); log1p of whichever side avoids cancellation
    x = np.where(
        zz - rho >= 0.0,
        np.log1p((root_m1 + zz) / (1.0 - rho)),
        -np.log1p((root_m1 - zz) / (1.0 + rho)),
    )
    return np.where(small, series, zz / x)


def sabr_vol(params: SabrParams, forward, strike, maturity: float):
    """Black implied vol from the beta = 1/2 SABR expansion.

    Broadcasts over ``strike`` (and ``forward``); returns a float for scalar
    input.
    """
    if not isinstance(params, SabrParams):
        raise InvalidInputError("params must be SabrParams")
    f = np.asarray(forward, dtype=float)
    k = np.asarray(strike, dtype=float)
    if np.any(~np.isfinite(f)) or np.any(f <= 0) or np.any(~np.isfinite(k)) or np.any(k <= 0):
        raise InvalidInputError("forward and strike must be positive")
    if not (maturity > 0 and math.isfinite(maturity)):
        raise InvalidInputError("maturity must be positive")
    alpha, nu, rho = params.alpha, params.nu, params.rho

    fk = f * k
    fk_quarter = fk ** 0.25
    log_fk = np.log(f / k)
    log2 = log_fk * log_fk
    z = (nu / alpha) * fk_quarter * log_fk

    numer = 1.0 + maturity * (
        C_LOG2 * alpha * alpha / np.sqrt(fk)
        + C_SKEW * (rho * nu * alpha / 2.0) / fk_quarter
        + C_CURV * (2.0 - 3.0 * rho * rho) * nu * nu
    )
    denom = fk_quarter * (1.0 + C_LOG2 * log2 + C_LOG4 * log2 * log2)
    vol = alpha * numer / denom * _z_over_x(z, rho)
    return float(vol) if np.ndim(vol) == 0 else vol


def sabr_atm_vol(params: SabrParams, forward: float, maturity: float) -> float:
    """Closed form at K = F."""
    a, n, r = params.as_tuple()
    return a * (1.0 + maturity * (a * a / (96.0 * forward) + r * n * a / (8.0 * math.sqrt(forward))
                                  + (2.0 - 3.0 * r * r) * n * n / 24.0)) / math.sqrt(forward)


def build_smile(params: SabrParams, snapshot: MarketSnapshot, strikes) -> SmileGrid:
    k = np.atleast_1d(np.asarray(strikes, dtype=float))
    if np.any(k <= 0):
        raise InvalidInputError("strikes must be positive")
    if k.size > 1 and np.any(np.diff(k) <= 0):
        raise InvalidInputError("strikes must be strictly increasing")
    fwd = forward_rate(snapshot)
    vols = np.atleast_1d(sabr_vol(params, fwd, k, snapshot.maturity))
    calls = np.atleast_1d(bs_call(fwd, k, snapshot.maturity, vols, snapshot.rate_dom))
    return SmileGrid(snapshot=snapshot, strikes=k, vols=vols, calls=calls)


def strike_grid(spot: float, band: tuple[float, float] = (0.9, 1.1), n: int = 40) -> np.ndarray:
    """``n`` equally spaced strikes between ``band[0]*spot`` and ``band[1]*spot``."""
    return np.linspace(band[0] * spot, band[1] * spot, n)


def check_static_arbitrage(grid: SmileGrid, tol: float | None = None) -> ArbitrageReport:
    """Flag call prices that increase in strike or are locally concave.

    Convexity is tested on each consecutive triple as the chord value minus
    the middle price (half the second difference on a uniform grid), so
    violations are in price units.  The default tolerance is
    ``1e-10 * forward``.
    """
    calls = np.asarray(grid.calls, dtype=float)
    strikes = np.asarray(grid.strikes, dtype=float)
    if len(calls) < 3:
        raise DegenerateInputError("convexity check needs at least three strikes")
    if tol is None:
        tol = 1e-10 * grid.forward

    report = ArbitrageReport()
    worst = 0.0
    rises = np.diff(calls)
    for i in np.nonzero(rises > tol)[0]:
        report.monotonicity_violations.append((int(i), int(i) + 1))
        worst = max(worst, float(rises[i]))

    k0, k1, k2 = strikes[:-2], strikes[1:-1], strikes[2:]
    w = (k2 - k1) / (k2 - k0)
    chord_gap = w * calls[:-2] + (1.0 - w) * calls[2:] - calls[1:-1]
    for i in np.nonzero(chord_gap < -tol)[0]:
        report.convexity_violations.append((int(i), int(i) + 1, int(i) + 2))
        worst = max(worst, float(-chord_gap[i]))

    report.max_violation = worst
    return report


def _to_coords(p: SabrParams) -> np.ndarray:
    from .transform import to_unconstrained

    t = to_unconstrained(p)
    return np.array([t.a, t.n, t.r])


def _from_coords(x: np.ndarray) -> SabrParams:
    from .transform import TransformedParams, from_unconstrained

    return from_unconstrained(TransformedParams(float(x[0]), float(x[1]), float(x[2])))


def calibrate(quotes: list[OptionQuote], snapshot: MarketSnapshot, initial: SabrParams) -> SabrParams:
    """Fit (alpha, nu, rho) to quoted vols by unweighted least squares.

    The search runs in the unconstrained log / log-odds coordinates, so any
    iterate maps to valid parameters.  Levenberg-Marquardt, capped at
    ``CALIBRATION_MAX_ITER`` iterations.  If the optimum does not improve
    on ``initial`` the initial parameters are returned unchanged.
    """
    if len(quotes) < 3:
        raise DegenerateInputError("calibration needs at least three quotes")
    strikes = np.array([q.strike for q in quotes], dtype=float)
    vols = np.array([q.implied_vol for q in quotes], dtype=float)
    if len(np.unique(strikes)) != len(strikes):
        raise DegenerateInputError("quote strikes must be distinct")
    fwd = forward_rate(snapshot)
    T = snapshot.maturity

    def residuals(x: np.ndarray) -> np.ndarray:
        if not np.all(np.isfinite(x)) or np.any(np.abs(x) > 700):
            return np.full(len(strikes), 1e6)
        try:
            p = _from_coords(x)
        except InvalidInputError:
            return np.full(len(strikes), 1e6)
        return np.atleast_1d(sabr_vol(p, fwd, strikes, T)) - vols

    x0 = _to_coords(initial)
    start_obj = float(np.sum(residuals(x0) ** 2))
    res = least_squares(
        residuals, x0, method="lm", xtol=1e-15, ftol=CALIBRATION_FTOL, gtol=1e-15,
        max_nfev=CALIBRATION_MAX_ITER * (len(x0) + 1),
    )
    end_obj = float(np.sum(res.fun ** 2))
    if res.status == 0 and end_obj > CALIBRATION_FTOL:
        raise ConvergenceError("SABR calibration hit its iteration cap")
    if not end_obj < start_obj:
        return initial
    return _from_coords(res.x)


def calibration_objective(params: SabrParams, quotes: list[OptionQuote], snapshot: MarketSnapshot) -> float:
    strikes = np.array([q.strike for q in quotes], dtype=float)
    vols = np.array([q.implied_vol for q in quotes], dtype=float)
    model = np.atleast_1d(sabr_vol(params, forward_rate(snapshot), strikes, snapshot.maturity))
    return float(np.sum((model - vols) ** 2))
