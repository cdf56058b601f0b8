"""Threshold trading of strangles and risk-reversals on forecast smiles.

Each out-of-sample day the engine prices the 90%/110% strangle and
risk-reversal off today's smile and off the one-day-ahead forecast smile,
trades when the forecast leg returns clear ``delta``, and marks the
position at the next day's constant-maturity price.  The two structures are
run as independent books.  P&L is gross of transaction costs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .backtest import BacktestConfig, ForecastPath, rolling_forecasts
from .data import Dataset
from .errors import InvalidInputError
from .market import put_from_call
from .sabr import SmileGrid, build_smile

STRUCTURES = ("strangle", "risk_reversal")
STRIKE_LOW = 0.9
STRIKE_HIGH = 1.1


class Direction(IntEnum):
    SHORT = -1
    NONE = 0
    LONG = 1


@dataclass(frozen=True)
class StructureQuote:
    k_minus: float
    k_plus: float
    call_plus: float
    put_minus: float

    @property
    def strangle(self) -> float:
        return self.call_plus + self.put_minus

    @property
    def risk_reversal(self) -> float:
        return self.call_plus - self.put_minus

    def price(self, structure: str) -> float:
        return getattr(self, structure)

    @property
    def gross(self) -> float:
        return abs(self.call_plus) + abs(self.put_minus)


@dataclass(frozen=True)
class TradeRecord:
    day: int
    structure: str
    direction: Direction
    entry: float
    exit: float
    notional: float

    @property
    def pnl(self) -> float:
        return int(self.direction) * (self.exit - self.entry)

    @property
    def normalized_return(self) -> float:
        return self.pnl / self.notional if self.direction else 0.0


def default_delta_grid() -> np.ndarray:
    return np.logspace(-6, -3, 20)


def _find(strikes: np.ndarray, target: float) -> int:
    hits = np.nonzero(np.isclose(strikes, target, rtol=1e-12, atol=0.0))[0]
    if hits.size == 0:
        raise InvalidInputError(f"grid has no strike at {target!r}")
    return int(hits[0])


def structure_prices(grid: SmileGrid, k_minus: float | None = None, k_plus: float | None = None) -> StructureQuote:
    """Call at K+ and parity put at K- read off ``grid``.

    Strikes default to 90% / 110% of the grid's spot.
    """
    spot = grid.snapshot.spot
    k_minus = STRIKE_LOW * spot if k_minus is None else k_minus
    k_plus = STRIKE_HIGH * spot if k_plus is None else k_plus
    i_minus, i_plus = _find(grid.strikes, k_minus), _find(grid.strikes, k_plus)
    snap = grid.snapshot
    put = put_from_call(grid.calls[i_minus], grid.forward, grid.strikes[i_minus], snap.maturity, snap.rate_dom)
    # parity can leave -ulp noise on a deep out-of-the-money put
    return StructureQuote(float(grid.strikes[i_minus]), float(grid.strikes[i_plus]),
                          float(grid.calls[i_plus]), max(float(put), 0.0))


def generate_signal(today: StructureQuote, predicted: StructureQuote, delta: float) -> dict[str, Direction]:
    """Direction per structure from the forecast relative leg moves."""
    if not delta > 0:
        raise InvalidInputError("delta must be positive")
    if today.call_plus <= 0 or today.put_minus <= 0:
        raise InvalidInputError("entry leg prices must be positive")
    rc = (predicted.call_plus - today.call_plus) / today.call_plus
    rp = (predicted.put_minus - today.put_minus) / today.put_minus

    if min(rc, rp) > delta:
        strangle = Direction.LONG
    elif max(rc, rp) < -delta:
        strangle = Direction.SHORT
    else:
        strangle = Direction.NONE

    if rc > delta and rp < -delta:
        rr = Direction.LONG
    elif rc < -delta and rp > delta:
        rr = Direction.SHORT
    else:
        rr = Direction.NONE
    return {"strangle": strangle, "risk_reversal": rr}


@dataclass
class StrategyStats:
    delta: float
    avg_return: float
    std_return: float
    standardized: float
    frequency: float
    n_trades: int

    def as_row(self) -> dict:
        return {
            "delta": self.delta, "avg_return": self.avg_return, "std_return": self.std_return,
            "standardized": self.standardized, "frequency": self.frequency, "n_trades": self.n_trades,
        }


@dataclass
class StrategyReport:
    deltas: np.ndarray
    stats: dict[str, list[StrategyStats]]
    n_days: int
    untradeable_days: list[int]
    failed_days: list[int]
    trades: dict[str, list[TradeRecord]] = field(default_factory=dict, repr=False)

    def rows(self, structure: str) -> list[dict]:
        return [s.as_row() for s in self.stats[structure]]


@dataclass(frozen=True)
class _Day:
    day: int
    today: StructureQuote
    predicted: StructureQuote
    exit: StructureQuote


def _stats(delta: float, returns: np.ndarray, n_trades: int) -> StrategyStats:
    n = returns.size
    mean = float(returns.mean()) if n else 0.0
    std = float(returns.std()) if n else 0.0
    return StrategyStats(
        delta=float(delta), avg_return=mean, std_return=std,
        standardized=mean / std if std > 0 else 0.0,
        frequency=n_trades / n if n else 0.0, n_trades=n_trades,
    )


def run_strategy(
    data: Dataset,
    cfg: BacktestConfig,
    delta_grid=None,
    forecasts: ForecastPath | None = None,
) -> StrategyReport:
    """Simulate both books over the out-of-sample range for every delta.

    Daily returns are P&L over the entry gross premium (call + put); days
    without a signal, or whose entry legs price to zero, return 0.
    """
    deltas = default_delta_grid() if delta_grid is None else np.asarray(delta_grid, dtype=float)
    if np.any(~(deltas > 0)):
        raise InvalidInputError("deltas must be positive")
    if 1 not in cfg.horizons:
        cfg = BacktestConfig(**{**cfg.__dict__, "horizons": (1, *cfg.horizons)})
    if forecasts is None:
        forecasts = rolling_forecasts(data, cfg)

    days: list[_Day] = []
    untradeable = []
    for o in forecasts.origins:
        if o not in forecasts.predicted:
            continue
        snap = data.snapshots[o]
        strikes = np.array([STRIKE_LOW * snap.spot, STRIKE_HIGH * snap.spot])
        today = structure_prices(build_smile(data.params[o], snap, strikes))
        pred = structure_prices(build_smile(forecasts.predicted[o][1], snap, strikes))
        nxt = build_smile(data.params[o + 1], data.snapshots[o + 1], strikes)
        exit_ = structure_prices(nxt, strikes[0], strikes[1])
        if today.call_plus <= 0 or today.put_minus <= 0:
            untradeable.append(o)
        days.append(_Day(o, today, pred, exit_))

    stats: dict[str, list[StrategyStats]] = {s: [] for s in STRUCTURES}
    trades: dict[str, list[TradeRecord]] = {s: [] for s in STRUCTURES}
    skip = set(untradeable)
    for delta in deltas:
        returns = {s: np.zeros(len(days)) for s in STRUCTURES}
        counts = {s: 0 for s in STRUCTURES}
        for i, d in enumerate(days):
            if d.day in skip:
                continue
            signal = generate_signal(d.today, d.predicted, float(delta))
            for s in STRUCTURES:
                if signal[s] is Direction.NONE:
                    continue
                rec = TradeRecord(d.day, s, signal[s], d.today.price(s), d.exit.price(s), d.today.gross)
                returns[s][i] = rec.normalized_return
                counts[s] += 1
                if math.isclose(delta, deltas[0]):  # trade log kept for the most active threshold only
                    trades[s].append(rec)
        for s in STRUCTURES:
            stats[s].append(_stats(delta, returns[s], counts[s]))

    return StrategyReport(deltas, stats, len(days), untradeable, list(forecasts.failed), trades)
