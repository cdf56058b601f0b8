"""Forecasting FX implied-volatility smiles through SABR parameter dynamics."""

from .armagarch import (
    TABLE1,
    ArmaGarchFit,
    ArmaGarchParams,
    ArmaGarchSpec,
    fit,
    forecast,
    log_likelihood,
    simulate,
)
from .backtest import BacktestConfig, BacktestReport, rolling_forecasts, run_backtest
from .config import RunConfig, load_config
from .data import Dataset, SyntheticSpec, generate_synthetic, load_dataset, write_dataset
from .diagnostics import TestResult, acf, adf_test, arch_lm_test, information_criteria, pacf
from .errors import (
    ConvergenceError,
    DataError,
    InvalidInputError,
    NoSolutionError,
    NumericalError,
    SmilecastError,
)
from .market import MarketSnapshot, OptionQuote, bs_call, bs_vega, forward_rate, implied_vol, put_from_call
from .report import write_report
from .sabr import (
    ArbitrageReport,
    SabrParams,
    SmileGrid,
    build_smile,
    calibrate,
    check_static_arbitrage,
    sabr_atm_vol,
    sabr_vol,
)
from .strategy import StrategyReport, StructureQuote, TradeRecord, generate_signal, run_strategy, structure_prices
from .transform import TransformedParams, from_unconstrained, to_unconstrained

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
