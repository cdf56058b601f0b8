import sys
from functools import lru_cache
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from smilecast.backtest import BacktestConfig, rolling_forecasts  # noqa: E402
from smilecast.data import SyntheticSpec, generate_synthetic  # noqa: E402

# (criterion, passed, detail) lines reported at the end of the session
ACCEPTANCE_LINES: list[tuple[str, bool, str]] = []


@lru_cache(maxsize=None)
def full_run(seed: int):
    """Dataset, default config, forecasts and wall time for a full seeded backtest."""
    import time

    data = generate_synthetic(SyntheticSpec(), seed)
    cfg = BacktestConfig()
    start = time.perf_counter()
    path = rolling_forecasts(data, cfg)
    return data, cfg, path, time.perf_counter() - start


@pytest.fixture(scope="session")
def full_backtest():
    return full_run


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
