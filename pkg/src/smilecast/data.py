"""Dataset container, CSV interchange and the seeded synthetic generator."""

from __future__ import annotations

import csv
import datetime as dt
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .armagarch import TABLE1, ArmaGarchParams, ArmaGarchSpec, simulate
from .errors import DataError, InvalidInputError
from .market import MarketSnapshot
from .sabr import SabrParams
from .transform import series_from_unconstrained, to_unconstrained

DATASET_HEADER = ["date", "alpha", "nu", "rho", "spot", "rate_dom", "rate_for"]
SERIES_NAMES = ("alpha", "nu", "rho")
DEFAULT_MATURITY = 1.0 / 12.0


@dataclass
class Dataset:
    dates: list[str]
    params: list[SabrParams]
    snapshots: list[MarketSnapshot]

    def __post_init__(self) -> None:
        if not (len(self.dates) == len(self.params) == len(self.snapshots)):
            raise InvalidInputError("dates, params and snapshots must have equal length")

    def __len__(self) -> int:
        return len(self.params)

    def param_array(self) -> np.ndarray:
        """(n, 3) array of (alpha, nu, rho)."""
        return np.array([p.as_tuple() for p in self.params], dtype=float)

    def transformed(self) -> np.ndarray:
        """(n, 3) array of (log alpha, log nu, log-odds rho)."""
        return np.array([tuple(to_unconstrained(p)) for p in self.params], dtype=float)

    def series(self, name: str) -> np.ndarray:
        """Transformed level series for ``alpha``, ``nu`` or ``rho``."""
        return self.transformed()[:, SERIES_NAMES.index(name)]

    def slice(self, stop: int) -> "Dataset":
        return Dataset(self.dates[:stop], self.params[:stop], self.snapshots[:stop])


def _atomic_write(path: Path, write) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            write(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_dataset(data: Dataset, path) -> None:
    def write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DATASET_HEADER)
        for d, p, s in zip(data.dates, data.params, data.snapshots):
            w.writerow([d, *(repr(float(v)) for v in (p.alpha, p.nu, p.rho, s.spot, s.rate_dom, s.rate_for))])

    _atomic_write(Path(path), write)


def load_dataset(path, maturity: float = DEFAULT_MATURITY) -> Dataset:
    """Parse and validate a dataset CSV.  Fails on the first bad row."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: no such file")
    dates, params, snaps = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != DATASET_HEADER:
            raise DataError(f"{path}:1: header must be {','.join(DATASET_HEADER)}")
        prev_date = None
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(DATASET_HEADER):
                raise DataError(f"{path}:{lineno}: expected {len(DATASET_HEADER)} fields, got {len(row)}")
            values = {}
            for name, raw in zip(DATASET_HEADER[1:], row[1:]):
                try:
                    values[name] = float(raw)
                except ValueError:
                    raise DataError(f"{path}:{lineno}: field {name!r}: cannot parse {raw!r}") from None
            date = row[0].strip()
            try:
                day = dt.date.fromisoformat(date)
            except ValueError:
                raise DataError(f"{path}:{lineno}: field 'date': not an ISO date: {date!r}") from None
            if prev_date is not None and day <= prev_date:
                raise DataError(f"{path}:{lineno}: dates out of order ({date} after {prev_date.isoformat()})")
            prev_date = day
            try:
                p = SabrParams(values["alpha"], values["nu"], values["rho"])
            except InvalidInputError as exc:
                field_name = str(exc).split()[0]
                raise DataError(f"{path}:{lineno}: field {field_name!r}: {exc}") from None
            try:
                s = MarketSnapshot(values["spot"], values["rate_dom"], values["rate_for"], maturity)
            except InvalidInputError as exc:
                field_name = str(exc).split()[0]
                raise DataError(f"{path}:{lineno}: field {field_name!r}: {exc}") from None
            dates.append(date)
            params.append(p)
            snaps.append(s)
    return Dataset(dates, params, snaps)


@dataclass
class SyntheticSpec:
    """Generator settings.  Defaults reproduce the Table 1 USDJPY models.

    ``n_days`` defaults to 1363 so that a 1000-day fit window, 360 test days
    and three-day horizons fit inside the sample.
    """

    n_days: int = 1363
    models: dict[str, tuple[ArmaGarchSpec, ArmaGarchParams]] = field(default_factory=lambda: dict(TABLE1))
    initial: tuple[float, float, float] = (1.0, 0.6, -0.2)
    spot0: float = 100.0
    spot_vol: float = 0.10
    rate_dom: float = 0.005
    rate_for: float = 0.02
    maturity: float = DEFAULT_MATURITY
    start_date: str = "2006-09-29"

    def __post_init__(self) -> None:
        if self.n_days < 2:
            raise InvalidInputError("n_days must be at least 2")
        if set(self.models) != set(SERIES_NAMES):
            raise InvalidInputError(f"models must cover {SERIES_NAMES}")
        for spec, params in self.models.values():
            params.check_spec(spec)
        SabrParams(*self.initial)
        MarketSnapshot(self.spot0, self.rate_dom, self.rate_for, self.maturity)
        if not self.spot_vol >= 0:
            raise InvalidInputError("spot_vol must be non-negative")


def business_days(start: str, n: int) -> list[str]:
    day = dt.date.fromisoformat(start)
    out = []
    while len(out) < n:
        if day.weekday() < 5:
            out.append(day.isoformat())
        day += dt.timedelta(days=1)
    return out


def generate_synthetic(spec: SyntheticSpec, seed: int) -> Dataset:
    """Simulate differenced transformed parameters, cumulate, map back."""
    seeds = np.random.SeedSequence(int(seed)).generate_state(4)
    levels0 = to_unconstrained(SabrParams(*spec.initial))
    coords = np.empty((spec.n_days, 3))
    for col, name in enumerate(SERIES_NAMES):
        model_spec, model_params = spec.models[name]
        diffs = simulate(model_spec, model_params, spec.n_days - 1, int(seeds[col]))
        coords[0, col] = levels0[col]
        coords[1:, col] = levels0[col] + np.cumsum(diffs)
    alpha, nu, rho = series_from_unconstrained(coords)

    rng = np.random.default_rng(int(seeds[3]))
    daily = spec.spot_vol / math.sqrt(252.0)
    log_spot = math.log(spec.spot0) + np.concatenate(([0.0], np.cumsum(daily * rng.standard_normal(spec.n_days - 1))))
    spots = np.exp(log_spot)

    params = [SabrParams(float(a), float(n), float(r)) for a, n, r in zip(alpha, nu, rho)]
    snaps = [MarketSnapshot(float(s), spec.rate_dom, spec.rate_for, spec.maturity) for s in spots]
    return Dataset(business_days(spec.start_date, spec.n_days), params, snaps)
