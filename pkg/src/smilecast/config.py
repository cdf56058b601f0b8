"""Run configuration loaded from YAML (or JSON, a YAML subset).

Example::

    synthetic:
      seed: 7
      n_days: 1363
    models:
      alpha: {p: 1, q: 1, mean: true}
    backtest:
      n_fit: 1000
      n_test: 360
      refit_every: 1
    strategy:
      deltas: [1.0e-6, 1.0e-5, 1.0e-4]
    output:
      dir: out
      format: both
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .armagarch import DEFAULT_SPECS, TABLE1, ArmaGarchParams, ArmaGarchSpec
from .backtest import BacktestConfig
from .data import SERIES_NAMES, Dataset, SyntheticSpec, generate_synthetic, load_dataset
from .errors import InvalidInputError
from .strategy import default_delta_grid

OUTPUT_FORMATS = ("csv", "json", "both")


@dataclass
class RunConfig:
    data_path: Path | None = None
    synthetic: SyntheticSpec | None = None
    seed: int | None = None
    backtest: BacktestConfig = field(default_factory=BacktestConfig)
    deltas: np.ndarray = field(default_factory=default_delta_grid)
    output_dir: Path = Path("out")
    output_format: str = "both"
    maturity: float = 1.0 / 12.0

    def __post_init__(self) -> None:
        if (self.data_path is None) == (self.synthetic is None):
            raise InvalidInputError("config needs exactly one of 'data' or 'synthetic'")
        if self.synthetic is not None and self.seed is None:
            raise InvalidInputError("synthetic data needs an explicit seed")
        if self.output_format not in OUTPUT_FORMATS:
            raise InvalidInputError(f"output format must be one of {OUTPUT_FORMATS}")

    def dataset(self) -> Dataset:
        if self.data_path is not None:
            return load_dataset(self.data_path, maturity=self.maturity)
        return generate_synthetic(self.synthetic, self.seed)


def _spec_from(entry: dict, base: ArmaGarchSpec) -> ArmaGarchSpec:
    return ArmaGarchSpec(
        p=int(entry.get("p", base.p)),
        q=int(entry.get("q", base.q)),
        include_mean=bool(entry.get("mean", base.include_mean)),
    )


def _params_from(entry: dict, base: ArmaGarchParams) -> ArmaGarchParams:
    return ArmaGarchParams(
        mu=float(entry.get("mu", base.mu)),
        phi=tuple(entry.get("phi", base.phi)),
        theta=tuple(entry.get("theta", base.theta)),
        omega=float(entry.get("omega", base.omega)),
        a_arch=float(entry.get("a_arch", base.a_arch)),
        b_garch=float(entry.get("b_garch", base.b_garch)),
        dof=float(entry.get("dof", base.dof)),
    )


def parse_config(raw: dict, base_dir: Path | None = None) -> RunConfig:
    raw = dict(raw or {})
    unknown = set(raw) - {"data", "synthetic", "seed", "maturity", "models", "backtest", "strategy", "output"}
    if unknown:
        raise InvalidInputError(f"unknown config keys: {sorted(unknown)}")
    base_dir = base_dir or Path.cwd()

    model_entries = raw.get("models") or {}
    if set(model_entries) - set(SERIES_NAMES):
        raise InvalidInputError(f"models must be among {SERIES_NAMES}")
    specs = {name: _spec_from(model_entries.get(name, {}), DEFAULT_SPECS[name]) for name in SERIES_NAMES}

    synthetic = None
    seed = raw.get("seed")
    maturity = float(raw.get("maturity", 1.0 / 12.0))
    if raw.get("synthetic") is not None:
        syn = dict(raw["synthetic"])
        seed = syn.pop("seed", seed)
        gen_models = {}
        for name in SERIES_NAMES:
            entry = (syn.get("models") or {}).get(name, {})
            spec0, params0 = TABLE1[name]
            gen_spec = _spec_from(entry, spec0)
            gen_params = _params_from(entry.get("params", {}), params0) if gen_spec == spec0 or "params" in entry \
                else None
            if gen_params is None:
                raise InvalidInputError(f"synthetic model {name!r} with custom orders needs 'params'")
            gen_models[name] = (gen_spec, gen_params)
        syn.pop("models", None)
        if "initial" in syn:
            syn["initial"] = tuple(float(v) for v in syn["initial"])
        syn.setdefault("maturity", maturity)
        try:
            synthetic = SyntheticSpec(models=gen_models, **syn)
        except TypeError as exc:
            raise InvalidInputError(f"bad synthetic section: {exc}") from None

    data_path = raw.get("data")
    if data_path is not None:
        data_path = Path(data_path)
        if not data_path.is_absolute():
            data_path = base_dir / data_path

    bt = dict(raw.get("backtest") or {})
    try:
        backtest = BacktestConfig(specs=specs, **bt)
    except TypeError as exc:
        raise InvalidInputError(f"bad backtest section: {exc}") from None

    strat = raw.get("strategy") or {}
    if "deltas" in strat:
        deltas = np.asarray(strat["deltas"], dtype=float)
    elif {"delta_min", "delta_max"} <= set(strat):
        deltas = np.logspace(np.log10(strat["delta_min"]), np.log10(strat["delta_max"]), int(strat.get("n_deltas", 20)))
    else:
        deltas = default_delta_grid()

    out = raw.get("output") or {}
    out_dir = Path(out.get("dir", "out"))
    return RunConfig(
        data_path=data_path,
        synthetic=synthetic,
        seed=None if seed is None else int(seed),
        backtest=backtest,
        deltas=deltas,
        output_dir=out_dir,
        output_format=str(out.get("format", "both")),
        maturity=synthetic.maturity if synthetic is not None else maturity,
    )


def read_config(path) -> dict:
    """Raw mapping from a YAML config file."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except FileNotFoundError:
        raise InvalidInputError(f"{path}: no such config file") from None
    except yaml.YAMLError as exc:
        raise InvalidInputError(f"{path}: cannot parse config: {exc}") from None
    if raw is not None and not isinstance(raw, dict):
        raise InvalidInputError(f"{path}: config must be a mapping")
    return dict(raw or {})


def load_config(path, seed: int | None = None) -> RunConfig:
    """Parse a config file; ``seed`` overrides any seed it contains."""
    raw = read_config(path)
    if seed is not None:
        raw["seed"] = seed
        if isinstance(raw.get("synthetic"), dict):
            raw["synthetic"] = {k: v for k, v in raw["synthetic"].items() if k != "seed"}
    return parse_config(raw, base_dir=Path(path).parent)
