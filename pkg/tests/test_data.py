import numpy as np
import pytest

from smilecast.armagarch import TABLE1
from smilecast.config import load_config, parse_config
from smilecast.data import (
    DATASET_HEADER,
    Dataset,
    SyntheticSpec,
    generate_synthetic,
    load_dataset,
    write_dataset,
)
from smilecast.diagnostics import adf_test
from smilecast.errors import DataError, InvalidInputError
from smilecast.market import MarketSnapshot
from smilecast.sabr import SabrParams

HEADER = ",".join(DATASET_HEADER)


def _write(tmp_path, rows, header=HEADER):
    path = tmp_path / "d.csv"
    path.write_text("\n".join([header, *rows]) + "\n")
    return path


def test_load_small_file(tmp_path):
    path = _write(tmp_path, [
        "2020-01-01,1.0,0.5,-0.2,100,0.01,0.02",
        "2020-01-02,1.1,0.4,-0.1,101,0.01,0.02",
        "2020-01-03,0.9,0.6,0.0,99,0.01,0.02",
    ])
    data = load_dataset(path)
    assert len(data) == 3
    assert data.params[1] == SabrParams(1.1, 0.4, -0.1)
    assert data.snapshots[2].spot == 99.0


def test_invariant_violation_names_row_and_field(tmp_path):
    path = _write(tmp_path, ["2020-01-01,1.0,0.5,-0.2,100,0.01,0.02", "2020-01-02,1.0,0.5,1.0,100,0.01,0.02"])
    with pytest.raises(DataError, match=r"d\.csv:3: field 'rho'"):
        load_dataset(path)


@pytest.mark.parametrize("rows,pattern", [
    (["2020-01-01,1.0,abc,-0.2,100,0.01,0.02"], r":2: field 'nu'"),
    (["2020-01-01,1.0,0.5,-0.2,100,0.01"], r":2: expected 7 fields"),
    (["2020-13-01,1.0,0.5,-0.2,100,0.01,0.02"], r":2: field 'date'"),
    (["2020-01-02,1.0,0.5,-0.2,100,0.01,0.02", "2020-01-01,1.0,0.5,-0.2,100,0.01,0.02"], r":3: dates out of order"),
    (["2020-01-01,1.0,0.5,-0.2,-5,0.01,0.02"], r":2: field 'spot'"),
])
def test_bad_rows(tmp_path, rows, pattern):
    with pytest.raises(DataError, match=pattern):
        load_dataset(_write(tmp_path, rows))


def test_bad_header_and_missing(tmp_path):
    with pytest.raises(DataError, match=":1: header"):
        load_dataset(_write(tmp_path, [], header="date,a,b"))
    with pytest.raises(DataError, match="no such file"):
        load_dataset(tmp_path / "missing.csv")


def test_roundtrip(tmp_path):
    data = generate_synthetic(SyntheticSpec(n_days=200), seed=4)
    path = tmp_path / "sub" / "x.csv"
    write_dataset(data, path)
    back = load_dataset(path)
    assert back.dates == data.dates
    assert np.max(np.abs(back.param_array() - data.param_array())) <= 1e-12
    spots = np.array([s.spot for s in data.snapshots])
    assert np.max(np.abs(np.array([s.spot for s in back.snapshots]) - spots)) <= 1e-12
    assert not list(path.parent.glob(".*.tmp"))


def test_synthetic_valid_and_deterministic():
    spec = SyntheticSpec(n_days=500)
    a = generate_synthetic(spec, seed=7)
    b = generate_synthetic(spec, seed=7)
    assert len(a) == 500
    assert a.param_array().tobytes() == b.param_array().tobytes()
    assert a.dates == b.dates
    assert all(isinstance(p, SabrParams) for p in a.params)
    assert a.params[0].as_tuple() == pytest.approx((1.0, 0.6, -0.2))
    c = generate_synthetic(spec, seed=8)
    assert c.param_array().tobytes() != a.param_array().tobytes()


def test_synthetic_alpha_unit_root():
    data = generate_synthetic(SyntheticSpec(), seed=0)
    levels = data.series("alpha")
    assert not adf_test(levels).reject
    assert adf_test(np.diff(levels)).reject


def test_synthetic_spec_validation():
    with pytest.raises(InvalidInputError):
        SyntheticSpec(n_days=1)
    with pytest.raises(InvalidInputError):
        SyntheticSpec(initial=(1.0, 0.6, 1.5))
    with pytest.raises(InvalidInputError):
        SyntheticSpec(models={"alpha": TABLE1["alpha"]})


def test_dataset_length_mismatch():
    with pytest.raises(InvalidInputError):
        Dataset(["2020-01-01"], [], [MarketSnapshot(1.0, 0.0, 0.0)])


def test_config_requires_one_source(tmp_path):
    with pytest.raises(InvalidInputError):
        parse_config({})
    with pytest.raises(InvalidInputError):
        parse_config({"data": "x.csv", "synthetic": {"seed": 1}})
    with pytest.raises(InvalidInputError, match="seed"):
        parse_config({"synthetic": {}})
    with pytest.raises(InvalidInputError, match="unknown"):
        parse_config({"synthetic": {"seed": 1}, "bogus": 3})


def test_config_file(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text(
        "synthetic:\n  seed: 3\n  n_days: 400\n"
        "models:\n  nu: {p: 2, q: 0}\n"
        "backtest:\n  n_fit: 300\n  n_test: 10\n  horizons: [1, 2]\n"
        "strategy:\n  deltas: [1.0e-5, 1.0e-4]\n"
        "output:\n  format: csv\n"
    )
    cfg = load_config(path)
    assert cfg.seed == 3 and cfg.synthetic.n_days == 400
    assert cfg.backtest.specs["nu"].p == 2 and cfg.backtest.specs["nu"].include_mean is False
    assert cfg.backtest.horizons == (1, 2)
    assert cfg.deltas.tolist() == [1e-5, 1e-4]
    assert cfg.output_format == "csv"
    assert load_config(path, seed=9).seed == 9
    assert len(cfg.dataset()) == 400


def test_config_data_path_relative(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("data: data.csv\n")
    assert load_config(path).data_path == tmp_path / "data.csv"


def test_config_errors(tmp_path):
    with pytest.raises(InvalidInputError, match="no such config"):
        load_config(tmp_path / "nope.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("- 1\n- 2\n")
    with pytest.raises(InvalidInputError, match="mapping"):
        load_config(bad)
    with pytest.raises(InvalidInputError, match="backtest"):
        parse_config({"synthetic": {"seed": 1}, "backtest": {"nfit": 3}})
