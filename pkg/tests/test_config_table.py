import math
import tempfile
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sqfock import config, fock
from sqfock.config import Axis
from sqfock.errors import ConfigError
from sqfock.table import ResultTable, field_table, read_csv

GOOD = """
scenario = "sweep"

[model]
kerr = 0.5
gamma0 = 1

[protocol]
r = 1.0

[sweep]
observables = ["alpha", "dk_ratio"]

[[sweep.axis]]
variable = "r"
min = 0.0
max = 2.0
points = 3

[[sweep.axis]]
variable = "kerr"
min = 0.1
max = 10
points = 2
scale = "log"

[output]
precision = 12
path = "out"
"""


def test_load_full_config(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text(GOOD)
    cfg = config.load(path)
    assert cfg.scenario == "sweep"
    assert cfg.model == {"kerr": 0.5, "gamma0": 1}
    assert cfg.protocol == {"r": 1.0}
    assert [a.variable for a in cfg.axes] == ["r", "kerr"]
    np.testing.assert_allclose(cfg.axes[1].values(), [0.1, 10.0])
    assert cfg.observables == ["alpha", "dk_ratio"]
    assert cfg.precision == 12 and cfg.path == "out"


@pytest.mark.parametrize("data", [
    {"modle": {}},
    {"model": {"kerrr": 1.0}},
    {"model": {"kerr": "big"}},
    {"model": {"kerr": True}},
    {"scenario": 3},
    {"protocol": 5},
    {"sweep": {"axes": []}},
    {"sweep": {"axis": [{"variable": "r", "min": 0, "max": 1}]}},
    {"sweep": {"axis": [{"variable": "r", "min": 0, "max": 1, "points": 2, "step": 1}]}},
    {"sweep": {"observables": "alpha"}},
    {"output": {"precision": 18}},
    {"output": {"precision": 0}},
    {"output": {"format": "csv"}},
])
def test_parse_rejects(data):
    with pytest.raises(ConfigError):
        config.parse(data)


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError):
        config.load(tmp_path / "missing.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("[model\nkerr = 1")
    with pytest.raises(ConfigError):
        config.load(bad)


@pytest.mark.parametrize("kw", [dict(points=0), dict(points=2.5), dict(scale="exp"),
                                dict(min=0.0, scale="log"), dict(min=2.0, max=1.0)])
def test_axis_validation(kw):
    base = dict(variable="r", min=0.5, max=1.0, points=3)
    with pytest.raises(ConfigError):
        Axis(**(base | kw))


def test_axis_single_point():
    np.testing.assert_array_equal(Axis("r", 0.7, 0.7, 1).values(), [0.7])


def test_hash_stable_and_sensitive():
    a = config.parse({"model": {"kerr": 1.0, "gamma0": 2.0}})
    b = config.parse({"model": {"gamma0": 2.0, "kerr": 1.0}})
    c = config.parse({"model": {"kerr": 1.0, "gamma0": 2.5}})
    assert a.hash() == b.hash() != c.hash()
    assert len(a.hash()) == 64


def test_table_csv_layout():
    tab = ResultTable("demo", ["r", "alpha"], ["1", "rad/s"], notes=["a note"], diagnostics=["ok"])
    tab.add(0.1, 1 / 3)
    text = tab.to_csv("fig1c", "abc")
    lines = text.splitlines()
    assert lines[0] == "# sqfock fig1c/demo"
    assert lines[1] == "# a note"
    assert lines[2] == "r [1],alpha [rad/s]"
    assert lines[3] == "0.10000000000000001,0.33333333333333331"
    assert lines[4] == "# config_sha256=abc"
    assert lines[5] == "# ok"


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=1, max_size=5))
def test_csv_round_trip_is_exact(values):
    tab = ResultTable("t", ["x"], ["1"])
    for v in values:
        tab.add(v)
    with tempfile.TemporaryDirectory() as d:
        path = tab.write(Path(d), "s", "h")
        header, rows, comments = read_csv(path)
    assert header == ["x [1]"]
    assert [r[0] for r in rows] == values
    assert "config_sha256=h" in comments


def test_table_rejects_bad_rows():
    tab = ResultTable("t", ["x", "y"], ["1", "1"])
    with pytest.raises(ValueError):
        tab.add(1.0)
    with pytest.raises(ValueError):
        tab.add(1.0, math.nan)
    with pytest.raises(ValueError):
        ResultTable("t", ["x"], [])


def test_table_keeps_strings_and_real_parts():
    tab = ResultTable("t", ["name", "v"], ["-", "1"])
    tab.add("alpha", 2.0 + 0j)
    assert tab.rows == [["alpha", 2.0]]
    np.testing.assert_array_equal(tab.column("v"), [2.0])


def test_field_table_rows():
    grid = fock.PhaseSpaceGrid.square(1.0, 3)
    values = np.arange(9.0).reshape(3, 3)
    tab = field_table("w", grid, values, notes=["n"])
    assert tab.columns == ["re", "im", "value"]
    assert len(tab.rows) == 9
    pts = grid.points.ravel()
    for (re, im, v), z, ref in zip(tab.rows, pts, values.ravel()):
        assert (re, im, v) == (z.real, z.imag, ref)
