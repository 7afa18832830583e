import json
import math
import os

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cohcert import jsonio


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_floats_roundtrip_exactly(x):
    assert json.loads(jsonio.dumps({"x": x}))["x"] == x


def test_integral_floats_keep_a_decimal_point():
    assert jsonio.dumps(2.0, indent=None) == "2.0"
    assert jsonio.dumps(np.float64(1e20), indent=None) == "1e+20"
    assert jsonio.dumps(3, indent=None) == "3"


def test_nonfinite_values_become_strings():
    out = json.loads(jsonio.dumps([math.inf, -math.inf, math.nan]))
    assert out == ["inf", "-inf", "nan"]


def test_sorted_keys_and_numpy_types():
    text = jsonio.dumps({"b": np.int64(1), "a": np.array([0.5, 1.5]), "c": np.bool_(True), "z": 1 + 2j})
    assert text.index('"a"') < text.index('"b"') < text.index('"c"')
    obj = json.loads(text)
    assert obj["a"] == [0.5, 1.5] and obj["c"] is True and obj["z"] == {"re": 1.0, "im": 2.0}


def test_seventeen_significant_digits():
    assert jsonio.dumps(0.1, indent=None) == "0.10000000000000001"


def test_atomic_write_replaces(tmp_path):
    path = tmp_path / "sub" / "out.json"
    jsonio.atomic_write(str(path), "{}")
    jsonio.atomic_write(str(path), '{"a": 1}')
    assert path.read_text() == '{"a": 1}\n'
    assert [p.name for p in path.parent.iterdir()] == ["out.json"]
