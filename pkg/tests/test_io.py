import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import array_shapes, arrays

from illumopt.exceptions import SchemaError
from illumopt.io import load_array, read_json, save_array, write_json


@given(arrays(st.sampled_from([np.float64, np.complex128]), array_shapes(max_dims=3, max_side=5)))
def test_array_round_trip(tmp_path_factory, a):
    stem = tmp_path_factory.mktemp("io") / "a"
    save_array(stem, a, "fourier" if np.iscomplexobj(a) else "spatial")
    back, meta = load_array(stem)
    assert back.dtype == a.dtype
    np.testing.assert_array_equal(back, a)
    assert meta["shape"] == list(a.shape)


def test_byte_layout(tmp_path):
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    bin_path, meta_path = save_array(tmp_path / "x", a)
    assert bin_path.read_bytes() == np.array([1.0, 2.0, 3.0, 4.0], "<f8").tobytes()
    assert json.loads(meta_path.read_text()) == {"shape": [2, 2], "dtype": "f64", "domain": "spatial"}
    save_array(tmp_path / "z", np.array([1 + 2j]), "fourier")
    assert (tmp_path / "z.bin").read_bytes() == np.array([1.0, 2.0], "<f8").tobytes()


def test_integer_input_is_stored_as_f64(tmp_path):
    save_array(tmp_path / "i", np.arange(3))
    back, meta = load_array(tmp_path / "i.bin")
    assert meta["dtype"] == "f64"
    np.testing.assert_array_equal(back, [0.0, 1.0, 2.0])


def test_bad_domain(tmp_path):
    with pytest.raises(ValueError):
        save_array(tmp_path / "a", np.zeros(2), "polar")


@pytest.mark.parametrize("meta", [
    {"shape": [2], "dtype": "f32", "domain": "spatial"},
    {"shape": [2], "dtype": "f64", "domain": "polar"},
    {"shape": [2], "extra": 1},
    {"shape": [3], "dtype": "f64", "domain": "spatial"},
    [2],
])
def test_schema_errors(tmp_path, meta):
    save_array(tmp_path / "a", np.zeros(2))
    (tmp_path / "a.json").write_text(json.dumps(meta))
    with pytest.raises(SchemaError):
        load_array(tmp_path / "a")


def test_missing_sidecar(tmp_path):
    with pytest.raises(SchemaError):
        load_array(tmp_path / "nothing")


def test_json_helpers(tmp_path):
    write_json(tmp_path / "sub" / "c.json", {"b": 1, "a": [1, 2]})
    assert read_json(tmp_path / "sub" / "c.json") == {"a": [1, 2], "b": 1}
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(SchemaError):
        read_json(tmp_path / "bad.json")
