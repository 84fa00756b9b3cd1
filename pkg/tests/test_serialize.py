import json
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clusterqis.serialize import (
    FIXTURE_VERSION,
    dumps,
    emit_report,
    loads,
    read_artifact,
    state_from_json,
    state_to_json,
    with_version,
)
from clusterqis.sim import random_state


def test_keys_sorted_and_newline_terminated():
    text = dumps({"b": 1, "a": {"d": 2, "c": 3}})
    assert text.endswith("\n")
    assert text.index('"a"') < text.index('"b"')
    assert text.index('"c"') < text.index('"d"')


def test_number_formats():
    assert dumps(1.0).strip() == "1.0"
    assert dumps(0.1).strip() == "0.10000000000000001"
    assert dumps(np.float64(0.5)).strip() == "0.5"
    assert dumps(3).strip() == "3"
    assert loads(dumps(1 / 3)) == 1 / 3


def test_complex_and_numpy_values():
    assert loads(dumps({"z": 1 - 2j})) == {"z": [1.0, -2.0]}
    assert loads(dumps(np.array([1, 2]))) == [1, 2]
    assert loads(dumps((np.bool_(True), None, "x"))) == [True, None, "x"]


def test_rejects_non_finite_and_unknown():
    with pytest.raises(ValueError):
        dumps({"x": float("nan")})
    with pytest.raises(TypeError):
        dumps({"x": object()})


@settings(max_examples=300, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_floats_round_trip_exactly(x):
    assert loads(dumps([x])) == [x]


@settings(max_examples=100, deadline=None)
@given(st.recursive(
    st.none() | st.booleans() | st.integers(-10**6, 10**6) | st.floats(allow_nan=False, allow_infinity=False)
    | st.text(max_size=5),
    lambda inner: st.lists(inner, max_size=5) | st.dictionaries(st.text(max_size=4), inner, max_size=5),
    max_leaves=20,
))
def test_output_is_valid_json_and_stable(obj):
    text = dumps(obj)
    assert json.loads(text) == loads(text)
    assert dumps(loads(text)) == text


def test_state_round_trip():
    s = random_state(4, np.random.default_rng(0))
    d = loads(dumps(state_to_json(s)))
    assert d["num_qubits"] == 4 and len(d["amplitudes"]) == 16
    assert np.array_equal(state_from_json(d).amplitudes, s.amplitudes)


def test_with_version():
    assert with_version({"a": 1}) == {"fixture_version": FIXTURE_VERSION, "a": 1}


def test_emit_and_read(tmp_path):
    path = tmp_path / "r.json"
    emit_report({"x": [0.25, 1]}, path)
    assert read_artifact(path) == {"x": [0.25, 1]}
    assert path.read_text() == dumps({"x": [0.25, 1]})


@pytest.mark.skipif(os.geteuid() == 0, reason="root ignores directory permissions")
def test_emit_to_unwritable_directory(tmp_path):
    tmp_path.chmod(0o500)
    try:
        with pytest.raises(OSError):
            emit_report({}, tmp_path / "r.json")
    finally:
        tmp_path.chmod(0o700)


def test_emit_to_missing_directory(tmp_path):
    with pytest.raises(OSError):
        emit_report({}, tmp_path / "missing" / "r.json")
