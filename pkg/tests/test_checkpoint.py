"""Binary checkpoint format: round trips and corruption handling."""

import struct

import numpy as np
import pytest

from panelkit.errors import CheckpointMismatch
from panelkit.nn.checkpoint import MAGIC, load_arrays, save_arrays

RNG = np.random.default_rng(9)


def test_round_trip_is_bit_exact(tmp_path):
    path = tmp_path / "model.ptck"
    arrays = {
        "layer/w": RNG.normal(size=(3, 4)),
        "layer/b": RNG.normal(size=(4,)),
        "scalar": np.array(3.25),
        "cube": RNG.normal(size=(2, 2, 2)),
    }
    save_arrays(path, arrays)
    loaded = load_arrays(path)
    assert set(loaded) == set(arrays)
    for name, arr in arrays.items():
        assert loaded[name].shape == arr.shape
        np.testing.assert_array_equal(loaded[name], arr)


def test_unicode_names_round_trip(tmp_path):
    path = tmp_path / "u.ptck"
    arrays = {"poids/étape": np.ones((2,))}
    save_arrays(path, arrays)
    assert "poids/étape" in load_arrays(path)


def test_empty_mapping_round_trip(tmp_path):
    path = tmp_path / "empty.ptck"
    save_arrays(path, {})
    assert load_arrays(path) == {}


def test_bad_magic_raises(tmp_path):
    path = tmp_path / "bad.ptck"
    path.write_bytes(b"NOPE" + struct.pack("<I", 0))
    with pytest.raises(CheckpointMismatch):
        load_arrays(path)


def test_truncated_payload_raises(tmp_path):
    path = tmp_path / "trunc.ptck"
    save_arrays(path, {"w": RNG.normal(size=(8, 8))})
    blob = path.read_bytes()
    path.write_bytes(blob[: len(blob) - 16])
    with pytest.raises(CheckpointMismatch):
        load_arrays(path)


def test_truncated_header_raises(tmp_path):
    path = tmp_path / "trunc2.ptck"
    save_arrays(path, {"w": np.ones((2,))})
    blob = path.read_bytes()
    path.write_bytes(blob[:10])
    with pytest.raises(CheckpointMismatch):
        load_arrays(path)


def test_records_are_name_sorted_on_disk(tmp_path):
    # writing in any dict order yields identical bytes
    a = {"b": np.ones(1), "a": np.zeros(1)}
    b = {"a": np.zeros(1), "b": np.ones(1)}
    pa, pb = tmp_path / "a.ptck", tmp_path / "b.ptck"
    save_arrays(pa, a)
    save_arrays(pb, b)
    assert pa.read_bytes() == pb.read_bytes()
    assert pa.read_bytes()[:4] == MAGIC


def test_float_precision_preserved(tmp_path):
    path = tmp_path / "prec.ptck"
    value = np.array([1.0 / 3.0, np.pi, 1e-300, 1e300])
    save_arrays(path, {"v": value})
    np.testing.assert_array_equal(load_arrays(path)["v"], value)
