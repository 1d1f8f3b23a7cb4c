import os

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from svmdsp import io as sio
from svmdsp.core import InvalidInputError, SampledSignal


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=1, max_size=20))
def test_signal_roundtrip_is_exact(values):
    import tempfile
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "s.csv")
        sig = SampledSignal(np.arange(len(values), dtype=float) * 0.1, values)
        sio.write_signal(path, sig)
        back = sio.read_signal(path)
    np.testing.assert_array_equal(back.times, sig.times)
    np.testing.assert_array_equal(back.values, sig.values)


def test_format_value():
    assert sio.format_value(True) == "1"
    assert sio.format_value(np.int64(3)) == "3"
    assert sio.format_value(0.1) == "0.10000000000000001"
    assert sio.format_value(None) == ""
    assert sio.format_value("x") == "x"


def test_header_is_optional(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("0,1\n1,2\n")
    np.testing.assert_array_equal(sio.read_signal(p).values, [1.0, 2.0])
    p.write_text("time,value\n0,1\n\n1,2\n")
    np.testing.assert_array_equal(sio.read_signal(p).values, [1.0, 2.0])


@pytest.mark.parametrize("text", ["", "time,value\n", "0,1\n1,x\n", "0\n1\n"])
def test_malformed_signal(tmp_path, text):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    with pytest.raises(InvalidInputError):
        sio.read_signal(p)


def test_missing_file(tmp_path):
    with pytest.raises(InvalidInputError):
        sio.read_signal(tmp_path / "nope.csv")


def test_complex_roundtrip(tmp_path):
    z = np.array([1 + 2j, -0.5 + 0.25j, 3j])
    w = np.array([1.0 + 0j, 2.0, -1j])
    p = tmp_path / "c.csv"
    sio.write_complex_columns(p, ["a", "b"], [z, w])
    assert p.read_text().splitlines()[0] == "a_re,a_im,b_re,b_im"
    np.testing.assert_array_equal(sio.read_snapshots(p), np.column_stack([z, w]))
    (tmp_path / "odd.csv").write_text("1,2,3\n")
    with pytest.raises(InvalidInputError):
        sio.read_snapshots(tmp_path / "odd.csv")


def test_atomic_write_leaves_no_temporaries(tmp_path):
    p = tmp_path / "out.csv"
    p.write_text("old")
    sio.atomic_write_text(p, "new")
    assert p.read_text() == "new"
    assert os.listdir(tmp_path) == ["out.csv"]


def test_atomic_write_failure_keeps_old_file(tmp_path):
    p = tmp_path / "out.csv"
    p.write_text("old")

    class Boom:
        def __str__(self):
            raise RuntimeError

    with pytest.raises(TypeError):
        sio.atomic_write_text(p, Boom())
    assert p.read_text() == "old"
    assert os.listdir(tmp_path) == ["out.csv"]


def test_read_config(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("# comment\nseed = 3\n trials=5 # inline\n\nL = 64\n")
    assert sio.read_config(p) == {"seed": "3", "trials": "5", "L": "64"}
    p.write_text("novalue\n")
    with pytest.raises(InvalidInputError):
        sio.read_config(p)
    p.write_text("= 3\n")
    with pytest.raises(InvalidInputError):
        sio.read_config(p)
