import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from nonlocal_spectral.io import SnapshotSeries, read_csv, read_snapshot, write_csv, write_snapshot


def test_snapshot_roundtrip(tmp_path, rng):
    u = rng.normal(size=(6, 5))
    write_snapshot(tmp_path / "a.nlfd", u, 1.25)
    back, t = read_snapshot(tmp_path / "a.nlfd")
    assert t == 1.25 and back.shape == (6, 5)
    assert np.array_equal(back, u)


def test_snapshot_header_layout(tmp_path):
    write_snapshot(tmp_path / "a.nlfd", np.zeros(3), 0.0)
    raw = (tmp_path / "a.nlfd").read_bytes()
    assert raw[:4] == b"NLFD"
    assert len(raw) == 4 + 4 + 4 + 8 + 8 + 3 * 8


def test_snapshot_rejects_bad_magic(tmp_path):
    write_snapshot(tmp_path / "a.nlfd", np.ones(4), 0.0)
    raw = bytearray((tmp_path / "a.nlfd").read_bytes())
    raw[:4] = b"XXXX"
    (tmp_path / "a.nlfd").write_bytes(bytes(raw))
    with pytest.raises(ValueError, match="not an NLFD"):
        read_snapshot(tmp_path / "a.nlfd")


def test_snapshot_rejects_truncation(tmp_path):
    write_snapshot(tmp_path / "a.nlfd", np.ones(4), 0.0)
    raw = (tmp_path / "a.nlfd").read_bytes()
    (tmp_path / "a.nlfd").write_bytes(raw[:-3])
    with pytest.raises(ValueError, match="truncated"):
        read_snapshot(tmp_path / "a.nlfd")


@given(arrays(np.float64, st.integers(1, 20), elements=st.floats(allow_nan=False, allow_infinity=False)))
def test_csv_roundtrip_is_exact(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("csv") / "t.csv"
    write_csv(path, {"k": np.arange(len(values)), "x": values})
    back = read_csv(path)
    assert np.array_equal(back["x"], values)
    assert np.array_equal(back["k"], np.arange(len(values)))


def test_csv_string_columns_and_length_check(tmp_path):
    write_csv(tmp_path / "s.csv", {"name": ["a", "b"], "v": [1.5, 2.0]})
    back = read_csv(tmp_path / "s.csv")
    assert back["name"] == ["a", "b"]
    with pytest.raises(ValueError):
        write_csv(tmp_path / "bad.csv", {"a": [1, 2], "b": [1]})


def test_series_index(tmp_path):
    series = SnapshotSeries(tmp_path, "v")
    for i in range(3):
        series.add(np.full(2, float(i)), 0.5 * i)
    series.close({"beta": 2.0})
    doc = json.loads((tmp_path / "v_index.json").read_text())
    assert doc["beta"] == 2.0
    assert [s["t"] for s in doc["snapshots"]] == [0.0, 0.5, 1.0]
    field, t = read_snapshot(tmp_path / doc["snapshots"][2]["file"])
    assert t == 1.0 and np.all(field == 2.0)
