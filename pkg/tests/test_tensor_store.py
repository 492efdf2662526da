import json
import os

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tcdmap.errors import (
    MissingFileError,
    NonFiniteError,
    NonUniformTimesError,
    ShapeMismatchError,
)
from tcdmap.synthetic import BarbellConfig, barbell_tensor
from tcdmap.tensor_store import DataTensor, Snapshot, load_tensor, save_tensor


def write_manifest(root, snapshots, times=None, **extra):
    names = []
    for i, rows in enumerate(snapshots, start=1):
        name = f"s{i}.csv"
        with open(root / name, "w") as fh:
            fh.write("\n".join(",".join(str(v) for v in r) for r in rows) + "\n")
        names.append(name)
    n = len(snapshots[0])
    d = len(snapshots[0][0])
    manifest = {"n": n, "d": d, "m": len(snapshots),
                "times": times or list(range(1, len(snapshots) + 1)), "snapshots": names}
    manifest.update(extra)
    path = root / "manifest.json"
    path.write_text(json.dumps(manifest))
    return path


def test_minimal_manifest(tmp_path):
    path = write_manifest(tmp_path, [[[0, 0], [1, 0], [0, 1]]])
    t = load_tensor(path)
    assert (t.n, t.d, t.m) == (3, 2, 1)


def test_directory_accepted_for_manifest(tmp_path):
    write_manifest(tmp_path, [[[0.5], [1.5]]])
    assert load_tensor(tmp_path).n == 2


def test_shape_mismatch(tmp_path):
    path = write_manifest(tmp_path, [[[0, 0], [1, 0], [0, 1]], [[0, 0], [1, 0], [0, 1], [1, 1]]])
    with pytest.raises(ShapeMismatchError):
        load_tensor(path)


def test_missing_snapshot_file(tmp_path):
    path = write_manifest(tmp_path, [[[0.0], [1.0]]])
    os.remove(tmp_path / "s1.csv")
    with pytest.raises(MissingFileError):
        load_tensor(path)


def test_missing_manifest(tmp_path):
    with pytest.raises(MissingFileError):
        load_tensor(tmp_path / "nothing.json")


def test_nonfinite(tmp_path):
    path = write_manifest(tmp_path, [[[0.0], ["nan"]]])
    with pytest.raises(NonFiniteError):
        load_tensor(path)


def test_nonuniform_times(tmp_path):
    snap = [[0.0], [1.0]]
    path = write_manifest(tmp_path, [snap, snap, snap], times=[0.0, 1.0, 2.5])
    with pytest.raises(NonUniformTimesError):
        load_tensor(path)


def test_times_within_relative_tolerance_accepted():
    pts = np.zeros((2, 1, 3))
    DataTensor.from_array(pts, [1.0, 2.0, 3.0 + 1e-12])
    with pytest.raises(NonUniformTimesError):
        DataTensor.from_array(pts, [1.0, 2.0, 3.0 + 1e-6])


def test_decreasing_times_rejected():
    with pytest.raises(NonUniformTimesError):
        DataTensor.from_array(np.zeros((2, 1, 2)), [2.0, 1.0])


def test_save_writes_rows(tmp_path):
    t = DataTensor.from_array(np.array([[[0.0]], [[1.0]]]))
    path = save_tensor(t, tmp_path)
    manifest = json.loads(open(path).read())
    assert manifest["snapshots"] == ["snapshot_001.csv"]
    assert (tmp_path / "snapshot_001.csv").read_text().split() == ["0", "1"]


@pytest.mark.parametrize("shape", [(0, 2), (3, 0)])
def test_empty_rejected_at_construction(shape):
    with pytest.raises(ShapeMismatchError):
        Snapshot(np.zeros(shape))


def test_barbell_round_trip_bit_identical(tmp_path):
    t = barbell_tensor(BarbellConfig(100, 9, 3))
    back = load_tensor(save_tensor(t, tmp_path))
    assert (back.n, back.d, back.m) == (100, 2, 9)
    assert back == t
    np.testing.assert_array_equal(back.labels, t.labels)
    assert all(a.points.tobytes() == b.points.tobytes() for a, b in zip(t.snapshots, back.snapshots))


def test_random_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    t = DataTensor.from_array(rng.standard_normal((50, 3, 5)) * 1e3, 0.1 * np.arange(1, 6))
    assert load_tensor(save_tensor(t, tmp_path)) == t


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 3), st.integers(1, 3), st.data())
def test_round_trip_property(tmp_path_factory, n, d, m, data):
    values = data.draw(st.lists(finite, min_size=n * d * m, max_size=n * d * m))
    arr = np.array(values).reshape(n, d, m)
    t = DataTensor.from_array(arr)
    back = load_tensor(save_tensor(t, tmp_path_factory.mktemp("rt")))
    assert back == t
    # row order is never permuted
    np.testing.assert_array_equal(back.as_array(), arr)


def test_tensor_is_immutable():
    t = DataTensor.from_array(np.zeros((2, 1, 1)))
    with pytest.raises(ValueError):
        t.snapshots[0].points[0, 0] = 1.0
