"""Evolving point clouds and their on-disk representation.

A data tensor holds ``n`` points in ``R^d`` measured at ``m`` times. Row ``j``
of every snapshot refers to the same underlying point, so correspondence is
purely positional.

On disk a tensor is a directory containing one headerless CSV file per time
(``n`` rows of ``d`` comma-separated floats) and a JSON manifest::

    {"n": 100, "d": 2, "m": 9,
     "times": [1.0, 2.0, ...],
     "snapshots": ["snapshot_001.csv", ...],
     "labels": "labels.csv"}          # optional

All paths are relative to the manifest's directory. Floats are written with
17 significant digits so that 64-bit values survive a round trip unchanged.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    IoFailureError,
    MissingFileError,
    NonFiniteError,
    NonUniformTimesError,
    ShapeMismatchError,
)

__all__ = ["Snapshot", "DataTensor", "load_tensor", "save_tensor",
           "FLOAT_FORMAT", "TIME_SPACING_RTOL"]

FLOAT_FORMAT = "%.17g"
TIME_SPACING_RTOL = 1e-9
MANIFEST_NAME = "manifest.json"


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Snapshot:
    """Positions of all points at one measurement time.

    Parameters
    ----------
    points : array of shape (n, d)
    time_index : int
        1-based position of this snapshot in its tensor.
    time_value : float
    """

    points: np.ndarray
    time_index: int = 1
    time_value: float = 1.0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2:
            raise ShapeMismatchError(f"snapshot points must be 2-D, got shape {pts.shape}")
        if pts.shape[0] == 0 or pts.shape[1] == 0:
            raise ShapeMismatchError(f"empty snapshot of shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise NonFiniteError(f"snapshot {self.time_index} has NaN/Inf coordinates")
        object.__setattr__(self, "points", _frozen(pts))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class DataTensor:
    """Ordered sequence of snapshots of the same ``n`` points."""

    snapshots: tuple
    labels: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        snaps = tuple(self.snapshots)
        if not snaps:
            raise ShapeMismatchError("a data tensor needs at least one snapshot")
        n, d = snaps[0].n, snaps[0].d
        for s in snaps[1:]:
            if s.n != n or s.d != d:
                raise ShapeMismatchError(
                    f"snapshot {s.time_index} has shape ({s.n}, {s.d}), expected ({n}, {d})")
        _check_times([s.time_value for s in snaps])
        object.__setattr__(self, "snapshots", snaps)
        if self.labels is not None:
            lab = np.asarray(self.labels, dtype=np.int64)
            if lab.shape != (n,):
                raise ShapeMismatchError(f"labels must have shape ({n},), got {lab.shape}")
            lab = lab.copy()
            lab.setflags(write=False)
            object.__setattr__(self, "labels", lab)

    @classmethod
    def from_array(cls, data, times: Optional[Sequence[float]] = None, labels=None) -> "DataTensor":
        """Build a tensor from an ``(n, d, m)`` array."""
        data = np.asarray(data, dtype=float)
        if data.ndim != 3:
            raise ShapeMismatchError(f"expected an (n, d, m) array, got shape {data.shape}")
        m = data.shape[2]
        if times is None:
            times = np.arange(1, m + 1, dtype=float)
        if len(times) != m:
            raise ShapeMismatchError(f"{len(times)} times given for {m} snapshots")
        snaps = tuple(Snapshot(data[:, :, i], i + 1, float(times[i])) for i in range(m))
        return cls(snaps, labels)

    @property
    def n(self) -> int:
        return self.snapshots[0].n

    @property
    def d(self) -> int:
        return self.snapshots[0].d

    @property
    def m(self) -> int:
        return len(self.snapshots)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time_value for s in self.snapshots])

    def as_array(self) -> np.ndarray:
        """Return the ``(n, d, m)`` array view of the tensor (a copy)."""
        return np.stack([s.points for s in self.snapshots], axis=2)

    def snapshot(self, i: int) -> Snapshot:
        """1-based snapshot access."""
        if not 1 <= i <= self.m:
            raise IndexError(f"snapshot index {i} outside 1..{self.m}")
        return self.snapshots[i - 1]

    def __eq__(self, other):
        if not isinstance(other, DataTensor):
            return NotImplemented
        if (self.n, self.d, self.m) != (other.n, other.d, other.m):
            return False
        if not np.array_equal(self.times, other.times):
            return False
        return all(np.array_equal(a.points, b.points)
                   for a, b in zip(self.snapshots, other.snapshots))

    __hash__ = None


def _check_times(times):
    t = np.asarray(times, dtype=float)
    if not np.all(np.isfinite(t)):
        raise NonFiniteError("time values must be finite")
    if t.size < 2:
        return
    dt = np.diff(t)
    if np.any(dt <= 0):
        raise NonUniformTimesError("time values must be strictly increasing")
    mean = (t[-1] - t[0]) / (t.size - 1)
    if np.max(np.abs(dt - mean)) > TIME_SPACING_RTOL * abs(mean):
        raise NonUniformTimesError(
            f"time spacing deviates from uniform by {np.max(np.abs(dt - mean)) / mean:.3g} (relative)")


def _read_csv(path, ncols=None) -> np.ndarray:
    if not os.path.isfile(path):
        raise MissingFileError(f"cannot read {path}")
    try:
        with open(path) as fh:
            rows = [line.strip() for line in fh if line.strip()]
    except OSError as exc:
        raise MissingFileError(f"cannot read {path}: {exc}") from exc
    try:
        values = [[float(v) for v in row.split(",")] for row in rows]
    except ValueError as exc:
        raise ShapeMismatchError(f"{path}: unparsable value ({exc})") from exc
    widths = {len(r) for r in values}
    if len(widths) > 1:
        raise ShapeMismatchError(f"{path}: ragged rows")
    arr = np.array(values, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(len(values), 0)
    return arr


def load_tensor(manifest_path) -> DataTensor:
    """Read and validate a tensor from its manifest.

    ``manifest_path`` may also name the directory holding ``manifest.json``.
    """
    manifest_path = os.fspath(manifest_path)
    if os.path.isdir(manifest_path):
        manifest_path = os.path.join(manifest_path, MANIFEST_NAME)
    if not os.path.isfile(manifest_path):
        raise MissingFileError(f"manifest not found: {manifest_path}")
    try:
        with open(manifest_path) as fh:
            manifest = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise MissingFileError(f"cannot parse manifest {manifest_path}: {exc}") from exc

    root = os.path.dirname(os.path.abspath(manifest_path))
    try:
        n, d, m = int(manifest["n"]), int(manifest["d"]), int(manifest["m"])
        times = [float(t) for t in manifest["times"]]
        files = list(manifest["snapshots"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ShapeMismatchError(f"malformed manifest {manifest_path}: {exc}") from exc
    if len(files) != m or len(times) != m:
        raise ShapeMismatchError(f"manifest declares m={m} but lists {len(files)} snapshots and {len(times)} times")

    snaps = []
    for i, (name, tv) in enumerate(zip(files, times), start=1):
        arr = _read_csv(os.path.join(root, name))
        if arr.shape != (n, d):
            raise ShapeMismatchError(f"snapshot {i} ({name}) has shape {arr.shape}, expected ({n}, {d})")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteError(f"snapshot {i} ({name}) contains NaN/Inf")
        snaps.append(Snapshot(arr, i, tv))

    labels = None
    if manifest.get("labels"):
        lab = _read_csv(os.path.join(root, manifest["labels"]))
        labels = lab.reshape(-1).astype(np.int64)
        if labels.shape != (n,):
            raise ShapeMismatchError(f"labels file has {labels.size} entries, expected {n}")
    return DataTensor(tuple(snaps), labels)


def save_tensor(tensor: DataTensor, out_dir) -> str:
    """Write ``tensor`` under ``out_dir`` and return the manifest path."""
    out_dir = os.fspath(out_dir)
    width = max(3, len(str(tensor.m)))
    files = []
    try:
        os.makedirs(out_dir, exist_ok=True)
        for s in tensor.snapshots:
            name = f"snapshot_{s.time_index:0{width}d}.csv"
            np.savetxt(os.path.join(out_dir, name), s.points, fmt=FLOAT_FORMAT, delimiter=",")
            files.append(name)
        manifest = {
            "n": tensor.n,
            "d": tensor.d,
            "m": tensor.m,
            "times": [float(t) for t in tensor.times],
            "snapshots": files,
        }
        if tensor.labels is not None:
            np.savetxt(os.path.join(out_dir, "labels.csv"), tensor.labels, fmt="%d")
            manifest["labels"] = "labels.csv"
        path = os.path.join(out_dir, MANIFEST_NAME)
        with open(path, "w") as fh:
            json.dump(manifest, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise IoFailureError(f"cannot write tensor to {out_dir}: {exc}") from exc
    return path
