"""Output formats: NLFD field snapshots, CSV tables and a JSON time-series index.

NLFD layout (little endian): magic b"NLFD", uint32 version, uint32 n,
n x uint64 grid sizes, float64 time, then the field as row-major float64.
"""
from __future__ import annotations

import json
import os
import struct
from pathlib import Path

import numpy as np

__all__ = ["write_snapshot", "read_snapshot", "write_csv", "read_csv", "write_index", "SnapshotSeries"]

_MAGIC = b"NLFD"
_VERSION = 1
_HEAD = struct.Struct("<4sII")


def write_snapshot(path, field, t: float) -> None:
    field = np.ascontiguousarray(field, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_HEAD.pack(_MAGIC, _VERSION, field.ndim))
        fh.write(struct.pack(f"<{field.ndim}Q", *field.shape))
        fh.write(struct.pack("<d", float(t)))
        fh.write(field.tobytes())


def read_snapshot(path) -> tuple[np.ndarray, float]:
    data = Path(path).read_bytes()
    magic, version, n = _HEAD.unpack_from(data, 0)
    if magic != _MAGIC:
        raise ValueError(f"{path}: not an NLFD file")
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported NLFD version {version}")
    off = _HEAD.size
    shape = struct.unpack_from(f"<{n}Q", data, off)
    off += 8 * n
    (t,) = struct.unpack_from("<d", data, off)
    off += 8
    count = int(np.prod(shape))
    if len(data) - off != 8 * count:
        raise ValueError(f"{path}: truncated NLFD payload")
    field = np.frombuffer(data, dtype="<f8", count=count, offset=off).reshape(shape)
    return field.astype(float), t


def write_csv(path, columns: dict) -> None:
    """Columns of equal length; numbers written with 17 significant digits."""
    names = list(columns)
    arrays = [np.asarray(columns[k]) for k in names]
    length = {len(a) for a in arrays}
    if len(length) > 1:
        raise ValueError("CSV columns differ in length")
    with open(path, "w", newline="") as fh:
        fh.write(",".join(names) + "\n")
        for row in zip(*arrays):
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def _fmt(x) -> str:
    if isinstance(x, (str, bytes)):
        return x if isinstance(x, str) else x.decode()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % float(x)


def read_csv(path) -> dict:
    with open(path) as fh:
        names = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    out = {}
    for i, name in enumerate(names):
        col = [r[i] for r in rows]
        try:
            out[name] = np.array([float(c) for c in col])
        except ValueError:
            out[name] = col
    return out


def write_index(path, times, files, extra: dict | None = None) -> None:
    doc = {"format": "NLFD", "snapshots": [{"t": float(t), "file": str(f)} for t, f in zip(times, files)]}
    if extra:
        doc.update(extra)
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh, indent=2)
    os.replace(tmp, path)


class SnapshotSeries:
    """Writes numbered NLFD snapshots into a directory and keeps the index."""

    def __init__(self, directory, prefix: str = "u"):
        self.directory = Path(directory)
        self.prefix = prefix
        self.times: list[float] = []
        self.files: list[str] = []

    def add(self, field, t: float) -> None:
        name = f"{self.prefix}_{len(self.files):05d}.nlfd"
        write_snapshot(self.directory / name, field, t)
        self.times.append(float(t))
        self.files.append(name)

    def close(self, extra: dict | None = None) -> None:
        write_index(self.directory / f"{self.prefix}_index.json", self.times, self.files, extra)
