"""OFLX1 snapshot files and their JSON sidecars.

Layout (little-endian): magic b"OFLX1", version byte 0x01, nx ny nz_half as
u32, Lz and time as f64, support tag as u8 followed by two f64 parameters,
then the three component arrays as f64 in C order (x1 slowest, x3 fastest).
The two support parameters are always written so the header has fixed size.
"""
from __future__ import annotations

import hashlib
import json
import os
import struct
from pathlib import Path

import numpy as np

from .errors import DomainError
from .field_core import Grid3, Region, TimeSeries, VectorField

__all__ = ["write_snapshot", "read_snapshot", "read_series", "sha256_file",
           "sidecar_path", "SnapshotFormatError"]

MAGIC = b"OFLX1"
VERSION = 1
_HEADER = struct.Struct("<5sBIIIddBdd")
_TAGS = {"full": 0, "half_plus": 1, "above": 2, "strip": 3}
_KINDS = {v: k for k, v in _TAGS.items()}


class SnapshotFormatError(ValueError):
    """The file is not a readable OFLX1 snapshot."""


def sidecar_path(path) -> Path:
    return Path(str(path) + ".json")


def _header_bytes(f: VectorField) -> bytes:
    g, s = f.grid, f.support
    return _HEADER.pack(MAGIC, VERSION, g.nx, g.ny, g.nz_half, g.lz, float(f.time),
                        _TAGS[s.kind], float(s.a), float(s.b))


def write_snapshot(path, f: VectorField, meta: dict | None = None) -> Path:
    """Write f and a sidecar holding the same header fields plus meta."""
    path = Path(path)
    data = np.ascontiguousarray(f.comps, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_header_bytes(f))
        fh.write(data.tobytes(order="C"))
    side = {"format": "OFLX1", "version": VERSION, "grid": f.grid.to_dict(),
            "time": float(f.time), "support": f.support.to_dict()}
    if meta:
        side["meta"] = meta
    sidecar_path(path).write_text(json.dumps(side, sort_keys=True, indent=2) + "\n")
    return path


def read_snapshot(path) -> VectorField:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise SnapshotFormatError(f"{path}: file too short for an OFLX1 header")
    magic, ver, nx, ny, nzh, lz, t, tag, a, b = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise SnapshotFormatError(f"{path}: bad magic {magic!r}")
    if ver != VERSION:
        raise SnapshotFormatError(f"{path}: unsupported version {ver}")
    if tag not in _KINDS:
        raise SnapshotFormatError(f"{path}: unknown support tag {tag}")
    grid = Grid3(nx, ny, nzh, lz)
    n = 3 * nx * ny * grid.nz
    body = raw[_HEADER.size:]
    if len(body) != 8 * n:
        raise SnapshotFormatError(f"{path}: expected {8 * n} data bytes, found {len(body)}")
    comps = np.frombuffer(body, dtype="<f8").astype(np.float64).reshape((3,) + grid.shape)
    kind = _KINDS[tag]
    support = Region(kind, a, b) if kind in ("above", "strip") else Region(kind)
    return VectorField(grid, comps, support, t)


def read_series(paths) -> TimeSeries:
    """Snapshots sorted by their stored time."""
    paths = list(paths)
    if not paths:
        raise DomainError("no input snapshots given")
    snaps = sorted((read_snapshot(p) for p in paths), key=lambda s: s.time)
    return TimeSeries(tuple(s.time for s in snaps), tuple(snaps))


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)
