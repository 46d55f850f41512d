"""File formats: binary PGM rasters, CSV clouds, JSON records and sidecars."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .cloud import PointCloud, read_csv, write_csv
from .escape import Raster

__all__ = ["write_pgm", "read_pgm", "save_cloud", "load_cloud", "save_raster", "write_json",
           "sidecar_path"]


def write_pgm(raster: Raster, fh) -> None:
    """Binary P5; 8-bit when ``depth_cap <= 255``, else 16-bit big-endian."""
    cap = int(raster.depth_cap)
    vals = np.clip(raster.values, 0, min(cap, 65535))
    if cap <= 255:
        maxval, data = cap, vals.astype(">u1")
    else:
        maxval, data = min(cap, 65535), vals.astype(">u2")
    fh.write(f"P5\n{raster.width} {raster.height}\n{maxval}\n".encode("ascii"))
    fh.write(np.ascontiguousarray(data).tobytes())


def read_pgm(fh) -> tuple[int, np.ndarray]:
    """Returns ``(maxval, values)`` with shape ``(height, width)``."""
    data = fh.read()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        tokens.append(data[pos:end])
        pos = end
    if tokens[0] != b"P5":
        raise ValueError("not a binary PGM")
    width, height, maxval = (int(t) for t in tokens[1:])
    pos += 1  # single whitespace after maxval
    dtype = ">u1" if maxval < 256 else ">u2"
    values = np.frombuffer(data, dtype=dtype, count=width * height, offset=pos)
    return maxval, values.reshape(height, width).astype(np.int64)


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def save_cloud(cloud: PointCloud, path, config: dict | None = None) -> None:
    with open(path, "w", newline="\n") as fh:
        write_csv(cloud, fh)
    write_json({"config": config or {}, "meta": cloud.meta}, sidecar_path(path))


def load_cloud(path) -> PointCloud:
    with open(path) as fh:
        return read_csv(fh, {"generator": "csv", "path": str(path)})


def save_raster(raster: Raster, path, config: dict | None = None) -> None:
    with open(path, "wb") as fh:
        write_pgm(raster, fh)
    write_json({"config": config or {}, "meta": raster.meta or {},
                "bounds": list(raster.bounds), "depth_cap": raster.depth_cap},
               sidecar_path(path))
