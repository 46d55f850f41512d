"""Finite point samples of plane sets, with provenance metadata."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Any

import numpy as np

__all__ = ["PointCloud", "write_csv", "read_csv", "format_float", "cloud_diameter", "dedupe"]


@dataclass(frozen=True)
class PointCloud:
    """A finite sample of a plane set.

    ``meta`` records the generator (``hutchinson``, ``forward``, ``inverse``,
    ``cycles``, ``postcritical``, ...) together with the parameters, depth
    and seeds needed to regenerate the cloud.  ``escaping`` is an optional
    per-point flag used by post-critical clouds.
    """

    points: np.ndarray
    meta: dict[str, Any] = field(default_factory=dict)
    escaping: np.ndarray | None = None

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=complex).ravel())
        if not np.all(np.isfinite(pts)):
            raise ValueError("point clouds hold finite points only")
        object.__setattr__(self, "points", pts)
        if self.escaping is not None:
            esc = np.asarray(self.escaping, dtype=bool).ravel()
            if esc.shape != pts.shape:
                raise ValueError("escaping flags must match the points")
            object.__setattr__(self, "escaping", esc)

    def __len__(self) -> int:
        return self.points.size

    @property
    def empty(self) -> bool:
        return self.points.size == 0

    def bounded(self) -> "PointCloud":
        """Sub-cloud of points not flagged as escaping."""
        if self.escaping is None:
            return self
        return PointCloud(self.points[~self.escaping], dict(self.meta, part="bounded"))

    def with_meta(self, **extra) -> "PointCloud":
        return PointCloud(self.points, {**self.meta, **extra}, self.escaping)


def format_float(x: float) -> str:
    """17 significant digits; round-trips every double."""
    return format(float(x), ".17g")


def write_csv(cloud: PointCloud, fh) -> None:
    """Write ``re,im`` rows (header included) to a text file handle."""
    fh.write("re,im\n")
    for z in cloud.points:
        fh.write(f"{format_float(z.real)},{format_float(z.imag)}\n")


def read_csv(fh, meta: dict | None = None) -> PointCloud:
    if isinstance(fh, (str, bytes)):
        fh = io.StringIO(fh if isinstance(fh, str) else fh.decode())
    reader = csv.reader(fh)
    header = next(reader)
    if [h.strip() for h in header] != ["re", "im"]:
        raise ValueError(f"expected header 're,im', got {header!r}")
    pts = [complex(float(a), float(b)) for a, b in reader]
    return PointCloud(np.array(pts, dtype=complex), meta or {"generator": "csv"})


def cloud_diameter(points: np.ndarray) -> float:
    """Exact diameter of a finite planar set (convex hull for large sets)."""
    pts = np.asarray(points, dtype=complex).ravel()
    if pts.size < 2:
        return 0.0
    if pts.size > 64:
        from scipy.spatial import ConvexHull, QhullError

        xy = np.column_stack([pts.real, pts.imag])
        try:
            pts = pts[ConvexHull(xy).vertices]
        except (QhullError, ValueError):
            # degenerate (collinear) set: the two-sweep extreme pair is exact
            a = pts[np.argmax(np.abs(pts - pts[0]))]
            return float(np.abs(pts - a).max())
    d = np.abs(pts[:, None] - pts[None, :])
    return float(d.max()) if d.size else 0.0


def dedupe(points: np.ndarray, tol: float) -> np.ndarray:
    """Drop points within ``tol`` of an earlier point; order is preserved."""
    pts = np.asarray(points, dtype=complex).ravel()
    if pts.size < 2:
        return pts
    from scipy.spatial import cKDTree

    xy = np.column_stack([pts.real, pts.imag])
    pairs = cKDTree(xy).query_pairs(tol, output_type="ndarray")
    if pairs.size == 0:
        return pts
    keep = np.ones(pts.size, dtype=bool)
    # pairs come as (i, j) with i < j; a point is removed when some kept
    # earlier point lies within tol
    order = np.lexsort((pairs[:, 0], pairs[:, 1]))
    for i, j in pairs[order]:
        if keep[i]:
            keep[j] = False
    return pts[keep]
