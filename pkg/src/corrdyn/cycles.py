"""Periodic-cycle records shared by the attracting and repelling solvers."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .correspondence import CorrParams, branch_derivative

__all__ = ["CycleRecord", "classify", "multiplier_along", "DEAD_BAND"]

DEAD_BAND = 1e-9


def classify(multiplier: complex) -> str:
    m = abs(multiplier)
    if m < 1 - DEAD_BAND:
        return "attracting"
    if m > 1 + DEAD_BAND:
        return "repelling"
    return "indifferent"


def multiplier_along(params: CorrParams, points) -> complex:
    """Chain-rule product of branch derivatives around the closed orbit ``points``."""
    pts = [complex(z) for z in points]
    m = 1 + 0j
    for i, z in enumerate(pts):
        m *= branch_derivative(params, z, pts[(i + 1) % len(pts)])
    return m


@dataclass(frozen=True)
class CycleRecord:
    period: int
    points: tuple[complex, ...]
    multiplier: complex
    cls: str
    c: complex | None = None

    @classmethod
    def from_points(cls, params: CorrParams, points) -> "CycleRecord":
        pts = tuple(complex(z) for z in points)
        m = multiplier_along(params, pts)
        return cls(len(pts), pts, m, classify(m), params.c)

    def to_dict(self) -> dict:
        out = {"period": self.period,
               "points": [{"re": z.real, "im": z.imag} for z in self.points],
               "multiplier": {"re": self.multiplier.real, "im": self.multiplier.imag},
               "class": self.cls}
        if self.c is not None:
            out["c"] = {"re": self.c.real, "im": self.c.imag}
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def closes(self, params: CorrParams, tol: float = 1e-9) -> bool:
        """Every consecutive pair (cyclically) satisfies the correspondence."""
        from .correspondence import residual

        z = np.array(self.points)
        return bool(np.all(residual(params, z, np.roll(z, -1)) <= tol))
