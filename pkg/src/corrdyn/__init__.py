"""Numerical dynamics of the holomorphic correspondences ``(w - c)^q = z^p``."""

from .correspondence import CorrParams, BranchAnchor
from .cloud import PointCloud

__version__ = "0.1.0"

__all__ = ["CorrParams", "BranchAnchor", "PointCloud", "__version__"]
