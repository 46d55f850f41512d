"""Escaping radius, filled-Julia-set membership and escape rasters.

Membership in the filled Julia set ``K_c`` is decided by a pruned
depth-first search over the q-ary forward orbit tree: any node outside the
closed disk ``|z| <= R`` is dropped, since every orbit through it escapes.
The survival depth of ``z`` is the deepest level reached by a surviving
path, saturated at ``depth_cap``.

The per-point search is compiled with numba; rasters run it as an
order-independent per-pixel map (``prange``), so the result does not depend
on the thread count.  ``CORRDYN_THREADS`` caps the number of threads.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numba
import numpy as np
from numba import njit, prange

from .cloud import PointCloud
from .correspondence import CorrParams, forward_images_array

# the bundled TBB is too old for numba; the portable work-queue layer is
# deterministic for our per-pixel maps
if "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER = "workqueue"

__all__ = [
    "EscapeConfig",
    "Raster",
    "InclusionReport",
    "greatest_root",
    "escaping_radius",
    "escaping_radius_array",
    "radius_for",
    "survival_depth",
    "survival_depths",
    "survival_depth_reference",
    "raster_dynamical",
    "raster_parameter",
    "region_inclusion_check",
    "pixel_centers",
    "boundary_pixels",
    "apply_thread_cap",
]

DEFAULT_LAMBDA = 1.1
RASTER_DEPTH_CAP = 64
POINT_DEPTH_CAP = 256
DEFAULT_MARGIN = 1e-6


@dataclass(frozen=True)
class EscapeConfig:
    """Settings of the escape test.

    ``radius`` overrides the escaping radius computed from ``lam`` (used when
    several parameters must share one radius).  ``memo_quantum`` switches to
    the memoised reference search, keyed by points rounded to that grid.
    """

    lam: float = DEFAULT_LAMBDA
    depth_cap: int = POINT_DEPTH_CAP
    radius_margin: float = DEFAULT_MARGIN
    radius: float | None = None
    memo_quantum: float | None = None

    def __post_init__(self):
        if not self.lam > 1:
            raise ValueError("lam must exceed 1")
        if int(self.depth_cap) < 1:
            raise ValueError("depth_cap must be >= 1")
        if not self.radius_margin > 0:
            raise ValueError("radius_margin must be positive")
        if self.radius is not None and not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.memo_quantum is not None and not self.memo_quantum > 0:
            raise ValueError("memo_quantum must be positive")

    @classmethod
    def for_raster(cls, **kw) -> "EscapeConfig":
        kw.setdefault("depth_cap", RASTER_DEPTH_CAP)
        return cls(**kw)

    def replace(self, **kw) -> "EscapeConfig":
        return EscapeConfig(**{**self.__dict__, **kw})


# ---------------------------------------------------------------------------
# Escaping radius
# ---------------------------------------------------------------------------

def _h(x, beta, lam, absc):
    return x ** beta - lam * x - absc


def greatest_root(params: CorrParams, lam: float = DEFAULT_LAMBDA) -> float:
    """Greatest real root of ``x^(p/q) - lam x - |c| = 0`` (bracket + bisection).

    The function is convex on ``x >= 0`` and negative at its minimiser
    ``(lam/beta)^(1/(beta-1))``, so the greatest root lies to the right of it.
    The upper end of the final bracket is returned, which keeps the
    strict growth inequality on the safe side.
    """
    if not lam > 1:
        raise ValueError("lam must exceed 1")
    beta = params.p / params.q
    absc = abs(params.c)
    lo = (lam / beta) ** (1.0 / (beta - 1.0))
    hi = max(2.0 * lo, 1.0)
    while _h(hi, beta, lam, absc) <= 0:
        lo, hi = hi, 2.0 * hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _h(mid, beta, lam, absc) > 0:
            hi = mid
        else:
            lo = mid
    return hi


def escaping_radius(params: CorrParams, lam: float = DEFAULT_LAMBDA,
                    margin: float = DEFAULT_MARGIN) -> float:
    """An escaping radius ``R = x0 + margin``.

    Outside ``B_R`` every forward image satisfies ``|w| > lam |z|``.
    """
    return greatest_root(params, lam) + margin


def escaping_radius_array(p: int, q: int, absc, lam: float = DEFAULT_LAMBDA,
                          margin: float = DEFAULT_MARGIN) -> np.ndarray:
    """Vectorised :func:`escaping_radius` over an array of ``|c|`` values."""
    absc = np.asarray(absc, dtype=float)
    beta = p / q
    lo = np.full(absc.shape, (lam / beta) ** (1.0 / (beta - 1.0)))
    hi = np.maximum(2.0 * lo, 1.0)
    bad = _h(hi, beta, lam, absc) <= 0
    while np.any(bad):
        lo = np.where(bad, hi, lo)
        hi = np.where(bad, 2.0 * hi, hi)
        bad = _h(hi, beta, lam, absc) <= 0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        pos = _h(mid, beta, lam, absc) > 0
        hi = np.where(pos, mid, hi)
        lo = np.where(pos, lo, mid)
    return hi + margin


def radius_for(params: CorrParams, cfg: EscapeConfig) -> float:
    if cfg.radius is not None:
        return float(cfg.radius)
    return escaping_radius(params, cfg.lam, cfg.radius_margin)


# ---------------------------------------------------------------------------
# Survival depth
# ---------------------------------------------------------------------------

@njit(cache=True)
def _base_root(z, p, q):
    # |z|^(p/q) exp(i p Arg z / q), Arg in (-pi, pi]
    a = math.atan2(z.imag, z.real)
    if a == -math.pi:
        a = math.pi
    return abs(z) ** (p / q) * complex(math.cos(p * a / q), math.sin(p * a / q))


@njit(cache=True)
def _survival_one(z0, c, p, q, R, cap, roots):
    if abs(z0) > R:
        return 0
    bases = np.empty(cap + 1, dtype=np.complex128)
    nxt = np.zeros(cap + 1, dtype=np.int64)
    bases[0] = _base_root(z0, p, q)
    best = 0
    level = 0
    while level >= 0:
        j = nxt[level]
        if j == q:
            level -= 1
            continue
        nxt[level] = j + 1
        w = c + bases[level] * roots[j]
        if abs(w) <= R:
            lv = level + 1
            if lv > best:
                best = lv
                if lv == cap:
                    return cap
            bases[lv] = _base_root(w, p, q)
            nxt[lv] = 0
            level = lv
    return best


@njit(parallel=True, cache=True)
def _survival_many(zs, cs, Rs, p, q, cap, roots):
    n = zs.size
    out = np.empty(n, dtype=np.int32)
    for i in prange(n):
        out[i] = _survival_one(zs[i], cs[i], p, q, Rs[i], cap, roots)
    return out


def _roots(q: int) -> np.ndarray:
    r = np.exp(2j * np.pi * np.arange(q) / q)
    r[0] = 1.0
    return r.astype(np.complex128)


def apply_thread_cap() -> int:
    """Honour ``CORRDYN_THREADS``; returns the thread count in effect."""
    limit = numba.config.NUMBA_NUM_THREADS
    env = os.environ.get("CORRDYN_THREADS")
    n = limit
    if env:
        n = max(1, min(int(env), limit))
    numba.set_num_threads(n)
    return n


def survival_depth_reference(params: CorrParams, z: complex, R: float, cap: int,
                             memo_quantum: float | None = None) -> int:
    """Pure-Python pruned search; optionally memoised on a point grid.

    Memoisation keys nodes by ``round(z / memo_quantum)`` and the remaining
    depth, so it is only exact when distinct orbit points never share a cell.
    """
    z = complex(z)
    if abs(z) > R:
        return 0
    memo: dict = {}

    def below(node: complex, budget: int) -> int:
        # deepest surviving level under ``node``, at most ``budget``
        if budget == 0:
            return 0
        if memo_quantum is not None:
            key = (round(node.real / memo_quantum), round(node.imag / memo_quantum), budget)
            if key in memo:
                return memo[key]
        best = 0
        for w in forward_images_array(params, node):
            if abs(w) <= R:
                best = max(best, 1 + below(complex(w), budget - 1))
                if best == budget:
                    break
        if memo_quantum is not None:
            memo[key] = best
        return best

    return below(z, int(cap))


def survival_depth(params: CorrParams, z: complex, cfg: EscapeConfig = EscapeConfig()) -> int:
    """Deepest level ``k <= depth_cap`` reached by some forward orbit in ``|.| <= R``.

    ``z`` is reported in ``K_c`` iff the result equals ``depth_cap``.
    """
    R = radius_for(params, cfg)
    if cfg.memo_quantum is not None:
        return survival_depth_reference(params, z, R, int(cfg.depth_cap), cfg.memo_quantum)
    return int(_survival_one(complex(z), params.c, params.p, params.q, R,
                             int(cfg.depth_cap), _roots(params.q)))


def survival_depths(params: CorrParams, zs, cfg: EscapeConfig = EscapeConfig()) -> np.ndarray:
    """Vectorised :func:`survival_depth` (parallel, order independent)."""
    zs = np.asarray(zs, dtype=np.complex128)
    shape = zs.shape
    flat = np.ascontiguousarray(zs.ravel())
    R = radius_for(params, cfg)
    if cfg.memo_quantum is not None:
        out = np.array([survival_depth_reference(params, z, R, int(cfg.depth_cap), cfg.memo_quantum)
                        for z in flat], dtype=np.int32)
        return out.reshape(shape)
    apply_thread_cap()
    cs = np.full(flat.shape, params.c, dtype=np.complex128)
    Rs = np.full(flat.shape, R)
    out = _survival_many(flat, cs, Rs, params.p, params.q, int(cfg.depth_cap), _roots(params.q))
    return out.reshape(shape)


# ---------------------------------------------------------------------------
# Rasters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Raster:
    """Per-pixel survival depths; row 0 is the top row (``im = im_max``)."""

    bounds: tuple[float, float, float, float]  # re_min, re_max, im_min, im_max
    width: int
    height: int
    values: np.ndarray
    depth_cap: int
    meta: dict | None = None

    @property
    def pixel_diagonal(self) -> float:
        re_min, re_max, im_min, im_max = self.bounds
        return math.hypot((re_max - re_min) / self.width, (im_max - im_min) / self.height)

    def centers(self) -> np.ndarray:
        return pixel_centers(self.bounds, self.width, self.height)


def _check_bounds(bounds, width, height):
    re_min, re_max, im_min, im_max = map(float, bounds)
    if not (re_max > re_min and im_max > im_min):
        raise ValueError("empty bounds")
    if int(width) < 1 or int(height) < 1:
        raise ValueError("width and height must be >= 1")
    return (re_min, re_max, im_min, im_max)


def pixel_centers(bounds, width: int, height: int) -> np.ndarray:
    """Complex pixel centres, shape ``(height, width)``, top row at ``im_max``."""
    re_min, re_max, im_min, im_max = _check_bounds(bounds, width, height)
    x = re_min + (np.arange(width) + 0.5) * ((re_max - re_min) / width)
    y = im_max - (np.arange(height) + 0.5) * ((im_max - im_min) / height)
    return x[None, :] + 1j * y[:, None]


def raster_dynamical(params: CorrParams, cfg: EscapeConfig, bounds, width: int,
                     height: int) -> Raster:
    """Survival depth at every pixel centre of the dynamical plane."""
    bounds = _check_bounds(bounds, width, height)
    zs = pixel_centers(bounds, width, height)
    vals = survival_depths(params, zs, cfg)
    return Raster(bounds, int(width), int(height), vals, int(cfg.depth_cap),
                  {"plane": "dynamical", **params.to_dict(), "radius": radius_for(params, cfg)})


def raster_parameter(pq: tuple[int, int], cfg: EscapeConfig, bounds, width: int,
                     height: int) -> Raster:
    """Survival depth of the critical point 0 with ``c`` at every pixel centre.

    Pixels reaching ``depth_cap`` approximate ``M_{beta,0} = {c : 0 in K_c}``.
    Each pixel uses its own escaping radius unless ``cfg.radius`` is set.
    """
    p, q = map(int, pq)
    CorrParams(p, q)  # validates the exponents
    bounds = _check_bounds(bounds, width, height)
    cs = np.ascontiguousarray(pixel_centers(bounds, width, height).ravel())
    if cfg.radius is not None:
        Rs = np.full(cs.shape, float(cfg.radius))
    else:
        Rs = escaping_radius_array(p, q, np.abs(cs), cfg.lam, cfg.radius_margin)
    apply_thread_cap()
    zs = np.zeros_like(cs)
    vals = _survival_many(zs, cs, Rs, p, q, int(cfg.depth_cap), _roots(q))
    return Raster(bounds, int(width), int(height), vals.reshape(int(height), int(width)),
                  int(cfg.depth_cap), {"plane": "parameter", "p": p, "q": q})


def boundary_pixels(raster: Raster) -> PointCloud:
    """Centres of saturated pixels with an unsaturated 8-neighbour.

    Pixels on the raster edge count their outside neighbours as unsaturated.
    """
    full = raster.values >= raster.depth_cap
    padded = np.pad(full, 1, constant_values=False)
    interior = np.ones_like(full)
    h, w = full.shape
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy or dx:
                interior &= padded[1 + dy:1 + dy + h, 1 + dx:1 + dx + w]
    edge = full & ~interior
    pts = raster.centers()[edge]
    return PointCloud(pts, {"generator": "raster-boundary", "depth_cap": raster.depth_cap})


# ---------------------------------------------------------------------------
# Escaping-region inclusion chain
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InclusionReport:
    violations: int
    total: int
    params: dict

    def to_json(self) -> str:
        return json.dumps({"violations": self.violations, "total": self.total,
                           "params": self.params}, sort_keys=True)


def region_inclusion_check(params: CorrParams, c0: complex, m: int, samples,
                           cfg: EscapeConfig = EscapeConfig()) -> InclusionReport:
    """Count samples breaking ``R_{m+2,c} ⊂ R_{m+1,c0} ⊂ R_{m,c}``.

    ``R_{k,c} = f_c^{-k}(B_R)`` is the set of points with survival depth at
    least ``k``.  Both parameters share one radius, the larger of their two
    escaping radii (``cfg.radius`` wins when given).
    """
    if int(m) < 1:
        raise ValueError("m must be >= 1")
    m = int(m)
    pts = samples.points if isinstance(samples, PointCloud) else np.asarray(samples, dtype=complex)
    base = params.with_c(c0)
    if cfg.radius is None:
        R = max(escaping_radius(params, cfg.lam, cfg.radius_margin),
                escaping_radius(base, cfg.lam, cfg.radius_margin))
    else:
        R = float(cfg.radius)
    s_c = survival_depths(params, pts, cfg.replace(radius=R, depth_cap=m + 2, memo_quantum=None))
    s_0 = survival_depths(base, pts, cfg.replace(radius=R, depth_cap=m + 1, memo_quantum=None))
    in_c2 = s_c >= m + 2
    in_c0 = s_0 >= m + 1
    in_c = s_c >= m
    bad = (in_c2 & ~in_c0) | (in_c0 & ~in_c)
    return InclusionReport(
        int(bad.sum()), int(pts.size),
        {**params.to_dict(), "c0": {"re": complex(c0).real, "im": complex(c0).imag},
         "m": m, "radius": R},
    )


def _grid_in_disk(R: float, n_side: int) -> np.ndarray:
    """``n_side x n_side`` grid over ``[-R, R]^2`` (used for sampled checks)."""
    t = np.linspace(-R, R, n_side)
    return (t[None, :] + 1j * t[:, None]).ravel()


def grid_samples(R: float, n_side: int) -> PointCloud:
    return PointCloud(_grid_in_disk(R, n_side), {"generator": "grid", "radius": R, "n_side": n_side})
