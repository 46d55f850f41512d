"""Julia sets by inverse iteration, repelling cycles and related checks.

Backward orbits of a point outside the post-critical set accumulate on
``J_c``.  :func:`inverse_iteration` runs independent random walkers, each
with its own counter-based (Philox) stream spawned from one seed; the
walkers advance in lockstep and their outputs are concatenated in walker
order, so the cloud depends only on the configuration.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .centres import postcritical_cloud
from .cloud import PointCloud, dedupe
from .correspondence import (
    BranchAnchor,
    CorrParams,
    backward_image_by_index,
    backward_images_array,
    branch_derivative,
    forward_image_by_index,
    forward_images_array,
    track_branch,
)
from .cycles import CycleRecord
from .errors import (
    AmbiguousContinuation,
    ClassChanged,
    DepthOverflow,
    EmptyCloud,
    EmptySeed,
    NoConvergence,
    NotCovered,
    SeedOnPostCritical,
)
from .escape import escaping_radius

__all__ = [
    "MotionTrace",
    "default_seed",
    "inverse_iteration",
    "coupled_inverse_iteration",
    "backward_tree",
    "repelling_cycle",
    "hausdorff_distance",
    "directed_distance",
    "leo_cover",
    "trace_cycle_motion",
    "fixed_points",
]

POSTCRITICAL_DEPTH = 32
POSTCRITICAL_RADIUS = 1e-9
DEDUPE_TOL = 1e-12
POINT_BUDGET = 2 ** 20
NEWTON_MAX_ITER = 100
NEWTON_STEP_TOL = 1e-12
DEFAULT_WALKERS = 64


def _xy(points: np.ndarray) -> np.ndarray:
    return np.column_stack([points.real, points.imag])


def _pc_tree(params: CorrParams) -> cKDTree:
    return cKDTree(_xy(postcritical_cloud(params, POSTCRITICAL_DEPTH).points))


def _on_postcritical(tree: cKDTree, z: complex) -> bool:
    if tree.n == 0:
        return False
    dist, _ = tree.query([complex(z).real, complex(z).imag])
    return bool(dist <= POSTCRITICAL_RADIUS)


def fixed_points(params: CorrParams) -> list[tuple[complex, complex]]:
    """Fixed points ``z in f_c(z)`` with their multipliers.

    Roots of ``(z - c)^q - z^p``, polished by Newton, sorted by decreasing
    ``|multiplier|`` then by coordinates.
    """
    p, q, c = params.p, params.q, params.c
    coeffs = np.zeros(p + 1, dtype=complex)
    coeffs[0] -= 1  # -z^p
    # (z - c)^q expanded into the low-order coefficients
    binom = np.poly1d([1, -c]) ** q
    coeffs[p + 1 - (q + 1):] += binom.coeffs
    out = []
    for z in np.roots(coeffs):
        z = complex(z)
        for _ in range(50):
            f = (z - c) ** q - z ** p
            df = q * (z - c) ** (q - 1) - p * z ** (p - 1)
            if df == 0:
                break
            step = f / df
            z -= step
            if abs(step) < 1e-15 * max(1.0, abs(z)):
                break
        if z == 0 or z == c:
            continue
        out.append((z, branch_derivative(params, z, z)))
    out.sort(key=lambda t: (-round(abs(t[1]), 9), round(t[0].real, 9), round(t[0].imag, 9)))
    return out


def default_seed(params: CorrParams, rng_seed: int = 0) -> complex:
    """A repelling fixed point off the truncated post-critical set.

    Falls back to a random point on ``|z| = R/2`` (re-drawn until it clears
    the post-critical set).
    """
    R = escaping_radius(params)
    tree = _pc_tree(params)
    for z, mult in fixed_points(params):
        if abs(mult) > 1 + 1e-9 and abs(z) <= R and not _on_postcritical(tree, z):
            return z
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(rng_seed), 1])))
    while True:
        z = 0.5 * R * complex(np.exp(2j * np.pi * rng.random()))
        if not _on_postcritical(tree, z):
            return z


def _check_seed(params: CorrParams, seed: complex, inside: bool = True) -> None:
    if inside and abs(seed) > escaping_radius(params):
        raise ValueError(f"seed {seed} lies outside the escape disk")
    if _on_postcritical(_pc_tree(params), seed):
        raise SeedOnPostCritical(f"seed {seed} is within {POSTCRITICAL_RADIUS} of the post-critical set")


def _walker_choices(rng_seed: int, n_walkers: int, steps: int, p: int) -> np.ndarray:
    """Branch choices, shape ``(n_walkers, steps)``; one Philox stream per walker."""
    children = np.random.SeedSequence(int(rng_seed)).spawn(n_walkers)
    return np.stack([np.random.Generator(np.random.Philox(ss)).integers(0, p, size=steps)
                     for ss in children])


def inverse_iteration(params: CorrParams, seed: complex | None = None, burn_in: int = 100,
                      n_points: int = 10_000, rng_seed: int = 0,
                      n_walkers: int = DEFAULT_WALKERS) -> PointCloud:
    """Random backward orbits; each step picks one of the ``p`` preimages uniformly."""
    if int(n_points) < 1 or int(burn_in) < 0 or int(n_walkers) < 1:
        raise ValueError("need n_points >= 1, burn_in >= 0, n_walkers >= 1")
    seed = default_seed(params, rng_seed) if seed is None else complex(seed)
    _check_seed(params, seed)
    W = min(int(n_walkers), int(n_points))
    per = -(-int(n_points) // W)
    choices = _walker_choices(rng_seed, W, int(burn_in) + per, params.p)
    z = np.full(W, seed, dtype=complex)
    out = np.empty((W, per), dtype=complex)
    for t in range(choices.shape[1]):
        z = backward_image_by_index(params, z, choices[:, t])
        if t >= burn_in:
            out[:, t - burn_in] = z
    pts = out.ravel()[: int(n_points)]
    return PointCloud(pts, {"generator": "inverse", **params.to_dict(),
                            "seed": {"re": seed.real, "im": seed.imag}, "burn_in": int(burn_in),
                            "n_points": int(n_points), "rng_seed": int(rng_seed),
                            "n_walkers": W})


def coupled_inverse_iteration(params: CorrParams, c_other: complex, seed: complex | None = None,
                              burn_in: int = 100, n_points: int = 10_000, rng_seed: int = 0,
                              n_walkers: int = DEFAULT_WALKERS) -> tuple[PointCloud, PointCloud]:
    """Inverse iteration at ``c`` and a shadowing orbit at ``c_other``.

    The first cloud equals :func:`inverse_iteration` at ``c``.  The second
    walks backward at ``c_other`` from the same seed, choosing at each step
    the preimage closest to the reference orbit, so corresponding points
    follow the motion of the Julia set between the two parameters.
    """
    other = params.with_c(c_other)
    seed = default_seed(params, rng_seed) if seed is None else complex(seed)
    _check_seed(params, seed)
    _check_seed(other, seed)
    W = min(int(n_walkers), int(n_points))
    per = -(-int(n_points) // W)
    choices = _walker_choices(rng_seed, W, int(burn_in) + per, params.p)
    z = np.full(W, seed, dtype=complex)
    y = z.copy()
    out_z = np.empty((W, per), dtype=complex)
    out_y = np.empty((W, per), dtype=complex)
    rows = np.arange(W)
    for t in range(choices.shape[1]):
        z = backward_image_by_index(params, z, choices[:, t])
        cand = backward_images_array(other, y)
        y = cand[rows, np.argmin(np.abs(cand - z[:, None]), axis=1)]
        if t >= burn_in:
            out_z[:, t - burn_in] = z
            out_y[:, t - burn_in] = y
    meta = {"generator": "inverse", "seed": {"re": seed.real, "im": seed.imag},
            "burn_in": int(burn_in), "n_points": int(n_points), "rng_seed": int(rng_seed),
            "n_walkers": W}
    return (PointCloud(out_z.ravel()[: int(n_points)], {**meta, **params.to_dict()}),
            PointCloud(out_y.ravel()[: int(n_points)], {**meta, **other.to_dict(),
                                                       "shadowing": params.to_dict()["c"]}))


def backward_tree(params: CorrParams, seed: complex, depth: int,
                  budget: int = POINT_BUDGET) -> PointCloud:
    """All preimages of ``seed`` at level ``depth`` (merged within 1e-12)."""
    if int(depth) < 0:
        raise ValueError("depth must be >= 0")
    seed = complex(seed)
    # preimages of any point fall into B_R after one step, so only the
    # post-critical condition matters for a tree seed
    _check_seed(params, seed, inside=False)
    cur = np.array([seed])
    for _ in range(int(depth)):
        if cur.size * params.p > budget:
            raise DepthOverflow(f"backward tree level exceeds {budget} points")
        cur = dedupe(backward_images_array(params, cur).ravel(), DEDUPE_TOL)
    return PointCloud(cur, {"generator": "inverse", "tree": True, **params.to_dict(),
                            "seed": {"re": seed.real, "im": seed.imag}, "depth": int(depth)})


def _orbit(params: CorrParams, anchors: Sequence[BranchAnchor], z: complex):
    """Orbit of ``z`` along anchored branches, with the derivative product."""
    pts = [complex(z)]
    der = 1 + 0j
    for a in anchors:
        w = complex(track_branch(params, a, pts[-1]))
        der *= branch_derivative(params, pts[-1], w)
        pts.append(w)
    return pts, der


def _newton_cycle(params: CorrParams, anchors: list[BranchAnchor], z: complex) -> CycleRecord:
    for _ in range(NEWTON_MAX_ITER):
        pts, der = _orbit(params, anchors, z)
        if der == 1:
            raise NoConvergence("multiplier equals 1; Newton step undefined")
        step = (pts[-1] - z) / (der - 1)
        z = z - step
        if not math.isfinite(abs(z)):
            raise NoConvergence("Newton iterate diverged")
        # re-anchor on the current orbit so the branches follow the iterate
        anchors = [BranchAnchor(pts[i], pts[i + 1]) for i in range(len(anchors))]
        if abs(step) < NEWTON_STEP_TOL:
            pts, _ = _orbit(params, anchors, z)
            return CycleRecord.from_points(params, pts[:-1])
    raise NoConvergence(f"cycle Newton did not converge within {NEWTON_MAX_ITER} steps")


def repelling_cycle(params: CorrParams, word: Sequence[int], seed: complex) -> CycleRecord:
    """Newton solve of ``F_w(z) = z`` along the word's branches from ``seed``."""
    word = [int(j) for j in word]
    if not word:
        raise ValueError("word must be nonempty")
    pts = [complex(seed)]
    for j in word:
        if not 0 <= j < params.q:
            raise ValueError(f"root index {j} outside 0..{params.q - 1}")
        pts.append(complex(forward_image_by_index(params, pts[-1], j)))
    anchors = [BranchAnchor(pts[i], pts[i + 1]) for i in range(len(word))]
    return _newton_cycle(params, anchors, complex(seed))


def directed_distance(a: np.ndarray, b: np.ndarray) -> float:
    """``sup_{x in a} dist(x, b)``, exact nearest neighbours."""
    dist, _ = cKDTree(_xy(b)).query(_xy(a), k=1)
    return float(dist.max())


def hausdorff_distance(a, b) -> float:
    """Hausdorff distance between two finite point sets."""
    pa = a.points if isinstance(a, PointCloud) else np.asarray(a, dtype=complex).ravel()
    pb = b.points if isinstance(b, PointCloud) else np.asarray(b, dtype=complex).ravel()
    if pa.size == 0 or pb.size == 0:
        raise EmptyCloud("Hausdorff distance needs two nonempty clouds")
    return max(directed_distance(pa, pb), directed_distance(pb, pa))


def leo_cover(params: CorrParams, cloud: PointCloud, center: complex, radius: float,
              eps: float, n_max: int = 30, delta: float | None = None) -> int:
    """Least ``n <= n_max`` whose forward image of the disk piece covers the cloud.

    The piece is the set of cloud points inside the disk.  Each step maps it
    by all ``q`` branches and resamples the image onto the cloud: every
    cloud point within ``delta`` of an image is kept.  The default ``delta``
    is the larger of ``eps / 20`` and twice the median nearest-neighbour
    spacing of the cloud.
    Images with no cloud point that close have left the Julia set and drop
    out.  Resampling keeps the piece at the cloud's density; it can enlarge
    the piece by at most ``delta`` per step.
    """
    if cloud.empty:
        raise EmptyCloud("LEO check needs a nonempty cloud")
    if not radius > 0 or not eps > 0:
        raise ValueError("radius and eps must be positive")
    pts = cloud.points
    tree = cKDTree(_xy(pts))
    if delta is None:
        spacing = tree.query(_xy(pts), k=2)[0][:, 1] if pts.size > 1 else np.zeros(1)
        delta = max(eps / 20, 2 * float(np.median(spacing)))
    piece = np.abs(pts - complex(center)) < radius
    if not piece.any():
        raise EmptySeed(f"no cloud point within {radius} of {center}")
    for n in range(int(n_max) + 1):
        cover, _ = cKDTree(_xy(pts[piece])).query(_xy(pts), k=1)
        if cover.max() <= eps:
            return n
        if n == int(n_max):
            break
        imgs = forward_images_array(params, pts[piece]).ravel()
        piece = np.zeros(pts.size, dtype=bool)
        for hits in tree.query_ball_point(_xy(imgs), delta):
            piece[hits] = True
        if not piece.any():
            break
    raise NotCovered(f"disk at {center} did not cover the cloud within {n_max} steps")


@dataclass(frozen=True)
class MotionTrace:
    base_c: complex
    path: tuple[complex, ...]
    cycles: tuple[CycleRecord, ...]

    def to_json(self) -> str:
        return json.dumps([r.to_dict() for r in self.cycles], sort_keys=True)


def trace_cycle_motion(params_base: CorrParams, cycle: CycleRecord, word,
                       c_path: Sequence[complex]) -> MotionTrace:
    """Continue a repelling cycle along a parameter path.

    Each parameter is seeded by the previous solution, with branches shifted
    by the parameter change (``phi_{c'} = phi_c - c + c'``).  The record at
    ``c_path[0] == params_base.c`` is the input cycle itself.
    """
    path = [complex(c) for c in c_path]
    if not path:
        raise ValueError("empty parameter path")
    if cycle.cls != "repelling":
        raise ValueError("trace needs a repelling cycle")
    records: list[CycleRecord] = []
    prev_c = params_base.c
    prev = cycle
    for c in path:
        if c == prev_c:
            rec = prev
        else:
            P = params_base.with_c(c)
            pts = list(prev.points)
            anchors = [BranchAnchor(pts[i], pts[(i + 1) % len(pts)] - prev_c + c)
                       for i in range(len(pts))]
            try:
                rec = _newton_cycle(P, anchors, pts[0])
            except AmbiguousContinuation as exc:
                raise NoConvergence(f"continuation to c={c} failed: {exc}") from exc
        if rec.cls != "repelling":
            raise ClassChanged(f"cycle became {rec.cls} at c={c}",
                               trace=MotionTrace(path[0], tuple(path[:len(records)]), tuple(records)))
        records.append(rec)
        prev, prev_c = rec, c
    return MotionTrace(path[0], tuple(path), tuple(records))
