"""The conformal IFS induced by a system of branches, and the dual Julia set.

On the last disk ``D_n`` of a system of branches the correspondence has
``q`` univalent branches ``psi_k``; composing each with the chain
``phi_{n-1} o ... o phi_1`` gives contractions ``f_k: D_n -> D_n``.  Their
limit set ``Lambda_0`` is represented by one point per level-``j`` cylinder
(the image of the base centre under the word), which is within
``lam_est^j * 2 r`` of the true limit set.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .branchsys import SAFETY, BranchSystem, Disk, build_branch_system, disk_samples
from .centres import MAX_SEARCH_PERIOD, TOL_CENTER, CentreRecord, simple_centre_verify
from .cloud import PointCloud, cloud_diameter, dedupe
from .correspondence import (
    BranchAnchor,
    CorrParams,
    branch_derivative_array,
    forward_images_array,
    track_branch,
)
from .cycles import CycleRecord
from .errors import (
    DepthOverflow,
    DomainEscape,
    NotCentre,
    NotContracting,
    OverlapDetected,
    Undecided,
)
from .escape import EscapeConfig, survival_depth
from .julia import hausdorff_distance

__all__ = [
    "CIFSystem",
    "OmegaReport",
    "cifs_from_system",
    "hutchinson_step",
    "limit_set",
    "limit_set_levels",
    "cylinder_diameters",
    "dual_julia",
    "attracting_cycle",
    "omega_forward",
    "POINT_BUDGET",
]

POINT_BUDGET = 2 ** 20
BOUNDARY_SAMPLES = 256
BANACH_STEP_TOL = 1e-12
BANACH_MAX_ITER = 10_000


@dataclass(frozen=True)
class CIFSystem:
    system: BranchSystem
    psi: tuple[BranchAnchor, ...]
    contractions: tuple[float, ...]
    image_disks: tuple[Disk, ...]

    @property
    def params(self) -> CorrParams:
        return self.system.params

    @property
    def base(self) -> Disk:
        return self.system.base

    @property
    def q(self) -> int:
        return len(self.psi)

    @property
    def lam_est(self) -> float:
        return max(self.contractions)

    def apply(self, k: int, z):
        """``f_k(z)``: branch ``psi_k`` then the chain ``phi_1..phi_{n-1}``."""
        return self.system.chain(track_branch(self.params, self.psi[k], z))

    def derivative(self, k: int, z) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        w = track_branch(self.params, self.psi[k], z)
        der = branch_derivative_array(self.params, z, w)
        for i in range(self.system.n - 1):
            nxt = track_branch(self.params, self.system.anchors[i], w)
            der = der * branch_derivative_array(self.params, w, nxt)
            w = nxt
        return der


def _image_disk(cifs_like, k: int, base: Disk, bound: float) -> Disk:
    """Circle enclosing ``f_k(base)``, from sampled boundary images.

    ``f_k`` is univalent on the base, so the image of the disk is bounded by
    the image of its circle; the chord gap between samples is at most
    ``bound * 2 pi r / N``.
    """
    t = np.exp(2j * np.pi * np.arange(BOUNDARY_SAMPLES) / BOUNDARY_SAMPLES)
    img = cifs_like.apply(k, base.center + base.radius * t)
    mid = complex(0.5 * (img.real.max() + img.real.min()), 0.5 * (img.imag.max() + img.imag.min()))
    gap = bound * 2 * math.pi * base.radius / BOUNDARY_SAMPLES
    return Disk(mid, float(np.abs(img - mid).max()) + gap)


def cifs_from_system(system: BranchSystem) -> CIFSystem:
    """The ``q`` contractions ``f_k = g_c o psi_k`` of ``D_n`` into itself."""
    if system.kind != "branches":
        raise ValueError("a CIFS needs a system of branches (D_n must avoid 0)")
    params, base = system.params, system.base
    psi = tuple(BranchAnchor(base.center, complex(w))
                for w in forward_images_array(params, base.center))
    draft = CIFSystem(system, psi, (), ())
    pts = disk_samples(base)
    lams = []
    disks = []
    for k in range(params.q):
        M = float(np.abs(draft.derivative(k, pts)).max())
        lams.append(SAFETY * M)
        disks.append(_image_disk(draft, k, base, M))
    if max(lams) >= 1:
        raise NotContracting(f"sampled contraction {max(lams):.3g} >= 1")
    for k, D in enumerate(disks):
        if not D.inside(base):
            raise NotContracting(f"f_{k}(D_n) is not compactly inside D_n")
    for i in range(len(disks)):
        for j in range(i + 1, len(disks)):
            if not disks[i].disjoint(disks[j]):
                raise OverlapDetected(f"f_{i}(D_n) and f_{j}(D_n) intersect")
    return CIFSystem(system, psi, tuple(lams), tuple(disks))


def hutchinson_step(cifs: CIFSystem, cloud: PointCloud) -> PointCloud:
    """``H(A) = U_k f_k(A)``; ordered by map index, then point index."""
    pts = cloud.points
    if pts.size == 0:
        return PointCloud(pts, {**cloud.meta, "generator": "hutchinson"})
    out = np.concatenate([np.atleast_1d(cifs.apply(k, pts)) for k in range(cifs.q)])
    meta = {**cloud.meta, "generator": "hutchinson", "depth": cloud.meta.get("depth", 0) + 1}
    return PointCloud(out, meta)


def _meta(cifs: CIFSystem, **extra) -> dict:
    return {"generator": "hutchinson", **cifs.params.to_dict(), "d": cifs.system.d, **extra}


def limit_set_levels(cifs: CIFSystem, depth: int, budget: int = POINT_BUDGET) -> PointCloud:
    """``H^depth({centre of D_n})``: one point per level-``depth`` cylinder.

    Point ``i`` carries the word given by the base-``q`` digits of ``i``
    (most significant = outermost map), so level-``l`` cylinders are
    contiguous blocks of ``q^(depth - l)`` points.
    """
    if cifs.q ** int(depth) > budget:
        raise DepthOverflow(f"{cifs.q}^{depth} points exceed the budget {budget}")
    cloud = PointCloud(np.array([cifs.base.center]), _meta(cifs, depth=0))
    for _ in range(int(depth)):
        cloud = hutchinson_step(cifs, cloud)
    return cloud


def limit_set(cifs: CIFSystem, tol: float, budget: int = POINT_BUDGET) -> PointCloud:
    """Cylinder points at the first level where ``lam_est^j * 2 r < tol``."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    lam, diam = cifs.lam_est, 2 * cifs.base.radius
    j = 0
    while lam ** j * diam >= tol:
        j += 1
    if cifs.q ** j > budget:
        raise DepthOverflow(f"tol {tol:g} needs {cifs.q}^{j} points (budget {budget})")
    return limit_set_levels(cifs, j, budget).with_meta(tol=tol, depth=j)


def cylinder_diameters(cifs: CIFSystem, levels: int, extra: int = 4) -> np.ndarray:
    """Largest sampled cylinder diameter at levels ``1..levels``.

    Each cylinder is sampled by its ``q^extra`` descendants (or more).
    """
    depth = int(levels) + int(extra)
    pts = limit_set_levels(cifs, depth).points
    out = []
    for level in range(1, int(levels) + 1):
        block = cifs.q ** (depth - level)
        out.append(max(cloud_diameter(pts[s:s + block]) for s in range(0, pts.size, block)))
    return np.array(out)


def _push_through_chain(system: BranchSystem, lam0: np.ndarray) -> list[np.ndarray]:
    """``g_c^j(Lambda_0)`` for j = 0..n-1: all ``psi`` images, then the chain."""
    pieces = [lam0]
    if system.n == 1:
        return pieces
    cur = forward_images_array(system.params, lam0).ravel()
    pieces.append(cur)
    for i in range(system.n - 2):
        cur = np.atleast_1d(track_branch(system.params, system.anchors[i], cur))
        pieces.append(cur)
    return pieces


def _centre_record(params: CorrParams, centre) -> CentreRecord:
    if isinstance(centre, CentreRecord):
        return centre
    a = complex(centre)
    for n in range(1, MAX_SEARCH_PERIOD + 1):
        try:
            rec = simple_centre_verify(params.with_c(a), n)
        except (NotCentre, Undecided):
            continue
        if rec.simple:
            return rec
    raise NotCentre(f"{a} is not a simple centre of period <= {MAX_SEARCH_PERIOD}")


def dual_julia(system_or_centre, params: CorrParams, tol: float,
               depth_cap: int = 256) -> PointCloud:
    """Sample of ``J_c*``.

    Empty when the critical point escapes; the cycle of 0 at a simple
    centre; otherwise the limit set of the induced CIFS pushed around the
    cycle, ``U_j g_c^j(Lambda_0)``.
    """
    meta = {"generator": "dual", **params.to_dict(), "tol": tol}
    if survival_depth(params, 0j, EscapeConfig(depth_cap=depth_cap)) < depth_cap:
        return PointCloud(np.empty(0, complex), {**meta, "reason": "critical point escapes"})
    if isinstance(system_or_centre, BranchSystem):
        system = system_or_centre
    else:
        rec = _centre_record(params, system_or_centre)
        if abs(params.c - rec.c) <= TOL_CENTER:
            return PointCloud(np.array(rec.cycle), {**meta, "generator": "cycles", "n": rec.n})
        system = build_branch_system(params, rec.c, rec.word)
    lam0 = limit_set(cifs_from_system(system), tol).points
    pts = np.concatenate(_push_through_chain(system, lam0))
    return PointCloud(pts, {**meta, "d": system.d, "n": system.n})


def attracting_cycle(cifs: CIFSystem, word) -> CycleRecord:
    """Fixed point of ``f_{k_0} o ... o f_{k_{j-1}}`` and its full cycle.

    Banach iteration from the base centre; the multiplier is the
    chain-rule product of branch derivatives around the ``j * n`` points.
    """
    word = [int(k) for k in word]
    if not word:
        raise ValueError("word must be nonempty")
    if any(not 0 <= k < cifs.q for k in word):
        raise ValueError(f"symbols must lie in 0..{cifs.q - 1}")

    def F(z):
        for k in reversed(word):
            z = complex(cifs.apply(k, z))
        return z

    z = cifs.base.center
    for _ in range(BANACH_MAX_ITER):
        nz = F(z)
        step = abs(nz - z)
        z = nz
        if step < BANACH_STEP_TOL:
            break
    else:
        raise NotContracting("Banach iteration did not settle")

    system, params = cifs.system, cifs.params
    points = []
    cur = z
    for k in reversed(word):
        points.append(cur)
        cur = complex(track_branch(params, cifs.psi[k], cur))
        for i in range(system.n - 1):
            points.append(cur)
            cur = complex(track_branch(params, system.anchors[i], cur))
    return CycleRecord.from_points(params, points)


@dataclass(frozen=True)
class OmegaReport:
    steps: int
    tail_size: int
    distance: float | None

    def to_dict(self) -> dict:
        return {"steps": self.steps, "tail_size": self.tail_size, "distance": self.distance}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _forward_restricted(system: BranchSystem, pts: np.ndarray) -> np.ndarray:
    """One step of the correspondence restricted to the system's disks."""
    params = system.params
    in_ball = np.abs(pts) < system.d
    out = [forward_images_array(params, pts[in_ball]).ravel()]
    rest = pts[~in_ball]
    placed = np.zeros(rest.shape, dtype=bool)
    for i, D in enumerate(system.disks[:-1]):
        sel = D.contains(rest) & ~placed
        if np.any(sel):
            out.append(np.atleast_1d(track_branch(params, system.anchors[i], rest[sel])))
            placed |= sel
    if not np.all(placed):
        bad = rest[~placed][0]
        raise DomainEscape(f"orbit point {bad} lies outside B_d and every D_i")
    return np.concatenate(out)


def omega_forward(system: BranchSystem, z: complex, n_steps: int, tol: float = 1e-12,
                  reference: PointCloud | None = None,
                  budget: int = POINT_BUDGET) -> tuple[PointCloud, OmegaReport]:
    """Forward orbit of ``z`` under the restricted correspondence.

    Points in ``B_d`` take all ``q`` images; points in ``D_i`` follow
    ``phi_i``.  Images closer than ``tol`` are merged.  The tail (last ``n``
    sets) is compared with ``reference`` (by default the dual Julia set at
    ``tol`` when the system records its centre).
    """
    n = system.n
    if int(n_steps) < n:
        raise ValueError("n_steps must cover at least one period")
    cur = np.array([complex(z)])
    history = []
    for _ in range(int(n_steps)):
        cur = dedupe(_forward_restricted(system, cur), tol)
        if cur.size > budget:
            raise DepthOverflow("forward orbit set exceeds the point budget")
        history.append(cur)
    tail = np.concatenate(history[-n:])
    cloud = PointCloud(tail, {"generator": "forward", **system.params.to_dict(),
                              "z": {"re": complex(z).real, "im": complex(z).imag},
                              "steps": int(n_steps)})
    if reference is None and system.centre is not None:
        reference = dual_julia(CentreRecord(system.params.p, system.params.q, system.centre, n,
                                            system.word, True, 0,
                                            tuple(_cycle_at(system))),
                               system.params, max(tol, 1e-9))
    distance = None
    if reference is not None and not reference.empty:
        distance = hausdorff_distance(cloud, reference)
    return cloud, OmegaReport(int(n_steps), int(tail.size), distance)


def _cycle_at(system: BranchSystem) -> list[complex]:
    from .correspondence import apply_word_forward

    params = system.params.with_c(system.centre)
    return [0j] + apply_word_forward(params, 0j, system.word)[:-1]
