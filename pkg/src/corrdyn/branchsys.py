"""Critical systems and systems of branches around a simple centre's cycle.

A simple centre ``a`` with cycle ``0 -> z_1 -> ... -> z_n = 0`` gives, for
``c`` near ``a`` and small ``d``, a chain of round disks::

    B_d --f_c--> D_1 --phi_1--> D_2 --> ... --phi_{n-1}--> D_n

with ``D_1 = {|z - c| < d^beta}`` and each ``phi_i`` a univalent branch of
``f_c`` following the cycle.  The chain is *critical* when ``0 in D_n`` and a
*system of branches* when ``D_n`` sits compactly in ``B_d - {0}`` inside a
sector of angle ``2 pi / p``.

Branches are stored as anchors (a disk centre and its chosen image) and
evaluated by straight-line continuation inside the (convex, 0-free) disks.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .centres import CentreRecord
from .correspondence import (
    BranchAnchor,
    CorrParams,
    apply_word_forward,
    branch_derivative_array,
    forward_images_array,
    track_branch,
)
from .errors import AmbiguousContinuation, ConstructionFailed, SingularDerivative, TooCloseToCenter
from .escape import EscapeConfig, survival_depths

__all__ = [
    "Disk",
    "BranchSystem",
    "disk_samples",
    "derivative_bound_C0",
    "f_of_c",
    "build_critical_system",
    "build_branch_system",
    "verify_system",
    "SAFETY",
]

SAFETY = 1.5
MIN_F_OF_C = 1e-12
ESCAPE_SAMPLE_CAP = 64


@dataclass(frozen=True)
class Disk:
    center: complex
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0:
            raise ValueError("disk radius must be positive")

    def contains(self, z) -> np.ndarray:
        return np.abs(np.asarray(z) - self.center) < self.radius

    def disjoint(self, other: "Disk") -> bool:
        return abs(self.center - other.center) > self.radius + other.radius

    def inside(self, other: "Disk") -> bool:
        """Compact inclusion of ``self`` in ``other``."""
        return abs(self.center - other.center) + self.radius < other.radius


def disk_samples(disk: Disk, n_rings: int = 4, n_theta: int = 64) -> np.ndarray:
    """Centre plus ``n_rings`` concentric circles (the last one the boundary)."""
    t = np.exp(2j * np.pi * np.arange(n_theta) / n_theta)
    rings = [disk.center + disk.radius * (k / n_rings) * t for k in range(1, n_rings + 1)]
    return np.concatenate([[disk.center], *rings])


@dataclass(frozen=True)
class BranchSystem:
    """Disk chain ``D_1..D_n`` with anchors for ``phi_1..phi_{n-1}``.

    ``anchors[i]`` anchors the branch leaving ``disks[i]`` (0-based), so a
    period-``n`` cycle carries ``n - 1`` anchors.
    """

    params: CorrParams
    d: float
    disks: tuple[Disk, ...]
    anchors: tuple[BranchAnchor, ...]
    kind: str
    escape_depth: int
    C0: float
    word: tuple[int, ...] = ()
    centre: complex | None = None
    checks: dict = field(default_factory=dict, compare=False)

    @property
    def n(self) -> int:
        return len(self.disks)

    @property
    def base(self) -> Disk:
        return self.disks[-1]

    @property
    def ball(self) -> Disk:
        return Disk(0j, self.d)

    def chain(self, z, start: int = 0, stop: int | None = None):
        """Apply ``phi`` from disk ``start`` up to disk ``stop`` (0-based)."""
        stop = self.n - 1 if stop is None else stop
        for i in range(start, stop):
            z = track_branch(self.params, self.anchors[i], z)
        return z

    def g(self, z):
        """``g_c = phi_{n-1} o ... o phi_1`` on ``D_1``."""
        return self.chain(z)

    def to_dict(self) -> dict:
        c = self.params.c
        out = {
            "p": self.params.p, "q": self.params.q, "c": {"re": c.real, "im": c.imag},
            "d": self.d, "kind": self.kind, "m": self.escape_depth, "C0": self.C0,
            "word": list(self.word),
            "disks": [{"re": D.center.real, "im": D.center.imag, "r": D.radius} for D in self.disks],
            "anchors": [{"z": {"re": a.source.real, "im": a.source.imag},
                         "w": {"re": a.target.real, "im": a.target.imag}} for a in self.anchors],
        }
        if self.centre is not None:
            out["centre"] = {"re": self.centre.real, "im": self.centre.imag}
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, obj: dict) -> "BranchSystem":
        cx = lambda v: complex(v["re"], v["im"])  # noqa: E731
        return cls(
            CorrParams(int(obj["p"]), int(obj["q"]), cx(obj["c"])), float(obj["d"]),
            tuple(Disk(complex(D["re"], D["im"]), D["r"]) for D in obj["disks"]),
            tuple(BranchAnchor(cx(a["z"]), cx(a["w"])) for a in obj["anchors"]),
            obj["kind"], int(obj["m"]), float(obj.get("C0", math.nan)),
            tuple(obj.get("word", ())), cx(obj["centre"]) if "centre" in obj else None,
        )

    @classmethod
    def from_json(cls, text: str) -> "BranchSystem":
        return cls.from_dict(json.loads(text))


def _centre_value(centre) -> complex | None:
    if centre is None:
        return None
    if isinstance(centre, CentreRecord):
        return centre.c
    return complex(centre)


def _cycle_anchors(params: CorrParams, word: Sequence[int], centre: complex | None):
    """Anchors ``(z_i, z_{i+1})`` of the cycle branches, i = 1..n-1.

    With a centre ``a`` the branch at ``c`` is the perturbation
    ``phi_{i,c} = phi_{i,a} - a + c``, anchored on the centre's cycle;
    otherwise the word is followed directly at ``c``.
    """
    word = list(word)
    if centre is None:
        orbit = apply_word_forward(params, 0j, word)
        return [BranchAnchor(orbit[i], orbit[i + 1]) for i in range(len(word) - 1)]
    a_params = params.with_c(centre)
    orbit = apply_word_forward(a_params, 0j, word)
    shift = params.c - centre
    return [BranchAnchor(orbit[i], orbit[i + 1] + shift) for i in range(len(word) - 1)]


def _max_derivative(params: CorrParams, disk: Disk, anchor: BranchAnchor) -> float:
    pts = disk_samples(disk)
    if np.any(np.abs(pts) == 0) or np.any(np.abs(pts) < disk.radius * 1e-12):
        raise SingularDerivative(f"disk {disk} reaches the critical point")
    w = track_branch(params, anchor, pts)
    return float(np.abs(branch_derivative_array(params, pts, w)).max())


def derivative_bound_C0(params: CorrParams, disks: Sequence[Disk],
                        anchors: Sequence[BranchAnchor]) -> float:
    """``1.5 * prod_i max_{D_i} |phi_i'|``: a sampled bound for ``|g_c'|`` on ``D_1``."""
    bound = SAFETY
    for disk, anchor in zip(disks, anchors):
        bound *= _max_derivative(params, disk, anchor)
    return bound


def _chain_disks(params: CorrParams, d: float, anchors: Sequence[BranchAnchor],
                 C0: float | None):
    """Disks D_1..D_n and re-anchored branches for radius ``d``.

    Intermediate radii grow by ``1.5 * max |phi_i'|``; the last disk gets the
    mean-value radius ``C0 d^beta`` (``C0`` sampled on this chain when None).
    """
    beta = params.p / params.q
    disks = [Disk(params.c, d ** beta)]
    ranchors = []
    factors = []
    for anchor in anchors:
        D = disks[-1]
        # continue the anchored branch to this disk's centre
        w = track_branch(params, anchor, D.center)
        a = BranchAnchor(D.center, complex(w))
        M = _max_derivative(params, D, a)
        factors.append(M)
        ranchors.append(a)
        disks.append(Disk(a.target, SAFETY * M * D.radius))
    if C0 is None:
        C0 = SAFETY * float(np.prod(factors)) if factors else SAFETY
    if len(disks) > 1:
        disks[-1] = Disk(disks[-1].center, C0 * d ** beta)
    return disks, ranchors, C0


def f_of_c(params: CorrParams, system: BranchSystem) -> complex:
    """``g_c(c)``: the critical value pushed through the branch chain."""
    return complex(system.chain(params.c))


def _escape_depth(params: CorrParams, disks, anchors) -> int:
    """``m = 1 + max`` survival of the non-chain images of every ``D_i``, i < n.

    Raises ConstructionFailed when a non-chain image survives the sampling cap
    or a chain image leaves the region it should stay in.
    """
    cfg = EscapeConfig(depth_cap=ESCAPE_SAMPLE_CAP)
    worst = 0
    for i, (D, anchor) in enumerate(zip(disks[:-1], anchors)):
        pts = disk_samples(D)
        chosen = track_branch(params, anchor, pts)
        imgs = forward_images_array(params, pts)
        # drop, per sample, the image realised by the chain branch
        dist = np.abs(imgs - chosen[:, None])
        keep = np.ones(imgs.shape, dtype=bool)
        keep[np.arange(pts.size), np.argmin(dist, axis=1)] = False
        others = imgs[keep]
        if others.size == 0:
            continue
        depth = survival_depths(params, others, cfg)
        if depth.max() >= ESCAPE_SAMPLE_CAP:
            raise ConstructionFailed(f"escaping region: a non-chain image of D_{i + 1} does not escape")
        worst = max(worst, int(depth.max()))
    m = worst + 1
    # chain images must stay in the region R_m
    for D, anchor in zip(disks[:-1], anchors):
        chosen = track_branch(params, anchor, disk_samples(D))
        if survival_depths(params, chosen, EscapeConfig(depth_cap=m)).min() < m:
            raise ConstructionFailed("escaping region: a chain image escapes")
    return m


def verify_system(system: BranchSystem) -> dict[str, bool]:
    """Re-run the five construction checks; returns ``{check: passed}``."""
    params, d, disks = system.params, system.d, system.disks
    beta = params.p / params.q
    ball = Disk(0j, d)
    n = len(disks)
    separate = list(disks[:-1]) + [ball]
    disjoint = all(separate[i].disjoint(separate[j])
                   for i in range(len(separate)) for j in range(i + 1, len(separate)))
    Dn = disks[-1]
    in_ball = abs(Dn.center) + Dn.radius < d
    if system.kind == "critical":
        placement = in_ball and abs(Dn.center) < Dn.radius
        sector = True
    else:
        placement = in_ball and abs(Dn.center) - Dn.radius > 0
        sector = abs(Dn.center) > 0 and Dn.radius / abs(Dn.center) < math.sin(math.pi / params.p)
    d1 = abs(disks[0].radius - d ** beta) <= 1e-14 * d ** beta and disks[0].center == params.c
    try:
        escaping = _escape_depth(params, disks, system.anchors) <= system.escape_depth
    except (ConstructionFailed, AmbiguousContinuation, SingularDerivative):
        escaping = False
    return {"disjoint": bool(disjoint), "placement": bool(placement), "sector": bool(sector),
            "d1_radius": bool(d1), "escaping_region": bool(escaping), "n": n}


def _assemble(params, d, disks, anchors, kind, C0, word, centre) -> BranchSystem:
    try:
        m = _escape_depth(params, disks, anchors)
    except (AmbiguousContinuation, SingularDerivative) as exc:
        raise ConstructionFailed(f"escaping region: {exc}") from exc
    system = BranchSystem(params, float(d), tuple(disks), tuple(anchors), kind, m, float(C0),
                          tuple(int(k) for k in word), centre)
    checks = verify_system(system)
    failed = [k for k, ok in checks.items() if k != "n" and not ok]
    if failed:
        raise ConstructionFailed(f"{kind} system at d={d:g} fails: {', '.join(failed)}")
    object.__setattr__(system, "checks", checks)
    return system


def build_critical_system(params: CorrParams, cycle_word, d: float, centre=None) -> BranchSystem:
    """Critical chain ``A_{c,d}``: ``D_n`` must contain 0 and sit inside ``B_d``."""
    if not d > 0:
        raise ValueError("d must be positive")
    word = list(cycle_word)
    if len(word) < 1:
        raise ValueError("cycle word must be nonempty")
    a = _centre_value(centre)
    try:
        anchors = _cycle_anchors(params, word, a)
        disks, anchors, C0 = _chain_disks(params, d, anchors, None)
    except (AmbiguousContinuation, SingularDerivative) as exc:
        raise ConstructionFailed(f"disk chain at d={d:g}: {exc}") from exc
    return _assemble(params, d, disks, anchors, "critical", C0, word, a)


def build_branch_system(params: CorrParams, centre, cycle_word) -> BranchSystem:
    """System of branches ``F_{c,d}`` with ``d`` from the sizing rule.

    ``d = (|f(c)| sin(pi/p) / (1.5 C0))^(1/beta)`` lies inside the window
    ``C0 d^beta / sin(pi/p) < |f(c)| < 2 C0 d^beta / sin(pi/p)``.  ``C0`` is
    sampled on a reference chain with radius ``d_ref >= d`` so that it bounds
    ``|g_c'|`` on the smaller ``D_1`` as well.
    """
    a = _centre_value(centre)
    if a is None:
        raise ValueError("a centre is required")
    word = list(cycle_word)
    if len(word) < 2:
        raise ConstructionFailed("no system of branches exists for a fixed critical point")
    beta = params.p / params.q
    sin_p = math.sin(math.pi / params.p)
    try:
        base_anchors = _cycle_anchors(params, word, a)
    except AmbiguousContinuation as exc:
        raise ConstructionFailed(str(exc)) from exc

    # f(c) does not depend on d: the chain through D_1's centre c
    fc = params.c
    for anchor in base_anchors:
        fc = complex(track_branch(params, anchor, fc))
    if abs(fc) < MIN_F_OF_C:
        raise TooCloseToCenter(f"|f(c)| = {abs(fc):.3g} is numerically zero")

    d_ref = 0.1
    for _ in range(60):
        try:
            _, _, C0 = _chain_disks(params, d_ref, base_anchors, None)
        except (SingularDerivative, AmbiguousContinuation):
            d_ref *= 0.5
            continue
        d = (abs(fc) * sin_p / (SAFETY * C0)) ** (1.0 / beta)
        if d <= d_ref:
            break
        d_ref = 2 * d
    else:
        raise ConstructionFailed("no reference chain for the derivative bound")

    try:
        disks, anchors, _ = _chain_disks(params, d, base_anchors, C0)
    except (AmbiguousContinuation, SingularDerivative) as exc:
        raise ConstructionFailed(f"disk chain at d={d:g}: {exc}") from exc
    return _assemble(params, d, disks, anchors, "branches", C0, word, a)
