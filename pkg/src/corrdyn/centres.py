"""Centres, simple centres and truncated post-critical sets."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .cloud import PointCloud, dedupe
from .correspondence import CorrParams, apply_word_forward, forward_images_array
from .errors import DepthOverflow, NoConvergence, NotCentre, Undecided
from .escape import EscapeConfig, escaping_radius, survival_depth

__all__ = [
    "TOL_CENTER",
    "CentreRecord",
    "critical_orbit_end",
    "centre_solve",
    "simple_centre_verify",
    "search_centres",
    "postcritical_cloud",
]

TOL_CENTER = 1e-10
NEWTON_STEP_TOL = 1e-12
FD_STEP = 1e-7
DEDUPE_TOL = 1e-12
POINT_BUDGET = 2 ** 20
MAX_SEARCH_PERIOD = 8
ZERO_PARAMETER_CAVEAT = "no system of branches exists for c = 0"


@dataclass(frozen=True)
class CentreRecord:
    p: int
    q: int
    c: complex
    n: int
    word: tuple[int, ...]
    simple: bool
    escape_certificate: int
    cycle: tuple[complex, ...] = ()
    caveats: tuple[str, ...] = field(default_factory=tuple)

    @property
    def params(self) -> CorrParams:
        return CorrParams(self.p, self.q, self.c)

    def to_dict(self) -> dict:
        return {"p": self.p, "q": self.q, "c": {"re": self.c.real, "im": self.c.imag},
                "n": self.n, "word": list(self.word), "simple": self.simple,
                "escape_certificate": self.escape_certificate,
                "caveats": list(self.caveats)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def critical_orbit_end(p: int, q: int, word, c: complex) -> complex:
    """Endpoint of the orbit of 0 along ``word`` at parameter ``c``."""
    return apply_word_forward(CorrParams(p, q, c), 0j, word)[-1]


def centre_solve(p: int, q: int, word, c_guess: complex, max_iter: int = 100) -> complex:
    """Newton solve of ``O_word(c) = 0``; derivative by central differences."""
    word = list(word)
    if not word:
        raise ValueError("word must be nonempty")
    c = complex(c_guess)
    for _ in range(max_iter):
        val = critical_orbit_end(p, q, word, c)
        deriv = (critical_orbit_end(p, q, word, c + FD_STEP)
                 - critical_orbit_end(p, q, word, c - FD_STEP)) / (2 * FD_STEP)
        if deriv == 0:
            raise NoConvergence(f"zero derivative at c={c}")
        step = val / deriv
        c = c - step
        if not np.isfinite(c):
            raise NoConvergence("Newton iterate left the finite plane")
        if abs(step) < NEWTON_STEP_TOL:
            return c
    raise NoConvergence(f"centre Newton did not converge from {c_guess} (last c={c})")


def _distinct_children(params: CorrParams, z: complex) -> list[tuple[int, complex]]:
    kids: list[tuple[int, complex]] = []
    for j, w in enumerate(forward_images_array(params, z)):
        w = complex(w)
        if all(abs(w - v) > DEDUPE_TOL for _, v in kids):
            kids.append((j, w))
    return kids


def simple_centre_verify(params: CorrParams, n: int, escape_depth: int = 12) -> CentreRecord:
    """Check that ``c`` is a (simple) centre of period ``n``.

    The orbit tree of 0 is expanded to depth ``n``; coincident siblings are
    merged and nodes outside ``B_R`` are dropped.  The parameter is a centre
    when some branch first returns to 0 (within ``TOL_CENTER``) at step
    ``n``, and a simple one when exactly one branch does and every other
    child of a cycle point escapes within ``escape_depth`` steps.
    """
    if int(n) < 1:
        raise ValueError("n must be >= 1")
    n = int(n)
    R = escaping_radius(params)
    cfg = EscapeConfig(depth_cap=int(escape_depth))

    level = [((), 0j)]
    returns = []
    for k in range(1, n + 1):
        nxt = []
        for word, z in level:
            for j, w in _distinct_children(params, z):
                if abs(w) > R:
                    continue
                if abs(w) < TOL_CENTER:
                    if k == n:
                        returns.append(word + (j,))
                    # earlier returns are lower-period cycles: not this period
                    continue
                if k < n:
                    nxt.append((word + (j,), w))
        level = nxt
        if len(level) > POINT_BUDGET:
            raise DepthOverflow("critical orbit tree exceeds the point budget")

    if not returns:
        raise NotCentre(f"no branch of the critical orbit returns to 0 at step {n}")

    word = returns[0]
    caveats = (ZERO_PARAMETER_CAVEAT,) if params.c == 0 else ()
    cycle = [0j] + apply_word_forward(params, 0j, word)[:-1]
    certificate = 0
    undecided = []
    for i, z in enumerate(cycle):
        for j, w in _distinct_children(params, z):
            if j == word[i]:
                continue
            depth = survival_depth(params, w, cfg)
            if depth >= escape_depth:
                undecided.append(word[:i] + (j,))
            certificate = max(certificate, depth)
    simple = len(returns) == 1
    if simple and undecided:
        raise Undecided(f"branches {undecided} neither return nor escape "
                        f"within {escape_depth} steps", word=undecided[0])
    return CentreRecord(params.p, params.q, params.c, n, tuple(word), simple and not undecided,
                        certificate, tuple(cycle), caveats)


def search_centres(p: int, q: int, n: int, guesses, escape_depth: int = 12) -> list[CentreRecord]:
    """Solve every word of length ``n`` from every guess; verified, deduplicated."""
    if not 1 <= int(n) <= MAX_SEARCH_PERIOD:
        raise ValueError(f"search mode enumerates periods 1..{MAX_SEARCH_PERIOD}")
    found: list[CentreRecord] = []
    # all images of 0 coincide, so the first index is immaterial
    for tail in itertools.product(range(q), repeat=int(n) - 1):
        word = (0,) + tail
        for g in guesses:
            try:
                c = centre_solve(p, q, word, g)
                rec = simple_centre_verify(CorrParams(p, q, c), n, escape_depth)
            except (NoConvergence, NotCentre, Undecided):
                continue
            if all(abs(rec.c - r.c) > 1e-8 for r in found):
                found.append(rec)
    return sorted(found, key=lambda r: (r.word, r.c.real, r.c.imag))


def postcritical_cloud(params: CorrParams, depth: int, budget: int = POINT_BUDGET) -> PointCloud:
    """Forward images of 0 at levels ``1..depth``.

    Points outside ``B_R`` are flagged escaping; they are still iterated
    until they leave ``B_{2R}``, then dropped.
    """
    if int(depth) < 0:
        raise ValueError("depth must be >= 0")
    R = escaping_radius(params)
    frontier = np.array([0j])
    collected = []
    for _ in range(int(depth)):
        if frontier.size == 0:
            break
        imgs = forward_images_array(params, frontier).ravel()
        imgs = dedupe(imgs[np.abs(imgs) <= 2 * R], DEDUPE_TOL)
        if imgs.size > budget:
            raise DepthOverflow(f"post-critical level exceeds {budget} points")
        collected.append(imgs)
        frontier = imgs
    pts = dedupe(np.concatenate(collected), DEDUPE_TOL) if collected else np.empty(0, complex)
    return PointCloud(pts, {"generator": "postcritical", **params.to_dict(), "depth": int(depth),
                            "radius": R}, np.abs(pts) > R)
