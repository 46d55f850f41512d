"""Enumeration, differentiation and branch tracking for ``(w - c)^q = z^p``.

A point ``z`` has ``q`` forward images and a point ``w`` has ``p`` backward
images.  Both are enumerated by a root index ``j`` under the principal
argument convention ``Arg in (-pi, pi]``::

    w_j = c + |z|^(p/q) * exp(i (p Arg z + 2 pi j) / q),     j = 0..q-1
    z_j = |w - c|^(q/p) * exp(i (q Arg(w - c) + 2 pi j) / p), j = 0..p-1

The ordering is part of the contract: words of root indices address orbits
reproducibly.  Scalar functions return tuples of Python ``complex``; the
``*_array`` variants broadcast over NumPy arrays and append a root axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from .errors import AmbiguousContinuation, SingularDerivative

__all__ = [
    "TOL_RESID",
    "CorrParams",
    "BranchAnchor",
    "principal_arg",
    "forward_images",
    "backward_images",
    "forward_images_array",
    "backward_images_array",
    "forward_image_by_index",
    "backward_image_by_index",
    "residual",
    "continue_branch",
    "track_branch",
    "branch_derivative",
    "branch_derivative_array",
    "apply_word_forward",
]

TOL_RESID = 1e-9

# separation factor between nearest and second-nearest candidate image
_SEPARATION = 2.0
_MAX_SUBSTEPS = 1024


@dataclass(frozen=True)
class CorrParams:
    """Parameters of one correspondence ``(w - c)^q = z^p``."""

    p: int
    q: int
    c: complex = 0j

    def __post_init__(self):
        if not (isinstance(self.p, (int, np.integer)) and isinstance(self.q, (int, np.integer))):
            raise TypeError("p and q must be integers")
        if self.q < 1 or self.p <= self.q or self.p < 2:
            raise ValueError(f"need p > q >= 1 and p >= 2, got p={self.p}, q={self.q}")
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "q", int(self.q))
        c = complex(self.c)
        if not (math.isfinite(c.real) and math.isfinite(c.imag)):
            raise ValueError("c must be finite")
        object.__setattr__(self, "c", c)

    @property
    def beta(self) -> Fraction:
        """The exponent p/q, kept exact."""
        return Fraction(self.p, self.q)

    @property
    def beta_pair(self) -> tuple[int, int]:
        return (self.p, self.q)

    def with_c(self, c: complex) -> "CorrParams":
        return CorrParams(self.p, self.q, c)

    def to_dict(self) -> dict:
        return {"p": self.p, "q": self.q, "c": {"re": self.c.real, "im": self.c.imag}}


class BranchAnchor(NamedTuple):
    """A point ``source`` and the chosen image ``target`` in f_c(source)."""

    source: complex
    target: complex


def principal_arg(z):
    """Argument in ``(-pi, pi]``; ``-pi`` (from a signed zero) maps to ``pi``."""
    a = np.angle(z)
    if np.ndim(a) == 0:
        a = float(a)
        return math.pi if a == -math.pi else a
    return np.where(a == -np.pi, np.pi, a)


def _unit_roots(n: int) -> np.ndarray:
    j = np.arange(n)
    roots = np.exp(2j * np.pi * j / n)
    roots[0] = 1.0
    return roots


def forward_images_array(params: CorrParams, z) -> np.ndarray:
    """All ``q`` images of each entry of ``z``; shape ``z.shape + (q,)``."""
    z = np.asarray(z, dtype=complex)
    p, q = params.p, params.q
    base = np.abs(z) ** (p / q) * np.exp(1j * (p * principal_arg(z) / q))
    return params.c + base[..., None] * _unit_roots(q)


def backward_images_array(params: CorrParams, w) -> np.ndarray:
    """All ``p`` preimages of each entry of ``w``; shape ``w.shape + (p,)``."""
    u = np.asarray(w, dtype=complex) - params.c
    p, q = params.p, params.q
    base = np.abs(u) ** (q / p) * np.exp(1j * (q * principal_arg(u) / p))
    return base[..., None] * _unit_roots(p)


def forward_image_by_index(params: CorrParams, z, j) -> np.ndarray:
    """Image number ``j`` of each ``z`` (broadcasting)."""
    z = np.asarray(z, dtype=complex)
    p, q = params.p, params.q
    ang = (p * principal_arg(z) + 2.0 * np.pi * np.asarray(j)) / q
    return params.c + np.abs(z) ** (p / q) * np.exp(1j * ang)


def backward_image_by_index(params: CorrParams, w, j) -> np.ndarray:
    """Preimage number ``j`` of each ``w`` (broadcasting)."""
    u = np.asarray(w, dtype=complex) - params.c
    p, q = params.p, params.q
    ang = (q * principal_arg(u) + 2.0 * np.pi * np.asarray(j)) / p
    return np.abs(u) ** (q / p) * np.exp(1j * ang)


def forward_images(params: CorrParams, z: complex) -> tuple[complex, ...]:
    """The ``q`` images of ``z``, ordered by root index.

    ``z = 0`` is legal and yields ``q`` copies of ``c``.
    """
    return tuple(complex(w) for w in forward_images_array(params, complex(z)))


def backward_images(params: CorrParams, w: complex) -> tuple[complex, ...]:
    """The ``p`` preimages of ``w``, ordered by root index."""
    return tuple(complex(z) for z in backward_images_array(params, complex(w)))


def residual(params: CorrParams, z, w):
    """Relative residual ``|(w-c)^q - z^p| / max(1, |z|^p)``."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    zp = z ** params.p
    return np.abs((w - params.c) ** params.q - zp) / np.maximum(1.0, np.abs(zp))


def branch_derivative(params: CorrParams, z: complex, w: complex) -> complex:
    """``dw/dz = p z^(p-1) / (q (w-c)^(q-1))`` along the branch through (z, w)."""
    z, w = complex(z), complex(w)
    if z == 0 or w == params.c:
        raise SingularDerivative(f"branch derivative undefined at z={z}, w={w}")
    return params.p * z ** (params.p - 1) / (params.q * (w - params.c) ** (params.q - 1))


def branch_derivative_array(params: CorrParams, z, w) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if np.any(z == 0) or np.any(w == params.c):
        raise SingularDerivative("branch derivative undefined at z = 0 or w = c")
    return params.p * z ** (params.p - 1) / (params.q * (w - params.c) ** (params.q - 1))


def _select(params: CorrParams, images, prev_z, prev_w, new_z):
    """Pick, per row, the image continuing (prev_z, prev_w) to new_z.

    Returns (chosen, ok) where ``ok`` marks rows whose choice is unambiguous:
    the nearest image to ``prev_w`` must be at least twice as close as the
    runner-up, and must agree with the first-order Taylor prediction.
    """
    rows = np.arange(images.shape[0])
    dist = np.abs(images - prev_w[:, None])
    order = np.argsort(dist, axis=1, kind="stable")
    near = dist[rows, order[:, 0]]
    second = dist[rows, order[:, 1]]
    ok = (second > 0) & (_SEPARATION * near <= second)

    regular = (prev_z != 0) & (prev_w != params.c)
    if np.any(regular):
        pz = np.where(regular, prev_z, 1.0)
        pw = np.where(regular, prev_w, params.c + 1.0)
        slope = params.p * pz ** (params.p - 1) / (params.q * (pw - params.c) ** (params.q - 1))
        pred = prev_w + slope * (new_z - prev_z)
        dp = np.abs(images - pred[:, None])
        porder = np.argsort(dp, axis=1, kind="stable")
        pnear = dp[rows, porder[:, 0]]
        psecond = dp[rows, porder[:, 1]]
        pok = (porder[:, 0] == order[:, 0]) & (_SEPARATION * pnear <= psecond)
        ok &= np.where(regular, pok, True)
    return images[rows, order[:, 0]], ok


def continue_branch(params: CorrParams, anchor: BranchAnchor, z1: complex) -> BranchAnchor:
    """Continue the branch selected by ``anchor`` to ``z1`` in one step.

    The new image is the entry of ``forward_images(z1)`` nearest to
    ``anchor.target``.  Raises :class:`AmbiguousContinuation` when that entry
    is not at least twice as close as the runner-up, or when the first-order
    prediction from the anchor disagrees with it; the step is then too long
    (it crossed a cut or approached ``z = 0``) and must be subdivided.
    """
    z1 = complex(z1)
    if z1 == 0:
        raise AmbiguousContinuation("continuation to the critical point z = 0")
    images = forward_images_array(params, np.array([z1]))
    if params.q == 1:
        return BranchAnchor(z1, complex(images[0, 0]))
    w, ok = _select(params, images, np.array([complex(anchor.source)]),
                    np.array([complex(anchor.target)]), np.array([z1]))
    if not ok[0]:
        raise AmbiguousContinuation(
            f"step {anchor.source} -> {z1} does not separate the branches; subdivide"
        )
    return BranchAnchor(z1, complex(w[0]))


def track_branch(params: CorrParams, anchor: BranchAnchor, z, substeps: int = 4):
    """Evaluate the anchored branch at ``z`` by straight-line continuation.

    Vectorised over ``z``.  Each path from ``anchor.source`` is cut into
    ``substeps`` pieces; rows that remain ambiguous are retried with twice as
    many pieces until ``_MAX_SUBSTEPS``, after which
    :class:`AmbiguousContinuation` is raised (the path meets ``z = 0``).
    """
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
    src, tgt = complex(anchor.source), complex(anchor.target)
    if params.q == 1:
        out = forward_images_array(params, z)[:, 0]
        return complex(out[0]) if scalar else out

    out = np.empty_like(z)
    todo = np.arange(z.size)
    k = max(1, int(substeps))
    while todo.size:
        if k > _MAX_SUBSTEPS:
            raise AmbiguousContinuation(
                f"branch continuation from {src} failed near {z[todo[0]]}"
            )
        zz = z[todo]
        prev_z = np.full(zz.shape, src)
        prev_w = np.full(zz.shape, tgt)
        good = np.ones(zz.shape, dtype=bool)
        for t in range(1, k + 1):
            new_z = src + (zz - src) * (t / k)
            imgs = forward_images_array(params, new_z)
            w, ok = _select(params, imgs, prev_z, prev_w, new_z)
            good &= ok & (new_z != 0)
            prev_z, prev_w = new_z, w
        out[todo[good]] = prev_w[good]
        todo = todo[~good]
        k *= 2
    return complex(out[0]) if scalar else out


def apply_word_forward(params: CorrParams, z: complex, word: Sequence[int]) -> list[complex]:
    """Orbit ``z -> z_1 -> ... -> z_n`` with ``z_{i+1} = forward_images(z_i)[word[i]]``."""
    if len(word) == 0:
        raise ValueError("word must be nonempty")
    orbit = []
    cur = complex(z)
    for j in word:
        if not 0 <= j < params.q:
            raise ValueError(f"root index {j} outside 0..{params.q - 1}")
        cur = complex(forward_image_by_index(params, cur, j))
        orbit.append(cur)
    return orbit
