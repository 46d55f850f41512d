"""Verification suites: quantitative checks of the library's guarantees.

Every suite returns a :class:`SuiteResult` and, given an output directory,
writes its artifacts there (clouds as CSV, rasters as PGM, reports as
JSON).  Artifacts hold no timings, so reruns with the same configuration
are byte-identical regardless of the thread count.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import io
from .branchsys import build_branch_system, build_critical_system
from .centres import postcritical_cloud, simple_centre_verify
from .cifs import cifs_from_system, cylinder_diameters, dual_julia, omega_forward
from .cloud import PointCloud
from .correspondence import CorrParams, forward_images_array
from .errors import CorrdynError
from .escape import (
    EscapeConfig,
    boundary_pixels,
    escaping_radius,
    raster_dynamical,
    region_inclusion_check,
)
from .julia import (
    coupled_inverse_iteration,
    directed_distance,
    fixed_points,
    hausdorff_distance,
    inverse_iteration,
    leo_cover,
    repelling_cycle,
)

__all__ = ["SuiteResult", "SUITES", "run_suite", "run_suites"]


@dataclass
class SuiteResult:
    name: str
    title: str
    passed: bool
    measured: dict
    timings: dict = field(default_factory=dict)

    def __post_init__(self):
        self.passed = bool(self.passed)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        shown = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        return f"[{status}] {self.name} {self.title}: {shown}"

    def to_dict(self) -> dict:
        return {"name": self.name, "title": self.title, "passed": self.passed,
                "measured": _jsonable(self.measured)}


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(str(_fmt(x)) for x in v) + "]"
    return v


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    return v


def _save(out: Path | None, name: str, obj) -> None:
    if out is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    if isinstance(obj, PointCloud):
        io.save_cloud(obj, out / f"{name}.csv")
    elif hasattr(obj, "values") and hasattr(obj, "depth_cap"):
        io.save_raster(obj, out / f"{name}.pgm")
    else:
        io.write_json(_jsonable(obj), out / f"{name}.json")


def quadratic(out: Path | None = None) -> SuiteResult:
    """Unit circle for z^2 and the segment [-2, 2] for z^2 - 2."""
    t0 = time.perf_counter()
    circle = inverse_iteration(CorrParams(2, 1, 0), burn_in=50, n_points=10_000, rng_seed=1)
    t1 = time.perf_counter()
    segment = inverse_iteration(CorrParams(2, 1, -2), burn_in=50, n_points=10_000, rng_seed=1)
    t2 = time.perf_counter()
    z, s = circle.points, segment.points
    m = {"circle_radius_error": float(np.abs(np.abs(z) - 1).max()),
         "segment_max_imag": float(np.abs(s.imag).max()),
         "segment_re_min": float(s.real.min()), "segment_re_max": float(s.real.max())}
    timings = {"circle_s": t1 - t0, "segment_s": t2 - t1}
    ok = (m["circle_radius_error"] < 1e-9 and m["segment_max_imag"] < 1e-7
          and m["segment_re_min"] >= -2 - 1e-9 and m["segment_re_max"] <= 2 + 1e-9
          and max(timings.values()) < 1.0)
    _save(out, "c1_circle", circle)
    _save(out, "c1_segment", segment)
    return SuiteResult("1", "quadratic sanity", ok, m, timings)


def escaping_radius_suite(out: Path | None = None) -> SuiteResult:
    rng = np.random.Generator(np.random.Philox(2))
    violations = {}
    for p, q in [(2, 1), (4, 2), (7, 6)]:
        for c in [0, -1, 2j]:
            P = CorrParams(p, q, c)
            R = escaping_radius(P)
            r = R + (R * rng.random(100_000))
            r = np.where(r <= R, np.nextafter(R, np.inf), r)
            z = r * np.exp(2j * np.pi * rng.random(100_000))
            w = forward_images_array(P, z)
            violations[f"{p},{q},{c}"] = int(np.sum(~(np.abs(w) > 1.1 * np.abs(z)[:, None])))
    total = sum(violations.values())
    _save(out, "c2_radius", violations)
    return SuiteResult("2", "escaping radius", total == 0, {"violations": total})


def simple_centre_suite(out: Path | None = None) -> SuiteResult:
    P = CorrParams(4, 2, -1)
    rec = simple_centre_verify(P, 2, 12)
    bounded = postcritical_cloud(P, 6).bounded().points
    cycle_ok = (len(rec.cycle) == 2 and abs(rec.cycle[0]) <= 1e-10
                and abs(rec.cycle[1] + 1) <= 1e-10)
    bounded_ok = (bounded.size == 2 and np.min(np.abs(bounded)) <= 1e-10
                  and np.min(np.abs(bounded + 1)) <= 1e-10)
    family = []
    for d in range(2, 6):
        for k in range(d - 1):
            a = complex(np.exp(1j * np.pi * (2 * k + 1) / (d - 1)))
            try:
                family.append(simple_centre_verify(CorrParams(2 * d, 2, a), 2, 12).simple)
            except CorrdynError:
                family.append(False)
    ok = rec.simple and cycle_ok and bounded_ok and rec.escape_certificate < 12 and all(family)
    _save(out, "c3_centre", {"record": rec.to_dict(), "family": family})
    return SuiteResult("3", "simple centre certificate", ok,
                       {"simple": rec.simple, "certificate": rec.escape_certificate,
                        "bounded_points": int(bounded.size), "family_passed": sum(family),
                        "family_total": len(family)})


def rigidity_suite(out: Path | None = None) -> SuiteResult:
    P = CorrParams(4, 2, -1)
    at_centre = dual_julia(-1, P, 1e-6)
    system = build_branch_system(P.with_c(-1 + 1e-2), -1, [0, 0])
    cifs = cifs_from_system(system)  # raises on overlapping first-level images
    diam = cylinder_diameters(cifs, 8)
    level = np.arange(1, 9)
    slope, icpt = np.polyfit(level, np.log(diam), 1)
    pred = slope * level + icpt
    resid = np.log(diam) - pred
    r2 = 1 - resid.var() / np.log(diam).var()
    factor = math.exp(slope)
    disjoint = cifs.image_disks[0].disjoint(cifs.image_disks[1])
    ok = at_centre.points.size == 2 and disjoint and factor < 1 and r2 > 0.99
    _save(out, "c4_dual_centre", at_centre)
    _save(out, "c4_cylinders", {"diameters": diam.tolist(), "factor": factor, "r2": r2})
    return SuiteResult("4", "geometric rigidity", ok,
                       {"centre_points": int(at_centre.points.size), "disjoint": disjoint,
                        "decay_factor": factor, "r2": float(r2)})


def attraction_suite(out: Path | None = None) -> SuiteResult:
    P = CorrParams(4, 2, -1 + 1e-2)
    dual = dual_julia(build_branch_system(P, -1, [0, 0]), P, 1e-6)
    critical = build_critical_system(P, [0, 0], 0.1, centre=-1)
    tail, report = omega_forward(critical, 0j, 16, 1e-12, reference=dual)
    _save(out, "c5_dual", dual)
    _save(out, "c5_tail", tail)
    return SuiteResult("5", "critical-orbit attraction", report.distance < 1e-6,
                       {"hausdorff": report.distance, "tail_points": report.tail_size})


def _second_seed(P: CorrParams) -> complex:
    """The second repelling fixed point (the default seed is the first)."""
    rep = [z for z, m in fixed_points(P) if abs(m) > 1 + 1e-9]
    return rep[1]


def alpha_limit_suite(out: Path | None = None) -> SuiteResult:
    P = CorrParams(4, 2, -1)
    a = inverse_iteration(P, None, 100, 10_000, rng_seed=1)
    b = inverse_iteration(P, _second_seed(P), 100, 10_000, rng_seed=2)
    dist = hausdorff_distance(a, b)
    _save(out, "c6_seed_a", a)
    _save(out, "c6_seed_b", b)
    return SuiteResult("6", "alpha-limit independence", dist < 2e-2, {"hausdorff": dist})


def repelling_suite(out: Path | None = None) -> SuiteResult:
    P = CorrParams(4, 2, -1)
    rec = repelling_cycle(P, [0], 1.5)
    golden = (1 + math.sqrt(5)) / 2
    cloud = inverse_iteration(P, _second_seed(P), 100, 100_000, rng_seed=7)
    dist = directed_distance(np.array(rec.points), cloud.points)
    ok = (abs(rec.points[0] - golden) < 1e-12 and abs(rec.multiplier - 2 * golden) < 1e-9
          and rec.cls == "repelling" and dist < 1e-2)
    _save(out, "c7_cycle", rec.to_dict())
    return SuiteResult("7", "repelling cycle in J", ok,
                       {"fixed_point": rec.points[0].real, "multiplier": abs(rec.multiplier),
                        "distance_to_cloud": dist})


def j_equals_k_suite(out: Path | None = None) -> SuiteResult:
    """Outside the connectedness locus of 0: raster boundary vs inverse cloud.

    No depth is singled out by the theory, so caps 4..16 are scanned and
    the best agreement is reported.
    """
    P = CorrParams(4, 2, 2)
    R = escaping_radius(P)
    cloud = inverse_iteration(P, None, 100, 100_000, rng_seed=1)
    best = (math.inf, None)
    scan = {}
    for cap in range(4, 17):
        raster = raster_dynamical(P, EscapeConfig.for_raster(depth_cap=cap), (-R, R, -R, R), 512, 512)
        edge = boundary_pixels(raster)
        ratio = (hausdorff_distance(edge, cloud) / raster.pixel_diagonal) if len(edge) else math.inf
        scan[cap] = ratio
        if ratio < best[0]:
            best = (ratio, raster)
    dual = dual_julia(None, P, 1e-6)
    ok = best[0] < 1.5 and dual.empty
    _save(out, "c8_cloud", cloud)
    if best[1] is not None:
        _save(out, "c8_raster", best[1])
    _save(out, "c8_scan", {str(k): v for k, v in scan.items()})
    return SuiteResult("8", "J = K outside M", ok,
                       {"best_cap": None if best[1] is None else best[1].depth_cap,
                        "diagonals": best[0], "dual_points": int(dual.points.size)})


def continuity_suite(out: Path | None = None) -> SuiteResult:
    P = CorrParams(4, 2, -1)
    dists = []
    for k, delta in enumerate([1e-2, 1e-3, 1e-4]):
        ref, moved = coupled_inverse_iteration(P, -1 + delta, None, 100, 10_000, rng_seed=3)
        dists.append(hausdorff_distance(ref, moved))
        _save(out, f"c9_moved_{k}", moved)
    ok = dists[0] > dists[1] > dists[2] and dists[1] < 5e-2
    return SuiteResult("9", "continuity", ok, {"hausdorff": dists})


def leo_suite(out: Path | None = None) -> SuiteResult:
    P = CorrParams(4, 2, -1)
    cloud = inverse_iteration(P, None, 100, 100_000, rng_seed=7)
    pick = np.random.Generator(np.random.Philox(10)).integers(cloud.points.size)
    try:
        n = leo_cover(P, cloud, cloud.points[pick], 1e-2, 5e-2, 30)
    except CorrdynError:
        n = None
    Q = CorrParams(2, 1, 0)
    circle = inverse_iteration(Q, None, 50, 10_000, rng_seed=1)
    try:
        n_circle = leo_cover(Q, circle, 1 + 0j, 1e-2, 5e-2, 30)
    except CorrdynError:
        n_circle = None
    oracle = math.ceil(math.log2(2 * math.pi / 1e-2))
    ok = n is not None and n <= 30 and n_circle is not None and abs(n_circle - oracle) <= 1
    _save(out, "c10_leo", {"n": n, "n_circle": n_circle, "oracle": oracle})
    return SuiteResult("10", "LEO", ok, {"n": n, "n_circle": n_circle, "oracle": oracle})


def inclusion_suite(out: Path | None = None) -> SuiteResult:
    P = CorrParams(4, 2, -1 + 1e-4)
    R = max(escaping_radius(P), escaping_radius(P.with_c(-1)))
    t = np.linspace(-R, R, 115)
    grid = (t[None, :] + 1j * t[:, None]).ravel()
    samples = grid[np.abs(grid) <= R][:10_000]
    rep = region_inclusion_check(P, -1, 5, samples)
    _save(out, "c11_inclusion", {"violations": rep.violations, "total": rep.total,
                                 "params": rep.params})
    return SuiteResult("11", "inclusion chain", rep.violations == 0 and rep.total == 10_000,
                       {"violations": rep.violations, "samples": rep.total})


def scaling_suite(out: Path | None = None) -> SuiteResult:
    P = CorrParams(4, 2, -1)
    ds, checks = [], []
    for k in (3, 4, 5):
        s = build_branch_system(P.with_c(-1 + 10.0 ** -k), -1, [0, 0])
        ds.append(s.d)
        checks.append(all(v for key, v in s.checks.items() if key != "n"))
        _save(out, f"c12_system_{k}", s.to_dict())
    ok = ds[0] > ds[1] > ds[2] and all(checks)
    return SuiteResult("12", "branch-system scaling", ok, {"d": ds, "checks": checks})


SUITES: dict[str, Callable[..., SuiteResult]] = {
    "1": quadratic,
    "2": escaping_radius_suite,
    "3": simple_centre_suite,
    "4": rigidity_suite,
    "5": attraction_suite,
    "6": alpha_limit_suite,
    "7": repelling_suite,
    "8": j_equals_k_suite,
    "9": continuity_suite,
    "10": leo_suite,
    "11": inclusion_suite,
    "12": scaling_suite,
}
ALIASES = {"quadratic": ["1"], "all": list(SUITES)}


def run_suite(name: str, out: Path | None = None) -> SuiteResult:
    try:
        return SUITES[name](out)
    except CorrdynError as exc:
        return SuiteResult(name, SUITES[name].__name__, False, {"error": repr(exc)})


def run_suites(names, out: Path | None = None) -> list[SuiteResult]:
    keys: list[str] = []
    for n in names:
        for k in ALIASES.get(n, [n]):
            if k not in SUITES:
                raise KeyError(f"unknown suite {n!r}")
            if k not in keys:
                keys.append(k)
    results = [run_suite(k, out) for k in keys]
    if out is not None:
        io.write_json({"suites": [r.to_dict() for r in results]}, Path(out) / "summary.json")
    return results
