import io as _io
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from corrdyn import CorrParams, PointCloud
from corrdyn.cloud import cloud_diameter, dedupe, read_csv, write_csv
from corrdyn.correspondence import residual
from corrdyn.errors import ClassChanged, EmptyCloud
from corrdyn.escape import escaping_radius
from corrdyn.julia import (
    backward_tree,
    coupled_inverse_iteration,
    default_seed,
    fixed_points,
    hausdorff_distance,
    inverse_iteration,
    leo_cover,
    repelling_cycle,
    trace_cycle_motion,
)

GOLDEN = (1 + math.sqrt(5)) / 2

finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)
cloud_arrays = arrays(np.complex128, st.integers(1, 60),
                      elements=st.builds(complex, finite, finite))


def brute_hausdorff(a, b):
    d = np.abs(a[:, None] - b[None, :])
    return max(d.min(axis=1).max(), d.min(axis=0).max())


# -- distances and clouds ----------------------------------------------------

def test_hausdorff_examples():
    pts = np.array([1 + 1j, 2, -3j])
    assert hausdorff_distance(pts, pts) == 0
    assert hausdorff_distance(np.array([0j]), np.array([3 + 4j])) == pytest.approx(5)
    t = np.exp(2j * np.pi * np.arange(1000) / 1000)
    assert hausdorff_distance(t, 1.1 * t) == pytest.approx(0.1, abs=2 * np.pi / 1000)
    with pytest.raises(EmptyCloud):
        hausdorff_distance(np.empty(0, complex), pts)


@given(cloud_arrays, cloud_arrays)
@settings(max_examples=100, deadline=None)
def test_hausdorff_matches_brute_force(a, b):
    assert hausdorff_distance(a, b) == pytest.approx(brute_hausdorff(a, b), abs=1e-12)
    assert hausdorff_distance(a, b) == hausdorff_distance(b, a)


@given(cloud_arrays)
@settings(max_examples=100, deadline=None)
def test_dedupe_matches_greedy_scan(a):
    tol = 0.5
    d = np.abs(a[:, None] - a[None, :])
    assume(not np.any(np.abs(d - tol) < 1e-9))
    kept = []
    for j in range(a.size):
        if not any(d[i, j] <= tol for i in kept):
            kept.append(j)
    assert np.array_equal(dedupe(a, tol), a[kept])


@given(cloud_arrays)
@settings(max_examples=100, deadline=None)
def test_diameter_matches_brute_force(a):
    brute = np.abs(a[:, None] - a[None, :]).max()
    assert cloud_diameter(a) == pytest.approx(brute, abs=1e-12)


@given(cloud_arrays)
@settings(max_examples=50, deadline=None)
def test_csv_round_trip_is_exact(a):
    buf = _io.StringIO()
    write_csv(PointCloud(a, {}), buf)
    text = buf.getvalue()
    assert text.startswith("re,im\n")
    back = read_csv(_io.StringIO(text))
    assert np.array_equal(back.points, a)


# -- inverse iteration -------------------------------------------------------

def test_unit_circle_and_segment():
    circle = inverse_iteration(CorrParams(2, 1, 0), burn_in=50, n_points=10_000, rng_seed=1).points
    assert np.abs(np.abs(circle) - 1).max() < 1e-9
    seg = inverse_iteration(CorrParams(2, 1, -2), burn_in=50, n_points=10_000, rng_seed=1).points
    assert np.abs(seg.imag).max() < 1e-7
    assert seg.real.min() >= -2 - 1e-9 and seg.real.max() <= 2 + 1e-9


def test_inverse_iteration_is_deterministic_and_seed_sensitive():
    P = CorrParams(4, 2, -1)
    a = inverse_iteration(P, n_points=2000, rng_seed=5)
    b = inverse_iteration(P, n_points=2000, rng_seed=5)
    c = inverse_iteration(P, n_points=2000, rng_seed=6)
    assert np.array_equal(a.points, b.points)
    assert not np.array_equal(a.points, c.points)
    assert a.points.size == 2000


def test_cloud_lies_in_escape_disk_and_is_backward_invariant():
    P = CorrParams(4, 2, -1)
    cloud = inverse_iteration(P, n_points=5000, rng_seed=2)
    R = escaping_radius(P)
    assert np.all(np.abs(cloud.points) <= R)
    # each point after the first step of a walker has a forward image in the cloud
    from corrdyn.correspondence import forward_images_array
    w = forward_images_array(P, cloud.points[:500])
    d = np.abs(w[:, :, None] - cloud.points[None, None, :]).min(axis=(1, 2))
    assert np.median(d) < 0.05


def test_default_seed_is_a_repelling_fixed_point():
    P = CorrParams(4, 2, -1)
    z = default_seed(P)
    fps = fixed_points(P)
    assert any(abs(z - f) < 1e-12 and abs(m) > 1 for f, m in fps)
    assert all(np.min(residual(P, f, f)) < 1e-9 for f, _ in fps)


def test_coupled_iteration_moves_continuously():
    P = CorrParams(4, 2, -1)
    ref, moved = coupled_inverse_iteration(P, -1 + 1e-4, n_points=2000, rng_seed=3)
    assert ref.points.size == moved.points.size == 2000
    assert hausdorff_distance(ref, moved) < 1e-2


def test_backward_tree_examples():
    t = backward_tree(CorrParams(2, 1, 0), 1, 3).points
    roots = np.exp(2j * np.pi * np.arange(8) / 8)
    assert t.size == 8
    assert all(np.min(np.abs(t - r)) < 1e-12 for r in roots)
    assert backward_tree(CorrParams(2, 1, 0), 0.3, 0).points.tolist() == [0.3]
    P = CorrParams(4, 2, -1)
    deep = backward_tree(P, 2, 2).points
    assert deep.size == 16
    assert np.all(np.abs(deep) <= escaping_radius(P))


# -- cycles ----------------------------------------------------------------------

@pytest.mark.parametrize("P,seed,point,mult", [
    (CorrParams(2, 1, 0), 0.9, 1.0, 2.0),
    (CorrParams(2, 1, -1), 1.5, GOLDEN, 2 * GOLDEN),
    (CorrParams(4, 2, -1), 1.5, GOLDEN, 2 * GOLDEN),
])
def test_repelling_fixed_points(P, seed, point, mult):
    rec = repelling_cycle(P, [0], seed)
    assert rec.period == 1
    assert abs(rec.points[0] - point) < 1e-12
    assert abs(abs(rec.multiplier) - mult) < 1e-9
    assert rec.cls == "repelling"
    assert rec.closes(P)


def test_trace_constant_path_is_identity():
    P = CorrParams(4, 2, -1)
    rec = repelling_cycle(P, [0], 1.5)
    tr = trace_cycle_motion(P, rec, [0], [-1, -1])
    assert tr.cycles[0].points == tr.cycles[1].points == rec.points


def test_trace_follows_quadratic_formula():
    P = CorrParams(2, 1, 0)
    rec = repelling_cycle(P, [0], 0.9)
    path = np.linspace(0, -0.5, 51)
    tr = trace_cycle_motion(P, rec, [0], path)
    for c, r in zip(path, tr.cycles):
        assert abs(r.points[0] - (1 + np.sqrt(1 - 4 * c)) / 2) < 1e-10


def test_trace_golden_fixed_point_stays_repelling():
    P = CorrParams(4, 2, -1)
    rec = repelling_cycle(P, [0], 1.5)
    tr = trace_cycle_motion(P, rec, [0], np.linspace(-1, -1 + 1e-2, 11))
    assert all(r.cls == "repelling" for r in tr.cycles)
    steps = np.abs(np.diff([r.points[0] for r in tr.cycles]))
    assert steps.max() < 1e-2


def test_trace_raises_when_class_changes():
    # z^2 + c: fixed point (1 - sqrt(1 - 4c))/2 at c=-1 is repelling, attracting at c=0
    P = CorrParams(2, 1, -1)
    rec = repelling_cycle(P, [0], -0.6)
    with pytest.raises(ClassChanged) as info:
        trace_cycle_motion(P, rec, [0], np.linspace(-1, 0, 41))
    assert len(info.value.trace.cycles) >= 1


# -- LEO ---------------------------------------------------------------------------

def test_leo_whole_cloud_disk_is_zero_steps():
    P = CorrParams(2, 1, 0)
    circle = inverse_iteration(P, None, 50, 2000, rng_seed=1)
    assert leo_cover(P, circle, 0j, 2.0, 5e-2) == 0


def test_leo_circle_doubling():
    P = CorrParams(2, 1, 0)
    circle = inverse_iteration(P, None, 50, 10_000, rng_seed=1)
    n = leo_cover(P, circle, 1 + 0j, 1e-2, 5e-2)
    assert abs(n - math.ceil(math.log2(2 * math.pi / 1e-2))) <= 1
