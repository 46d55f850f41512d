import io as _io
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corrdyn import CorrParams
from corrdyn.correspondence import forward_image_by_index, forward_images_array
from corrdyn.escape import (
    EscapeConfig,
    boundary_pixels,
    escaping_radius,
    escaping_radius_array,
    greatest_root,
    pixel_centers,
    raster_dynamical,
    raster_parameter,
    region_inclusion_check,
    survival_depth,
    survival_depth_reference,
    survival_depths,
)
from corrdyn.io import read_pgm, write_pgm


def brute_survival(P, z, R, cap):
    """Every word of length ``cap`` evaluated in full; no pruning at all."""
    best = 0
    for word in itertools.product(range(P.q), repeat=cap):
        node, alive = complex(z), 0
        if abs(node) > R:
            return 0
        for j in word:
            node = complex(forward_image_by_index(P, node, j))
            if abs(node) > R:
                break
            alive += 1
        best = max(best, alive)
    return best


@pytest.mark.parametrize("p,q,c,root", [
    (4, 2, -1, (1.1 + math.sqrt(5.21)) / 2),
    (2, 1, 0, 1.1),
    (2, 1, -2, (1.1 + math.sqrt(9.21)) / 2),
])
def test_greatest_root_quadratic_formula(p, q, c, root):
    assert greatest_root(CorrParams(p, q, c)) == pytest.approx(root, abs=1e-12)
    R = escaping_radius(CorrParams(p, q, c))
    assert root < R <= root + 1e-6 + 1e-12


@given(st.sampled_from([(2, 1), (3, 2), (4, 2), (7, 6), (9, 4)]), st.floats(0, 20))
@settings(max_examples=100, deadline=None)
def test_radius_guarantee(pq, absc):
    p, q = pq
    R = escaping_radius(CorrParams(p, q, absc))
    x0 = greatest_root(CorrParams(p, q, absc))
    beta = p / q
    # above the greatest root the defining polynomial is positive
    for x in np.linspace(x0 * (1 + 1e-9) + 1e-12, 4 * R, 50):
        assert x ** beta - 1.1 * x - absc > 0
    # and every forward image of |z| = r > R grows by more than 1.1
    rng = np.random.default_rng(0)
    z = R * (1 + rng.random(200)) * np.exp(2j * np.pi * rng.random(200))
    c = absc * np.exp(2j * np.pi * rng.random())
    w = forward_images_array(CorrParams(p, q, c), z)
    assert np.all(np.abs(w) > 1.1 * np.abs(z)[:, None])


def test_radius_array_matches_scalar():
    absc = np.array([0.0, 0.5, 2.0, 10.0])
    arr = escaping_radius_array(4, 2, absc)
    for a, r in zip(absc, arr):
        assert r == escaping_radius(CorrParams(4, 2, a))


def test_survival_examples():
    P = CorrParams(4, 2, -1)
    for cap in (1, 7, 64, 256):
        assert survival_depth(P, 0, EscapeConfig(depth_cap=cap)) == cap
    assert survival_depth(P, 5) == 0
    assert survival_depth(CorrParams(2, 1, 0), 0.5, EscapeConfig(depth_cap=50)) == 50


@given(st.sampled_from([(2, 1), (4, 2), (3, 2)]),
       st.complex_numbers(max_magnitude=1.2, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False))
@settings(max_examples=60, deadline=None)
def test_pruned_search_agrees_with_exhaustive_enumeration(pq, c, z):
    P = CorrParams(*pq, c)
    cap = 7 if pq[1] > 1 else 10
    cfg = EscapeConfig(depth_cap=cap)
    R = escaping_radius(P)
    expect = brute_survival(P, z, R, cap)
    assert survival_depth(P, z, cfg) == expect
    assert survival_depth_reference(P, z, R, cap) == expect


def test_parallel_kernel_matches_reference():
    P = CorrParams(4, 2, -1 + 0.05j)
    rng = np.random.default_rng(3)
    zs = 1.8 * (rng.random(300) - 0.5 + 1j * (rng.random(300) - 0.5))
    cfg = EscapeConfig(depth_cap=20)
    R = escaping_radius(P)
    got = survival_depths(P, zs, cfg)
    want = [survival_depth_reference(P, z, R, 20) for z in zs]
    assert got.tolist() == want


def test_memo_path_agrees_on_a_fine_quantum():
    P = CorrParams(4, 2, -1)
    zs = np.array([0.3 + 0.2j, -0.9, 1.2j, 1.5, 0.1 - 0.7j])
    plain = survival_depths(P, zs, EscapeConfig(depth_cap=16))
    memo = survival_depths(P, zs, EscapeConfig(depth_cap=16, memo_quantum=1e-12))
    assert plain.tolist() == memo.tolist()


def test_monotone_nesting_in_cap():
    P = CorrParams(4, 2, -0.9 + 0.2j)
    zs = pixel_centers((-2, 2, -2, 2), 40, 40).ravel()
    prev = None
    for cap in (4, 8, 16):
        inside = survival_depths(P, zs, EscapeConfig(depth_cap=cap)) == cap
        if prev is not None:
            assert np.all(prev | ~inside)  # R_{m+1} subset of R_m
        prev = inside


def test_raster_examples():
    P = CorrParams(4, 2, -1)
    one = raster_dynamical(P, EscapeConfig.for_raster(), (-1e-3, 1e-3, -1e-3, 1e-3), 1, 1)
    assert one.values.tolist() == [[64]]
    far = raster_dynamical(P, EscapeConfig.for_raster(), (10, 12, 10, 12), 8, 8)
    assert not far.values.any()
    disk = raster_dynamical(CorrParams(2, 1, 0), EscapeConfig(depth_cap=30), (-2, 2, -2, 2), 64, 64)
    centres = disk.centers()
    assert np.all(disk.values[np.abs(centres) < 1] == 30)
    assert np.all(disk.values[np.abs(centres) > 1] < 30)


def test_pixel_centers_orientation():
    c = pixel_centers((0, 4, 0, 2), 4, 2)
    assert c[0, 0] == pytest.approx(0.5 + 1.5j)
    assert c[1, 3] == pytest.approx(3.5 + 0.5j)


def test_parameter_raster_examples():
    cfg = EscapeConfig.for_raster()
    r = raster_parameter((4, 2), cfg, (-1.001, -0.999, -1e-3, 1e-3), 1, 1)
    assert r.values[0, 0] == 64
    big = raster_parameter((4, 2), cfg, (9.999, 10.001, -1e-3, 1e-3), 1, 1)
    assert big.values[0, 0] <= 2
    quarter = raster_parameter((2, 1), cfg, (0.2499, 0.2501, -1e-4, 1e-4), 1, 1)
    assert quarter.values[0, 0] == 64


def test_boundary_pixels_of_a_disk_lie_on_the_circle():
    r = raster_dynamical(CorrParams(2, 1, 0), EscapeConfig(depth_cap=30), (-2, 2, -2, 2), 128, 128)
    edge = boundary_pixels(r).points
    assert edge.size > 0
    assert np.all(np.abs(np.abs(edge) - 1) <= r.pixel_diagonal)


def test_boundary_includes_saturated_border_pixels():
    r = raster_dynamical(CorrParams(2, 1, 0), EscapeConfig(depth_cap=10), (-0.5, 0.5, -0.5, 0.5), 4, 4)
    assert len(boundary_pixels(r)) == 12


@pytest.mark.parametrize("cap", [30, 64, 300, 70000])
def test_pgm_round_trip(cap):
    P = CorrParams(4, 2, -1)
    r = raster_dynamical(P, EscapeConfig(depth_cap=min(cap, 40)), (-2, 2, -2, 2), 17, 9)
    r = type(r)(r.bounds, r.width, r.height, r.values, cap, r.meta)
    buf = _io.BytesIO()
    write_pgm(r, buf)
    data = buf.getvalue()
    assert data.startswith(b"P5\n17 9\n")
    maxval, values = read_pgm(_io.BytesIO(data))
    assert maxval == min(cap, 65535)
    assert np.array_equal(values, r.values)


def test_inclusion_check_trivial_at_equal_parameters():
    P = CorrParams(4, 2, -1)
    samples = pixel_centers((-1.7, 1.7, -1.7, 1.7), 30, 30).ravel()
    assert region_inclusion_check(P, -1, 4, samples).violations == 0


def test_inclusion_check_reports_far_parameters():
    P = CorrParams(4, 2, 0)
    samples = pixel_centers((-1.7, 1.7, -1.7, 1.7), 30, 30).ravel()
    rep = region_inclusion_check(P, -1, 3, samples)
    assert rep.total == samples.size
    assert rep.violations >= 0
    assert '"violations"' in rep.to_json()
