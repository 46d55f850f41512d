import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corrdyn import BranchAnchor, CorrParams, PointCloud
from corrdyn.branchsys import (
    BranchSystem,
    Disk,
    build_branch_system,
    build_critical_system,
    derivative_bound_C0,
    f_of_c,
    verify_system,
)
from corrdyn.centres import (
    ZERO_PARAMETER_CAVEAT,
    CentreRecord,
    centre_solve,
    postcritical_cloud,
    search_centres,
    simple_centre_verify,
)
from corrdyn.cifs import (
    attracting_cycle,
    cifs_from_system,
    cylinder_diameters,
    dual_julia,
    hutchinson_step,
    limit_set,
    limit_set_levels,
    omega_forward,
)
from corrdyn.errors import (
    ConstructionFailed,
    DomainEscape,
    NotCentre,
    TooCloseToCenter,
)
from corrdyn.julia import hausdorff_distance

A = CorrParams(4, 2, -1)


@pytest.fixture(scope="module")
def near_system():
    return build_branch_system(A.with_c(-1 + 1e-3), -1, [0, 0])


@pytest.fixture(scope="module")
def near_cifs(near_system):
    return cifs_from_system(near_system)


# -- centres -----------------------------------------------------------------

def test_centre_solve_examples():
    assert abs(centre_solve(4, 2, [0, 0], -0.9) + 1) < 1e-10
    assert abs(centre_solve(2, 1, [0], 0.3)) < 1e-10


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_roots_of_minus_one_are_simple_centres(d):
    for k in range(d - 1):
        a = cmath.exp(1j * math.pi * (2 * k + 1) / (d - 1))
        rec = simple_centre_verify(CorrParams(2 * d, 2, a), 2, 12)
        assert rec.simple
        assert abs(rec.cycle[0]) < 1e-10 and abs(rec.cycle[1] - a) < 1e-10


def test_simple_centre_record():
    rec = simple_centre_verify(A, 2, 12)
    assert rec.simple and rec.n == 2 and rec.escape_certificate < 12
    assert rec.to_dict()["c"] == {"re": -1.0, "im": 0.0}
    assert set(rec.to_dict()) >= {"p", "q", "c", "n", "word", "simple", "caveats"}


def test_non_centre_rejected():
    with pytest.raises(NotCentre):
        simple_centre_verify(CorrParams(4, 2, 0.5), 2)


def test_zero_parameter_caveat():
    rec = simple_centre_verify(CorrParams(2, 1, 0), 1)
    assert ZERO_PARAMETER_CAVEAT in rec.caveats


def test_search_finds_basilica():
    found = search_centres(2, 1, 2, [-0.9, -1.1])
    assert any(abs(r.c + 1) < 1e-10 for r in found)
    assert all(isinstance(r, CentreRecord) for r in found)


def test_postcritical_cloud_at_centre_is_the_cycle():
    pc = postcritical_cloud(A, 6)
    bounded = pc.bounded().points
    assert bounded.size == 2
    assert np.min(np.abs(bounded)) < 1e-10 and np.min(np.abs(bounded + 1)) < 1e-10


# -- branch systems ----------------------------------------------------------

def test_C0_sanity_oracles():
    P = CorrParams(2, 1, 0)
    assert derivative_bound_C0(P, [Disk(1, 1e-6), Disk(1, 1e-6)], [BranchAnchor(1, 1)]) == \
        pytest.approx(3.0, rel=1e-5)
    assert derivative_bound_C0(P, [Disk(1, 1e-6)], []) == 1.5


def test_disk_relations():
    a, b = Disk(0, 1), Disk(3, 1)
    assert a.disjoint(b) and not a.disjoint(Disk(1.5, 1))
    assert Disk(0.1, 0.5).inside(a) and not Disk(0.6, 0.5).inside(a)
    with pytest.raises(ValueError):
        Disk(0, 0)


@pytest.mark.parametrize("P", [A, CorrParams(2, 1, -1)])
def test_critical_system(P):
    s = build_critical_system(P, [0, 0], 0.05)
    assert s.kind == "critical" and s.n == 2
    assert s.disks[0].center == pytest.approx(-1)
    assert s.disks[0].radius == pytest.approx(0.05 ** P.beta)
    assert bool(s.disks[-1].contains(0))
    assert all(v for k, v in verify_system(s).items() if k != "n")
    assert abs(f_of_c(P, s)) < 1e-10


def test_critical_system_too_large():
    with pytest.raises(ConstructionFailed):
        build_critical_system(A, [0, 0], 1.0)


def test_branch_system_d_formula(near_system):
    s = near_system
    P = s.params
    f = abs(f_of_c(P, s))
    assert 0 < f < 2e-3
    expect = (f * math.sin(math.pi / 4) / (1.5 * s.C0)) ** 0.5
    assert s.d == pytest.approx(expect, rel=1e-9)
    assert s.kind == "branches"
    assert all(v for k, v in s.checks.items() if k != "n")
    assert not bool(s.disks[-1].contains(0))


def test_branch_system_at_centre_refused():
    with pytest.raises(TooCloseToCenter):
        build_branch_system(A, -1, [0, 0])


def test_branch_system_quadratic():
    s = build_branch_system(CorrParams(2, 1, -1 + 1e-3), -1, [0, 0])
    assert all(v for k, v in s.checks.items() if k != "n")


def test_branch_system_json_round_trip(near_system):
    again = BranchSystem.from_json(near_system.to_json())
    assert again == near_system


def test_d_decreases_towards_centre():
    ds = [build_branch_system(A.with_c(-1 + 10.0 ** -k), -1, [0, 0]).d for k in (2, 3, 4)]
    assert ds[0] > ds[1] > ds[2]


# -- CIFS ----------------------------------------------------------------------

def test_cifs_contracts(near_cifs):
    assert near_cifs.q == 2
    assert near_cifs.lam_est < 1
    assert near_cifs.image_disks[0].disjoint(near_cifs.image_disks[1])
    for D in near_cifs.image_disks:
        assert D.inside(near_cifs.base)


def test_cifs_rejects_critical_system():
    with pytest.raises(ValueError):
        cifs_from_system(build_critical_system(A, [0, 0], 0.05))


def test_cifs_derivative_matches_finite_difference(near_cifs):
    z = near_cifs.base.center + 0.3 * near_cifs.base.radius
    h = 1e-6 * near_cifs.base.radius
    for k in range(near_cifs.q):
        fd = (near_cifs.apply(k, z + h) - near_cifs.apply(k, z - h)) / (2 * h)
        assert abs(fd - near_cifs.derivative(k, z)) < 1e-4 * abs(fd)


def test_hutchinson_examples(near_cifs):
    empty = hutchinson_step(near_cifs, PointCloud(np.empty(0, complex), {}))
    assert empty.points.size == 0
    two = hutchinson_step(near_cifs, PointCloud(np.array([near_cifs.base.center]), {}))
    assert two.points.size == 2
    assert np.all(near_cifs.base.contains(two.points))
    x = attracting_cycle(near_cifs, [0]).points[0]
    image = hutchinson_step(near_cifs, PointCloud(np.array([x]), {})).points
    assert np.min(np.abs(image - x)) < 1e-10


def test_limit_set_levels(near_cifs):
    one = limit_set(near_cifs, 10 * near_cifs.base.radius)
    assert one.points.tolist() == [near_cifs.base.center]
    fine = limit_set(near_cifs, 1e-6)
    j = round(math.log2(fine.points.size))
    assert fine.points.size == 2 ** j and j >= 1
    lv = limit_set_levels(near_cifs, 3).points
    # cylinders are contiguous: the first half lies in image disk 0
    assert np.all(near_cifs.image_disks[0].contains(lv[:4]))
    assert np.all(near_cifs.image_disks[1].contains(lv[4:]))


def test_cylinder_diameters_shrink(near_cifs):
    d = cylinder_diameters(near_cifs, 5)
    assert np.all(np.diff(d) < 0)


def test_attracting_cycle_words(near_cifs):
    a = attracting_cycle(near_cifs, [0]).points[0]
    aa = attracting_cycle(near_cifs, [0, 0]).points[0]
    b = attracting_cycle(near_cifs, [1]).points[0]
    assert abs(a - aa) < 1e-10
    assert abs(a - b) > 1e-6


def test_attracting_cycle_quadratic_oracle():
    c = -1 + 1e-3
    cifs = cifs_from_system(build_branch_system(CorrParams(2, 1, c), -1, [0, 0]))
    rec = attracting_cycle(cifs, [0])
    # period-2 points of z^2 + c solve z^2 + z + c + 1 = 0
    roots = np.roots([1, 1, c + 1])
    assert rec.cls == "attracting"
    assert all(np.min(np.abs(roots - z)) < 1e-10 for z in rec.points)
    assert abs(rec.multiplier - 4 * (c + 1)) < 1e-10


def test_dual_julia_examples():
    at = dual_julia(-1, A, 1e-6).points
    assert at.size == 2
    assert np.min(np.abs(at)) < 1e-10 and np.min(np.abs(at + 1)) < 1e-10
    near = dual_julia(-1, A.with_c(-1 + 1e-3), 1e-6).points
    assert near.size > 2
    assert np.all(np.minimum(np.abs(near), np.abs(near + 1)) < 0.05)
    assert np.any(np.abs(near) < 0.05) and np.any(np.abs(near + 1) < 0.05)
    assert dual_julia(None, A.with_c(10), 1e-6).points.size == 0


def test_omega_forward_examples(near_system):
    P = near_system.params
    dual = dual_julia(near_system, P, 1e-6)
    x = attracting_cycle(cifs_from_system(near_system), [0]).points[0]
    tail, rep = omega_forward(near_system, x, 8, reference=PointCloud(np.array([x]), {}))
    assert rep.distance is not None
    with pytest.raises(DomainEscape):
        omega_forward(near_system, 0.5 + 0.5j, 4)
    assert hausdorff_distance(dual, dual) == 0


@given(st.floats(0.01, 0.9), st.floats(0, 2 * math.pi))
@settings(max_examples=30, deadline=None)
def test_contraction_maps_base_into_itself(r, t):
    cifs = _SHARED["cifs"]
    z = cifs.base.center + r * cifs.base.radius * cmath.exp(1j * t)
    for k in range(cifs.q):
        w = cifs.apply(k, z)
        assert bool(cifs.image_disks[k].contains(w))


_SHARED = {"cifs": cifs_from_system(build_branch_system(A.with_c(-1 + 1e-3), -1, [0, 0]))}
