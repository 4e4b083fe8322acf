import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spectral_bounds.domain import (DomainError, DomainSpec, Line, generate_domain, invariants,
                                    scale_domain)

from conftest import DISK, square_spec


def test_unit_square_segments():
    dom = generate_domain(square_spec())
    assert len(dom.segments) == 4
    assert all(isinstance(s, Line) for s in dom.segments)
    assert dom.convex
    assert dom.area == pytest.approx(1.0, abs=1e-15)


def test_rounded_rectangle_area():
    dom = generate_domain(DomainSpec("rounded_rectangle", {"length": 1.0, "width": 0.2, "corner_radius": 0.1}))
    assert dom.convex
    assert dom.area == pytest.approx(0.2 - (4 - math.pi) * 0.01, rel=1e-12)


def test_dumbbell_is_nonconvex():
    dom = generate_domain(DomainSpec("dumbbell", {"ball_radius": 1.0, "neck_width": 0.05, "neck_length": 1.0}))
    assert not dom.convex
    assert dom.feature_size == pytest.approx(0.05)


@pytest.mark.parametrize("spec", [
    DomainSpec("disk", {"radius": -1.0}),
    DomainSpec("rounded_rectangle", {"length": 1.0, "width": 0.2, "corner_radius": 0.2}),
    DomainSpec("polygon", {"vertices": [[0, 0], [1, 0], [2, 0]]}),
    DomainSpec("nonsense", {}),
])
def test_invalid_specs_rejected(spec):
    with pytest.raises(DomainError):
        generate_domain(spec)


def test_convex_hint_checked():
    with pytest.raises(DomainError):
        generate_domain(DomainSpec("dumbbell", {"ball_radius": 1.0, "neck_width": 0.2, "neck_length": 1.0}, True))


def test_spec_json_round_trip():
    spec = DomainSpec("rounded_rectangle", {"length": 2.0, "width": 1.0, "corner_radius": 0.5}, True)
    assert DomainSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(DomainError):
        DomainSpec.from_dict({"kind": "disk", "parameters": {}, "bogus": 1})


def test_square_invariants():
    inv = invariants(generate_domain(square_spec()), 0.01)
    assert inv.d == pytest.approx(math.sqrt(2))
    assert inv.d_bar == pytest.approx(math.sqrt(2), abs=0.02)
    assert inv.inradius_rho == pytest.approx(0.5, abs=1e-6)
    assert inv.rad == 0.0
    assert inv.vol == pytest.approx(1.0)


def test_disk_invariants():
    inv = invariants(generate_domain(DISK), 0.01)
    assert inv.d == pytest.approx(2.0)
    assert inv.d_bar == pytest.approx(2.0, abs=0.02)
    assert inv.inradius_rho == pytest.approx(1.0, abs=1e-6)
    assert inv.rad == pytest.approx(1.0, abs=0.01)
    assert inv.vol == pytest.approx(math.pi, rel=1e-12)


def test_rounded_rectangle_invariants():
    inv = invariants(generate_domain(DomainSpec("rounded_rectangle",
                                                {"length": 1.0, "width": 0.2, "corner_radius": 0.1})), 0.005)
    assert inv.rad == pytest.approx(0.1, abs=0.005)
    assert inv.inradius_rho == pytest.approx(0.1, abs=1e-6)
    # brute force over a dense boundary sample
    pts = generate_domain(DomainSpec("rounded_rectangle",
                                     {"length": 1.0, "width": 0.2, "corner_radius": 0.1})).boundary_points(0.002).points
    brute = np.max(np.linalg.norm(pts[:, None] - pts[None], axis=2))
    assert inv.d == pytest.approx(brute, abs=2e-3)


def test_dumbbell_intrinsic_diameter_exceeds_extrinsic():
    dom = generate_domain(DomainSpec("dumbbell", {"ball_radius": 1.0, "neck_width": 0.2, "neck_length": 1.0}))
    inv = invariants(dom, 0.02)
    assert inv.d == pytest.approx(5.0, abs=0.01)
    assert inv.d_bar >= inv.d - 1e-9
    assert inv.rad <= inv.inradius_rho <= inv.d / 2


def test_torus_invariants():
    inv = invariants(generate_domain(DomainSpec("torus", {"a": 1.0, "b": 0.5})), 0.01)
    assert inv.d == pytest.approx(math.hypot(1.0, 0.5) / 2)
    assert inv.vol == pytest.approx(0.5)
    assert inv.inj_inverse == pytest.approx(4.0)


def test_scale_examples():
    sq = scale_domain(generate_domain(square_spec()), 2.0)
    assert invariants(sq, 0.02).d == pytest.approx(2 * math.sqrt(2))
    assert scale_domain(generate_domain(DISK), 0.5).spec.parameters["radius"] == 0.5
    db = DomainSpec("dumbbell", {"ball_radius": 1.0, "neck_width": 0.1, "neck_length": 1.0})
    p = scale_domain(generate_domain(db), 3.0).spec.parameters
    assert p == pytest.approx({"ball_radius": 3.0, "neck_width": 0.3, "neck_length": 3.0})
    with pytest.raises(DomainError):
        scale_domain(generate_domain(DISK), 0.0)


@settings(max_examples=15, deadline=None)
@given(t=st.floats(0.2, 5.0), w=st.floats(0.2, 1.0), L=st.floats(1.0, 3.0))
def test_invariants_scale_covariant(t, w, L):
    spec = DomainSpec("rounded_rectangle", {"length": L, "width": w, "corner_radius": w / 4})
    dom = generate_domain(spec)
    res = 0.02
    a = invariants(dom, res)
    b = invariants(scale_domain(dom, t), res * t)
    assert b.d == pytest.approx(t * a.d, rel=1e-9)
    assert b.vol == pytest.approx(t * t * a.vol, rel=1e-9)
    assert b.inradius_rho == pytest.approx(t * a.inradius_rho, rel=1e-6)
    assert abs(b.rad - t * a.rad) <= 2 * res * t
    assert abs(b.d_bar - t * a.d_bar) <= 2 * res * t


@settings(max_examples=15, deadline=None)
@given(w=st.floats(0.1, 1.0), rc_frac=st.floats(0.05, 0.5))
def test_convex_invariant_ordering(w, rc_frac):
    dom = generate_domain(DomainSpec("rounded_rectangle",
                                     {"length": 1.5, "width": w, "corner_radius": rc_frac * w}))
    res = 0.01
    inv = invariants(dom, res)
    assert abs(inv.d - inv.d_bar) <= 2 * res
    assert inv.rad <= inv.inradius_rho + 1e-9 <= inv.d / 2 + 2e-9


def test_signed_distance_and_contains():
    dom = generate_domain(DISK)
    pts = np.array([[0.0, 0.0], [0.5, 0.0], [1.5, 0.0]])
    assert np.allclose(dom.signed_distance(pts), [-1.0, -0.5, 0.5])
    assert list(dom.contains(pts)) == [True, True, False]


def test_dumbbell_limit_monotone():
    vals = []
    for w in (0.4, 0.2, 0.1):
        inv = invariants(generate_domain(DomainSpec("dumbbell", {"ball_radius": 1.0, "neck_width": w,
                                                                 "neck_length": 1.0})), 0.02)
        vals.append((inv.d, inv.vol))
    vols = [v for _, v in vals]
    assert all(np.diff(vols) < 0)
    assert all(abs(d - 5.0) < 1e-2 for d, _ in vals)
