import dataclasses
import math

import numpy as np
import pytest

from spectral_bounds import bounds as B
from spectral_bounds.domain import DomainSpec
from spectral_bounds.eigen import InsufficientSpectrum
from spectral_bounds.oracle import J01, disk_spectrum, rectangle_spectrum, torus_spectrum
from spectral_bounds.pipeline import domain_invariants

from conftest import DISK, PI2, square_spec

SQ_N = rectangle_spectrum(1, 1, "neumann", 60)
SQ_D = rectangle_spectrum(1, 1, "dirichlet", 60)


@pytest.fixture(scope="module")
def sq_inv():
    return domain_invariants(square_spec())


@pytest.fixture(scope="module")
def disk_inv():
    return domain_invariants(DISK)


def scaled_inv(inv, t):
    g = lambda x: None if x is None else x * t
    return dataclasses.replace(inv, d=inv.d * t, d_bar=inv.d_bar * t, inradius_rho=g(inv.inradius_rho),
                               rad=g(inv.rad), vol=inv.vol * t * t, inj_inverse=inv.inj_inverse / t)


def lattice_count(lam, start):
    n = int(math.isqrt(int(lam / PI2)) + 2)
    return sum(1 for p in range(start, n) for q in range(start, n) if PI2 * (p * p + q * q) < lam)


def test_ids_and_aliases():
    assert B.canonical_id("ourcheng") == "cheng_neumann_convex"
    assert len(set(B.BOUND_IDS)) == len(B.BOUND_IDS)
    with pytest.raises(KeyError):
        B.canonical_id("nope")


def test_li_yau_and_zhong_yang(sq_inv, disk_inv):
    r = B.check_lambda1_lower(SQ_N, sq_inv, "li_yau")
    assert r.satisfied and r.bound_value == pytest.approx(PI2 / 8) and r.margin == pytest.approx(8)
    assert r.constant_tier == B.PAPER
    r = B.check_lambda1_lower(disk_spectrum(1, "neumann", 5), disk_inv, "li_yau")
    assert r.satisfied and r.bound_value == pytest.approx(PI2 / 16)
    assert B.check_lambda1_lower(SQ_N, sq_inv, "zhong_yang").margin == pytest.approx(2)
    t = B.check_lambda1_lower(SQ_N.scaled(10), scaled_inv(sq_inv, 10), "li_yau")
    assert t.margin == pytest.approx(8)


def test_lower_bounds_refuse_nonconvex():
    spec = DomainSpec("dumbbell", {"ball_radius": 1.0, "neck_width": 0.2, "neck_length": 1.0})
    inv = domain_invariants(spec)
    with pytest.raises(B.BoundNotApplicable):
        B.check_lambda1_lower(SQ_N, inv, "li_yau")
    with pytest.raises(B.BoundNotApplicable):
        B.check_lambda1_lower(SQ_D, inv, "li_yau")


def test_gromov_counting(sq_inv):
    n_exact = lattice_count(100.0, 0)
    r = B.check_gromov_counting(SQ_N, sq_inv, 100.0, C4=0.4 * n_exact / 8)
    assert r.measured_value == n_exact
    assert r.satisfied
    assert not B.check_gromov_counting(SQ_N, sq_inv, 100.0, C4=0.9 * n_exact / 200).satisfied
    assert B.check_gromov_counting(SQ_N, sq_inv, 1.0, C4=0.0).satisfied          # max{., 1}
    with pytest.raises(B.MissingConstant):
        B.check_gromov_counting(SQ_N, sq_inv, 100.0, store=B.ConstantStore())
    with pytest.raises(InsufficientSpectrum):
        B.check_gromov_counting(SQ_N, sq_inv, 1e6, C4=1.0)


def test_liyau_counting(sq_inv):
    lam = 50 * PI2
    r = B.check_dirichlet_counting_liyau(SQ_D, sq_inv, lam)
    assert r.measured_value == lattice_count(lam, 1)
    assert r.satisfied and r.constants_used["C20"]["value"] == pytest.approx(1 / (2 * math.pi))
    assert r.constant_tier == B.DERIVED
    assert B.check_dirichlet_counting_liyau(SQ_D, sq_inv, PI2).measured_value == 0


def test_cheng_neumann_convex(sq_inv, disk_inv):
    r = B.check_cheng_neumann_convex(SQ_N, sq_inv, 1)
    assert r.measured_value * sq_inv.d ** 2 == pytest.approx(2 * PI2) and r.satisfied
    assert r.bound_value == pytest.approx(64 / 2)
    dn = disk_spectrum(1, "neumann", 12)
    r = B.check_cheng_neumann_convex(dn, disk_inv, 3)
    assert r.measured_value == pytest.approx(3.05424 ** 2, rel=1e-4)
    assert r.measured_value * 4 / 9 == pytest.approx(4.15, abs=0.01)
    s = B.check_cheng_neumann_convex(SQ_N, sq_inv, 3, variant="shifted")
    assert s.measured_value == pytest.approx(PI2) and s.note
    with pytest.raises(ValueError):
        B.check_cheng_neumann_convex(SQ_N, sq_inv, 0)


def test_cheng_closed_torus():
    inv = domain_invariants(DomainSpec("torus", {"a": 1.0, "b": 1.0}))
    t = torus_spectrum(1, 1, 10)
    r = B.check_cheng_closed_explicit(t, inv, 1)
    assert r.bound_value == pytest.approx(4 * J01 ** 2 / 0.5) and r.bound_value == pytest.approx(46.27, abs=0.01)
    assert r.satisfied
    thin_inv = domain_invariants(DomainSpec("torus", {"a": 1.0, "b": 0.01}))
    r = B.check_cheng_closed_explicit(torus_spectrum(1, 0.01, 10), thin_inv, 5)
    assert r.measured_value == pytest.approx(4 * PI2 * 9) and r.satisfied
    with pytest.raises(B.BoundNotApplicable):
        B.check_cheng_closed_explicit(SQ_N, inv, 1)


def test_cheng_yang(sq_inv):
    r = B.check_cheng_yang(SQ_D, 2)
    assert r.measured_value == pytest.approx(5 * PI2) and r.bound_value == pytest.approx(15 * PI2)
    d = disk_spectrum(1, "dirichlet", 5)
    r = B.check_cheng_yang(d, 2)
    assert r.measured_value == pytest.approx(14.682, abs=1e-3) and r.bound_value == pytest.approx(43.37, abs=0.01)
    with pytest.raises(B.BoundNotApplicable):
        B.check_cheng_yang(SQ_D, 1)


def test_dirichlet_upper(disk_inv, sq_inv):
    d = disk_spectrum(1, "dirichlet", 5)
    r = B.check_dirichlet_upper(d, disk_inv, 0)
    assert r.measured_value == pytest.approx(5.78319, abs=1e-5) and r.satisfied
    assert B.check_dirichlet_upper(d, disk_inv, 0, "buser_dp").satisfied
    with pytest.raises(B.BoundNotApplicable):
        B.check_dirichlet_upper(SQ_D, sq_inv, 0)                 # corners: rad = 0


def test_buser(sq_inv):
    r = B.check_buser_neumann(SQ_N, sq_inv, 10, C=SQ_N.upper()[10] / 10)
    assert r.satisfied and r.margin == pytest.approx(1.0)
    inv = domain_invariants(DomainSpec("torus", {"a": 1.0, "b": 1.0}))
    with pytest.raises(B.BoundNotApplicable):
        B.check_buser_neumann(SQ_N, inv, 1, "buser79", C=1.0)


def test_multiplicity_examples(disk_inv):
    inv = domain_invariants(DomainSpec("torus", {"a": 1.0, "b": 1.0}))
    t = torus_spectrum(1, 1, 20)
    r = B.check_multiplicity(t, inv, 1, "mbc_diameter", constant=4.0)
    assert r.measured_value == 4 and r.satisfied
    assert not B.check_multiplicity(t, inv, 1, "mbc_diameter", constant=3.9).satisfied
    d = disk_spectrum(1, "dirichlet", 21)
    for k in range(0, 19):
        r = B.check_multiplicity(d, disk_inv, k, "planar_dirichlet")
        assert r.measured_value <= 2 and r.satisfied


def test_estimate_constant(sq_inv):
    c = B.estimate_constant("ourcheng", [("square", SQ_N, sq_inv)])
    assert c.value == pytest.approx(2 * PI2) and c.attained_on == "square" and c.at == 1
    c3 = B.estimate_constant("ourcheng", [("square", SQ_N.scaled(3), scaled_inv(sq_inv, 3))])
    assert c3.value == pytest.approx(c.value, rel=1e-6)
    cm = B.estimate_constant("cm", [("square", SQ_N, sq_inv)])
    assert cm.value == pytest.approx(PI2) and cm.value < 4 * math.pi     # lambda_1 vol / 1 on the square
    ly = B.estimate_constant("li_yau", [("square", SQ_N, sq_inv)])
    assert ly.kind == "inf" and ly.value == pytest.approx(2 * PI2)
    with pytest.raises(ValueError):
        B.estimate_constant("cm", [])


def test_self_consistency(sq_inv):
    store = B.ConstantStore()
    B.estimate_constant("gromov_counting", [("square", SQ_N, sq_inv)], store=store)
    B.estimate_constant("cm", [("square", SQ_N, sq_inv)], store=store)
    store.freeze()
    with pytest.raises(RuntimeError):
        B.estimate_constant("cm", [("square", SQ_N, sq_inv)], store=store)
    for lam in np.unique(SQ_N.lower()[1:40]) * (1 + 1e-9):
        assert B.check_gromov_counting(SQ_N, sq_inv, lam, store=store).satisfied
    for k in range(1, 11):
        r = B.check_buser_neumann(SQ_N, sq_inv, k, store=store)
        assert r.satisfied and r.constant_tier == B.EMPIRICAL


def test_report_serialization(sq_inv):
    r = B.check_lambda1_lower(SQ_N, sq_inv, "li_yau", domain_id="square")
    d = r.to_dict()
    assert d["bound_id"] == "li_yau" and d["domain_id"] == "square"
    assert len(r.csv_row()) == len(B.BoundReport.CSV_FIELDS)


@pytest.mark.parametrize("family", ["dumbbell", "rounded_rectangle"])
def test_unknown_family(family):
    with pytest.raises(ValueError):
        B.necessity_suite("spiral")
