"""Acceptance criteria 1-12, each printing one PASS/FAIL line.

The checks reuse the verification battery, so the numbers here are the same
ones ``spectral-bounds verify-all`` reports.
"""

import pytest

from spectral_bounds import battery as bt
from spectral_bounds import bounds as B


@pytest.fixture(scope="module")
def bat():
    return bt.Battery(seed=0)


_cache = {}


def rows(bat, fn):
    if fn not in _cache:
        _cache[fn] = {r.tag: r for r in fn(bat)}
    return _cache[fn]


def _combine(rs):
    return all(r.passed for r in rs), "; ".join(f"{r.tag}: {r.summary}" for r in rs)


def test_criterion_01_oracle_fidelity(bat, criterion):
    r = rows(bat, bt.oracle_fem)
    ok, text = _combine(r.values())
    assert criterion(1, ok and set(r) == {"oracle_fem:square", "oracle_fem:disk"}, text)


def test_criterion_02_weyl_ratio(bat, criterion):
    ok, text = _combine(rows(bat, bt.weyl).values())
    assert criterion(2, ok, text)


def test_criterion_03_ordering_monotonicity(bat, criterion):
    r = rows(bat, bt.ordering)
    ok, text = _combine([r["ordering"], r["monotonicity"]])
    assert criterion(3, ok, text)


def test_criterion_04_scaling(bat, criterion):
    r = rows(bat, bt.scaling)
    ok, text = _combine([r["scaling:fem"], r["scaling:oracle"]])
    assert criterion(4, ok, text)


def test_criterion_05_cheng_convex(bat, criterion):
    r = rows(bat, bt.bounds_suite)
    reps = [x for x in bat.reports[0] if x.bound_id == "cheng_neumann_convex"]
    corpus = {x.domain_id for x in reps}
    per_k = all(x.satisfied and x.constants_used["C10"]["value"] == 64 for x in reps)
    ks = {d: sorted(int(x.k_or_lambda) for x in reps if x.domain_id == d) for d in bt.CORPUS}
    per_k &= all(v == list(bt.K_RANGE) for v in ks.values())
    ok = per_k and set(bt.CORPUS) <= corpus and r["cheng_neumann_convex:corpus_max"].passed
    assert criterion(5, ok, f"{len(reps)} reports with C10 = 64 on {sorted(corpus)}; "
                            f"{r['cheng_neumann_convex:corpus_max'].summary}")


def test_criterion_06_revolution(bat, criterion):
    r = rows(bat, bt.necessity)["necessity:revolution"]
    assert r.detail["values"] == [4.0, 8.0, 16.0]
    assert criterion(6, r.passed, r.summary)


def test_criterion_07_rad_necessity(bat, criterion):
    r = rows(bat, bt.necessity)["necessity:rounded_rectangle"]
    assert r.detail["values"] == [0.4, 0.2, 0.1]
    assert criterion(7, r.passed, r.summary)


def test_criterion_08_convexity_necessity(bat, criterion):
    r = rows(bat, bt.necessity)["necessity:dumbbell"]
    assert r.detail["values"] == [0.2, 0.1, 0.05]
    assert criterion(8, r.passed, r.summary)


def test_criterion_09_covering(bat, criterion):
    r = rows(bat, bt.covering)
    ok, text = _combine([r["covering:cardinality"], r["covering:overlap"], r["covering:packing_radius"]])
    assert criterion(9, ok, text)


def test_criterion_10_segment_poincare(bat, criterion):
    r = rows(bat, bt.monte_carlo)
    ok, text = _combine([r["segment_mc"], r["poincare"]])
    assert criterion(10, ok, text)


def test_criterion_11_phi_certificate(bat, criterion):
    r = rows(bat, bt.phi)
    got = sorted(r)
    ok, text = _combine(r.values())
    assert criterion(11, ok and got == ["phi_certificate:N10", "phi_certificate:N3", "phi_certificate:N6"], text)


def test_criterion_12_multiplicity(bat, criterion):
    r = rows(bat, bt.multiplicity)
    reps = [x for x in bat.reports[0] if x.bound_id in B.MULTIPLICITY_VARIANTS]
    bad = [x for x in reps if not x.satisfied and not x.informational]
    ok = r["multiplicity:torus_oracle"].passed and r["multiplicity:disk_dirichlet"].passed and not bad
    assert criterion(12, ok, f"{r['multiplicity:torus_oracle'].summary}; {r['multiplicity:disk_dirichlet'].summary}; "
                             f"{len(reps) - len(bad)}/{len(reps)} multiplicity reports satisfied")
