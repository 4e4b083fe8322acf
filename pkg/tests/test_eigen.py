import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spectral_bounds.eigen import (InsufficientSpectrum, SpectrumSummary, cluster_gaps,
                                   cluster_multiplicities, counting_function, extrapolate, solve_lowest)
from spectral_bounds.fem import assemble
from spectral_bounds.domain import generate_domain
from spectral_bounds.mesh import triangulate
from spectral_bounds.oracle import J01, rectangle_spectrum, torus_spectrum
from spectral_bounds.pipeline import fem_spectrum

from conftest import DISK, PI2, square_spec


def test_square_dirichlet_extrapolated():
    s = fem_spectrum(square_spec(), "dirichlet", 0.04, 6)
    assert s.best()[:5] == pytest.approx(np.array([2, 5, 5, 8, 10]) * PI2, rel=2e-3)
    assert np.all(s.upper()[:5] >= np.array([2, 5, 5, 8, 10]) * PI2)    # Galerkin upper bounds


def test_square_neumann():
    s = fem_spectrum(square_spec(), "neumann", 0.04, 6)
    assert s.best()[0] == pytest.approx(0.0, abs=1e-8)
    assert s.best()[1:4] == pytest.approx([PI2, PI2, 2 * PI2], rel=2e-3)


def test_disk_dirichlet():
    s = fem_spectrum(DISK, "dirichlet", 0.04, 4)
    assert s.best()[0] == pytest.approx(J01 ** 2, rel=1e-3)


def test_richardson_improves():
    coarse = solve_lowest(assemble(triangulate(generate_domain(square_spec()), 0.08), "dirichlet"), 4)
    s = fem_spectrum(square_spec(), "dirichlet", 0.08, 4)
    exact = 2 * PI2
    assert abs(s.best()[0] - exact) < abs(s.upper()[0] - exact) < abs(coarse.upper()[0] - exact)
    assert s.lower()[0] <= exact <= s.upper()[0]


def test_solver_rejects_oversized_request():
    p = assemble(triangulate(generate_domain(square_spec()), 0.5), "neumann")
    with pytest.raises(ValueError):
        solve_lowest(p, p.n_dofs)


def test_counting_examples():
    s = rectangle_spectrum(1.0, 1.0, "neumann", 10)
    assert counting_function(s, 1.0) == 1
    assert counting_function(s, PI2 * (1 + 1e-6)) == 3
    d = rectangle_spectrum(1.0, 1.0, "dirichlet", 10)
    assert counting_function(d, 2 * PI2) == 0
    with pytest.raises(InsufficientSpectrum):
        counting_function(d, 1e6)


def test_cluster_examples():
    vals = [0.0, 9.87, 9.87, 19.74]
    assert [m for _, m, _ in cluster_multiplicities(vals, 1e-6)] == [1, 2, 1]
    t = torus_spectrum(1.0, 1.0, 10)
    assert [m for _, m, _ in cluster_multiplicities(t, 1e-6)][:2] == [1, 4]
    assert [m for _, m, _ in cluster_multiplicities([1.0, 2.0, 3.5, 7.0], 1e-3)] == [1, 1, 1, 1]
    with pytest.raises(ValueError):
        cluster_multiplicities(vals, 0.6)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.0, 1e3), min_size=1, max_size=30), st.floats(1e-6, 0.4))
def test_cluster_sizes_sum(vals, gap):
    vals = sorted(vals)
    cl = cluster_multiplicities(vals, gap)
    assert sum(m for _, m, _ in cl) == len(vals)
    assert [s for s, _, _ in cl] == list(np.cumsum([0] + [m for _, m, _ in cl])[:-1])


def test_summary_validation_and_json():
    with pytest.raises(ValueError):
        SpectrumSummary("dirichlet", [2.0, 1.0])
    s = fem_spectrum(square_spec(), "dirichlet", 0.08, 4)
    d = s.to_dict()
    assert set(d) == {"bc", "h", "eigenvalues", "clusters", "residuals", "extrapolated"}
    assert len(cluster_gaps(s)) == len(s.clusters)


def test_scaled_summary():
    s = rectangle_spectrum(1.0, 1.0, "dirichlet", 5)
    assert s.scaled(2.0).eigenvalues == pytest.approx(s.eigenvalues / 4)


def test_deterministic_eigenvectors():
    p = assemble(triangulate(generate_domain(DISK), 0.15), "neumann")
    a, b = solve_lowest(p, 5, seed=3), solve_lowest(p, 5, seed=3)
    assert np.array_equal(a.eigenvalues, b.eigenvalues)
    assert np.array_equal(a.eigenvectors, b.eigenvectors)


def test_extrapolate_shapes():
    mesh = triangulate(generate_domain(square_spec()), 0.2)
    from spectral_bounds.mesh import refine

    c = solve_lowest(assemble(mesh, "dirichlet"), 5)
    f = solve_lowest(assemble(refine(mesh), "dirichlet"), 5)
    e = extrapolate(c, f)
    assert np.array_equal(e.upper(), f.upper())
    assert e.error == pytest.approx(np.abs(f.eigenvalues - c.eigenvalues) / 3)
