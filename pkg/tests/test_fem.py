import math

import numpy as np
import pytest

from spectral_bounds.domain import generate_domain
from spectral_bounds.fem import AssemblyError, assemble, rayleigh_quotient, read_matrix, write_matrix
from spectral_bounds.mesh import TriMesh, refine, triangulate

from conftest import DISK, square_spec


def single_triangle():
    v = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    return TriMesh(v, np.array([[0, 1, 2]]), np.array([[0, 1], [1, 2], [2, 0]]), 1.0)


def test_single_triangle_matrices():
    p = assemble(single_triangle(), "neumann")
    K = 0.5 * np.array([[2, -1, -1], [-1, 1, 0], [-1, 0, 1]])
    M = np.array([[2, 1, 1], [1, 2, 1], [1, 1, 2]]) / 24
    assert np.allclose(p.K.toarray(), K, atol=1e-15)
    assert np.allclose(p.M.toarray(), M, atol=1e-15)


@pytest.mark.parametrize("spec", [square_spec(), DISK])
def test_partition_of_unity(spec):
    m = triangulate(generate_domain(spec), 0.1)
    p = assemble(m, "neumann")
    assert np.abs(p.K.sum(axis=1)).max() < 1e-12
    assert p.M.sum() == pytest.approx(m.area, rel=1e-12)
    assert abs(p.K - p.K.T).max() == 0 and abs(p.M - p.M.T).max() == 0


def test_rayleigh_constant_is_zero():
    p = assemble(triangulate(generate_domain(DISK), 0.2), "neumann")
    assert rayleigh_quotient(p, np.ones(p.n_dofs)) == pytest.approx(0.0, abs=1e-12)


def test_rayleigh_square_modes():
    m = refine(triangulate(generate_domain(square_spec()), 0.04))
    x, y = m.vertices.T
    pn = assemble(m, "neumann")
    assert rayleigh_quotient(pn, np.cos(math.pi * x)) == pytest.approx(math.pi ** 2, rel=0.01)
    pd = assemble(m, "dirichlet")
    u = pd.restrict(np.sin(math.pi * x) * np.sin(math.pi * y))
    assert rayleigh_quotient(pd, u) == pytest.approx(2 * math.pi ** 2, rel=0.01)


def test_dirichlet_eliminates_boundary():
    m = triangulate(generate_domain(DISK), 0.2)
    p = assemble(m, "dirichlet")
    assert p.n_dofs == m.n_vertices - len(m.boundary_vertices())
    u = p.extend(np.ones(p.n_dofs))
    assert np.all(u[m.boundary_vertices()] == 0)


def test_bad_inputs():
    m = single_triangle()
    with pytest.raises(AssemblyError):
        assemble(m, "robin")
    flat = TriMesh(np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]), np.array([[0, 1, 2]]),
                   np.array([[0, 1], [1, 2], [2, 0]]), 1.0)
    with pytest.raises(AssemblyError):
        assemble(flat, "neumann")
    p = assemble(m, "neumann")
    with pytest.raises(AssemblyError):
        rayleigh_quotient(p, np.zeros(3))


def test_matrix_dump(tmp_path):
    p = assemble(triangulate(generate_domain(DISK), 0.3), "neumann")
    path = tmp_path / "K.txt"
    write_matrix(p.K, path)
    header = path.read_text().splitlines()[0].split()
    assert int(header[0]) == p.n_dofs and header[2] == "1"
    assert abs(read_matrix(path) - p.K).max() == 0
