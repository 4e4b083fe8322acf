import math

import numpy as np
import pytest

from spectral_bounds.domain import DomainSpec, generate_domain
from spectral_bounds.mesh import MeshError, read_mesh, refine, triangulate, write_mesh

from conftest import DISK, square_spec


def test_square_h05():
    m = triangulate(generate_domain(square_spec()), 0.5)
    assert len(m.triangles) >= 8
    assert m.area == pytest.approx(1.0, abs=1e-14)


def test_disk_area():
    m = triangulate(generate_domain(DISK), 0.1)
    assert m.area == pytest.approx(math.pi, rel=0.02)


def test_dumbbell_neck_rejected():
    dom = generate_domain(DomainSpec("dumbbell", {"ball_radius": 1.0, "neck_width": 0.05, "neck_length": 1.0}))
    with pytest.raises(MeshError):
        triangulate(dom, 0.1)


def test_refine_quadruples_and_halves():
    m = triangulate(generate_domain(square_spec()), 0.5)
    r = refine(m)
    assert len(r.triangles) == 4 * len(m.triangles)
    r2 = refine(r)
    assert r2.h == pytest.approx(0.125)
    assert r2.area == pytest.approx(1.0, abs=1e-14)


def test_refine_projects_to_circle():
    m = refine(triangulate(generate_domain(DISK), 0.2))
    bv = m.boundary_vertices()
    assert np.abs(np.linalg.norm(m.vertices[bv], axis=1) - 1.0).max() <= 1e-12


@pytest.mark.parametrize("spec,h", [
    (square_spec(), 0.1), (DISK, 0.1),
    (DomainSpec("rounded_rectangle", {"length": 2.0, "width": 1.0, "corner_radius": 0.5}), 0.1),
    (DomainSpec("dumbbell", {"ball_radius": 1.0, "neck_width": 0.2, "neck_length": 1.0}), 0.1),
    (DomainSpec("annulus_sector", {"inner_radius": 0.5, "outer_radius": 1.0, "angle": 2.0}), 0.08),
])
def test_quality_and_topology(spec, h):
    m = triangulate(generate_domain(spec), h)
    m.validate(quality=True)
    assert m.min_angle() >= 20.0 - 1e-6
    assert m.edge_lengths().max() <= 1.5 * h * (1 + 1e-9)
    assert m.euler_characteristic() == 1


def test_mesh_round_trip(tmp_path):
    m = triangulate(generate_domain(DISK), 0.2)
    p = tmp_path / "disk.mesh"
    write_mesh(m, p)
    m2 = read_mesh(p)
    assert np.array_equal(m.vertices, m2.vertices)
    assert np.array_equal(m.triangles, m2.triangles)
    assert p.read_text().split("\n")[0] == f"{len(m.vertices)} {len(m.triangles)} {len(m.boundary_edges)}"


def test_corrupt_mesh(tmp_path):
    m = triangulate(generate_domain(DISK), 0.2)
    p = tmp_path / "disk.mesh"
    write_mesh(m, p)
    bad = tmp_path / "bad.mesh"
    bad.write_text(p.read_text()[:200])
    with pytest.raises(MeshError):
        read_mesh(bad)
    lines = p.read_text().splitlines()
    lines[len(m.vertices) + 1] = "0 1 999999"
    bad.write_text("\n".join(lines))
    with pytest.raises(MeshError):
        read_mesh(bad)
