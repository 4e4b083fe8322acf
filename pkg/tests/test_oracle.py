import math

import numpy as np
import pytest
from scipy import special

from spectral_bounds.oracle import (J01, OracleError, RevolutionSurface, bessel_check_interlacing,
                                    bessel_j, bessel_zeros, disk_spectrum, interval_spectrum,
                                    rectangle_spectrum, revolution_spectrum, spectrum_for, torus_spectrum)
from spectral_bounds.domain import DomainSpec

from conftest import PI2


def test_bessel_against_scipy():
    x = np.linspace(0.1, 20, 50)
    for m in range(4):
        assert [bessel_j(m, v) for v in x] == pytest.approx(special.jv(m, x), abs=1e-12)
        assert bessel_zeros(m, 5) == pytest.approx(special.jn_zeros(m, 5), rel=1e-12)
        assert bessel_zeros(m, 5, derivative=True) == pytest.approx(special.jnp_zeros(m, 5), rel=1e-12)
    assert J01 == pytest.approx(2.404825557695773, abs=1e-14)
    assert bessel_check_interlacing()


def test_rectangle_examples():
    assert rectangle_spectrum(1, 1, "dirichlet", 1).eigenvalues[0] == pytest.approx(2 * PI2)
    n = rectangle_spectrum(1, 1, "neumann", 4).eigenvalues
    assert n[1] == n[2] == pytest.approx(PI2)
    eps = 0.01
    assert rectangle_spectrum(1, eps, "dirichlet", 1).eigenvalues[0] == pytest.approx(PI2 * (1 + 1 / eps ** 2))


def test_disk_examples():
    d = disk_spectrum(1.0, "dirichlet", 10)
    assert d.eigenvalues[0] == pytest.approx(5.78319, abs=1e-5)
    n = disk_spectrum(1.0, "neumann", 10)
    assert n.eigenvalues[1] == pytest.approx(3.38996, abs=1e-5)
    assert disk_spectrum(2.0, "dirichlet", 10).eigenvalues == pytest.approx(d.eigenvalues / 4)
    assert max(m for _, m, _ in d.clusters) == 2


def test_torus_examples():
    t = torus_spectrum(1.0, 1.0, 5)
    assert t.eigenvalues[0] == 0 and t.eigenvalues[1:5] == pytest.approx([4 * PI2] * 4)
    thin = torus_spectrum(1.0, 0.01, 101)
    p = np.repeat(np.arange(1, 51), 2)
    assert thin.eigenvalues[1:101] == pytest.approx(4 * PI2 * p ** 2)
    d = math.hypot(1, 0.01) / 2
    ratios = [thin.eigenvalues[k] * (d / k) ** 2 for k in range(1, 101)]
    assert 0 < min(ratios) and max(ratios) < 10


def test_interval():
    assert interval_spectrum(1.0, "dirichlet", 3).eigenvalues == pytest.approx([PI2, 4 * PI2, 9 * PI2])
    assert interval_spectrum(2.0, "neumann", 2).eigenvalues == pytest.approx([0.0, PI2 / 4])


@pytest.mark.parametrize("R", [4.0, 8.0])
def test_revolution_lower_bound(R):
    s = revolution_spectrum(RevolutionSurface(R), 8, 5)
    assert s.eigenvalues[0] == pytest.approx(0.0, abs=1e-8)
    assert s.lower()[1] >= R * R / 8
    assert s.to_dict()["source"] == "oracle"


def test_revolution_refuses_coarse_modes():
    with pytest.raises(ValueError):
        revolution_spectrum(RevolutionSurface(4.0), 4, 5)
    with pytest.raises(ValueError):
        RevolutionSurface(4.0, n_elements=4)


def test_spectrum_for_dispatch():
    sq = DomainSpec("polygon", {"vertices": [[0, 0], [2, 0], [2, 1], [0, 1]]})
    assert spectrum_for(sq, "dirichlet", 1).eigenvalues[0] == pytest.approx(PI2 * (1 / 4 + 1))
    with pytest.raises(OracleError):
        spectrum_for(DomainSpec("polygon", {"vertices": [[0, 0], [1, 0], [0, 1]]}), "dirichlet", 3)
