"""Closed-form and semi-analytic spectra used as ground truth.

Bessel functions are evaluated without an external special-function
library: a power series for small arguments and the integral representation
``J_m(x) = (1/pi) int_0^pi cos(m t - x sin t) dt`` (trapezoidal rule, which
converges geometrically for this periodic integrand) otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq
from scipy.sparse.linalg import eigsh

from .eigen import SpectrumSummary

BCS = ("dirichlet", "neumann")


class OracleError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Bessel functions


def _bessel_series(m: int, x: float) -> float:
    term = (0.5 * x) ** m / math.factorial(m)
    total = term
    q = -0.25 * x * x
    for j in range(1, 200):
        term *= q / (j * (j + m))
        total += term
        if abs(term) < 1e-17 * max(abs(total), 1e-300):
            break
    return total


def bessel_j(m: int, x: float) -> float:
    """Bessel function of the first kind of integer order ``m >= 0``."""
    m = abs(int(m))
    x = float(x)
    if x < 0:
        return (-1) ** m * bessel_j(m, -x)
    if x <= 8.0:
        return _bessel_series(m, x)
    # nodes enough to resolve the integrand's oscillation cos(m t - x sin t)
    n = int(2 * (x + m) + 64)
    t = np.linspace(0.0, math.pi, n + 1)
    f = np.cos(m * t - x * np.sin(t))
    return float((f.sum() - 0.5 * (f[0] + f[-1])) / n)


def bessel_jp(m: int, x: float) -> float:
    """Derivative ``J_m'(x)``."""
    if m == 0:
        return -bessel_j(1, x)
    return 0.5 * (bessel_j(m - 1, x) - bessel_j(m + 1, x))


def _zeros(fun, x_min: float, x_max: float, step: float = 0.1) -> list:
    xs = np.arange(x_min, x_max + step, step)
    vals = [fun(x) for x in xs]
    out = []
    for a, b, fa, fb in zip(xs[:-1], xs[1:], vals[:-1], vals[1:]):
        if fa == 0.0:
            out.append(float(a))
        elif fa * fb < 0:
            out.append(brentq(fun, a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps))
    return out


@lru_cache(maxsize=None)
def bessel_zeros(m: int, count: int, derivative: bool = False) -> tuple:
    """First ``count`` positive zeros of ``J_m`` (or of ``J_m'``).

    Zeros are bracketed on a grid of step 0.1, which is well below the
    spacing of consecutive zeros (about pi), then polished by Brent's method.
    """
    fun = (lambda x: bessel_jp(m, x)) if derivative else (lambda x: bessel_j(m, x))
    # zeros lie beyond m (J_m) or beyond sqrt(m(m+2)) roughly; start slightly above 0
    x_max = m + math.pi * (count + 2) + 2
    zs = [z for z in _zeros(fun, 1e-3, x_max) if z > 1e-8]
    while len(zs) < count:
        x_max *= 1.5
        zs = [z for z in _zeros(fun, 1e-3, x_max) if z > 1e-8]
    return tuple(zs[:count])


J01 = 2.404825557695773  # first zero of J_0, used as a named constant


def _oracle_summary(bc, values, count) -> SpectrumSummary:
    vals = np.sort(np.asarray(values, dtype=float))[:count]
    return SpectrumSummary(bc, vals, source="oracle")


def _check_bc(bc):
    if bc not in BCS:
        raise ValueError(f"boundary condition must be one of {BCS}")


def _lattice_spectrum(weight_p, weight_q, p_range, q_range, count, scale):
    """Smallest ``count`` values of scale*(wp p^2 + wq q^2) over a lattice.

    The enumeration window grows until it provably contains every value up
    to the count-th smallest.
    """
    lam = scale * (max(weight_p, weight_q) * 4 + min(weight_p, weight_q))
    while True:
        pmax = int(math.sqrt(lam / (scale * weight_p))) + 1
        qmax = int(math.sqrt(lam / (scale * weight_q))) + 1
        p = p_range(pmax)
        q = q_range(qmax)
        vals = scale * (weight_p * p[:, None] ** 2 + weight_q * q[None, :] ** 2)
        vals = vals[vals <= lam]
        if vals.size >= count:
            return np.sort(vals)[:count]
        lam *= 2.0


def rectangle_spectrum(a: float, b: float, bc: str, count: int) -> SpectrumSummary:
    """Eigenvalues ``pi^2 (p^2/a^2 + q^2/b^2)`` with ``p, q >= 1`` (Dirichlet)
    or ``p, q >= 0`` (Neumann)."""
    _check_bc(bc)
    if not (a > 0 and b > 0):
        raise ValueError("rectangle sides must be positive")
    lo = 1 if bc == "dirichlet" else 0
    rng = lambda n: np.arange(lo, n + 1, dtype=float)
    vals = _lattice_spectrum(1 / a ** 2, 1 / b ** 2, rng, rng, count, math.pi ** 2)
    return _oracle_summary(bc, vals, count)


def interval_spectrum(length: float, bc: str, count: int) -> SpectrumSummary:
    _check_bc(bc)
    if not length > 0:
        raise ValueError("interval length must be positive")
    j = np.arange(count, dtype=float) + (1 if bc == "dirichlet" else 0)
    return _oracle_summary(bc, (math.pi * j / length) ** 2, count)


def torus_spectrum(a: float, b: float, count: int) -> SpectrumSummary:
    """Flat torus ``R^2 / (a Z x b Z)``: ``4 pi^2 (p^2/a^2 + q^2/b^2)``, ``(p, q)`` in ``Z^2``."""
    if not a >= b > 0:
        raise ValueError("torus needs a >= b > 0")
    rng = lambda n: np.arange(-n, n + 1, dtype=float)
    vals = _lattice_spectrum(1 / a ** 2, 1 / b ** 2, rng, rng, count, 4 * math.pi ** 2)
    out = _oracle_summary("closed", vals, count)
    return out


def disk_spectrum(radius: float, bc: str, count: int) -> SpectrumSummary:
    """Disk eigenvalues ``(j_{m,s}/r)^2`` (Dirichlet) or ``(j'_{m,s}/r)^2`` and 0 (Neumann).

    Every angular order ``m >= 1`` contributes twice.
    """
    _check_bc(bc)
    if not radius > 0:
        raise ValueError("radius must be positive")
    deriv = bc == "neumann"
    vals = [0.0] if deriv else []
    # zeros of order m exceed m, so orders up to the count-th value suffice
    m = 0
    cutoff = math.inf
    while True:
        zs = bessel_zeros(m, count, deriv)
        if zs[0] > cutoff:
            break
        mult = 1 if m == 0 else 2
        for z in zs:
            vals.extend([z * z] * mult)
        if len(vals) >= count:
            cutoff = math.sqrt(sorted(vals)[count - 1])
        m += 1
    return _oracle_summary(bc, np.array(vals) / radius ** 2, count)


def bessel_check_interlacing(m_max: int = 10, s_max: int = 10) -> bool:
    """``j_{m,s} < j_{m+1,s} < j_{m,s+1}`` for all ``m, s <= m_max, s_max``."""
    z = {m: bessel_zeros(m, s_max + 1) for m in range(m_max + 2)}
    return all(z[m][s] < z[m + 1][s] < z[m][s + 1] for m in range(m_max + 1) for s in range(s_max))


# ---------------------------------------------------------------------------
# surface of revolution


@dataclass(frozen=True)
class RevolutionSurface:
    """Surface swept by ``y^2 + z^2 = f(x)^2`` with ``f(x) = exp(-x R)/R``, ``x in [0, 1]``."""

    R: float
    n_elements: int = 2000

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError("R must be positive")
        if self.n_elements < 8:
            raise ValueError("at least 8 elements are required")

    def f(self, x):
        return np.exp(-np.asarray(x) * self.R) / self.R

    def fprime(self, x):
        return -np.exp(-np.asarray(x) * self.R)

    def metric_factor(self, x):
        return np.sqrt(1.0 + self.fprime(x) ** 2)

    @property
    def area(self) -> float:
        x, w = _gauss_nodes(np.linspace(0, 1, 4 * self.n_elements + 1))
        return float(np.sum(w * 2 * math.pi * self.f(x) * self.metric_factor(x)))

    @property
    def extrinsic_diameter(self) -> float:
        x = np.linspace(0.0, 1.0, 2001)
        fx = self.f(x)
        return float(np.max(np.hypot(x[:, None] - x[None], fx[:, None] + fx[None])))


_GL_X, _GL_W = np.polynomial.legendre.leggauss(4)


def _gauss_nodes(grid):
    """Gauss-Legendre nodes and weights on every cell of ``grid``."""
    a, b = grid[:-1, None], grid[1:, None]
    x = 0.5 * (a + b) + 0.5 * (b - a) * _GL_X[None]
    w = 0.5 * (b - a) * _GL_W[None]
    return x.ravel(), w.ravel()


def _revolution_matrices(surface: RevolutionSurface):
    n = surface.n_elements
    grid = np.linspace(0.0, 1.0, n + 1)
    a, b = grid[:-1, None], grid[1:, None]
    x = 0.5 * (a + b) + 0.5 * (b - a) * _GL_X[None]
    w = 0.5 * (b - a) * _GL_W[None]
    h = (b - a)
    phi1 = (b - x) / h
    phi2 = (x - a) / h
    f = surface.f(x)
    g = surface.metric_factor(x)
    kstiff = np.sum(w * f / g, axis=1) / h[:, 0] ** 2  # coefficient of u'v'
    # mass-like integrals with weights f*g (mass) and g/f (angular term)
    def local(weight):
        m11 = np.sum(w * weight * phi1 * phi1, axis=1)
        m12 = np.sum(w * weight * phi1 * phi2, axis=1)
        m22 = np.sum(w * weight * phi2 * phi2, axis=1)
        return m11, m12, m22

    def build(d11, d12, d22):
        main = np.zeros(n + 1)
        main[:-1] += d11
        main[1:] += d22
        return sp.diags([d12, main, d12], [-1, 0, 1], format="csc")

    K0 = build(kstiff, -kstiff, kstiff)
    A = build(*local(g / f))
    M = build(*local(f * g))
    return K0, A, M


def _revolution_modes(surface, mode_max, count):
    K0, A, M = _revolution_matrices(surface)
    n = K0.shape[0]
    vals, modes = [], []
    for m in range(mode_max + 1):
        K = K0 + m * m * A
        nev = min(count, n - 2)
        lam = eigsh(K, k=nev, M=M, sigma=-1.0, which="LM", return_eigenvectors=False, tol=1e-12)
        lam = np.sort(lam)
        mult = 1 if m == 0 else 2
        for v in lam:
            vals.extend([v] * mult)
            modes.extend([m] * mult)
    order = np.argsort(vals, kind="stable")
    return np.asarray(vals)[order][:count], np.asarray(modes)[order][:count]


def revolution_spectrum(surface: RevolutionSurface, mode_max: int, count: int,
                        converge_tol: float = 1e-3, max_doublings: int = 4) -> SpectrumSummary:
    """Neumann spectrum of the surface by separation of variables.

    Angular order ``m`` reduces ``-Delta u = lambda u`` to
    ``-(f/g u')' + m^2 (g/f) u = lambda f g u`` on ``[0, 1]`` with natural
    (Neumann) end conditions, where ``g = sqrt(1 + f'^2)``; each is solved by
    P1 finite elements.  The grid is doubled until lambda_1 moves by less
    than ``converge_tol`` relatively; the reported values are from the finer
    grid and the extrapolated values use Richardson's rule.

    Raises
    ------
    OracleError
        If lambda_1 has not converged after ``max_doublings`` doublings.
    """
    if mode_max < 8:
        raise ValueError("mode_max must be at least 8")
    coarse = _revolution_modes(surface, mode_max, count)[0]
    coarse[0] = max(coarse[0], 0.0)
    s = surface
    for _ in range(max_doublings):
        s = RevolutionSurface(s.R, 2 * s.n_elements)
        fine, modes = _revolution_modes(s, mode_max, count)
        fine[0] = max(fine[0], 0.0)
        if abs(fine[1] - coarse[1]) <= converge_tol * fine[1]:
            ext = (4 * fine - coarse) / 3
            out = SpectrumSummary("neumann", fine, h=1.0 / s.n_elements, extrapolated=ext,
                                  error=np.abs(fine - coarse) / 3, source="oracle")
            out.modes = modes
            return out
        coarse = fine
    raise OracleError(f"lambda_1 did not converge: last two values {coarse[1]:.8g}, {fine[1]:.8g}")


def spectrum_for(spec, bc: str, count: int) -> SpectrumSummary:
    """Oracle spectrum for a domain spec when one exists (rectangle polygon, disk, torus)."""
    from .domain import DomainSpec

    if not isinstance(spec, DomainSpec):
        spec = DomainSpec.from_dict(spec)
    p = spec.parameters
    if spec.kind == "disk":
        return disk_spectrum(float(p["radius"]), bc, count)
    if spec.kind == "torus":
        return torus_spectrum(float(p["a"]), float(p["b"]), count)
    if spec.kind == "polygon":
        v = np.asarray(p["vertices"], dtype=float)
        if len(v) == 4:
            e = np.roll(v, -1, axis=0) - v
            axis = np.all(np.abs(e).min(axis=1) < 1e-14)
            if axis:
                a, b = np.ptp(v[:, 0]), np.ptp(v[:, 1])
                return rectangle_spectrum(float(a), float(b), bc, count)
    raise OracleError(f"no closed-form spectrum for {spec.kind}")
