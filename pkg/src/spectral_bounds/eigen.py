"""Lowest eigenpairs of ``K u = lambda M u``, multiplicity clusters and the
eigenvalue counting function."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.sparse.linalg import eigsh

from .fem import AssembledProblem


class EigenSolverError(RuntimeError):
    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class InsufficientSpectrum(ValueError):
    def __init__(self, lam, largest):
        super().__init__(f"insufficient spectrum: lambda={lam:g} exceeds the largest usable value {largest:g}")
        self.largest = largest


@dataclass
class SpectrumSummary:
    bc: str
    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray] = None
    clusters: list = field(default_factory=list)
    h: Optional[float] = None
    extrapolated: Optional[np.ndarray] = None
    error: Optional[np.ndarray] = None
    residuals: Optional[np.ndarray] = None
    source: str = "fem"
    problem: Optional[AssembledProblem] = field(default=None, repr=False)
    rel_gap: Optional[float] = None

    def __post_init__(self):
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=float)
        if np.any(np.diff(self.eigenvalues) < 0):
            raise ValueError("eigenvalues must be sorted")
        if not self.clusters:
            self.clusters = cluster_multiplicities(self, self.default_rel_gap())
            self.rel_gap = self.default_rel_gap()

    def __len__(self):
        return len(self.eigenvalues)

    @property
    def k_max(self) -> int:
        return len(self.eigenvalues) - 1

    def upper(self) -> np.ndarray:
        """Raw values; one-sided (Galerkin) upper estimates for FEM spectra."""
        return self.eigenvalues

    def lower(self) -> np.ndarray:
        """Conservative lower estimates: extrapolated minus error when available."""
        if self.extrapolated is None:
            return self.eigenvalues
        low = np.minimum(self.extrapolated - self.error, self.eigenvalues)
        if self.bc == "neumann":
            low[0] = 0.0
        return np.maximum(low, 0.0)

    def best(self) -> np.ndarray:
        return self.eigenvalues if self.extrapolated is None else self.extrapolated

    def relative_error(self) -> float:
        if self.error is None:
            return 0.0
        ref = np.maximum(np.abs(self.best()), 1e-300)
        mask = self.best() > 1e-12 * max(1.0, float(np.max(np.abs(self.best()))))
        return float(np.max(self.error[mask] / ref[mask])) if mask.any() else 0.0

    def default_rel_gap(self) -> float:
        # capped inside the admissible range; such coarse spectra flag every multiplicity uncertain
        return min(0.25, max(1e-6, 20.0 * self.relative_error()))

    def multiplicity(self, k: int) -> int:
        for start, size, _ in self.clusters:
            if start <= k < start + size:
                return size
        raise IndexError(k)

    def scaled(self, t: float) -> "SpectrumSummary":
        """Spectrum of the domain dilated by ``t`` (eigenvalues times t^-2)."""
        f = t ** -2.0
        return SpectrumSummary(self.bc, self.eigenvalues * f, self.eigenvectors,
                               [(s, m, v * f) for s, m, v in self.clusters],
                               None if self.h is None else self.h * t,
                               None if self.extrapolated is None else self.extrapolated * f,
                               None if self.error is None else self.error * f,
                               self.residuals, self.source, None, self.rel_gap)

    def to_dict(self) -> dict:
        out = {
            "bc": self.bc,
            "h": self.h,
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "clusters": [[int(s), int(m)] for s, m, _ in self.clusters],
            "residuals": None if self.residuals is None else [float(v) for v in self.residuals],
            "extrapolated": None if self.extrapolated is None else [float(v) for v in self.extrapolated],
        }
        if self.source != "fem":
            out["source"] = self.source
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def solve_lowest(problem: AssembledProblem, k_max: int, tol: float = 1e-8, seed: int = 0,
                 maxiter: int = None) -> SpectrumSummary:
    """Lowest ``k_max + 1`` eigenpairs by shift-invert Lanczos.

    The shift is ``-1`` for Neumann problems (past the constant mode) and
    ``0`` for Dirichlet ones.  Residuals are checked against
    ``tol * ||M u|| * max(lambda, 1)``.
    """
    n = problem.n_dofs
    nev = k_max + 1
    if k_max < 1 or nev >= n / 2:
        raise ValueError(f"k_max must satisfy 1 <= k_max < n/2 - 1 (n={n})")
    sigma = -1.0 if problem.bc == "neumann" else 0.0
    v0 = np.random.default_rng(seed).standard_normal(n)
    ncv = min(n - 1, max(2 * nev + 1, nev + 20))
    try:
        vals, vecs = eigsh(problem.K, k=nev, M=problem.M, sigma=sigma, which="LM", v0=v0,
                           ncv=ncv, tol=1e-12, maxiter=maxiter)
    except Exception as exc:  # ARPACK no-convergence carries partial results
        raise EigenSolverError(f"eigensolver failed: {exc}") from exc
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    # M-normalise and fix signs deterministically
    norms = np.sqrt(np.einsum("ij,ij->j", vecs, problem.M @ vecs))
    vecs = vecs / norms
    sign = np.sign(vecs[np.argmax(np.abs(vecs), axis=0), np.arange(nev)])
    vecs = vecs * sign
    Mu = problem.M @ vecs
    res = np.linalg.norm(problem.K @ vecs - Mu * vals, axis=0)
    allowed = tol * np.linalg.norm(Mu, axis=0) * np.maximum(vals, 1.0)
    if np.any(res > allowed):
        raise EigenSolverError("eigenpairs did not reach the residual tolerance",
                               residuals=res / (np.linalg.norm(Mu, axis=0) * np.maximum(vals, 1.0)))
    if problem.bc == "neumann":
        vals[0] = max(vals[0], 0.0)
    return SpectrumSummary(problem.bc, vals, vecs, h=problem.mesh.h, residuals=res, problem=problem)


def extrapolate(coarse: SpectrumSummary, fine: SpectrumSummary) -> SpectrumSummary:
    """Richardson extrapolation from meshes at h and h/2 assuming O(h^2) error.

    The raw values of the returned summary are the fine-mesh values.
    """
    n = min(len(coarse), len(fine))
    lc, lf = coarse.eigenvalues[:n], fine.eigenvalues[:n]
    ext = (4.0 * lf - lc) / 3.0
    err = np.abs(lf - lc) / 3.0
    vecs = None if fine.eigenvectors is None else fine.eigenvectors[:, :n]
    out = SpectrumSummary(fine.bc, lf, vecs, clusters=[(0, 1, 0.0)], h=fine.h, extrapolated=ext, error=err,
                          residuals=None if fine.residuals is None else fine.residuals[:n],
                          problem=fine.problem)
    out.rel_gap = out.default_rel_gap()
    out.clusters = cluster_multiplicities(out, out.rel_gap)
    return out


def counting_function(spectrum: SpectrumSummary, lam: float, values=None) -> int:
    """``N(lambda)``: number of eigenvalues strictly below ``lam``."""
    vals = spectrum.eigenvalues if values is None else np.asarray(values)
    if lam > spectrum.eigenvalues[-1]:
        raise InsufficientSpectrum(lam, float(spectrum.eigenvalues[-1]))
    return int(np.count_nonzero(vals < lam))


def cluster_multiplicities(spectrum, rel_gap: float) -> list:
    """Group consecutive eigenvalues whose gap is at most
    ``rel_gap * max(lambda_i, lambda_1)``; returns ``(start, size, value)``."""
    if not 0 < rel_gap < 0.5:
        raise ValueError("rel_gap must lie in (0, 0.5)")
    vals = spectrum.best() if isinstance(spectrum, SpectrumSummary) else np.asarray(spectrum)
    if len(vals) == 0:
        return []
    lam1 = vals[1] if len(vals) > 1 else vals[0]
    clusters = []
    start = 0
    for i in range(len(vals) - 1):
        if abs(vals[i + 1] - vals[i]) > rel_gap * max(vals[i], lam1):
            clusters.append((start, i + 1 - start, float(np.mean(vals[start:i + 1]))))
            start = i + 1
    clusters.append((start, len(vals) - start, float(np.mean(vals[start:]))))
    return clusters


def cluster_gaps(spectrum: SpectrumSummary) -> list:
    """Relative gap following each cluster (inf for the last one)."""
    vals = spectrum.best()
    lam1 = vals[1] if len(vals) > 1 else vals[0]
    out = []
    for start, size, _ in spectrum.clusters:
        end = start + size
        if end >= len(vals):
            out.append(float("inf"))
        else:
            out.append(float((vals[end] - vals[end - 1]) / max(vals[end - 1], lam1)))
    return out
