"""Ball packings and coverings, plateau test functions, the segment and
Neumann-Poincare inequalities, and the ball-averaging map on eigenspaces.

Ball integrals of P1 functions are exact: each triangle is clipped to the
disk and the moments of the clipped region (orders 0 to 2) are obtained from
boundary integrals by Green's theorem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

from .domain import Domain
from .fem import assemble
from .mesh import TriMesh

Z99 = 2.5758293035489004  # two-sided 99% normal quantile


class CoveringError(ValueError):
    pass


# ---------------------------------------------------------------------------
# curvature-dependent factors (formula evaluators; exercised at kappa = 0)


def cardinality_bound(d: float, rho: float, n: int = 2, kappa: float = 0.0) -> float:
    """``2^n e^{(n-1) d sqrt(kappa)} (d/rho)^n``."""
    return 2 ** n * math.exp((n - 1) * d * math.sqrt(kappa)) * (d / rho) ** n


def overlap_bound(rho: float, n: int = 2, kappa: float = 0.0) -> float:
    """``12^n e^{6(n-1) rho sqrt(kappa)}``."""
    return 12 ** n * math.exp(6 * (n - 1) * rho * math.sqrt(kappa))


def segment_constant(R: float, n: int = 2, kappa: float = 0.0) -> float:
    """``C(n, kappa, R) = 2^n R e^{(n-1) R sqrt(kappa)}``."""
    return 2 ** n * R * math.exp((n - 1) * R * math.sqrt(kappa))


def volume_ratio_bound(R: float, r: float, n: int = 2, kappa: float = 0.0) -> float:
    """Relative volume comparison ``Vol B(R) / Vol B(r) <= e^{(n-1) R sqrt(kappa)} (R/r)^n``."""
    return math.exp((n - 1) * R * math.sqrt(kappa)) * (R / r) ** n


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def bishop_volume(r: float, n: int = 2, kappa: float = 0.0) -> float:
    """Upper volume of an r-ball, ``omega_n e^{(n-1) r sqrt(kappa)} r^n``; ``omega_n r^n`` when flat."""
    return unit_ball_volume(n) * math.exp((n - 1) * r * math.sqrt(kappa)) * r ** n


# ---------------------------------------------------------------------------
# sampling


def domain_sample(domain: Domain, spacing: float) -> np.ndarray:
    """Points of the closed domain: a square grid inside plus the boundary at ``spacing``."""
    lo, hi = domain.bbox()
    xs = np.arange(lo[0] + 0.5 * spacing, hi[0], spacing)
    ys = np.arange(lo[1] + 0.5 * spacing, hi[1], spacing)
    grid = np.stack(np.meshgrid(xs, ys), axis=-1).reshape(-1, 2)
    inside = grid[domain.contains(grid)]
    return np.vstack([domain.boundary_points(spacing).points, inside])


# ---------------------------------------------------------------------------
# packings


@dataclass
class PackingResult:
    rho: float
    centers: np.ndarray
    kind: str                      # "maximal_packing" or "covering"
    overlap_max: int
    convention: str = "rho_separated"   # centers pairwise >= rho apart, so B(x_i, rho/2) are disjoint
    min_separation: float = math.inf
    covering_radius: float = 0.0        # max distance from a sample point to its nearest center

    @property
    def cardinality(self) -> int:
        return len(self.centers)

    def to_dict(self) -> dict:
        return {"rho": float(self.rho), "centers": [[float(x), float(y)] for x, y in self.centers],
                "cardinality": self.cardinality, "overlap_max": int(self.overlap_max)}


def _farthest_point(sample, start_index, stop_radius=None, count=None, tree=None):
    """Farthest-point insertion; stops when every sample point is within
    ``stop_radius`` of a center, or after ``count`` centers.

    Only points closer to the new center than the current covering radius
    can change their distance, so updates are local (KD-tree ball queries).
    """
    tree = tree or cKDTree(sample)
    idx = [start_index]
    dist = np.linalg.norm(sample - sample[start_index], axis=1)
    while True:
        j = int(np.argmax(dist))
        if stop_radius is not None and dist[j] < stop_radius:
            break
        if count is not None and len(idx) >= count:
            break
        idx.append(j)
        near = np.asarray(tree.query_ball_point(sample[j], dist[j]), dtype=int)
        if near.size:
            dist[near] = np.minimum(dist[near], np.linalg.norm(sample[near] - sample[j], axis=1))
        dist[j] = 0.0
    return np.array(idx), float(dist.max())


def greedy_packing(domain: Domain, rho: float, spacing: float = None) -> PackingResult:
    """Maximal rho-separated set by farthest-point insertion over a dense sample.

    The centers are pairwise at least ``rho`` apart (balls ``B(x_i, rho/2)``
    are disjoint) and the balls ``B(x_i, rho)`` cover the sample.
    ``overlap_max`` counts, at the worst sample point, the doubled balls
    ``B(x_i, 2 rho)`` containing it.

    Raises
    ------
    CoveringError
        If ``spacing`` exceeds ``rho/10``.
    """
    if not rho > 0:
        raise CoveringError("rho must be positive")
    spacing = rho / 10 if spacing is None else spacing
    if spacing > rho / 10 * (1 + 1e-12):
        raise CoveringError(f"sample spacing {spacing:g} is coarser than rho/10")
    # cap the sample size; the cap only binds for rho far below the domain scale
    lo, hi = domain.bbox()
    spacing = max(spacing, math.sqrt(float(np.prod(hi - lo)) / 4e5))
    sample = domain_sample(domain, spacing)
    idx, cover = _farthest_point(sample, 0, stop_radius=rho)
    centers = sample[idx]
    tree = cKDTree(centers)
    overlap = int(np.max(tree.query_ball_point(sample, 2 * rho, return_length=True)))
    sep = float(pdist(centers).min()) if len(centers) > 1 else math.inf
    return PackingResult(rho, centers, "maximal_packing", overlap, "rho_separated", sep, cover)


@dataclass
class PackingRadius:
    k: int
    rho_k: float
    lower_witness: np.ndarray
    upper_certificate: float
    d: float
    method: str = ""

    def to_dict(self) -> dict:
        f = lambda v: float(v) if math.isfinite(v) else str(v)
        return {"k": self.k, "rho_k": f(self.rho_k), "upper_certificate": f(self.upper_certificate),
                "d": self.d, "method": self.method,
                "lower_witness": [[float(x), float(y)] for x, y in self.lower_witness]}


def _diameter_pair(domain: Domain, spacing):
    pts = domain.boundary_points(spacing).points
    from scipy.spatial import ConvexHull

    hull = pts[ConvexHull(pts).vertices]
    dm = np.linalg.norm(hull[:, None] - hull[None], axis=2)
    i, j = np.unravel_index(np.argmax(dm), dm.shape)
    return hull[i], hull[j]


def _polish(domain, pts, seed):
    """Maximise the minimum pairwise distance of ``pts`` inside the domain (SLSQP)."""
    k = len(pts)
    iu = np.triu_indices(k, 1)

    def unpack(z):
        return z[:-1].reshape(k, 2), z[-1]

    def cons_sep(z):
        p, t = unpack(z)
        diff = p[:, None] - p[None]
        return np.sum(diff ** 2, axis=2)[iu] - t * t

    def cons_in(z):
        p, _ = unpack(z)
        return -domain.signed_distance(p)

    z0 = np.concatenate([pts.ravel(), [pdist(pts).min()]])
    res = minimize(lambda z: -z[-1], z0, method="SLSQP",
                   constraints=[{"type": "ineq", "fun": cons_sep}, {"type": "ineq", "fun": cons_in}],
                   options={"maxiter": 300, "ftol": 1e-12})
    p, _ = unpack(res.x)
    # project stragglers back inside; keep the certified separation only
    sd = domain.signed_distance(p)
    if np.any(sd > 1e-12):
        return None
    return p


def packing_radius(domain: Domain, k: int, spacing: float = None, restarts: int = 4,
                   seed: int = 0) -> PackingRadius:
    """Estimate ``rho(k)``, the largest ``r`` with ``k`` points of the closed
    domain pairwise more than ``r`` apart (supremum, so attained separations count).

    Lower estimates: ``k`` points equally spaced on a diameter chord (separation
    ``d/(k-1)``), farthest-point sampling from several starts, and SLSQP
    polishing of the best configuration.  Upper certificate: if ``k-1`` balls
    of radius ``c`` cover the domain, two of any ``k`` points share a ball, so
    ``rho(k) <= 2c``.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    lo, hi = domain.bbox()
    diam_scale = float(np.max(hi - lo))
    spacing = spacing or diam_scale / 120
    a, b = _diameter_pair(domain, spacing / 4)
    d = float(np.linalg.norm(b - a))
    if k == 1:
        return PackingRadius(1, math.inf, a[None], math.inf, d, "vacuous")
    t = np.linspace(0.0, 1.0, k)
    best = a[None] + t[:, None] * (b - a)[None]
    best_sep, method = d / (k - 1), "diameter chord"
    sample = domain_sample(domain, spacing)
    rng = np.random.default_rng(seed)
    starts = [0] + list(rng.integers(0, len(sample), restarts - 1))
    for s in starts:
        idx, _ = _farthest_point(sample, int(s), count=k)
        cand = sample[idx]
        sep = pdist(cand).min()
        if sep > best_sep:
            best, best_sep, method = cand, sep, "farthest point"
    for cand in (best, best + 1e-3 * diam_scale * rng.standard_normal(best.shape)):
        pol = _polish(domain, cand, seed)
        if pol is not None and pdist(pol).min() > best_sep:
            best, best_sep, method = pol, float(pdist(pol).min()), method + " + SLSQP"
    _, cover = _farthest_point(sample, 0, count=k - 1)
    upper = 2 * (cover + spacing)
    return PackingRadius(k, float(best_sep), best, float(max(upper, best_sep)), d, method)


# ---------------------------------------------------------------------------
# exact disk clipping of P1 data


_GL3_X, _GL3_W = np.polynomial.legendre.leggauss(3)
_GL8_X, _GL8_W = np.polynomial.legendre.leggauss(8)
_ARC_PIECES = 8


def _line_moments(p, q):
    """Green boundary integrals of the six moments along segments p->q; shapes (..., 2)."""
    t = 0.5 * (1 + _GL3_X)
    w = 0.5 * _GL3_W
    pts = p[..., None, :] + t[:, None] * (q - p)[..., None, :]
    x, y = pts[..., 0], pts[..., 1]
    dx = (q - p)[..., 0][..., None]
    dy = (q - p)[..., 1][..., None]
    return _moment_integrands(x, y, dx, dy, w)


def _moment_integrands(x, y, dx, dy, w):
    m0 = np.sum(w * x * dy, axis=-1)
    mx = np.sum(w * 0.5 * x * x * dy, axis=-1)
    my = np.sum(w * -0.5 * y * y * dx, axis=-1)
    mxx = np.sum(w * x ** 3 * dy, axis=-1) / 3
    myy = np.sum(w * -(y ** 3) * dx, axis=-1) / 3
    mxy = np.sum(w * 0.5 * x * x * y * dy, axis=-1)
    return np.stack([m0, mx, my, mxx, mxy, myy], axis=-1)


def _arc_moments(r, a0, a1):
    """Moments along ccw arcs of radius r from angle a0 to a1 (arrays)."""
    span = (a1 - a0)[..., None]
    edges = a0[..., None] + span * np.arange(_ARC_PIECES + 1) / _ARC_PIECES
    lo, hi = edges[..., :-1, None], edges[..., 1:, None]
    th = 0.5 * (lo + hi) + 0.5 * (hi - lo) * _GL8_X
    w = (0.5 * (hi - lo) * _GL8_W).reshape(*a0.shape, -1)
    th = th.reshape(*a0.shape, -1)
    x, y = r * np.cos(th), r * np.sin(th)
    return _moment_integrands(x, y, -y, x, w)


def disk_clip_moments(tri: np.ndarray, radius: float) -> np.ndarray:
    """Moments ``[1, x, y, x^2, xy, y^2]`` of ``T cap B(0, radius)`` for ccw
    triangles ``tri`` of shape (T, 3, 2), coordinates relative to the disk centre."""
    tri = np.asarray(tri, dtype=float)
    T = len(tri)
    out = np.zeros((T, 6))
    angles = np.full((T, 6), np.nan)
    r2 = radius * radius
    for e in range(3):
        p, q = tri[:, e], tri[:, (e + 1) % 3]
        d = q - p
        a = np.sum(d * d, axis=1)
        b = 2 * np.sum(p * d, axis=1)
        c = np.sum(p * p, axis=1) - r2
        disc = b * b - 4 * a * c
        ok = disc > 0
        sq = np.sqrt(np.where(ok, disc, 0.0))
        t1 = np.where(ok, (-b - sq) / (2 * a), 1.0)
        t2 = np.where(ok, (-b + sq) / (2 * a), 0.0)
        ta, tb = np.clip(t1, 0, 1), np.clip(t2, 0, 1)
        seg = ok & (tb > ta)
        if np.any(seg):
            pa = p[seg] + ta[seg, None] * d[seg]
            pb = p[seg] + tb[seg, None] * d[seg]
            out[seg] += _line_moments(pa, pb)
        for col, tt in ((2 * e, t1), (2 * e + 1, t2)):
            hit = ok & (tt > 0) & (tt < 1)
            pt = p[hit] + tt[hit, None] * d[hit]
            angles[hit, col] = np.arctan2(pt[:, 1], pt[:, 0])

    # with no crossings the circle lies inside T only if every edge line is at distance >= r
    srt = np.sort(angles, axis=1)                # nan sorted last
    n = np.sum(~np.isnan(srt), axis=1)
    full = n == 0
    for e in range(3):
        p, q = tri[:, e], tri[:, (e + 1) % 3]
        d = q - p
        # signed distance of the origin to the edge line, positive on the interior side
        cross = (d[:, 0] * (-p[:, 1]) - d[:, 1] * (-p[:, 0])) / np.linalg.norm(d, axis=1)
        full &= cross >= radius * (1 - 1e-12)
    if np.any(full):
        out[full] += _arc_moments(radius, np.zeros(full.sum()), np.full(full.sum(), 2 * math.pi))
    for j in range(6):
        has = n > j
        if not np.any(has):
            break
        a0 = srt[has, j]
        nxt = np.where(j + 1 < n[has], srt[has, np.minimum(j + 1, 5)], srt[has, 0] + 2 * math.pi)
        span = nxt - a0
        good = span > 1e-15
        mid = a0 + 0.5 * span
        mp = radius * np.stack([np.cos(mid), np.sin(mid)], axis=-1)
        sub_tri = tri[has]
        ins = good.copy()
        for e in range(3):
            p, q = sub_tri[:, e], sub_tri[:, (e + 1) % 3]
            cross = (q[:, 0] - p[:, 0]) * (mp[:, 1] - p[:, 1]) - (q[:, 1] - p[:, 1]) * (mp[:, 0] - p[:, 0])
            ins &= cross >= 0
        if np.any(ins):
            rows = np.flatnonzero(has)[ins]
            out[rows] += _arc_moments(radius, a0[ins], nxt[ins])
    return out


def _triangle_p1(mesh: TriMesh):
    p = mesh.vertices[mesh.triangles]
    e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    # gradient of u on each triangle: solve [e1; e2] g = [u1-u0, u2-u0]
    inv = np.stack([np.stack([e2[:, 1], -e1[:, 1]], -1), np.stack([-e2[:, 0], e1[:, 0]], -1)], 1) / det[:, None, None]
    return p, inv


class BallIntegrator:
    """Exact integrals of P1 functions over ``B(c, r) cap mesh``."""

    def __init__(self, mesh: TriMesh):
        self.mesh = mesh
        self.p, self._inv = _triangle_p1(mesh)
        cent = self.p.mean(axis=1)
        self._reach = float(np.max(np.linalg.norm(self.p - cent[:, None], axis=2)))
        self._tree = cKDTree(cent)

    def candidates(self, center, radius):
        return np.asarray(self._tree.query_ball_point(center, radius + self._reach), dtype=int)

    def moments(self, center, radius):
        idx = self.candidates(center, radius)
        mom = disk_clip_moments(self.p[idx] - np.asarray(center)[None, None], radius)
        return idx, mom

    def integrals(self, center, radius, values: np.ndarray):
        """Volume, and per column of nodal ``values``: ``int u``, ``int u^2``, ``int |grad u|^2``."""
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        idx, mom = self.moments(center, radius)
        c = np.asarray(center, dtype=float)
        u = values[self.mesh.triangles[idx]]                    # (t, 3, k)
        du = np.stack([u[:, 1] - u[:, 0], u[:, 2] - u[:, 0]], axis=1)   # (t, 2, k)
        g = np.einsum("tij,tjk->tik", self._inv[idx], du)      # gradient (t, 2, k)
        p0 = self.p[idx, 0] - c
        a = u[:, 0] - np.einsum("ti,tik->tk", p0, g)           # value at the centre (shifted origin)
        m0, m1 = mom[:, 0], mom[:, 1:3]
        M2 = np.stack([np.stack([mom[:, 3], mom[:, 4]], -1), np.stack([mom[:, 4], mom[:, 5]], -1)], 1)
        int_u = np.sum(a * m0[:, None] + np.einsum("ti,tik->tk", m1, g), axis=0)
        int_u2 = np.sum(a * a * m0[:, None] + 2 * a * np.einsum("ti,tik->tk", m1, g)
                        + np.einsum("tik,tij,tjk->tk", g, M2, g), axis=0)
        int_grad2 = np.sum(np.sum(g * g, axis=1) * m0[:, None], axis=0)
        return float(m0.sum()), int_u, int_u2, int_grad2


# ---------------------------------------------------------------------------
# plateau test functions


def plateau_values(points, center, r):
    """Radial plateau: 1 on ``B(c, r/4)``, 0 outside ``B(c, r/2)``, slope ``4/r`` between."""
    dist = np.linalg.norm(np.asarray(points) - np.asarray(center)[None], axis=1)
    return np.clip((0.5 * r - dist) / (0.25 * r), 0.0, 1.0)


@dataclass
class PlateauResult:
    quotients: list
    span_max: float            # max Rayleigh quotient over the span: certifies lambda_{m-1} <= span_max
    cap: float                 # 2^{n+4} r^-2 at kappa = 0
    r: float

    @property
    def certified_index(self) -> int:
        return len(self.quotients) - 1

    @property
    def within_cap(self) -> bool:
        return max(self.quotients) <= self.cap


def plateau_rayleigh(domain: Domain, mesh: TriMesh, centers, r: float, bc: str = "neumann") -> PlateauResult:
    """Rayleigh quotients of plateau interpolants centred at ``centers``.

    With ``m`` centres the largest Rayleigh quotient over their span bounds
    the discrete, hence the exact, eigenvalue ``lambda_{m-1}`` from above.
    Requires ``mesh.h <= r/16``.
    """
    if mesh.h > r / 16 * (1 + 1e-9):
        raise CoveringError(f"mesh size {mesh.h:g} exceeds r/16 = {r / 16:g}")
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    prob = assemble(mesh, bc)
    U = np.column_stack([prob.restrict(plateau_values(mesh.vertices, c, r)) for c in centers])
    KU, MU = prob.K @ U, prob.M @ U
    Kp, Mp = U.T @ KU, U.T @ MU
    q = [float(Kp[i, i] / Mp[i, i]) for i in range(len(centers))]
    from scipy.linalg import eigh

    span = float(eigh(Kp, Mp, eigvals_only=True)[-1])
    return PlateauResult(q, span, 2 ** (2 + 4) / r ** 2, r)


# ---------------------------------------------------------------------------
# segment inequality


@dataclass
class BallRegion:
    """``B(center, radius) cap domain`` as an indicator region."""

    domain: Domain
    center: tuple
    radius: float

    def indicator(self, pts):
        c = np.asarray(self.center)
        return (np.linalg.norm(pts - c[None], axis=1) <= self.radius) & self.domain.contains(pts)

    def box(self):
        lo, hi = self.domain.bbox()
        c = np.asarray(self.center, dtype=float)
        return np.maximum(c - self.radius, lo), np.minimum(c + self.radius, hi)


def _stratified(rng, lo, hi, n):
    """``n`` points in a box, one per cell of a near-square grid plus a random remainder."""
    g = int(math.sqrt(n))
    cells = g * g
    ij = np.stack(np.divmod(np.arange(cells), g), axis=1)
    u = (ij + rng.random((cells, 2))) / g
    if n > cells:
        u = np.vstack([u, rng.random((n - cells, 2))])
    rng.shuffle(u, axis=0)
    return lo + u * (hi - lo)


@dataclass
class MCResult:
    lhs: float
    rhs: float
    ratio: float
    ci_low: float
    ci_high: float
    samples: int
    inconclusive: bool
    extras: dict = field(default_factory=dict)

    @property
    def passes(self) -> bool:
        return self.ci_low <= 1.0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def segment_inequality_mc(domain: Domain, R: float, A: BallRegion, B: BallRegion, F: Callable,
                          center=None, samples: int = 10 ** 6, batches: int = 20, seed: int = 0,
                          kappa: float = 0.0) -> MCResult:
    """Monte Carlo test of the segment inequality with straight segments.

    ``LHS = int_A int_B int_0^{|x-y|} F(gamma(s)) ds dy dx`` and
    ``RHS = C(2, 0, R) (Vol A + Vol B) int_W F`` with ``W = B(center, 2R) cap domain``
    and ``C = 4R``.  Volumes and the ``W`` integral are estimated from the same
    batches; the ratio's 99% interval uses batch means and the delta method.
    The result is inconclusive when the interval straddles 1.
    """
    if not domain.convex:
        raise CoveringError("straight segments are geodesics only in convex domains")
    center = np.asarray(A.center if center is None else center, dtype=float)
    for reg in (A, B):
        if np.linalg.norm(np.asarray(reg.center) - center) + reg.radius > R * (1 + 1e-12):
            raise CoveringError("A and B must lie in B(center, R)")
    W = BallRegion(domain, tuple(center), 2 * R)
    C = segment_constant(R, 2, kappa)
    rng = np.random.default_rng(seed)
    per = max(samples // batches, 100)
    (alo, ahi), (blo, bhi), (wlo, whi) = A.box(), B.box(), W.box()
    va, vb, vw = np.prod(ahi - alo), np.prod(bhi - blo), np.prod(whi - wlo)
    t = 0.5 * (1 + _GL8_X)
    wt = 0.5 * _GL8_W
    stats = np.zeros((batches, 4))
    contained = True
    for k in range(batches):
        x = _stratified(rng, alo, ahi, per)
        y = _stratified(rng, blo, bhi, per)
        ia, ib = A.indicator(x), B.indicator(y)
        both = ia & ib
        xs, ys = x[both], y[both]
        seg = xs[:, None] + t[None, :, None] * (ys - xs)[:, None]
        f = F(seg.reshape(-1, 2)).reshape(len(xs), -1)
        L = np.zeros(per)
        L[both] = np.linalg.norm(ys - xs, axis=1) * (f @ wt)
        mid = 0.5 * (xs + ys)
        if len(mid) and not (np.all(domain.contains(mid)) and
                             np.all(np.linalg.norm(mid - center, axis=1) <= 2 * R)):
            contained = False
        z = _stratified(rng, wlo, whi, per)
        fw = np.where(W.indicator(z), F(z), 0.0)
        stats[k] = [L.mean() * va * vb, ia.mean() * va, ib.mean() * vb, fw.mean() * vw]
    lhs = stats[:, 0]
    rhs = C * (stats[:, 1] + stats[:, 2]) * stats[:, 3]
    # delta method on batch means of (lhs, vol A, vol B, int_W F)
    mean = stats.mean(axis=0)
    cov = np.cov(stats, rowvar=False) / batches
    den = C * (mean[1] + mean[2]) * mean[3]
    ratio = mean[0] / den if den > 0 else math.inf
    grad = np.array([1 / den, -ratio / (mean[1] + mean[2]), -ratio / (mean[1] + mean[2]), -ratio / mean[3]]) \
        if den > 0 else np.zeros(4)
    se = float(math.sqrt(max(grad @ cov @ grad, 0.0)))
    lo, hi = ratio - Z99 * se, ratio + Z99 * se
    return MCResult(float(mean[0]), float(den), float(ratio), float(lo), float(hi), per * batches,
                    bool(lo <= 1.0 <= hi),
                    {"vol_A": float(mean[1]), "vol_B": float(mean[2]), "int_W_F": float(mean[3]),
                     "C": C, "segments_contained": contained,
                     "lhs_batch_sd": float(lhs.std(ddof=1)), "rhs_batch_sd": float(rhs.std(ddof=1))})


# ---------------------------------------------------------------------------
# Neumann-Poincare ratio


def poincare_ratio(mesh: TriMesh, values, center, R: float, integrator: BallIntegrator = None):
    """``int_{B_R} |u - u_R|^2 / (R^2 int_{B_2R} |grad u|^2)`` for P1 functions, balls clipped to
    the meshed domain; 0 when the gradient energy vanishes.

    ``values`` may hold several functions as columns; an array of ratios is then returned.
    """
    values = np.asarray(values, dtype=float)
    integ = integrator or BallIntegrator(mesh)
    vol, iu, iu2, _ = integ.integrals(center, R, values)
    _, _, _, ig2 = integ.integrals(center, 2 * R, values)
    if vol <= 0:
        raise CoveringError("ball misses the domain")
    var = np.maximum(iu2 - iu ** 2 / vol, 0.0)
    ratio = np.zeros_like(var)
    # gradient energy at round-off level relative to the function's size counts as constant
    live = ig2 * R * R > 1e-12 * np.maximum(iu2, 1e-300)
    ratio[live] = var[live] / (R * R * ig2[live])
    return float(ratio[0]) if values.ndim == 1 else ratio


def poincare_ratio_mc(domain: Domain, u: Callable, grad_u: Callable, center, R: float,
                      samples: int = 400000, seed: int = 0) -> float:
    """Monte Carlo version of :func:`poincare_ratio` for closed-form ``u``."""
    rng = np.random.default_rng(seed)
    inner, outer = BallRegion(domain, tuple(center), R), BallRegion(domain, tuple(center), 2 * R)
    lo, hi = inner.box()
    x = _stratified(rng, lo, hi, samples)
    x = x[inner.indicator(x)]
    vals = u(x)
    var = float(np.mean((vals - vals.mean()) ** 2)) * len(x) / samples * np.prod(hi - lo)
    lo2, hi2 = outer.box()
    z = _stratified(rng, lo2, hi2, samples)
    z = z[outer.indicator(z)]
    g = grad_u(z)
    energy = float(np.sum(g * g, axis=1).mean()) * len(z) / samples * np.prod(hi2 - lo2)
    if energy == 0:
        return 0.0
    return var / (R * R * energy)


def poincare_battery(mesh: TriMesh, functions: np.ndarray, centers: Sequence, radii: Sequence) -> dict:
    """Ratios over every (function, centre, radius) triple; ``C_N`` is their supremum."""
    integ = BallIntegrator(mesh)
    ratios = []
    for c in centers:
        for R in radii:
            r = np.atleast_1d(poincare_ratio(mesh, functions, c, R, integ))
            ratios += [(float(v), j, tuple(c), R) for j, v in enumerate(r)]
    best = max(ratios, key=lambda r: r[0])
    return {"C_N": best[0], "attained": {"function": best[1], "center": list(best[2]), "R": best[3]},
            "ratios": [r[0] for r in ratios]}


# ---------------------------------------------------------------------------
# averaging map on eigenspaces


@dataclass
class InjectivityCertificate:
    rank: int
    dim: int
    injective: bool
    m: int
    singular_values: np.ndarray = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {"rank": self.rank, "dim": self.dim, "injective": self.injective, "m": self.m}


def phi_matrix(mesh: TriMesh, eigenvectors: np.ndarray, centers, radius: float) -> np.ndarray:
    """Rows: balls; columns: eigenfunctions; entries ``Vol(B cap Omega)^-1 int_{B cap Omega} u``."""
    integ = BallIntegrator(mesh)
    rows = []
    for c in np.atleast_2d(centers):
        vol, iu, _, _ = integ.integrals(c, radius, eigenvectors)
        rows.append(iu / vol)
    return np.array(rows)


def phi_injectivity_certificate(spectrum, packing: PackingResult, lam: float,
                                radius: float = None, rel_tol: float = 1e-8) -> InjectivityCertificate:
    """Rank of the ball-averaging map on the span of eigenfunctions below ``lam``.

    Uses the covering balls ``B(x_i, rho)`` of ``packing`` (or ``radius``).
    The map is injective iff the numerical rank (threshold ``rel_tol * sigma_max``)
    equals ``N(lam)``.
    """
    if spectrum.eigenvectors is None or spectrum.problem is None:
        raise CoveringError("missing eigenvectors")
    vals = spectrum.eigenvalues
    n = int(np.count_nonzero(vals < lam))
    if n >= len(vals) and lam > vals[-1]:
        raise CoveringError("eigenvectors do not reach lambda")
    prob = spectrum.problem
    U = prob.extend(spectrum.eigenvectors[:, :n])
    radius = packing.rho if radius is None else radius
    A = phi_matrix(prob.mesh, U, packing.centers, radius)
    if n == 0:
        return InjectivityCertificate(0, 0, True, len(packing.centers), np.zeros(0))
    sv = np.linalg.svd(A, compute_uv=False)
    rank = int(np.count_nonzero(sv > rel_tol * sv[0])) if sv[0] > 0 else 0
    return InjectivityCertificate(rank, n, rank == n, len(packing.centers), sv)
