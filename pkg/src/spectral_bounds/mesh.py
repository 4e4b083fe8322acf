"""Quality triangulations of planar domains.

Boundary vertices are placed on the true boundary at spacing ``h``; interior
vertices start on a hexagonal lattice.  A Delaunay triangulation of the point
cloud is clipped to the domain, boundary segments missing from it are split
(segment recovery), and skinny or oversized triangles receive their
circumcentre until every angle is at least 20 degrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay, cKDTree

from .domain import Domain, DomainError

MIN_ANGLE_DEG = 20.0
MAX_EDGE_FACTOR = 1.5


class MeshError(ValueError):
    pass


@dataclass
class TriMesh:
    vertices: np.ndarray              # (V, 2)
    triangles: np.ndarray             # (T, 3), counterclockwise
    boundary_edges: np.ndarray        # (B, 2), ordered ccw along each loop
    h: float
    # per-vertex boundary location: segment index (-1 for interior) and parameter
    boundary_segment: np.ndarray = field(default=None, repr=False)
    boundary_t: np.ndarray = field(default=None, repr=False)
    domain: Domain = field(default=None, repr=False, compare=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @property
    def area(self) -> float:
        return float(self.areas().sum())

    def edges(self) -> np.ndarray:
        e = np.sort(self.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
        return np.unique(e, axis=0)

    def edge_lengths(self) -> np.ndarray:
        e = self.edges()
        return np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1)

    def min_angle(self) -> float:
        return float(np.degrees(_min_angles(self.vertices, self.triangles).min()))

    def boundary_vertices(self) -> np.ndarray:
        return np.unique(self.boundary_edges)

    def interior_vertices(self) -> np.ndarray:
        mask = np.ones(self.n_vertices, dtype=bool)
        mask[self.boundary_vertices()] = False
        return np.flatnonzero(mask)

    def scaled(self, t: float, domain: Domain = None) -> "TriMesh":
        return TriMesh(t * self.vertices, self.triangles.copy(), self.boundary_edges.copy(), t * self.h,
                       self.boundary_segment, self.boundary_t, domain)

    def validate(self, quality: bool = True) -> None:
        """Raise :class:`MeshError` unless the mesh invariants hold."""
        if np.any(self.areas() <= 0):
            raise MeshError("triangle with non-positive signed area")
        found = _boundary_edges(self.triangles)
        want = {tuple(sorted(e)) for e in self.boundary_edges.tolist()}
        if {tuple(sorted(e)) for e in found.tolist()} != want:
            raise MeshError("boundary edges do not match the single-triangle edges")
        nxt = dict(self.boundary_edges.tolist())
        if len(nxt) != len(self.boundary_edges) or set(nxt) != set(nxt.values()):
            raise MeshError("boundary edges do not form closed loops")
        if quality:
            if self.edge_lengths().max() > MAX_EDGE_FACTOR * self.h * (1 + 1e-9):
                raise MeshError("edge longer than 1.5 h")
            if self.min_angle() < MIN_ANGLE_DEG - 1e-6:
                raise MeshError(f"minimum angle {self.min_angle():.2f} below {MIN_ANGLE_DEG}")

    def euler_characteristic(self) -> int:
        return self.n_vertices - len(self.edges()) + len(self.triangles)


def _min_angles(v, tri):
    p = v[tri]
    a = np.linalg.norm(p[:, 1] - p[:, 2], axis=1)
    b = np.linalg.norm(p[:, 2] - p[:, 0], axis=1)
    c = np.linalg.norm(p[:, 0] - p[:, 1], axis=1)
    cosA = np.clip((b * b + c * c - a * a) / (2 * b * c), -1, 1)
    cosB = np.clip((a * a + c * c - b * b) / (2 * a * c), -1, 1)
    cosC = np.clip((a * a + b * b - c * c) / (2 * a * b), -1, 1)
    return np.arccos(np.stack([cosA, cosB, cosC], axis=1)).min(axis=1)


def _boundary_edges(tri):
    e = tri[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
    key = np.sort(e, axis=1)
    _, inv, cnt = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    return e[cnt[inv.ravel()] == 1]


def _circumcenters(p):
    ax, ay = p[:, 0, 0], p[:, 0, 1]
    bx, by = p[:, 1, 0], p[:, 1, 1]
    cx, cy = p[:, 2, 0], p[:, 2, 1]
    d = 2 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    a2, b2, c2 = ax * ax + ay * ay, bx * bx + by * by, cx * cx + cy * cy
    ux = (a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / d
    uy = (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / d
    return np.stack([ux, uy], axis=1)


class _Builder:
    """Mutable point set with boundary bookkeeping used during triangulation."""

    def __init__(self, domain: Domain, h: float):
        self.domain = domain
        self.h = h
        # boundary chain: list of (segment, t) per boundary vertex in ccw order
        chain = []
        for i, s in enumerate(domain.segments):
            m = max(1, int(math.ceil(s.length / h - 1e-9)))
            chain.extend((i, k / m) for k in range(m))
        self.chain = chain
        self.interior = np.zeros((0, 2))

    def boundary_xy(self):
        return np.array([self.domain.segments[s].point(t) for s, t in self.chain])

    def split_boundary(self, idx: int):
        """Insert the on-boundary midpoint after chain position ``idx``."""
        s0, t0 = self.chain[idx]
        s1, t1 = self.chain[(idx + 1) % len(self.chain)]
        if s1 != s0 or t1 <= t0:
            t1 = 1.0
        self.chain.insert(idx + 1, (s0, 0.5 * (t0 + t1)))


def _hex_lattice(domain: Domain, h: float):
    lo, hi = domain.bbox()
    dy = h * math.sqrt(3) / 2
    ys = lo[1] + np.arange(1, int((hi[1] - lo[1]) / dy) + 1) * dy
    pts = []
    for j, y in enumerate(ys):
        off = 0.5 * h if j % 2 else 0.0
        xs = lo[0] + off + np.arange(0, int((hi[0] - lo[0]) / h) + 2) * h
        pts.append(np.column_stack([xs, np.full_like(xs, y)]))
    pts = np.vstack(pts) if pts else np.zeros((0, 2))
    return pts[domain.signed_distance(pts) < -0.55 * h]


def _triangulate_points(domain, pts):
    tri = Delaunay(pts).simplices
    p = pts[tri]
    e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    signed = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    tri = np.where((signed < 0)[:, None], tri[:, [0, 2, 1]], tri)
    cent = pts[tri].mean(axis=1)
    keep = domain.contains(cent) & (np.abs(signed) > 1e-14 * domain.area)
    return tri[keep]


def triangulate(domain: Domain, h: float, max_rounds: int = 60) -> TriMesh:
    """Conforming triangulation with maximum edge about ``h`` and angles >= 20 deg.

    Raises
    ------
    MeshError
        If ``h`` cannot resolve the domain's narrowest feature, or the quality
        targets are not reached.
    """
    if not isinstance(domain, Domain):
        raise MeshError("only planar domains can be triangulated")
    if not h > 0:
        raise MeshError("mesh size h must be positive")
    diam = domain.exact_diameter or float(np.ptp(domain.boundary_points(domain.perimeter / 500).points, axis=0).max())
    if h >= diam:
        raise MeshError("mesh size h must be smaller than the domain diameter")
    if h > domain.feature_size:
        raise MeshError(f"feature size {domain.feature_size:g} cannot be resolved at h={h:g}")

    b = _Builder(domain, h)
    b.interior = _hex_lattice(domain, h)
    hmax = MAX_EDGE_FACTOR * h
    min_ang = math.radians(MIN_ANGLE_DEG)
    for _ in range(max_rounds):
        bxy = b.boundary_xy()
        nb = len(bxy)
        pts = np.vstack([bxy, b.interior])
        tri = _triangulate_points(domain, pts)

        # segment recovery: every consecutive boundary pair must be a mesh edge
        edges = {tuple(sorted(e)) for e in _boundary_edges(tri).tolist()}
        missing = [i for i in range(nb) if tuple(sorted((i, (i + 1) % nb))) not in edges]
        if not missing:
            # no stray boundary edges either
            bset = {tuple(sorted((i, (i + 1) % nb))) for i in range(nb)}
            if edges != bset:
                missing = sorted({min(e) for e in edges - bset if max(e) < nb})
        if missing:
            for i in sorted(missing, reverse=True):
                b.split_boundary(i)
            continue

        p = pts[tri]
        ang = _min_angles(pts, tri)
        elen = np.max(np.linalg.norm(p - np.roll(p, 1, axis=1), axis=2), axis=1)
        bad = (ang < min_ang) | (elen > hmax)
        if not bad.any():
            mesh = _finish(domain, b, pts, tri, nb, h)
            mesh.validate()
            return mesh

        cc = _circumcenters(p[bad])
        # encroachment: split boundary pieces whose diametral circle holds a candidate
        mids = 0.5 * (bxy + np.roll(bxy, -1, axis=0))
        rads = 0.5 * np.linalg.norm(np.roll(bxy, -1, axis=0) - bxy, axis=1)
        tree = cKDTree(mids)
        enc = set()
        inside = domain.contains(cc) & (domain.distance(cc) > 1e-12)
        for c, ok in zip(cc, inside):
            hits = [j for j in tree.query_ball_point(c, rads.max() + 1e-15)
                    if np.linalg.norm(c - mids[j]) < rads[j]]
            if hits or not ok:
                if not hits:
                    _, j = tree.query(c)
                    hits = [j]
                enc.update(hits)
        if enc:
            for i in sorted(enc, reverse=True):
                b.split_boundary(i)
            cc = cc[inside]
        keep = np.ones(len(cc), dtype=bool)
        if len(cc):
            # avoid near-duplicate insertions
            t2 = cKDTree(pts)
            dmin, _ = t2.query(cc)
            keep &= dmin > 1e-3 * h
            cc = cc[keep]
            if len(cc):
                uniq = cKDTree(cc).query_pairs(0.25 * h)
                drop = {j for _, j in uniq}
                cc = np.delete(cc, sorted(drop), axis=0)
            b.interior = np.vstack([b.interior, cc])
    raise MeshError("mesh quality targets not reached")


def _finish(domain, b, pts, tri, nb, h):
    used = np.unique(tri)
    remap = -np.ones(len(pts), dtype=int)
    remap[used] = np.arange(len(used))
    seg = np.full(len(pts), -1)
    tpar = np.full(len(pts), np.nan)
    seg[:nb] = [s for s, _ in b.chain]
    tpar[:nb] = [t for _, t in b.chain]
    bedges = np.array([[i, (i + 1) % nb] for i in range(nb)])
    return TriMesh(pts[used], remap[tri], remap[bedges], h, seg[used], tpar[used], domain)


def refine(mesh: TriMesh) -> TriMesh:
    """Split every triangle into four; boundary midpoints are projected back
    onto the exact boundary when the mesh carries its domain."""
    v, tri = mesh.vertices, mesh.triangles
    e = np.sort(tri[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
    uniq, inv = np.unique(e, axis=0, return_inverse=True)
    inv = inv.ravel().reshape(-1, 3)
    nv = len(v)
    mids = 0.5 * (v[uniq[:, 0]] + v[uniq[:, 1]])
    seg = np.concatenate([mesh.boundary_segment, np.full(len(uniq), -1)]) if mesh.boundary_segment is not None else None
    tpar = np.concatenate([mesh.boundary_t, np.full(len(uniq), np.nan)]) if mesh.boundary_t is not None else None

    new_bedges = []
    edge_index = {tuple(u): k for k, u in enumerate(uniq.tolist())}
    for a, c in mesh.boundary_edges.tolist():
        k = edge_index[tuple(sorted((a, c)))]
        m = nv + k
        if seg is not None and mesh.domain is not None:
            sa, ta = int(seg[a]), tpar[a]
            sc, tc = int(seg[c]), tpar[c]
            if sc != sa or tc <= ta:
                tc = 1.0
            tm = 0.5 * (ta + tc)
            mids[k] = mesh.domain.project(sa, tm)
            seg[m], tpar[m] = sa, tm
        new_bedges += [[a, m], [m, c]]

    m01, m12, m20 = nv + inv[:, 0], nv + inv[:, 1], nv + inv[:, 2]
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    new_tri = np.vstack([
        np.column_stack([a, m01, m20]),
        np.column_stack([m01, b, m12]),
        np.column_stack([m20, m12, c]),
        np.column_stack([m01, m12, m20]),
    ])
    return TriMesh(np.vstack([v, mids]), new_tri, np.array(new_bedges), mesh.h / 2, seg, tpar, mesh.domain)


# ---------------------------------------------------------------------------
# text format: "V T B" header, then V lines "x y", T lines "i j k", B lines "i j"


def write_mesh(mesh: TriMesh, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"{len(mesh.vertices)} {len(mesh.triangles)} {len(mesh.boundary_edges)}\n")
        for x, y in mesh.vertices:
            fh.write(f"{float(x)!r} {float(y)!r}\n")
        for i, j, k in mesh.triangles:
            fh.write(f"{i} {j} {k}\n")
        for i, j in mesh.boundary_edges:
            fh.write(f"{i} {j}\n")


def read_mesh(path, h: float = None) -> TriMesh:
    """Read the text mesh format; raises :class:`MeshError` on malformed input."""
    try:
        with open(path) as fh:
            lines = [ln.split() for ln in fh if ln.strip()]
        nv, nt, nb = (int(u) for u in lines[0])
        body = lines[1:]
        if len(body) != nv + nt + nb:
            raise MeshError(f"{path}: expected {nv + nt + nb} data lines, found {len(body)}")
        v = np.array(body[:nv], dtype=float)
        t = np.array(body[nv:nv + nt], dtype=int)
        b = np.array(body[nv + nt:], dtype=int)
    except MeshError:
        raise
    except (ValueError, IndexError) as exc:
        raise MeshError(f"{path}: malformed mesh file ({exc})") from None
    if v.shape != (nv, 2) or t.shape != (nt, 3) or b.shape != (nb, 2):
        raise MeshError(f"{path}: wrong column counts")
    if t.size and (t.min() < 0 or t.max() >= nv):
        raise MeshError(f"{path}: triangle index out of range")
    if h is None:
        e = np.sort(t[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
        h = float(np.linalg.norm(v[e[:, 0]] - v[e[:, 1]], axis=1).max()) / MAX_EDGE_FACTOR
    mesh = TriMesh(v, t, b, h)
    mesh.validate(quality=False)
    return mesh


__all__ = ["TriMesh", "MeshError", "triangulate", "refine", "read_mesh", "write_mesh", "DomainError"]
