"""Planar domains, model surfaces and their geometric invariants.

A :class:`DomainSpec` is a plain, JSON-serialisable description.  Calling
:func:`generate_domain` turns it into either a :class:`Domain` (a planar
region bounded by a closed counterclockwise chain of line and arc segments)
or a :class:`ModelSurface` (flat torus, surface of revolution) whose
geometry is known in closed form.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from typing import Any, Mapping, Optional, Union

import numpy as np
import shapely
from scipy.optimize import minimize
from scipy.spatial import ConvexHull
from scipy.integrate import simpson
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import shortest_path

KINDS = ("polygon", "disk", "rounded_rectangle", "dumbbell", "annulus_sector",
         "torus", "revolution")
PLANAR_KINDS = KINDS[:5]

# parameters that carry a length dimension, per kind (used by scale_domain)
_LENGTH_PARAMS = {
    "disk": ("radius",),
    "rounded_rectangle": ("length", "width", "corner_radius"),
    "dumbbell": ("ball_radius", "neck_width", "neck_length"),
    "annulus_sector": ("inner_radius", "outer_radius"),
    "torus": ("a", "b"),
}

TWO_PI = 2.0 * math.pi


class DomainError(ValueError):
    """Invalid or degenerate domain parameters."""


@dataclass(frozen=True)
class DomainSpec:
    kind: str
    parameters: Mapping[str, Any] = field(default_factory=dict)
    convex_hint: bool = False

    def to_dict(self) -> dict:
        params = {}
        for key, val in self.parameters.items():
            if key == "vertices":
                val = [[float(x), float(y)] for x, y in val]
            elif key == "center":
                val = [float(v) for v in val]
            params[key] = val
        return {"kind": self.kind, "parameters": params, "convex_hint": bool(self.convex_hint)}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "DomainSpec":
        if "kind" not in data:
            raise DomainError("domain spec is missing 'kind'")
        unknown = set(data) - {"kind", "parameters", "convex_hint", "id"}
        if unknown:
            raise DomainError(f"unknown domain spec fields: {sorted(unknown)}")
        return cls(data["kind"], dict(data.get("parameters", {})), bool(data.get("convex_hint", False)))

    def key(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


# ---------------------------------------------------------------------------
# boundary segments


@dataclass(frozen=True)
class Line:
    p0: tuple
    p1: tuple

    @property
    def length(self) -> float:
        return math.dist(self.p0, self.p1)

    def point(self, t):
        t = np.asarray(t, dtype=float)[..., None]
        return (1.0 - t) * np.asarray(self.p0) + t * np.asarray(self.p1)

    def tangent(self, t):
        d = np.subtract(self.p1, self.p0) / self.length
        return np.broadcast_to(d, np.shape(t) + (2,)).copy()

    def distance(self, pts):
        a = np.asarray(self.p0)
        d = np.subtract(self.p1, self.p0)
        s = np.clip(((pts - a) @ d) / (d @ d), 0.0, 1.0)
        return np.linalg.norm(pts - (a + s[:, None] * d), axis=1)

    def ray_crossings(self, pts):
        (x0, y0), (x1, y1) = self.p0, self.p1
        px, py = pts[:, 0], pts[:, 1]
        straddle = (y0 > py) != (y1 > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xi = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
        return straddle & (xi > px)

    def green_area(self) -> float:
        (x0, y0), (x1, y1) = self.p0, self.p1
        return 0.5 * (x0 + x1) * (y1 - y0)

    def scaled(self, t: float) -> "Line":
        return Line(tuple(t * v for v in self.p0), tuple(t * v for v in self.p1))


@dataclass(frozen=True)
class Arc:
    """Circular arc from angle ``theta0`` to ``theta1``; ccw iff theta1 > theta0."""

    center: tuple
    radius: float
    theta0: float
    theta1: float

    @property
    def length(self) -> float:
        return self.radius * abs(self.theta1 - self.theta0)

    @property
    def ccw(self) -> bool:
        return self.theta1 > self.theta0

    def angle(self, t):
        return self.theta0 + np.asarray(t, dtype=float) * (self.theta1 - self.theta0)

    def point(self, t):
        th = self.angle(t)
        return np.stack([self.center[0] + self.radius * np.cos(th),
                         self.center[1] + self.radius * np.sin(th)], axis=-1)

    def tangent(self, t):
        th = self.angle(t)
        sgn = 1.0 if self.ccw else -1.0
        return sgn * np.stack([-np.sin(th), np.cos(th)], axis=-1)

    def _in_range(self, phi):
        lo = min(self.theta0, self.theta1)
        span = abs(self.theta1 - self.theta0)
        return np.mod(phi - lo, TWO_PI) <= span + 1e-14

    def distance(self, pts):
        rel = pts - np.asarray(self.center)
        rho = np.linalg.norm(rel, axis=1)
        phi = np.arctan2(rel[:, 1], rel[:, 0])
        ends = np.minimum(np.linalg.norm(pts - self.point(0.0), axis=1),
                          np.linalg.norm(pts - self.point(1.0), axis=1))
        return np.where(self._in_range(phi), np.abs(rho - self.radius), ends)

    def _monotone_pieces(self):
        lo, hi = sorted((self.theta0, self.theta1))
        cuts = [lo]
        k = math.ceil((lo - 0.5 * math.pi) / math.pi)
        while 0.5 * math.pi + k * math.pi < hi:
            c = 0.5 * math.pi + k * math.pi
            if c > lo:
                cuts.append(c)
            k += 1
        cuts.append(hi)
        return list(zip(cuts[:-1], cuts[1:]))

    def ray_crossings(self, pts):
        cx, cy = self.center
        r = self.radius
        px, py = pts[:, 0], pts[:, 1]
        hits = np.zeros(len(pts), dtype=int)
        for a, b in self._monotone_pieces():
            ya, yb = cy + r * math.sin(a), cy + r * math.sin(b)
            straddle = (ya > py) != (yb > py)
            s = np.clip((py - cy) / r, -1.0, 1.0)
            t1 = np.arcsin(s)
            cand = np.stack([t1, math.pi - t1])
            cand = a + np.mod(cand - a, TWO_PI)
            ok = cand <= b + 1e-12
            th = np.where(ok[0], cand[0], cand[1])
            xi = cx + r * np.cos(th)
            hits += (straddle & (xi > px)).astype(int)
        return hits

    def green_area(self) -> float:
        cx, r = self.center[0], self.radius
        t0, t1 = self.theta0, self.theta1
        return (cx * r * (math.sin(t1) - math.sin(t0))
                + r * r * ((t1 - t0) / 2.0 + (math.sin(2 * t1) - math.sin(2 * t0)) / 4.0))

    def scaled(self, t: float) -> "Arc":
        return Arc(tuple(t * v for v in self.center), t * self.radius, self.theta0, self.theta1)


Segment = Union[Line, Arc]


def _inner_normal(tangent):
    return np.stack([-tangent[..., 1], tangent[..., 0]], axis=-1)


@dataclass
class BoundarySample:
    points: np.ndarray
    normals: np.ndarray
    segment: np.ndarray
    t: np.ndarray


class Domain:
    """A planar domain bounded by a closed ccw chain of segments."""

    def __init__(self, spec: DomainSpec, segments: list, convex: bool, feature_size: float,
                 exact_diameter: Optional[float] = None):
        self.spec = spec
        self.segments = segments
        self.convex = convex
        self.feature_size = feature_size
        self.exact_diameter = exact_diameter
        self.corner_turns = self._corner_turns()

    def __repr__(self):
        return f"Domain({self.spec.kind}, {dict(self.spec.parameters)})"

    @property
    def kind(self) -> str:
        return self.spec.kind

    def _corner_turns(self):
        turns = []
        n = len(self.segments)
        for i in range(n):
            t_out = self.segments[i].tangent(1.0)
            t_in = self.segments[(i + 1) % n].tangent(0.0)
            cross = t_out[0] * t_in[1] - t_out[1] * t_in[0]
            turns.append(math.atan2(cross, float(t_out @ t_in)))
        return np.array(turns)

    @property
    def has_convex_corners(self) -> bool:
        return bool(np.any(self.corner_turns > 1e-9))

    @property
    def area(self) -> float:
        return float(sum(s.green_area() for s in self.segments))

    @property
    def perimeter(self) -> float:
        return float(sum(s.length for s in self.segments))

    def bbox(self):
        pts = self.boundary_points(self.perimeter / 2000).points
        return pts.min(axis=0), pts.max(axis=0)

    def boundary_points(self, step: float, include_ends: bool = True) -> BoundarySample:
        """Sample the boundary at arclength spacing at most ``step``.

        Segment start points are included (``include_ends``), end points are
        not since they coincide with the next segment's start.
        """
        pts, nrm, seg, ts = [], [], [], []
        for i, s in enumerate(self.segments):
            m = max(1, int(math.ceil(s.length / step - 1e-9)))
            t = np.arange(m) / m
            if not include_ends:
                t = (np.arange(m) + 0.5) / m
            pts.append(s.point(t))
            nrm.append(_inner_normal(s.tangent(t)))
            seg.append(np.full(m, i))
            ts.append(t)
        return BoundarySample(np.vstack(pts), np.vstack(nrm), np.concatenate(seg), np.concatenate(ts))

    def distance(self, pts) -> np.ndarray:
        """Unsigned distance to the boundary."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.min([s.distance(pts) for s in self.segments], axis=0)

    def contains(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        hits = np.zeros(len(pts), dtype=int)
        for s in self.segments:
            hits += s.ray_crossings(pts)
        return hits % 2 == 1

    def signed_distance(self, pts) -> np.ndarray:
        """Negative inside, positive outside."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        d = self.distance(pts)
        return np.where(self.contains(pts), -d, d)

    def polygon(self, step: float) -> shapely.Polygon:
        return shapely.Polygon(self.boundary_points(step).points)

    def project(self, segment: int, t: float) -> np.ndarray:
        return self.segments[segment].point(t)


@dataclass
class ModelSurface:
    """A closed flat torus or the exponential surface of revolution."""

    spec: DomainSpec

    @property
    def kind(self) -> str:
        return self.spec.kind

    def profile(self, x):
        R = float(self.spec.parameters["R"])
        return np.exp(-np.asarray(x) * R) / R

    def __repr__(self):
        return f"ModelSurface({self.spec.kind}, {dict(self.spec.parameters)})"


# ---------------------------------------------------------------------------
# generators


def _require(params, name):
    if name not in params:
        raise DomainError(f"missing parameter '{name}'")
    try:
        return float(params[name])
    except (TypeError, ValueError):
        raise DomainError(f"parameter '{name}' must be a real number") from None


def _polygon(spec):
    verts = spec.parameters.get("vertices")
    if verts is None or len(verts) < 3:
        raise DomainError("polygon needs at least three vertices")
    v = np.asarray(verts, dtype=float)
    if v.shape[1:] != (2,) or not np.all(np.isfinite(v)):
        raise DomainError("polygon vertices must be finite (x, y) pairs")
    ring = shapely.LinearRing(v)
    if not ring.is_simple:
        raise DomainError("polygon is self-intersecting")
    x, y = v[:, 0], v[:, 1]
    signed = 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))
    if abs(signed) < 1e-14:
        raise DomainError("polygon has zero area")
    if signed < 0:
        raise DomainError("polygon vertices must be counterclockwise")
    e = np.roll(v, -1, axis=0) - v
    cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
    convex = bool(np.all(cross >= -1e-12))
    if spec.convex_hint and not convex:
        raise DomainError("convex_hint set but polygon fails the cross-product convexity test")
    segs = [Line(tuple(v[i]), tuple(v[(i + 1) % len(v)])) for i in range(len(v))]
    if min(s.length for s in segs) < 1e-12:
        raise DomainError("polygon has repeated vertices")
    diam = float(np.max(np.linalg.norm(v[:, None] - v[None], axis=2)))
    return Domain(spec, segs, convex, math.inf, diam)


def _disk(spec):
    r = _require(spec.parameters, "radius")
    if r <= 0:
        raise DomainError("disk radius must be positive")
    c = tuple(float(u) for u in spec.parameters.get("center", (0.0, 0.0)))
    return Domain(spec, [Arc(c, r, 0.0, TWO_PI)], True, r, 2 * r)


def _rounded_rectangle(spec):
    p = spec.parameters
    L, w, rc = (_require(p, k) for k in ("length", "width", "corner_radius"))
    if L <= 0 or w <= 0 or rc < 0:
        raise DomainError("rounded_rectangle needs positive length/width and corner_radius >= 0")
    if rc > w / 2 + 1e-15 or rc > L / 2 + 1e-15:
        raise DomainError("corner_radius must not exceed half the width (and half the length)")
    hp = 0.5 * math.pi
    corners = [((L - rc, rc), -hp), ((L - rc, w - rc), 0.0), ((rc, w - rc), hp), ((rc, rc), math.pi)]
    straight = [((rc, 0.0), (L - rc, 0.0)), ((L, rc), (L, w - rc)),
                ((L - rc, w), (rc, w)), ((0.0, w - rc), (0.0, rc))]
    segs = []
    for (a, b), (c, th) in zip(straight, corners):
        if math.dist(a, b) > 1e-14:
            segs.append(Line(a, b))
        if rc > 0:
            segs.append(Arc(c, rc, th, th + hp))
    diam = math.hypot(L - 2 * rc, w - 2 * rc) + 2 * rc
    return Domain(spec, segs, True, w, diam)


def _dumbbell(spec):
    p = spec.parameters
    r, w, L = (_require(p, k) for k in ("ball_radius", "neck_width", "neck_length"))
    if r <= 0 or w <= 0 or L <= 0:
        raise DomainError("dumbbell parameters must be positive")
    if w >= 2 * r:
        raise DomainError("dumbbell neck_width must be smaller than 2*ball_radius")
    c = L / 2 + r
    s = math.sqrt(r * r - w * w / 4)
    alpha = math.asin(w / (2 * r))
    j = c - s
    segs = [
        Arc((c, 0.0), r, -(math.pi - alpha), math.pi - alpha),
        Line((j, w / 2), (-j, w / 2)),
        Arc((-c, 0.0), r, alpha, TWO_PI - alpha),
        Line((-j, -w / 2), (j, -w / 2)),
    ]
    return Domain(spec, segs, False, w, L + 4 * r)


def _annulus_sector(spec):
    p = spec.parameters
    r1, r2 = _require(p, "inner_radius"), _require(p, "outer_radius")
    phi = _require(p, "angle")
    if not 0 < r1 < r2 or not 0 < phi < TWO_PI:
        raise DomainError("annulus_sector needs 0 < inner_radius < outer_radius and 0 < angle < 2*pi")
    segs = [
        Line((r1, 0.0), (r2, 0.0)),
        Arc((0.0, 0.0), r2, 0.0, phi),
        Line((r2 * math.cos(phi), r2 * math.sin(phi)), (r1 * math.cos(phi), r1 * math.sin(phi))),
        Arc((0.0, 0.0), r1, phi, 0.0),
    ]
    return Domain(spec, segs, False, r2 - r1, None)


def generate_domain(spec: Union[DomainSpec, Mapping]) -> Union[Domain, ModelSurface]:
    """Build the boundary representation for ``spec``.

    Raises
    ------
    DomainError
        If the parameters violate the kind's invariants.
    """
    if not isinstance(spec, DomainSpec):
        spec = DomainSpec.from_dict(spec)
    if spec.kind not in KINDS:
        raise DomainError(f"unknown domain kind '{spec.kind}'")
    if spec.kind == "torus":
        a, b = _require(spec.parameters, "a"), _require(spec.parameters, "b")
        if not a >= b > 0:
            raise DomainError("torus needs a >= b > 0")
        return ModelSurface(spec)
    if spec.kind == "revolution":
        if _require(spec.parameters, "R") <= 0:
            raise DomainError("revolution parameter R must be positive")
        return ModelSurface(spec)
    dom = {"polygon": _polygon, "disk": _disk, "rounded_rectangle": _rounded_rectangle,
           "dumbbell": _dumbbell, "annulus_sector": _annulus_sector}[spec.kind](spec)
    if spec.convex_hint and not dom.convex:
        raise DomainError(f"convex_hint set on a non-convex {spec.kind}")
    if dom.area <= 0:
        raise DomainError("degenerate (zero-area) domain")
    return dom


def scale_domain(domain, t: float):
    """Dilate a domain (or model surface) about the origin by ``t > 0``."""
    if not t > 0:
        raise DomainError("scale factor must be positive")
    spec = domain.spec
    params = dict(spec.parameters)
    if spec.kind == "polygon":
        params["vertices"] = [[t * float(x), t * float(y)] for x, y in params["vertices"]]
    elif spec.kind == "revolution":
        raise DomainError("the surface of revolution family is not closed under dilation")
    else:
        for name in _LENGTH_PARAMS[spec.kind]:
            params[name] = t * float(params[name])
        if "center" in params:
            params["center"] = [t * float(u) for u in params["center"]]
    return generate_domain(DomainSpec(spec.kind, params, spec.convex_hint))


# ---------------------------------------------------------------------------
# invariants


@dataclass
class GeometricInvariants:
    n: int
    d: float
    d_bar: float
    inradius_rho: Optional[float]
    rad: Optional[float]
    vol: float
    kappa: float = 0.0
    inj_inverse: float = 0.0
    convex: bool = False
    errors: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def check(self, tol: float = 0.0) -> None:
        """Assert ``0 <= rad <= inradius <= d/2 <= d_bar/2`` up to ``tol``."""
        if not (self.vol > 0 and self.d >= 0 and self.d_bar >= 0):
            raise AssertionError("non-positive volume or negative length")
        if self.d > self.d_bar + tol:
            raise AssertionError(f"d={self.d} exceeds d_bar={self.d_bar}")
        if self.inradius_rho is not None:
            if self.inradius_rho > self.d / 2 + tol:
                raise AssertionError("inradius exceeds d/2")
            if self.rad is not None and not 0 <= self.rad <= self.inradius_rho + tol:
                raise AssertionError(f"rad={self.rad} not in [0, inradius={self.inradius_rho}]")


def _intrinsic_diameter(domain: Domain, step: float, max_nodes: int = 600) -> float:
    step = max(step, domain.perimeter / max_nodes)
    pts = domain.boundary_points(step).points
    n = len(pts)
    # chord sagitta of concave arcs is admitted by the buffer
    rmin = min((s.radius for s in domain.segments if isinstance(s, Arc)), default=math.inf)
    tol = max(1e-9 * domain.perimeter, step * step / (4 * rmin) if rmin < math.inf else 0.0)
    poly = shapely.Polygon(pts).buffer(tol)
    shapely.prepare(poly)
    i, j = np.triu_indices(n, 1)
    lines = shapely.linestrings(np.stack([pts[i], pts[j]], axis=1))
    vis = shapely.covers(poly, lines)
    w = np.linalg.norm(pts[i] - pts[j], axis=1)
    i, j, w = i[vis], j[vis], w[vis]
    graph = coo_matrix((w, (i, j)), shape=(n, n)).tocsr()
    dist = shortest_path(graph, method="D", directed=False)
    return float(np.max(dist[np.isfinite(dist)]))


def _inradius(domain: Domain, resolution: float):
    lo, hi = domain.bbox()
    step = max(resolution, float(np.max(hi - lo)) / 400)
    xs = np.arange(lo[0], hi[0] + step, step)
    ys = np.arange(lo[1], hi[1] + step, step)
    grid = np.stack(np.meshgrid(xs, ys), axis=-1).reshape(-1, 2)
    sd = domain.signed_distance(grid)
    order = np.argsort(sd)[:8]
    best_val, best_pt = -sd[order[0]], grid[order[0]]
    for p0 in grid[order]:
        res = minimize(lambda p: float(domain.signed_distance(p[None])[0]), p0,
                       method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 2000})
        if -res.fun > best_val:
            best_val, best_pt = -res.fun, res.x
    return float(best_val), best_pt


def _rolling_radius(domain: Domain, resolution: float, inradius: float) -> float:
    if domain.has_convex_corners:
        return 0.0
    bs = domain.boundary_points(resolution, include_ends=False)
    x, nv = bs.points, bs.normals
    lo = np.zeros(len(x))
    hi = np.full(len(x), 2.0 * inradius + resolution)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        ok = domain.distance(x + mid[:, None] * nv) >= mid * (1 - 1e-9) - 1e-13
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    return float(np.min(lo))


def _revolution_geometry(surface: ModelSurface, nodes: int = 4001):
    R = float(surface.spec.parameters["R"])
    x = np.linspace(0.0, 1.0, nodes)
    f = np.exp(-x * R) / R
    w = np.sqrt(1.0 + np.exp(-2 * x * R))  # |f'| = e^{-xR}
    vol = float(simpson(TWO_PI * f * w, x=x))
    meridian = float(simpson(w, x=x))
    xs = x[::20]
    fs = f[::20]
    d = float(np.max(np.hypot(xs[:, None] - xs[None], fs[:, None] + fs[None])))
    d_bar = meridian + math.pi * float(f[-1])
    return d, max(d_bar, d), vol


def invariants(domain, resolution: float) -> GeometricInvariants:
    """Geometric invariants of a domain or model surface.

    ``resolution`` sets the boundary sampling step for the intrinsic diameter,
    the inradius search grid and the rolling-ball marching; every grid-based
    value carries an error estimate no larger than ``resolution`` in
    ``errors``.
    """
    if not resolution > 0:
        raise DomainError("resolution must be positive")
    if isinstance(domain, ModelSurface):
        p = domain.spec.parameters
        if domain.kind == "torus":
            a, b = float(p["a"]), float(p["b"])
            d = math.hypot(a, b) / 2
            return GeometricInvariants(2, d, d, None, None, a * b, 0.0, 2.0 / b, True,
                                       {"d": 0.0, "d_bar": 0.0})
        d, d_bar, vol = _revolution_geometry(domain)
        return GeometricInvariants(2, d, d_bar, None, None, vol, 0.0, 0.0, False,
                                   {"d": 1e-3, "d_bar": "upper estimate via meridian plus half circle"})
    if domain.area <= 1e-300:
        raise DomainError("degenerate (zero-area) domain")
    errors = {}
    if domain.exact_diameter is not None:
        d = domain.exact_diameter
        errors["d"] = 0.0
    else:
        pts = domain.boundary_points(resolution / 4).points
        hull = pts[ConvexHull(pts).vertices]
        d = float(np.max(np.linalg.norm(hull[:, None] - hull[None], axis=2)))
        errors["d"] = resolution / 4
    d_bar = max(_intrinsic_diameter(domain, resolution), d)
    errors["d_bar"] = resolution
    rho, _ = _inradius(domain, resolution)
    errors["inradius_rho"] = 1e-8
    rad = _rolling_radius(domain, resolution, rho)
    errors["rad"] = resolution
    inv = GeometricInvariants(2, float(d), float(d_bar), rho, min(rad, rho), domain.area,
                              0.0, 0.0, domain.convex, errors)
    inv.check(tol=2 * resolution)
    return inv
