"""Built-in verification battery.

Each group of checks produces :class:`CheckRow` objects keyed by a tag: a
bound id (``cheng_neumann_convex``), a bound id with a qualifier
(``cheng_neumann_convex:corpus_max``) or a check name (``weyl``,
``covering:overlap``, ``necessity:dumbbell``).  :func:`verify_all` runs the
groups whose tags survive the filter.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np

from . import bounds as B
from .covering import (BallRegion, cardinality_bound, greedy_packing, overlap_bound,
                       packing_radius, phi_injectivity_certificate, plateau_rayleigh,
                       poincare_battery, segment_inequality_mc)
from .domain import DomainSpec, generate_domain, scale_domain
from .eigen import cluster_multiplicities, counting_function
from .oracle import rectangle_spectrum, spectrum_for, torus_spectrum
from .pipeline import domain_invariants, fem_mesh, fem_spectrum

PI2 = math.pi ** 2

_HEX = [[math.cos(i * math.pi / 3), math.sin(i * math.pi / 3)] for i in range(6)]

SQUARE = DomainSpec("polygon", {"vertices": [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]}, True)
DISK = DomainSpec("disk", {"radius": 1.0}, True)

# convex planar corpus used for empirical constants and the corpus-wide checks
CORPUS = {
    "square": SQUARE,
    "disk": DISK,
    "stadium": DomainSpec("rounded_rectangle", {"length": 2.0, "width": 1.0, "corner_radius": 0.5}, True),
    "hexagon": DomainSpec("polygon", {"vertices": _HEX}, True),
    "rounded_rectangle_w0.4": DomainSpec("rounded_rectangle",
                                         {"length": 1.0, "width": 0.4, "corner_radius": 0.2}, True),
}

# closed flat surfaces (oracle spectra)
CLOSED = {
    "torus_1x1": DomainSpec("torus", {"a": 1.0, "b": 1.0}, True),
    "torus_1x0.5": DomainSpec("torus", {"a": 1.0, "b": 0.5}, True),
}

CORPUS_H = 0.02
K_MAX = 20
K_RANGE = range(1, 11)
RESOLUTION = 0.01


@dataclass
class CheckRow:
    tag: str
    passed: bool
    summary: str
    detail: dict = field(default_factory=dict)
    reports: list = field(default_factory=list)
    informational: bool = False
    seconds: float = 0.0           # wall time; printed, never serialized

    def to_dict(self) -> dict:
        return {"tag": self.tag, "passed": self.passed, "summary": self.summary,
                "informational": self.informational, "detail": self.detail,
                "n_reports": len(self.reports)}


# ---------------------------------------------------------------------------
# per-domain bound reports


def lambda_grid(spectrum) -> list:
    """Points just above each complete nonzero cluster, where ``N`` jumps.

    The last cluster may be truncated by ``k_max`` and is left out.
    """
    low = spectrum.lower()
    pts = set()
    for start, size, _ in spectrum.clusters[:-1]:
        top = float(low[start:start + size].max())
        if top > 0 and top * (1 + 1e-9) <= low[-1]:
            pts.add(top * (1 + 1e-9))
    return sorted(pts)


def _runs(bound_id: str, s, inv, store, did: str, k_range) -> list:
    ks = [k for k in k_range if k <= s.k_max]
    if bound_id in ("li_yau", "zhong_yang"):
        return [B.check_lambda1_lower(s, inv, bound_id, did)]
    if bound_id == "gromov_counting":
        return [B.check_gromov_counting(s, inv, lam, store=store, domain_id=did) for lam in lambda_grid(s)]
    if bound_id == "neumann_volume":
        return [B.check_neumann_volume(s, inv, lam, store=store, domain_id=did) for lam in lambda_grid(s)]
    if bound_id == "liyau_counting":
        return [B.check_dirichlet_counting_liyau(s, inv, lam, domain_id=did) for lam in lambda_grid(s)]
    if bound_id == "cheng_neumann_convex":
        return [B.check_cheng_neumann_convex(s, inv, k, domain_id=did) for k in ks]
    if bound_id == "cheng_closed_explicit":
        return [B.check_cheng_closed_explicit(s, inv, k, domain_id=did) for k in ks]
    if bound_id in ("cm", "buser79"):
        return [B.check_buser_neumann(s, inv, k, bound_id, store=store, domain_id=did) for k in ks]
    if bound_id in ("cheng_dp", "buser_dp"):
        return [B.check_dirichlet_upper(s, inv, k, bound_id, domain_id=did) for k in [0] + ks]
    if bound_id == "cheng_yang":
        return [B.check_cheng_yang(s, k, did) for k in ks if k >= 2]
    if bound_id in B.MULTIPLICITY_VARIANTS:
        lo = 1 if bound_id in ("mbc_diameter", "mbc_volume", "mbn_volume") else 0
        return [B.check_multiplicity(s, inv, k, bound_id, store=store, domain_id=did)
                for k in range(lo, s.k_max + 1)]
    raise KeyError(bound_id)


def applicable(bound_id: str, spectrum, inv) -> bool:
    """Whether the hypotheses of ``bound_id`` hold (the constant is irrelevant here)."""
    probe = B.ConstantStore()
    name = B.EMPIRICAL_NAMES.get(bound_id)
    if name:
        probe.record(B.EmpiricalConstant(bound_id, name, "probe", 1.0, ""))
    try:
        _runs(bound_id, spectrum, inv, probe, "", range(1, 3))
    except B.BoundNotApplicable:
        return False
    return True


def domain_reports(domain_id: str, spectrum, inv, store=None, bound_ids: Sequence = None,
                   k_range=K_RANGE, skipped: Optional[dict] = None) -> list:
    """Every applicable bound report for one domain and spectrum.

    Bounds whose hypotheses fail are skipped, as are empirical bounds with no
    recorded constant; the reason goes to ``skipped`` when given.
    """
    out = []
    for bid in (bound_ids or B.BOUND_IDS):
        bid = B.canonical_id(bid)
        try:
            out += _runs(bid, spectrum, inv, store, domain_id, k_range)
        except (B.BoundNotApplicable, B.MissingConstant) as exc:
            if skipped is not None:
                skipped.setdefault(bid, []).append(f"{domain_id}: {exc}")
    return out


def estimate_store(entries: Sequence, corpus_name: str, k_range=K_RANGE,
                   bound_ids: Sequence = None) -> B.ConstantStore:
    """Empirical constants for every bound in ``bound_ids`` (default all) over the
    entries where the bound applies; frozen on return."""
    store = B.ConstantStore()
    wanted = [B.canonical_id(b) for b in (bound_ids or B.EMPIRICAL_NAMES)]
    for bid in wanted:
        if bid not in B.EMPIRICAL_NAMES:
            continue
        use = [e for e in entries if applicable(bid, e.spectrum, e.inv)]
        if use:
            B.estimate_constant(bid, use, k_range, store, corpus_name)
    store.freeze()
    return store


def bound_rows(reports: list, bound_ids: Sequence, skipped: dict = None) -> list:
    """One row per bound id: passed iff every non-informational report is satisfied."""
    rows = []
    for bid in bound_ids:
        mine = [r for r in reports if r.bound_id == bid]
        checked = [r for r in mine if not r.informational]
        failed = [r for r in checked if not r.satisfied]
        margins = [r.margin for r in checked if math.isfinite(r.margin)]
        detail = {"reports": len(mine), "informational": len(mine) - len(checked),
                  "failed": [r.to_dict() for r in failed],
                  "min_margin": min(margins) if margins else None,
                  "domains": sorted({r.domain_id for r in mine})}
        if mine and mine[0].constants_used:
            detail["constants"] = {k: v for k, v in sorted(mine[0].constants_used.items())}
        if not mine:
            why = "; ".join((skipped or {}).get(bid, [])[:2])
            rows.append(CheckRow(bid, False, f"no applicable domain ({why})", detail))
            continue
        summ = (f"{len(checked) - len(failed)}/{len(checked)} satisfied"
                + (f", {len(mine) - len(checked)} informational" if len(mine) > len(checked) else "")
                + (f", min margin {min(margins):.4g}" if margins else ""))
        rows.append(CheckRow(bid, not failed, summ, detail, mine))
    return rows


# ---------------------------------------------------------------------------
# the battery


class Battery:
    """Lazily computed shared data for the check groups."""

    def __init__(self, seed: int = 0, h: float = CORPUS_H):
        self.seed = seed
        self.h = h

    def spectrum(self, spec, bc, k_max=K_MAX):
        return fem_spectrum(spec, bc, self.h, k_max, seed=self.seed)

    @cached_property
    def entries(self) -> dict:
        """``bc -> [CorpusEntry]`` for the planar corpus and the closed surfaces."""
        out = {"neumann": [], "dirichlet": [], "closed": []}
        for name, spec in CORPUS.items():
            inv = domain_invariants(spec, RESOLUTION)
            for bc in ("neumann", "dirichlet"):
                out[bc].append(B.CorpusEntry(name, self.spectrum(spec, bc), inv))
        for name, spec in CLOSED.items():
            out["closed"].append(B.CorpusEntry(name, spectrum_for(spec, "closed", K_MAX + 1),
                                               domain_invariants(spec, RESOLUTION)))
        return out

    @cached_property
    def store(self) -> B.ConstantStore:
        allent = [e for group in self.entries.values() for e in group]
        return estimate_store(allent, "convex_corpus")

    @cached_property
    def reports(self) -> tuple:
        skipped, reps = {}, []
        for group in self.entries.values():
            for e in group:
                reps += domain_reports(e.domain_id, e.spectrum, e.inv, self.store, skipped=skipped)
        return reps, skipped

    @cached_property
    def poincare(self) -> dict:
        s = self.spectrum(SQUARE, "neumann")
        mesh = s.problem.mesh
        U = s.problem.extend(s.eigenvectors[:, 1:11])     # skip the constant mode
        centers = [(x, y) for x in (0, 0.25, 0.5, 0.75, 1) for y in (0, 0.25, 0.5, 0.75, 1)]
        radii = (0.1, 0.2, 0.4)
        base = poincare_battery(mesh, U, centers, radii)
        t = 3.0
        dil = poincare_battery(mesh.scaled(t), U, [(t * x, t * y) for x, y in centers],
                               [t * r for r in radii])
        return {"C_N": base["C_N"], "C_N_dilated": dil["C_N"], "attained": base["attained"],
                "triples": len(base["ratios"])}


def _timed(fn):
    def run(bat):
        t0 = time.perf_counter()
        rows = fn(bat)
        dt = time.perf_counter() - t0
        for r in rows:
            r.seconds = dt / max(len(rows), 1)
        return rows
    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


@_timed
def oracle_fem(bat: Battery) -> list:
    """Extrapolated FEM against closed-form spectra, k <= 20, h = 0.02."""
    rows = []
    for name, spec in (("square", SQUARE), ("disk", DISK)):
        t0 = time.perf_counter()
        errs = {}
        for bc in ("dirichlet", "neumann"):
            s = bat.spectrum(spec, bc)
            ref = spectrum_for(spec, bc, K_MAX + 1).eigenvalues
            ext = s.best()
            pos = ref > 0
            rel = np.abs(ext[pos] - ref[pos]) / ref[pos]
            zero = float(np.max(np.abs(ext[~pos]))) / ref[pos][0] if (~pos).any() else 0.0
            errs[bc] = {"max_rel_error": float(rel.max()), "zero_mode_rel": zero,
                        "first": [float(v) for v in ext[:5]]}
        secs = time.perf_counter() - t0
        worst = max(max(e["max_rel_error"], e["zero_mode_rel"]) for e in errs.values())
        ok = worst <= 5e-3 and secs <= 60
        rows.append(CheckRow(f"oracle_fem:{name}", ok,
                             f"max rel error {worst:.2e} (<= 5e-3) at h = {bat.h}, "
                             f"{'within' if secs <= 60 else 'over'} 60 s",
                             {"h": bat.h, "k_max": K_MAX, "errors": errs, "within_60s": secs <= 60}))
    return rows


@_timed
def weyl(bat: Battery) -> list:
    """``N(lambda) 4 pi / (vol lambda)`` on the unit square at ``lambda = 4000 pi``."""
    lam = 4000 * math.pi
    rows = []
    for bc in ("dirichlet", "neumann"):
        s = rectangle_spectrum(1.0, 1.0, bc, 1400)
        n = counting_function(s, lam)
        ratio = n * 4 * math.pi / lam
        rows.append(CheckRow(f"weyl:{bc}", 0.9 <= ratio <= 1.1, f"N = {n}, ratio {ratio:.4f} in [0.9, 1.1]",
                             {"lambda": lam, "N": n, "ratio": ratio}))
    return rows


@_timed
def ordering(bat: Battery) -> list:
    """Neumann below Dirichlet on identical meshes; Dirichlet monotone under inclusion."""
    worst, bad = -math.inf, []
    for name, spec in CORPUS.items():
        lam = bat.spectrum(spec, "neumann").upper()
        nu = bat.spectrum(spec, "dirichlet").upper()
        diff = lam - nu
        worst = max(worst, float(diff.max()))
        if np.any(diff > 0):
            bad.append(name)
    rows = [CheckRow("ordering", not bad, f"lambda_k <= nu_k for k <= {K_MAX} on {len(CORPUS)} meshes",
                     {"max(lambda_k - nu_k)": worst, "violations": bad})]
    widths = (1.0, 1.25, 1.5, 2.0)
    vals = []
    for a in widths:
        spec = DomainSpec("polygon", {"vertices": [[0, 0], [a, 0], [a, 1], [0, 1]]}, True)
        vals.append(fem_spectrum(spec, "dirichlet", 0.04, K_MAX, seed=bat.seed).best())
    vals = np.array(vals)
    mono = bool(np.all(np.diff(vals, axis=0) < 0))
    rows.append(CheckRow("monotonicity", mono,
                         f"nu_k strictly decreasing over nested rectangles a = {list(widths)}, k <= {K_MAX}",
                         {"widths": list(widths), "nu_0": [float(v) for v in vals[:, 0]]}))
    return rows


@_timed
def bounds_suite(bat: Battery) -> list:
    """Every bound on the convex corpus and the flat tori, empirical constants estimated first."""
    reps, skipped = bat.reports
    rows = bound_rows(reps, B.BOUND_IDS, skipped)
    # corpus maximum of lambda_k d^2 / k^2 (k <= 10)
    best = max(((e.spectrum.upper()[k] * e.inv.d ** 2 / k ** 2, e.domain_id, k)
                for e in bat.entries["neumann"] for k in K_RANGE), key=lambda t: t[0])
    rel = abs(best[0] - 2 * PI2) / (2 * PI2)
    rows.append(CheckRow("cheng_neumann_convex:corpus_max", rel <= 0.02 and best[1:] == ("square", 1),
                         f"max lambda_k d^2/k^2 = {best[0]:.4f} at ({best[1]}, k={best[2]}); "
                         f"2 pi^2 = {2 * PI2:.4f}, rel diff {rel:.2e}",
                         {"max": best[0], "domain": best[1], "k": best[2], "bound": 64.0}))
    return rows


@_timed
def scaling(bat: Battery) -> list:
    """Bound-report margins under dilation by 3: FEM (< 1%) and oracle (< 1e-6)."""
    t = 3.0
    rows = []
    for label, tol, fem in (("fem", 1e-2, True), ("oracle", 1e-6, False)):
        worst, count = 0.0, 0
        for name, spec in (("square", SQUARE), ("disk", DISK)):
            spec_t = scale_domain(generate_domain(spec), t).spec
            for bc in ("neumann", "dirichlet"):
                inv = domain_invariants(spec, RESOLUTION)
                inv_t = domain_invariants(spec_t, RESOLUTION * t)
                if fem:
                    s = bat.spectrum(spec, bc)
                    s_t = fem_spectrum(spec_t, bc, bat.h * t, K_MAX, seed=bat.seed)
                else:
                    s, s_t = spectrum_for(spec, bc, K_MAX + 1), spectrum_for(spec_t, bc, K_MAX + 1)
                r0 = domain_reports(name, s, inv, bat.store)
                r1 = domain_reports(name, s_t, inv_t, bat.store)
                if [r.bound_id for r in r0] != [r.bound_id for r in r1]:
                    worst = math.inf
                    continue
                for a, b in zip(r0, r1):
                    if math.isinf(a.margin) and math.isinf(b.margin):
                        continue
                    worst = max(worst, abs(b.margin - a.margin) / abs(a.margin))
                    count += 1
        rows.append(CheckRow(f"scaling:{label}", worst < tol,
                             f"max relative margin change {worst:.2e} (< {tol:g}) over {count} reports, t = {t:g}",
                             {"t": t, "max_rel_change": worst, "reports": count}))
    return rows


def _lattice_multiplicities(count: int) -> list:
    """Eigenvalue multiplicities of the unit square torus by direct lattice counting."""
    R = int(math.isqrt(count)) + 3
    p = np.arange(-R, R + 1)
    n = (p[:, None] ** 2 + p[None] ** 2).ravel()
    vals, mult = np.unique(n, return_counts=True)
    return [int(m) for m in mult[vals <= R * R // 2]]


@_timed
def multiplicity(bat: Battery) -> list:
    """Exact torus degeneracies on the oracle; disk Dirichlet multiplicities <= 2."""
    s = torus_spectrum(1.0, 1.0, 60)
    sizes = [m for _, m, _ in cluster_multiplicities(s, 1e-6)][:-1]   # last cluster may be truncated
    ref = _lattice_multiplicities(60)[:len(sizes)]
    rows = [CheckRow("multiplicity:torus_oracle", sizes == ref,
                     f"cluster sizes {sizes[:6]}... match lattice counts at rel_gap 1e-6",
                     {"sizes": sizes, "lattice": ref})]
    d = bat.spectrum(DISK, "dirichlet")
    ms = [d.multiplicity(k) for k in range(K_MAX + 1)]
    rows.append(CheckRow("multiplicity:disk_dirichlet", max(ms) <= 2,
                         f"max m_k = {max(ms)} for k <= {K_MAX} (rel_gap {d.rel_gap:.2e})",
                         {"m_k": ms, "rel_gap": d.rel_gap}))
    return rows


@_timed
def covering(bat: Battery) -> list:
    """Greedy packings, packing radii and plateau test functions on the convex corpus."""
    card, over, prad = [], [], []
    for name, spec in CORPUS.items():
        dom = generate_domain(spec)
        d = domain_invariants(spec, RESOLUTION).d
        for f in (2, 4, 8):
            rho = d / f
            p = greedy_packing(dom, rho)
            card.append((name, f, p.cardinality, cardinality_bound(d, rho), p.min_separation >= rho * (1 - 1e-12)))
            over.append((name, f, p.overlap_max, overlap_bound(rho)))
        for k in range(2, 11):
            pr = packing_radius(dom, k, seed=bat.seed)
            prad.append((name, k, pr.rho_k, d / k, pr.upper_certificate))
    ok_c = all(c <= b and sep for _, _, c, b, sep in card)
    ok_o = all(o <= b for _, _, o, b in over)
    ok_p = all(r >= q * (1 - 1e-9) for _, _, r, q, _ in prad)
    rows = [
        CheckRow("covering:cardinality", ok_c,
                 f"greedy cardinality <= 4 (d/rho)^2 at rho = d/2, d/4, d/8; max used fraction "
                 f"{max(c / b for _, _, c, b, _ in card):.3f}",
                 {"rows": [[n, f, c, b] for n, f, c, b, _ in card]}),
        CheckRow("covering:overlap", ok_o, f"doubled-ball overlap <= 144; max {max(o for *_, o, _ in over)}",
                 {"rows": [list(r) for r in over]}),
        CheckRow("covering:packing_radius", ok_p,
                 f"rho_k >= d/k for 2 <= k <= 10; min ratio {min(r / q for _, _, r, q, _ in prad):.3f} "
                 f"(k = 1 is vacuous: rho_1 = inf)",
                 {"rows": [list(r) for r in prad]}),
    ]
    # plateau functions on disjoint balls certify lambda_{m-1} <= max Rayleigh quotient over their span
    r = 0.4
    dom = generate_domain(SQUARE)
    s = bat.spectrum(SQUARE, "neumann")
    centers = greedy_packing(dom, r).centers[:K_MAX + 1]
    pl = plateau_rayleigh(dom, fem_mesh(SQUARE, bat.h), centers, r)
    m = len(centers)
    ok = pl.within_cap and s.upper()[m - 1] <= pl.span_max * (1 + 1e-9)
    rows.append(CheckRow("covering:plateau", ok,
                         f"{m} plateaus at r = {r}: max quotient {max(pl.quotients):.1f} <= 64/r^2 = {pl.cap:.1f}; "
                         f"lambda_{m - 1} = {s.upper()[m - 1]:.2f} <= span max {pl.span_max:.2f}",
                         {"r": r, "m": m, "quotients": pl.quotients, "span_max": pl.span_max, "cap": pl.cap}))
    return rows


def _segment_cases():
    def one(p):
        return np.ones(len(p))

    def quad(p):
        return p[:, 0] ** 2 + 0.5 * p[:, 1] ** 2

    def bump(p):
        return np.exp(-np.sum((p - 0.5) ** 2, axis=1) / 0.01)

    def ridge(p):
        return 1.0 + np.sin(6 * p[:, 0]) ** 2

    cases = []
    for dname, spec in (("square", SQUARE), ("disk", DISK)):
        dom = generate_domain(spec)
        c = (0.5, 0.5) if dname == "square" else (0.0, 0.0)
        R = 0.4 if dname == "square" else 0.8
        a = (c[0] - R / 2, c[1])
        b = (c[0] + R / 2, c[1])
        for fname, F in (("one", one), ("quadratic", quad), ("bump", bump), ("ridge", ridge)):
            cases.append((f"{dname}/{fname}", dom, R, BallRegion(dom, a, R / 2), BallRegion(dom, b, R / 2), F, c))
    return cases


@_timed
def monte_carlo(bat: Battery) -> list:
    """Segment inequality (C = 4R) and the Neumann-Poincare constant."""
    res = []
    for i, (name, dom, R, A, Bb, F, c) in enumerate(_segment_cases()):
        mc = segment_inequality_mc(dom, R, A, Bb, F, center=c, samples=400000, seed=bat.seed + i)
        res.append((name, mc))
    ok = all(m.passes and m.extras["segments_contained"] for _, m in res)
    worst = max(m.ratio for _, m in res)
    rows = [CheckRow("segment_mc", ok, f"{len(res)} cases, max ratio {worst:.3f} (99% CI lower end <= 1)",
                     {name: {"ratio": m.ratio, "ci": [m.ci_low, m.ci_high], "samples": m.samples}
                      for name, m in res})]
    p = bat.poincare
    rel = abs(p["C_N_dilated"] - p["C_N"]) / p["C_N"] if p["C_N"] > 0 else math.inf
    ok = math.isfinite(p["C_N"]) and p["C_N"] > 0 and rel <= 1e-3
    rows.append(CheckRow("poincare", ok,
                         f"C_N = {p['C_N']:.5f} over {p['triples']} triples; dilation by 3 changes it by {rel:.1e}",
                         dict(p, rel_change=rel)))
    return rows


PHI_TARGETS = ((3, 6.5), (6, 11.5), (10, 17.5))   # N(lambda) and lambda / pi^2 on the Dirichlet square


@_timed
def phi(bat: Battery) -> list:
    """Injectivity of the ball-averaging map with rho = (c6 lambda)^(-1/2), c6 = 144 C_N."""
    c6 = overlap_bound(1.0) * bat.poincare["C_N"]
    s = bat.spectrum(SQUARE, "dirichlet")
    dom = generate_domain(SQUARE)
    rows = []
    for N, f in PHI_TARGETS:
        lam = f * PI2
        n = counting_function(s, lam)
        rho = (c6 * lam) ** -0.5
        cert = phi_injectivity_certificate(s, greedy_packing(dom, rho), lam)
        ok = n == N and cert.injective and cert.rank == N and N <= cert.m
        rows.append(CheckRow(f"phi_certificate:N{N}", ok,
                             f"lambda = {f} pi^2, N = {n}, rho = {rho:.4f}, rank {cert.rank}/{cert.dim}, m = {cert.m}",
                             {"lambda": lam, "N": n, "rho": rho, "c6": c6, **cert.to_dict()}))
    return rows


@_timed
def necessity(bat: Battery) -> list:
    """The four families showing that hypotheses cannot be dropped."""
    rows = []
    db = B.necessity_suite("dumbbell")
    frac = db.ratios[-1] / db.ratios[0]
    rows.append(CheckRow("necessity:dumbbell", db.monotone and frac < 0.5,
                         f"lambda1 d^2 = {_fl(db.ratios)} strictly decreasing, final/initial {frac:.3f} < 0.5",
                         _series(db)))
    rr = B.necessity_suite("rounded_rectangle")
    nr = rr.extra["nu0*rad^2"]
    lim = PI2 / 4
    ok = (rr.monotone and rr.ratios[-1] / rr.ratios[0] > 2 and all(1.5 <= v <= 3.5 for v in nr)
          and abs(nr[-1] - lim) / lim <= 0.2)
    rows.append(CheckRow("necessity:rounded_rectangle", ok,
                         f"nu0 d_bar^2 = {_fl(rr.ratios)} increasing ({rr.ratios[-1] / rr.ratios[0]:.2f}x), "
                         f"nu0 rad^2 = {_fl(nr)}", _series(rr)))
    rv = B.necessity_suite("revolution")
    lam1, d, floor = rv.extra["lambda1"], rv.extra["d"], rv.extra["R^2/8"]
    slack = min(l / f for l, f in zip(lam1, floor))
    quad = all(r >= f for r, f in zip(rv.ratios, floor))
    ok = slack >= 1.05 and all(x >= 1 for x in d) and quad and rv.monotone
    exceeds = [R for R, r in zip(rv.values, rv.ratios) if r > B.DERIVED_CONSTANTS["C10"]]
    rows.append(CheckRow("necessity:revolution", ok,
                         f"lambda1 / (R^2/8) >= {slack:.2f}; lambda1 d^2 = {_fl(rv.ratios)}; "
                         f"exceeds C10 = 64 at R = {exceeds}", dict(_series(rv), slack=slack)))
    to = B.necessity_suite("torus")
    rows.append(CheckRow("necessity:torus", to.monotone,
                         f"min_k lambda_k d^2 / k^2 = {_fl(to.ratios)} stays positive as b -> 0",
                         _series(to)))
    bat.series = [db, rr, rv, to]
    return rows


def _fl(xs):
    return "[" + ", ".join(f"{x:.4g}" for x in xs) + "]"


def _series(s) -> dict:
    return {"family": s.family, "bound_id": s.bound_id, "parameter": s.parameter, "values": s.values,
            "ratios": s.ratios, "ratio_name": s.ratio_name, "extra": s.extra}


GROUPS = (
    (("oracle_fem",), oracle_fem),
    (("weyl",), weyl),
    (("ordering", "monotonicity"), ordering),
    (tuple(B.BOUND_IDS) + ("cheng_neumann_convex:corpus_max",), bounds_suite),
    (("scaling",), scaling),
    (("multiplicity",), multiplicity),
    (("covering",), covering),
    (("segment_mc", "poincare"), monte_carlo),
    (("phi_certificate",), phi),
    (("necessity",), necessity),
)

CHECK_NAMES = sorted({t.split(":")[0] for tags, _ in GROUPS for t in tags})


def normalize_filter(name: Optional[str]) -> Optional[str]:
    """Canonical filter tag; raises ``KeyError`` for unknown names."""
    if not name:
        return None
    base, _, rest = name.partition(":")
    if base in B.BOUND_IDS or base in B.ALIASES:
        base = B.canonical_id(base)
    elif base not in CHECK_NAMES:
        raise KeyError(f"unknown check or bound id '{name}'")
    return base + (":" + rest if rest else "")


def _matches(tag: str, filt: Optional[str]) -> bool:
    return filt is None or tag == filt or tag.startswith(filt + ":") or filt.startswith(tag + ":")


@dataclass
class Summary:
    rows: list
    constants: dict
    reports: list
    series: list

    @property
    def failures(self) -> list:
        return [r for r in self.rows if not r.passed and not r.informational]

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": len(self.rows), "failed": [r.tag for r in self.failures],
                "rows": [r.to_dict() for r in self.rows], "constants": self.constants}

    def table(self, seconds: bool = True) -> str:
        w = max([len(r.tag) for r in self.rows] + [5])
        lines = [f"{'check':<{w}}  status  " + ("  time  " if seconds else "") + "detail"]
        for r in self.rows:
            st = "PASS" if r.passed else ("INFO" if r.informational else "FAIL")
            t = f"{r.seconds:6.1f}s " if seconds else ""
            lines.append(f"{r.tag:<{w}}  {st:<6}  {t}{r.summary}")
        lines.append(f"{sum(r.passed for r in self.rows)}/{len(self.rows)} checks passed")
        return "\n".join(lines)


def mesh_file_rows(paths: Sequence) -> list:
    """Load external mesh files; each must solve and keep Neumann below Dirichlet."""
    from .eigen import solve_lowest
    from .fem import assemble
    from .mesh import read_mesh

    rows = []
    for p in paths:
        tag = f"mesh_file:{p}"
        try:
            mesh = read_mesh(p)
            lam = solve_lowest(assemble(mesh, "neumann"), 5).upper()
            nu = solve_lowest(assemble(mesh, "dirichlet"), 5).upper()
            ok = bool(np.all(lam <= nu))
            rows.append(CheckRow(tag, ok, f"{mesh.n_vertices} vertices, lambda_k <= nu_k for k <= 5",
                                 {"lambda": lam.tolist(), "nu": nu.tolist()}))
        except Exception as exc:       # any failure is a named check failure
            rows.append(CheckRow(tag, False, f"{type(exc).__name__}: {exc}", {"error": type(exc).__name__}))
    return rows


def verify_all(filter: Optional[str] = None, seed: int = 0, mesh_files: Sequence = (),
               progress: Optional[Callable] = None) -> Summary:
    """Run the battery (or the rows matching ``filter``)."""
    filt = normalize_filter(filter)
    bat = Battery(seed)
    bat.series = []
    rows = []
    for tags, fn in GROUPS:
        if not any(_matches(t, filt) for t in tags):
            continue
        got = [r for r in fn(bat) if _matches(r.tag, filt)]
        if progress:
            for r in got:
                progress(r)
        rows += got
    rows += mesh_file_rows(mesh_files)
    reports = [rep for r in rows for rep in r.reports]
    constants = bat.__dict__["store"].to_dict() if "store" in bat.__dict__ else {}
    return Summary(rows, constants, reports, bat.series)
