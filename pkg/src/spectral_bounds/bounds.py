"""Catalog of eigenvalue, counting and multiplicity inequalities.

Every check produces a :class:`BoundReport`.  Curvature enters only through
``kappa`` (always 0 here) and the injectivity radius through
``inj_inverse``; planar Euclidean domains carry ``inj_inverse = 0``.

Conservative evaluation: inequalities of the form ``measured <= bound`` use
raw Galerkin (upper) eigenvalues, ``measured >= bound`` use the extrapolated
value minus its error estimate, and counting functions count the lower
estimates (which can only increase the count).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .domain import GeometricInvariants
from .eigen import SpectrumSummary, cluster_gaps
from .oracle import J01

PAPER = "paper-explicit"
DERIVED = "derived-from-proof"
EMPIRICAL = "empirical"

J2 = J01 ** 2

# constants obtained from the proofs at kappa = 0, n = 2
DERIVED_CONSTANTS = {
    "C10": 2 ** 6,                      # 2^{n+4}
    "C11": 16 * J2,
    "C12": 64 * J2,
    "C13": 16 * J2,
    "C14": 16 * math.pi * J2,
    "C20": 1 / (2 * math.pi),           # from nu_k >= 2 pi k / vol
    "C22": 15 * J2 / (4 * math.pi),     # counting bound times Cheng-Yang at index max(k, 2)
}

# empirical constant names per bound id
EMPIRICAL_NAMES = {
    "gromov_counting": "C4",
    "neumann_volume": "C5",
    "buser79": "C7",
    "cm": "C9",
    "mbc_diameter": "C15",
    "mbc_volume": "C16",
    "mbn_volume": "C17",
    "mbd_diameter": "C18",
    "mbd_volume": "C19",
}

MULTIPLICITY_VARIANTS = ("mbc_diameter", "mbc_volume", "mbn_volume", "mbd_diameter", "mbd_volume",
                         "liyau_inradius", "planar_dirichlet")

BOUND_IDS = (
    "li_yau", "zhong_yang", "gromov_counting", "neumann_volume", "cheng_neumann_convex",
    "cheng_closed_explicit", "cm", "buser79", "cheng_dp", "buser_dp", "liyau_counting",
    "cheng_yang",
) + MULTIPLICITY_VARIANTS

ALIASES = {"ourcheng": "cheng_neumann_convex", "cheng": "cheng_closed_explicit"}


class BoundNotApplicable(ValueError):
    """The inequality's hypotheses fail for this domain or spectrum."""


class MissingConstant(KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


def canonical_id(bound_id: str) -> str:
    bid = ALIASES.get(bound_id, bound_id)
    if bid not in BOUND_IDS:
        raise KeyError(f"unknown bound id '{bound_id}'")
    return bid


@dataclass
class BoundReport:
    bound_id: str
    k_or_lambda: float
    bound_value: float
    measured_value: float
    satisfied: bool
    margin: float
    orientation: str                      # "upper": measured <= bound; "lower": measured >= bound
    constants_used: dict = field(default_factory=dict)   # name -> {"value", "tier"}
    domain_id: str = ""
    informational: bool = False
    note: str = ""

    @property
    def constant_tier(self) -> str:
        tiers = {c["tier"] for c in self.constants_used.values()}
        for t in (EMPIRICAL, DERIVED, PAPER):
            if t in tiers:
                return t
        return PAPER

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        for key in ("k_or_lambda", "bound_value", "measured_value", "margin"):
            v = float(out[key])
            out[key] = v if math.isfinite(v) else str(v)
        out["constant_tier"] = self.constant_tier
        return out

    CSV_FIELDS = ("bound_id", "domain_id", "k_or_lambda", "bound", "measured", "margin", "satisfied",
                  "constant_tier")

    def csv_row(self) -> list:
        return [self.bound_id, self.domain_id, _fmt(self.k_or_lambda), _fmt(self.bound_value),
                _fmt(self.measured_value), _fmt(self.margin), str(bool(self.satisfied)).lower(),
                self.constant_tier]


def _fmt(x) -> str:
    x = float(x)
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return f"{x:.10g}"


def _report(bound_id, k, bound, measured, orientation, constants, domain_id="", note="",
            informational=False) -> BoundReport:
    bound, measured = float(bound), float(measured)
    if orientation == "upper":
        ok = measured <= bound
        margin = bound / measured if measured > 0 else math.inf
    else:
        ok = measured >= bound
        margin = measured / bound if bound > 0 else math.inf
    return BoundReport(bound_id, float(k), bound, measured, bool(ok), margin, orientation,
                       constants, domain_id, informational, note)


# ---------------------------------------------------------------------------
# empirical constants


@dataclass
class EmpiricalConstant:
    bound_id: str
    name: str
    corpus: str
    value: float
    attained_on: str
    kind: str = "sup"
    at: float = 0.0                      # k or lambda where the extremum occurs

    def to_dict(self) -> dict:
        return dict(self.__dict__)


class ConstantStore:
    """Empirical constants keyed by bound id; write-once once frozen."""

    def __init__(self):
        self._data = {}
        self.frozen = False

    def record(self, const: EmpiricalConstant) -> None:
        if self.frozen:
            raise RuntimeError("constant store is read-only")
        self._data[const.bound_id] = const

    def freeze(self) -> None:
        self.frozen = True

    def get(self, bound_id: str) -> Optional[EmpiricalConstant]:
        return self._data.get(bound_id)

    def __contains__(self, bound_id):
        return bound_id in self._data

    def items(self):
        return sorted(self._data.items())

    def to_dict(self) -> dict:
        return {k: v.to_dict() for k, v in self.items()}


DEFAULT_STORE = ConstantStore()


def _constant(name, value, bound_id, store, tier=None) -> dict:
    """Resolve a constant: caller value, then derived default, then the store."""
    if value is not None:
        return {"value": float(value), "tier": tier or EMPIRICAL}
    if name in DERIVED_CONSTANTS:
        return {"value": DERIVED_CONSTANTS[name], "tier": DERIVED}
    store = DEFAULT_STORE if store is None else store
    entry = store.get(bound_id)
    if entry is None:
        raise MissingConstant(f"no value for {name} ({bound_id}); run estimate_constant or pass it")
    return {"value": entry.value, "tier": EMPIRICAL}


# ---------------------------------------------------------------------------
# helpers


def _require_convex(inv, bound_id):
    if not inv.convex:
        raise BoundNotApplicable(f"{bound_id} requires a convex domain; the surface of revolution "
                                 f"example shows the hypothesis cannot be dropped")


def _require_rad(inv, bound_id):
    if inv.rad is None or not inv.rad > 0:
        raise BoundNotApplicable(f"{bound_id} needs a smooth boundary (rad > 0); for domains with "
                                 f"corners apply it to a smooth subdomain and use domain monotonicity")


def _require_bc(spectrum, bcs, bound_id):
    if spectrum.bc not in bcs:
        raise BoundNotApplicable(f"{bound_id} applies to {'/'.join(bcs)} spectra, not {spectrum.bc}")


def _require_index(spectrum, k):
    if not 0 <= k <= spectrum.k_max:
        raise IndexError(f"index {k} outside the computed range 0..{spectrum.k_max}")


def counting_lower(spectrum: SpectrumSummary, lam: float) -> int:
    """``N(lambda)`` counted on the lower estimates; conservative for upper bounds on N."""
    from .eigen import InsufficientSpectrum

    if lam > spectrum.lower()[-1]:
        raise InsufficientSpectrum(lam, float(spectrum.lower()[-1]))
    return int(np.count_nonzero(spectrum.lower() < lam))


# ---------------------------------------------------------------------------
# lower bounds


def check_lambda1_lower(spectrum, inv: GeometricInvariants, variant: str = "li_yau",
                        domain_id: str = "") -> BoundReport:
    """``lambda_1 >= pi^2/(4 d^2)`` (Li-Yau) or ``pi^2/d^2`` (Zhong-Yang)."""
    if variant not in ("li_yau", "zhong_yang"):
        raise ValueError(f"unknown variant {variant}")
    _require_bc(spectrum, ("neumann", "closed"), variant)
    if spectrum.bc == "neumann":
        _require_convex(inv, variant)
    c = math.pi ** 2 / 4 if variant == "li_yau" else math.pi ** 2
    bound = c / inv.d ** 2
    return _report(variant, 1, bound, spectrum.lower()[1], "lower",
                   {"c": {"value": c, "tier": PAPER}}, domain_id)


def check_gromov_counting(spectrum, inv, lam: float, C4: float = None, store=None,
                          domain_id: str = "") -> BoundReport:
    """``N(lambda) <= max{C4 d^2 lambda, 1}`` for convex Neumann domains or closed surfaces."""
    _require_bc(spectrum, ("neumann", "closed"), "gromov_counting")
    if spectrum.bc == "neumann":
        _require_convex(inv, "gromov_counting")
    c = _constant("C4", C4, "gromov_counting", store)
    n = counting_lower(spectrum, lam)
    bound = max(c["value"] * inv.d ** 2 * lam, 1.0)
    return _report("gromov_counting", lam, bound, n, "upper", {"C4": c}, domain_id)


def check_neumann_volume(spectrum, inv, lam: float, C5: float = None, store=None,
                         domain_id: str = "") -> BoundReport:
    """``N(lambda) <= C5 vol (lambda + inj^-2 + rad^-2)`` for smooth convex Neumann domains."""
    _require_bc(spectrum, ("neumann",), "neumann_volume")
    _require_convex(inv, "neumann_volume")
    _require_rad(inv, "neumann_volume")
    c = _constant("C5", C5, "neumann_volume", store)
    n = counting_lower(spectrum, lam)
    bound = c["value"] * inv.vol * (lam + inv.inj_inverse ** 2 + inv.rad ** -2)
    return _report("neumann_volume", lam, bound, n, "upper", {"C5": c}, domain_id)


def check_dirichlet_counting_liyau(spectrum, inv, lam: float, C20: float = None,
                                   domain_id: str = "") -> BoundReport:
    """``N(lambda) <= C20 vol lambda`` for the Dirichlet problem on any planar domain."""
    _require_bc(spectrum, ("dirichlet",), "liyau_counting")
    c = _constant("C20", C20, "liyau_counting", None, tier=DERIVED)
    n = counting_lower(spectrum, lam)
    bound = c["value"] * inv.vol * lam
    return _report("liyau_counting", lam, bound, n, "upper", {"C20": c}, domain_id)


# ---------------------------------------------------------------------------
# upper bounds


def check_cheng_neumann_convex(spectrum, inv, k: int, C10: float = None, variant: str = "as_stated",
                               domain_id: str = "") -> BoundReport:
    """``lambda_k <= C10 (k/d)^2`` on convex Neumann domains.

    ``variant="shifted"`` measures ``lambda_{k-1}`` instead, the index that
    ``k`` disjointly supported test functions certify directly.
    """
    _require_bc(spectrum, ("neumann",), "cheng_neumann_convex")
    _require_convex(inv, "cheng_neumann_convex")
    if k < 1:
        raise ValueError("k must be at least 1")
    idx = k if variant == "as_stated" else k - 1
    _require_index(spectrum, idx)
    c = _constant("C10", C10, "cheng_neumann_convex", None, tier=DERIVED)
    bound = c["value"] * (k / inv.d) ** 2
    return _report("cheng_neumann_convex", k, bound, spectrum.upper()[idx], "upper", {"C10": c},
                   domain_id, note="" if variant == "as_stated" else "measured lambda_{k-1}")


def check_cheng_closed_explicit(spectrum, inv, k: int, domain_id: str = "") -> BoundReport:
    """Cheng's explicit bound ``lambda_k <= 4 k^2 j0^2 / d^2`` for closed surfaces, Ricci >= 0."""
    _require_bc(spectrum, ("closed",), "cheng_closed_explicit")
    _require_index(spectrum, k)
    c = 4 * J2
    bound = c * k ** 2 / inv.d ** 2
    return _report("cheng_closed_explicit", k, bound, spectrum.upper()[k], "upper",
                   {"4j0^2": {"value": c, "tier": PAPER}}, domain_id)


def check_buser_neumann(spectrum, inv, k: int, variant: str = "cm", C: float = None, store=None,
                        domain_id: str = "") -> BoundReport:
    """``lambda_k <= C (k / vol)`` (n = 2): Colbois-Maerten for Neumann domains (``cm``), Buser for
    closed surfaces (``buser79``)."""
    if variant not in ("cm", "buser79"):
        raise ValueError(f"unknown variant {variant}")
    _require_bc(spectrum, ("neumann",) if variant == "cm" else ("closed",), variant)
    _require_index(spectrum, k)
    name = EMPIRICAL_NAMES[variant]
    c = _constant(name, C, variant, store)
    bound = c["value"] * k / inv.vol
    return _report(variant, k, bound, spectrum.upper()[k], "upper", {name: c}, domain_id)


def check_dirichlet_upper(spectrum, inv, k: int, variant: str = "cheng_dp", constants: dict = None,
                          domain_id: str = "") -> BoundReport:
    """``nu_k <= C11 rad^-2 + C12 ((k+1)/d_bar)^2`` (``cheng_dp``) or
    ``nu_k <= C13 rad^-2 + C14 (k+1)/vol`` (``buser_dp``)."""
    if variant not in ("cheng_dp", "buser_dp"):
        raise ValueError(f"unknown variant {variant}")
    _require_bc(spectrum, ("dirichlet",), variant)
    _require_rad(inv, variant)
    _require_index(spectrum, k)
    constants = constants or {}
    a, b = ("C11", "C12") if variant == "cheng_dp" else ("C13", "C14")
    ca = _constant(a, constants.get(a), variant, None, tier=DERIVED)
    cb = _constant(b, constants.get(b), variant, None, tier=DERIVED)
    geo = ((k + 1) / inv.d_bar) ** 2 if variant == "cheng_dp" else (k + 1) / inv.vol
    bound = ca["value"] * (inv.kappa + inv.rad ** -2) + cb["value"] * geo
    return _report(variant, k, bound, spectrum.upper()[k], "upper", {a: ca, b: cb}, domain_id)


def check_cheng_yang(spectrum, k: int, domain_id: str = "") -> BoundReport:
    """``nu_k <= (n+3)/n nu_0 (k+1)^{2/n}`` for ``k >= n``; here ``2.5 nu_0 (k+1)``."""
    _require_bc(spectrum, ("dirichlet",), "cheng_yang")
    if k < 2:
        raise BoundNotApplicable("cheng_yang holds for k >= n = 2")
    _require_index(spectrum, k)
    c = 2.5
    bound = c * spectrum.lower()[0] * (k + 1)
    return _report("cheng_yang", k, bound, spectrum.upper()[k], "upper",
                   {"(n+3)/n": {"value": c, "tier": PAPER}}, domain_id)


# ---------------------------------------------------------------------------
# multiplicities


def _cluster_of(spectrum, k):
    for i, (start, size, _) in enumerate(spectrum.clusters):
        if start <= k < start + size:
            return i, start, size
    raise IndexError(k)


def multiplicity_uncertain(spectrum, k) -> bool:
    """True when the gaps around the cluster of ``k`` are within 3x the merge tolerance,
    or the cluster touches the end of the computed range."""
    i, start, size = _cluster_of(spectrum, k)
    if start + size > spectrum.k_max:
        return True
    if spectrum.rel_gap is None:
        return False
    gaps = cluster_gaps(spectrum)
    near = [gaps[i]] + ([gaps[i - 1]] if i > 0 else [])
    return min(near) <= 3 * spectrum.rel_gap


def _multiplicity_geometry(variant, spectrum, inv, k):
    """Scale-free factor multiplying the constant, and the constant's name."""
    n = 2
    if variant == "mbc_diameter":
        _require_bc(spectrum, ("closed", "neumann"), variant)
        if spectrum.bc == "neumann":
            _require_convex(inv, variant)
        return k ** n, "C15"
    if variant == "mbc_volume":
        _require_bc(spectrum, ("closed",), variant)
        return k + inv.vol * inv.inj_inverse ** n, "C16"
    if variant == "mbn_volume":
        _require_bc(spectrum, ("neumann",), variant)
        _require_convex(inv, variant)
        _require_rad(inv, variant)
        return k + inv.vol * (inv.inj_inverse ** n + inv.rad ** -n), "C17"
    if variant == "mbd_diameter":
        _require_bc(spectrum, ("dirichlet",), variant)
        _require_convex(inv, variant)
        _require_rad(inv, variant)
        return (inv.d / inv.rad) ** n + k ** n, "C18"
    if variant == "mbd_volume":
        _require_bc(spectrum, ("dirichlet",), variant)
        _require_convex(inv, variant)
        _require_rad(inv, variant)
        return k + 1 + inv.vol * (inv.inj_inverse ** n + inv.rad ** -n), "C19"
    if variant == "liyau_inradius":
        _require_bc(spectrum, ("dirichlet",), variant)
        if inv.inradius_rho is None:
            raise BoundNotApplicable("inradius unavailable")
        return inv.vol / inv.inradius_rho ** n * (k + 1), "C22"
    if variant == "planar_dirichlet":
        _require_bc(spectrum, ("dirichlet",), variant)
        return (2 * k + 1 if k >= 1 else 1), None
    raise ValueError(f"unknown multiplicity variant {variant}")


def check_multiplicity(spectrum, inv, k: int, variant: str, constant: float = None, store=None,
                       domain_id: str = "") -> BoundReport:
    """Cluster size ``m_k`` against the multiplicity bound ``variant``.

    ``planar_dirichlet`` is the known sharp-type planar bound ``m_k <= 2k + 1``
    (``m_0 = 1``).  For closed and Neumann variants ``k >= 1``.
    """
    if variant in ("mbc_diameter", "mbc_volume", "mbn_volume") and k < 1:
        raise ValueError(f"{variant} is stated for k >= 1")
    _require_index(spectrum, k)
    geo, name = _multiplicity_geometry(variant, spectrum, inv, k)
    if name is None:
        c = {"2k+1": {"value": 1.0, "tier": PAPER}}
        bound = geo
    else:
        cv = _constant(name, constant, variant, store)
        c = {name: cv}
        bound = cv["value"] * geo
    _, _, size = _cluster_of(spectrum, k)
    uncertain = multiplicity_uncertain(spectrum, k)
    return _report(variant, k, bound, size, "upper", c, domain_id,
                   note="multiplicity uncertain" if uncertain else "", informational=uncertain)


# ---------------------------------------------------------------------------
# constant estimation


@dataclass
class CorpusEntry:
    domain_id: str
    spectrum: SpectrumSummary
    inv: GeometricInvariants


def _as_entries(corpus) -> list:
    out = []
    for i, item in enumerate(corpus):
        if isinstance(item, CorpusEntry):
            out.append(item)
        elif len(item) == 3:
            out.append(CorpusEntry(*item))
        else:
            out.append(CorpusEntry(f"domain{i}", item[0], item[1]))
    return out


def _ratios(bound_id, e: CorpusEntry, k_range):
    """Yield (ratio, k_or_lambda) whose sup (or inf) is the tight constant."""
    s, inv = e.spectrum, e.inv
    up = s.upper()
    if bound_id in ("cheng_neumann_convex", "cheng_closed_explicit"):
        for k in k_range:
            if k <= s.k_max:
                yield up[k] * inv.d ** 2 / k ** 2, k
    elif bound_id in ("cm", "buser79"):
        for k in k_range:
            if k <= s.k_max:
                yield up[k] * inv.vol / k, k
    elif bound_id in ("li_yau", "zhong_yang"):
        yield s.lower()[1] * inv.d ** 2, 1
    elif bound_id in ("gromov_counting", "liyau_counting", "neumann_volume"):
        low = s.lower()
        # N jumps just above each eigenvalue; the ratio is largest there
        for lam in np.unique(low[1:]) * (1 + 1e-9):
            if lam > low[-1]:
                break
            n = int(np.count_nonzero(low < lam))
            if bound_id == "gromov_counting":
                if n > 1:
                    yield n / (inv.d ** 2 * lam), lam
            elif bound_id == "liyau_counting":
                yield n / (inv.vol * lam), lam
            else:
                yield n / (inv.vol * (lam + inv.inj_inverse ** 2 + inv.rad ** -2)), lam
    elif bound_id == "cheng_yang":
        for k in k_range:
            if 2 <= k <= s.k_max:
                yield up[k] / (s.lower()[0] * (k + 1)), k
    elif bound_id in ("cheng_dp", "buser_dp"):
        for k in [0] + list(k_range):
            if k <= s.k_max:
                geo = ((k + 1) / inv.d_bar) ** 2 if bound_id == "cheng_dp" else (k + 1) / inv.vol
                yield up[k] / (inv.rad ** -2 + geo), k
    elif bound_id in MULTIPLICITY_VARIANTS:
        lo = 0 if bound_id in ("mbd_diameter", "mbd_volume", "liyau_inradius", "planar_dirichlet") else 1
        for k in range(lo, s.k_max + 1):
            if multiplicity_uncertain(s, k):
                continue
            geo, _ = _multiplicity_geometry(bound_id, s, inv, k)
            yield s.multiplicity(k) / geo, k
    else:
        raise KeyError(bound_id)


def estimate_constant(bound_id: str, corpus: Sequence, k_range=range(1, 11), store: ConstantStore = None,
                      corpus_name: str = "corpus") -> EmpiricalConstant:
    """Tightest constant for ``bound_id`` over ``corpus``.

    For upper-bound inequalities this is the supremum of the scale-free ratio
    measured/geometry; for the Li-Yau/Zhong-Yang lower bounds it is the
    infimum of ``lambda_1 d^2``.  The result is recorded in ``store`` when
    one is given.
    """
    bid = canonical_id(bound_id)
    entries = _as_entries(corpus)
    if not entries:
        raise ValueError("corpus is empty")
    if len({e.inv.n for e in entries}) > 1:
        raise ValueError("corpus mixes dimensions")
    if any(e.inv.kappa != 0 for e in entries):
        raise ValueError("corpus must be flat (kappa = 0)")
    lower = bid in ("li_yau", "zhong_yang")
    best, where, at = (math.inf if lower else -math.inf), "", 0.0
    for e in entries:
        for ratio, kl in _ratios(bid, e, k_range):
            if (ratio < best) if lower else (ratio > best):
                best, where, at = float(ratio), e.domain_id, float(kl)
    if not math.isfinite(best):
        raise ValueError(f"no admissible data for {bid} in the corpus")
    # round outward so re-evaluating the bound on the attaining case is not lost to round-off
    best *= (1 - 1e-12) if lower else (1 + 1e-12)
    name = EMPIRICAL_NAMES.get(bid, {"cheng_neumann_convex": "C10", "cheng_closed_explicit": "C6",
                                     "cheng_dp": "C11=C12", "buser_dp": "C13=C14",
                                     "liyau_counting": "C20", "liyau_inradius": "C22"}.get(bid, bid))
    const = EmpiricalConstant(bid, name, corpus_name, best, where, "inf" if lower else "sup", at)
    if store is not None:
        store.record(const)
    return const


# ---------------------------------------------------------------------------
# necessity families


@dataclass
class NecessitySeries:
    family: str
    bound_id: str
    parameter: str
    values: list
    ratios: list
    ratio_name: str
    extra: dict = field(default_factory=dict)
    direction: str = "decreasing"

    @property
    def monotone(self) -> bool:
        r = np.asarray(self.ratios)
        if self.direction == "bounded_below":
            return bool(np.all(r > 0))
        return bool(np.all(np.diff(r) < 0) if self.direction == "decreasing" else np.all(np.diff(r) > 0))

    def rows(self) -> list:
        names = sorted(self.extra)
        out = [[self.parameter, self.ratio_name] + names]
        for i, v in enumerate(self.values):
            out.append([v, self.ratios[i]] + [self.extra[n][i] for n in names])
        return out


FAMILIES = ("dumbbell", "rounded_rectangle", "revolution", "torus")

_FAMILY_BOUND = {"dumbbell": "li_yau", "rounded_rectangle": "cheng_dp",
                 "revolution": "cheng_neumann_convex", "torus": "cheng_closed_explicit"}


def necessity_suite(family: str, bound_id: str = None, values: Sequence = None,
                    resolution: float = 0.01) -> NecessitySeries:
    """Run a parametric family that shows a hypothesis of an inequality cannot be dropped.

    ``dumbbell`` (neck width -> 0): ``lambda_1 d^2`` decreases to 0, so convexity is needed
    for the lower bounds.  ``rounded_rectangle`` (width -> 0): ``nu_0 d_bar^2`` blows up
    while ``nu_0 rad^2`` stays bounded.  ``revolution`` (R -> infinity): ``lambda_1 d^2``
    grows at least like ``R^2/8`` with ``d >= 1``.  ``torus`` (b -> 0): the minimum of
    ``lambda_k d^2 / k^2`` over a k-range growing like ``1/b`` stays bounded below.
    """
    from .domain import DomainSpec, generate_domain
    from .oracle import RevolutionSurface, revolution_spectrum, torus_spectrum
    from .pipeline import domain_invariants, fem_spectrum

    if family not in FAMILIES:
        raise ValueError(f"unknown family '{family}'; expected one of {FAMILIES}")
    bound_id = canonical_id(bound_id) if bound_id else _FAMILY_BOUND[family]

    if family == "dumbbell":
        values = list(values or (0.2, 0.1, 0.05))
        lam1, d = [], []
        for w in values:
            spec = DomainSpec("dumbbell", {"ball_radius": 1.0, "neck_width": w, "neck_length": 1.0})
            inv = domain_invariants(spec, resolution)
            s = fem_spectrum(spec, "neumann", min(0.1, w / 2), 2)
            lam1.append(float(s.best()[1]))
            d.append(inv.d)
        ratios = [l * dd ** 2 for l, dd in zip(lam1, d)]
        return NecessitySeries(family, bound_id, "neck_width", values, ratios, "lambda1*d^2",
                               {"lambda1": lam1, "d": d}, "decreasing")

    if family == "rounded_rectangle":
        values = list(values or (0.4, 0.2, 0.1))
        nu0, dbar, rad = [], [], []
        for w in values:
            spec = DomainSpec("rounded_rectangle", {"length": 1.0, "width": w, "corner_radius": w / 2}, True)
            inv = domain_invariants(spec, min(resolution, w / 20))
            s = fem_spectrum(spec, "dirichlet", w / 8, 2)
            nu0.append(float(s.best()[0]))
            dbar.append(inv.d_bar)
            rad.append(inv.rad)
        ratios = [v * db ** 2 for v, db in zip(nu0, dbar)]
        return NecessitySeries(family, bound_id, "width", values, ratios, "nu0*d_bar^2",
                               {"nu0": nu0, "d_bar": dbar, "rad": rad,
                                "nu0*rad^2": [v * r ** 2 for v, r in zip(nu0, rad)]}, "increasing")

    if family == "revolution":
        values = list(values or (4.0, 8.0, 16.0))
        lam1, d, floor = [], [], []
        for R in values:
            surf = RevolutionSurface(float(R))
            s = revolution_spectrum(surf, 8, 6)
            lam1.append(float(s.lower()[1]))
            d.append(surf.extrinsic_diameter)
            floor.append(R * R / 8)
        ratios = [l * dd ** 2 for l, dd in zip(lam1, d)]
        return NecessitySeries(family, bound_id, "R", values, ratios, "lambda1*d^2",
                               {"lambda1": lam1, "d": d, "R^2/8": floor}, "increasing")

    values = list(values or (0.1, 0.05, 0.02, 0.01))
    mins, kmax = [], []
    for b in values:
        a = 1.0
        K = int(round(1 / b))
        s = torus_spectrum(a, b, K + 1)
        d = math.hypot(a, b) / 2
        r = [s.eigenvalues[k] * d ** 2 / k ** 2 for k in range(1, K + 1)]
        mins.append(float(min(r)))
        kmax.append(K)
    return NecessitySeries(family, bound_id, "b", values, mins, "min_k lambda_k d^2/k^2",
                           {"k_max": kmax}, "bounded_below")
