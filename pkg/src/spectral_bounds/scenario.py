"""Scenario files: domains, boundary conditions and bound suites run end to end."""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional

from . import bounds as B
from .battery import domain_reports, estimate_store
from .domain import DomainError, DomainSpec, generate_domain
from .oracle import RevolutionSurface, revolution_spectrum, torus_spectrum
from .pipeline import domain_invariants, fem_spectrum
from .reports import bound_csv, write_csv, write_dat, write_json

FIELDS = {"name", "domains", "bc", "h", "k_max", "bounds", "corpus", "necessity", "output", "seed",
          "resolution"}
CORPUS_MODES = ("scenario", "builtin", "none")
JOBS_ENV = "SPECTRAL_BOUNDS_JOBS"


class ScenarioError(ValueError):
    """Schema violation in a scenario file."""


@dataclass
class Scenario:
    name: str
    domains: list                      # [(id, DomainSpec)]
    bc: list = field(default_factory=lambda: ["neumann", "dirichlet"])
    h: list = field(default_factory=lambda: [0.05])
    k_max: int = 10
    bounds: list = field(default_factory=lambda: list(B.BOUND_IDS))
    corpus: str = "scenario"
    necessity: list = field(default_factory=list)     # [(family, values or None)]
    output: str = ""
    seed: int = 0
    resolution: float = 0.01

    @classmethod
    def from_dict(cls, data: dict, default_name: str = "scenario") -> "Scenario":
        if not isinstance(data, dict):
            raise ScenarioError("scenario must be a JSON object")
        unknown = set(data) - FIELDS
        if unknown:
            raise ScenarioError(f"unknown scenario fields: {sorted(unknown)}")
        name = str(data.get("name", default_name))
        domains, seen = [], set()
        for i, d in enumerate(data.get("domains", [])):
            if not isinstance(d, dict):
                raise ScenarioError(f"domain #{i} is not an object")
            did = str(d.get("id", f"domain{i}"))
            if did in seen:
                raise ScenarioError(f"duplicate domain id '{did}'")
            seen.add(did)
            try:
                spec = DomainSpec.from_dict(d)
                generate_domain(spec)
            except (DomainError, KeyError, TypeError, ValueError) as exc:
                raise ScenarioError(f"domain '{did}': {exc}") from None
            domains.append((did, spec))
        bcs = list(data.get("bc", ["neumann", "dirichlet"]))
        if not bcs or any(b not in ("neumann", "dirichlet") for b in bcs):
            raise ScenarioError(f"bc must be a non-empty list of 'neumann'/'dirichlet', got {bcs}")
        hs = data.get("h", [0.05])
        hs = [hs] if isinstance(hs, (int, float)) else list(hs)
        if not hs or not all(isinstance(h, (int, float)) and h > 0 for h in hs):
            raise ScenarioError(f"h schedule must hold positive numbers, got {hs}")
        k_max = data.get("k_max", 10)
        if not isinstance(k_max, int) or k_max < 1:
            raise ScenarioError("k_max must be a positive integer")
        sel = data.get("bounds", "all")
        if sel == "all":
            sel = list(B.BOUND_IDS)
        try:
            sel = [B.canonical_id(b) for b in sel]
        except (KeyError, TypeError) as exc:
            raise ScenarioError(exc.args[0] if exc.args else str(exc)) from None
        corpus = data.get("corpus", "scenario")
        if corpus not in CORPUS_MODES:
            raise ScenarioError(f"corpus must be one of {CORPUS_MODES}")
        nec = []
        for item in data.get("necessity", []):
            fam = item.get("family") if isinstance(item, dict) else item
            if fam not in B.FAMILIES:
                raise ScenarioError(f"unknown necessity family '{fam}'")
            nec.append((fam, item.get("values") if isinstance(item, dict) else None))
        seed = data.get("seed", 0)
        if not isinstance(seed, int):
            raise ScenarioError("seed must be an integer")
        res = data.get("resolution", 0.01)
        if not isinstance(res, (int, float)) or res <= 0:
            raise ScenarioError("resolution must be positive")
        return cls(name, domains, bcs, sorted((float(h) for h in hs), reverse=True), k_max, sel, corpus,
                   nec, str(data.get("output", "")), seed, float(res))


def bundled_scenarios() -> list:
    root = resources.files("spectral_bounds") / "scenarios"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".json"))


def load_scenario(path) -> Scenario:
    """Read a scenario file; bare names fall back to the bundled scenarios."""
    p = Path(path)
    if p.exists():
        text = p.read_text()
    else:
        name = p.name if p.name.endswith(".json") else p.name + ".json"
        if name not in bundled_scenarios():
            raise ScenarioError(f"scenario file '{path}' not found (bundled: {bundled_scenarios()})")
        text = (resources.files("spectral_bounds") / "scenarios" / name).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc})") from None
    return Scenario.from_dict(data, p.stem)


def resolve_jobs(jobs: Optional[int]) -> int:
    env = os.environ.get(JOBS_ENV)
    if env:
        try:
            jobs = int(env)
        except ValueError:
            raise ScenarioError(f"{JOBS_ENV} must be an integer, got '{env}'") from None
    return max(1, int(jobs or 1))


def domain_spectra(spec: DomainSpec, bcs, hs, k_max, seed, resolution):
    """Spectra for every (bc, h) plus invariants; model surfaces use their oracles."""
    inv = domain_invariants(spec, resolution)
    out = {}
    if spec.kind == "torus":
        p = spec.parameters
        out[("closed", None)] = torus_spectrum(float(p["a"]), float(p["b"]), k_max + 1)
    elif spec.kind == "revolution":
        out[("neumann", None)] = revolution_spectrum(RevolutionSurface(float(spec.parameters["R"])), 8, k_max + 1)
    else:
        for bc in bcs:
            for h in hs:
                s = fem_spectrum(spec, bc, h, k_max, seed=seed)
                out[(bc, h)] = replace(s, eigenvectors=None, problem=None)
    return out, inv


def _work(args):
    did, spec, bcs, hs, k_max, seed, res = args
    try:
        return did, domain_spectra(spec, bcs, hs, k_max, seed, res), None
    except Exception as exc:             # reported with the domain id for context
        return did, None, f"{type(exc).__name__}: {exc}"


@dataclass
class RunResult:
    summary: dict
    reports: list
    failures: list

    @property
    def exit_code(self) -> int:
        return 0 if not self.failures else 1


def run(scenario: Scenario, out_dir=None, jobs: int = 1, seed: Optional[int] = None) -> RunResult:
    """Run a scenario and write its report bundle.

    Files (relative to ``out_dir``): ``spectra/<id>/<bc>_h<h>.json``,
    ``invariants/<id>.json``, ``bounds.csv``, ``necessity_<family>.csv``
    (plus a ``.dat`` copy) and ``summary.json``.
    """
    seed = scenario.seed if seed is None else seed
    out = Path(out_dir or scenario.output or Path("reports") / scenario.name)
    jobs = resolve_jobs(jobs)
    tasks = [(did, spec, scenario.bc, scenario.h, scenario.k_max, seed, scenario.resolution)
             for did, spec in scenario.domains]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_work, tasks))
    else:
        results = [_work(t) for t in tasks]
    results.sort(key=lambda r: r[0])
    files, failures = [], []
    entries = []
    for did, got, err in results:
        if err:
            failures.append({"check": f"domain:{did}", "error": err})
            continue
        spectra, inv = got
        files.append(write_json(out / "invariants" / f"{did}.json", inv))
        finest = {}
        for (bc, h), s in sorted(spectra.items(), key=lambda kv: (kv[0][0], -(kv[0][1] or 0))):
            tag = f"{bc}_h{h:g}" if h is not None else bc
            files.append(write_json(out / "spectra" / did / f"{tag}.json", s.to_dict()))
            finest[bc] = s
        for bc, s in sorted(finest.items()):
            entries.append(B.CorpusEntry(did, s, inv))

    if scenario.corpus == "scenario":
        store = estimate_store(entries, scenario.name, bound_ids=scenario.bounds)
    elif scenario.corpus == "builtin":
        from .battery import Battery

        store = Battery(seed).store
    else:
        store = B.ConstantStore()
    reports, skipped = [], {}
    for e in entries:
        reports += domain_reports(e.domain_id, e.spectrum, e.inv, store, scenario.bounds, skipped=skipped)
    (out / "bounds.csv").parent.mkdir(parents=True, exist_ok=True)
    (out / "bounds.csv").write_text(bound_csv(reports))
    files.append(out / "bounds.csv")
    for r in reports:
        if not r.satisfied and not r.informational:
            failures.append({"check": r.bound_id, "report": r.to_dict()})

    series = {}
    for fam, values in scenario.necessity:
        s = B.necessity_suite(fam, values=values, resolution=scenario.resolution)
        rows = s.rows()
        files.append(write_csv(out / f"necessity_{fam}.csv", rows[0], rows[1:]))
        files.append(write_dat(out / f"necessity_{fam}.dat", rows[0], rows[1:]))
        series[fam] = {"parameter": s.parameter, "values": s.values, "ratio": s.ratio_name,
                       "ratios": s.ratios, "direction": s.direction, "monotone": s.monotone}
        if not s.monotone:
            failures.append({"check": f"necessity:{fam}", "series": series[fam]})

    n_info = sum(r.informational for r in reports)
    n_fail = sum(not r.satisfied and not r.informational for r in reports)
    summary = {
        "scenario": scenario.name,
        "domains": [did for did, _, _ in results],
        "checks": {"total": len(reports) + len(series), "informational": n_info,
                   "failed": n_fail + sum(not v["monotone"] for v in series.values()),
                   "passed": len(reports) - n_info - n_fail + sum(v["monotone"] for v in series.values())},
        "skipped": {k: v for k, v in sorted(skipped.items())},
        "constants": store.to_dict(),
        "necessity": series,
        "failures": failures,
        "files": sorted(str(Path(f).relative_to(out)) for f in files) + ["summary.json"],
    }
    write_json(out / "summary.json", summary)
    return RunResult(summary, reports, failures)
