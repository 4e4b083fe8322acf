"""Command line interface: ``spectral-bounds <subcommand> ...``.

Exit codes: 0 all checks pass, 1 a check failed, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bounds as B
from .domain import DomainError, DomainSpec, generate_domain
from .reports import bound_csv, clean, dumps, write_csv, write_dat, write_json

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _load_domain(path) -> DomainSpec:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"domain file '{path}' not found") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from None
    spec = DomainSpec.from_dict(data)
    generate_domain(spec)
    return spec


def _emit(text: str, out, name: str) -> None:
    if out:
        p = Path(out) / name
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
        print(f"wrote {p}", file=sys.stderr)
    else:
        sys.stdout.write(text)


def _spectrum(spec: DomainSpec, bc: str, h: float, k_max: int, seed: int, richardson: bool = True):
    from .oracle import RevolutionSurface, revolution_spectrum, torus_spectrum
    from .pipeline import fem_spectrum

    if spec.kind == "torus":
        return torus_spectrum(float(spec.parameters["a"]), float(spec.parameters["b"]), k_max + 1)
    if spec.kind == "revolution":
        return revolution_spectrum(RevolutionSurface(float(spec.parameters["R"])), 8, k_max + 1)
    return fem_spectrum(spec, bc, h, k_max, richardson=richardson, seed=seed)


# ---------------------------------------------------------------------------
# subcommands


def cmd_spectrum(args) -> int:
    if args.mesh:
        from .eigen import solve_lowest
        from .fem import assemble
        from .mesh import read_mesh

        s = solve_lowest(assemble(read_mesh(args.mesh), args.bc), args.kmax, seed=args.seed)
    else:
        s = _spectrum(_load_domain(args.domain), args.bc, args.h, args.kmax, args.seed, not args.no_richardson)
    _emit(dumps(s.to_dict()), args.out, f"spectrum_{s.bc}.json")
    return EXIT_OK


def cmd_invariants(args) -> int:
    from .pipeline import domain_invariants

    inv = domain_invariants(_load_domain(args.domain), args.resolution)
    _emit(dumps(inv), args.out, "invariants.json")
    return EXIT_OK


def _store_from(args):
    if args.constants:
        store = B.ConstantStore()
        try:
            data = json.loads(Path(args.constants).read_text())
        except (FileNotFoundError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read constants file: {exc}") from None
        for bid, c in data.items():
            store.record(B.EmpiricalConstant(**c))
        store.freeze()
        return store
    if args.corpus == "builtin":
        from .battery import Battery

        return Battery(args.seed).store
    return B.ConstantStore()


def cmd_bounds(args) -> int:
    from .battery import domain_reports
    from .pipeline import domain_invariants

    spec = _load_domain(args.domain)
    sel = [B.canonical_id(args.filter)] if args.filter else None
    s = _spectrum(spec, args.bc, args.h, args.kmax, args.seed)
    inv = domain_invariants(spec, args.resolution)
    skipped = {}
    reps = domain_reports(Path(args.domain).stem, s, inv, _store_from(args), sel, skipped=skipped)
    for bid, why in sorted(skipped.items()):
        print(f"skipped {bid}: {why[0].split(': ', 1)[-1]}", file=sys.stderr)
    _emit(bound_csv(reps), args.out, "bounds.csv")
    bad = [r for r in reps if not r.satisfied and not r.informational]
    return EXIT_FAIL if bad else EXIT_OK


def cmd_covering(args) -> int:
    from .covering import cardinality_bound, greedy_packing, overlap_bound, packing_radius
    from .pipeline import domain_invariants

    spec = _load_domain(args.domain)
    dom = generate_domain(spec)
    if not hasattr(dom, "segments"):
        raise UsageError("covering needs a planar domain")
    d = domain_invariants(spec, args.resolution).d
    packings, ok = [], True
    for f in (2, 4, 8):
        p = greedy_packing(dom, d / f)
        row = {"rho": d / f, "cardinality": p.cardinality, "cardinality_bound": cardinality_bound(d, d / f),
               "overlap_max": p.overlap_max, "overlap_bound": overlap_bound(d / f),
               "min_separation": p.min_separation, "covering_radius": p.covering_radius,
               "centers": p.centers}
        ok &= p.cardinality <= row["cardinality_bound"] and p.overlap_max <= row["overlap_bound"]
        packings.append(row)
    radii = []
    for k in range(1, args.kmax + 1):
        pr = packing_radius(dom, k, seed=args.seed)
        ok &= pr.rho_k >= d / k * (1 - 1e-9)
        radii.append(pr.to_dict())
    report = {"d": d, "packings": packings, "packing_radius": radii, "passed": bool(ok)}
    _emit(dumps(report), args.out, "covering.json")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_sweep(args) -> int:
    values = None
    if args.values:
        try:
            values = [float(v) for v in args.values.split(",")]
        except ValueError:
            raise UsageError(f"--values must be a comma separated list of numbers") from None
    s = B.necessity_suite(args.family, values=values, resolution=args.resolution)
    rows = s.rows()
    if args.out:
        write_csv(Path(args.out) / f"necessity_{s.family}.csv", rows[0], rows[1:])
        write_dat(Path(args.out) / f"necessity_{s.family}.dat", rows[0], rows[1:])
        print(f"wrote {Path(args.out) / f'necessity_{s.family}.csv'}", file=sys.stderr)
    else:
        from .reports import csv_text

        sys.stdout.write(csv_text(rows[0], rows[1:]))
    print(f"{s.ratio_name} {s.direction}: {'yes' if s.monotone else 'NO'}", file=sys.stderr)
    return EXIT_OK if s.monotone else EXIT_FAIL


def cmd_verify_all(args) -> int:
    from .battery import normalize_filter, verify_all

    try:
        normalize_filter(args.filter)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None

    def progress(row):
        if not args.quiet:
            print(f"  {'ok  ' if row.passed else 'FAIL'} {row.tag}", file=sys.stderr, flush=True)

    summ = verify_all(args.filter, seed=args.seed, mesh_files=args.mesh or (), progress=progress)
    print(summ.table(seconds=not args.no_times))
    for r in summ.failures:
        print(f"\nFAILED {r.tag}: {r.summary}")
        for rep in r.detail.get("failed", [])[:5]:
            print("  " + json.dumps(clean(rep), sort_keys=True))
    if args.out:
        out = Path(args.out)
        write_json(out / "verify_all.json", summ)
        write_json(out / "constants.json", summ.constants)
        (out / "bounds.csv").write_text(bound_csv(summ.reports))
        for s in summ.series:
            rows = s.rows()
            write_csv(out / f"necessity_{s.family}.csv", rows[0], rows[1:])
            write_dat(out / f"necessity_{s.family}.dat", rows[0], rows[1:])
    return EXIT_OK if summ.passed else EXIT_FAIL


def cmd_run(args) -> int:
    from .scenario import load_scenario, run

    scen = load_scenario(args.scenario)
    res = run(scen, args.out, jobs=args.jobs, seed=args.seed)
    c = res.summary["checks"]
    print(f"{scen.name}: {c['passed']} passed, {c['failed']} failed, {c['informational']} informational")
    for f in res.failures[:20]:
        print("FAILED " + json.dumps(clean(f), sort_keys=True))
    return res.exit_code


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spectral-bounds",
                                description="Laplace spectra, geometric invariants and eigenvalue inequalities.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, domain=True):
        if domain:
            sp.add_argument("--domain", required=True, help="domain spec JSON file")
        sp.add_argument("--out", help="output directory (default: stdout)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--jobs", type=int, default=1, help="parallel workers (env SPECTRAL_BOUNDS_JOBS wins)")

    def fem_args(sp):
        sp.add_argument("--bc", choices=("dirichlet", "neumann"), default="neumann")
        sp.add_argument("--h", type=float, default=0.05, help="coarse mesh size (solved at h and h/2)")
        sp.add_argument("--kmax", type=int, default=10)

    sp = sub.add_parser("spectrum", help="lowest eigenvalues of a domain or mesh file")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--domain", help="domain spec JSON file")
    g.add_argument("--mesh", help="mesh file (no extrapolation)")
    common(sp, domain=False)
    fem_args(sp)
    sp.add_argument("--no-richardson", action="store_true")
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("invariants", help="diameter, intrinsic diameter, inradius, rad, volume")
    common(sp)
    sp.add_argument("--resolution", type=float, default=0.01)
    sp.set_defaults(func=cmd_invariants)

    sp = sub.add_parser("bounds", help="all applicable bound reports for one domain (CSV)")
    common(sp)
    fem_args(sp)
    sp.add_argument("--filter", help="restrict to one bound id")
    sp.add_argument("--resolution", type=float, default=0.01)
    sp.add_argument("--constants", help="empirical constants JSON (as written by verify-all)")
    sp.add_argument("--corpus", choices=("none", "builtin"), default="none",
                    help="estimate empirical constants on the built-in corpus")
    sp.set_defaults(func=cmd_bounds)

    sp = sub.add_parser("covering", help="greedy packings and packing radii")
    common(sp)
    sp.add_argument("--kmax", type=int, default=10)
    sp.add_argument("--resolution", type=float, default=0.01)
    sp.set_defaults(func=cmd_covering)

    sp = sub.add_parser("sweep", help="run a necessity family")
    common(sp, domain=False)
    sp.add_argument("--family", choices=B.FAMILIES, required=True)
    sp.add_argument("--values", help="comma separated parameter values")
    sp.add_argument("--resolution", type=float, default=0.01)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("verify-all", help="run the built-in verification battery")
    common(sp, domain=False)
    sp.add_argument("--filter", help="bound id or check name (e.g. ourcheng, covering, necessity:torus)")
    sp.add_argument("--mesh", action="append", help="extra mesh file to load and check (repeatable)")
    sp.add_argument("--quiet", action="store_true")
    sp.add_argument("--no-times", action="store_true", help="omit timings from the table")
    sp.set_defaults(func=cmd_verify_all)

    sp = sub.add_parser("run", help="run a scenario file (or a bundled scenario name)")
    sp.add_argument("scenario")
    sp.add_argument("--out")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> int:
    from .eigen import EigenSolverError, InsufficientSpectrum
    from .mesh import MeshError
    from .oracle import OracleError
    from .scenario import ScenarioError

    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ScenarioError, DomainError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except (EigenSolverError, OracleError, MeshError, InsufficientSpectrum, B.BoundNotApplicable) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
