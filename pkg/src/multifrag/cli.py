"""Command-line experiment driver.

Subcommands parse a model file (JSON), run simulations or spectral
computations, and emit machine-readable CSV/JSON.  Identical inputs and
seed produce byte-identical outputs; the seed comes from --seed or the
MULTIFRAG_SEED environment variable, never from the clock.

Exit codes: 0 ok, 2 parse/usage, 3 model validation, 4 numeric failure,
5 resource cap.
"""

import argparse
import csv
import json
import math
import os
import sys
from fractions import Fraction

import numpy as np

from . import asymptotics, measures, simulate, spectral
from .errors import (
    DistinctErosionCoefficients,
    GroundSizeTooSmall,
    InvalidWindow,
    MaximumAtBracketEdge,
    MultifragError,
    NoConvergence,
    NormTooLarge,
    NotConservative,
    NotIrreducible,
    NotUnimodal,
    ParseError,
    ResourceCapExceeded,
    SpecValidationError,
    StencilOutOfDomain,
    ThetaOutOfDomain,
)
from .streams import replica_stream

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_NUMERIC = 4
EXIT_RESOURCE = 5

_VALIDATION_ERRORS = (SpecValidationError, NotConservative,
                      DistinctErosionCoefficients, GroundSizeTooSmall)
_NUMERIC_ERRORS = (NoConvergence, NormTooLarge, NotIrreducible, NotUnimodal,
                   MaximumAtBracketEdge, StencilOutOfDomain, ThetaOutOfDomain,
                   InvalidWindow)


# --- spec files ----------------------------------------------------------------

def _number(value, where):
    """Accept decimals or exact 'p/q' fraction strings."""
    if isinstance(value, str):
        try:
            return float(Fraction(value))
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"{where}: bad fraction {value!r}") from exc
    if isinstance(value, (int, float)):
        return float(value)
    raise ParseError(f"{where}: expected a number, got {value!r}")


def parse_spec_file(path: str) -> measures.FragmentationSpec:
    """Read and validate a fragmentation model description."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: top level must be an object")
    for key in ("types", "dislocation"):
        if key not in doc:
            raise ParseError(f"{path}: missing key {key!r}")
    k = doc["types"]
    if not isinstance(k, int) or k < 1:
        raise ParseError(f"{path}: 'types' must be a positive integer")
    erosion = doc.get("erosion", [0.0] * k)
    if not isinstance(erosion, list) or len(erosion) != k:
        raise ParseError(f"{path}: 'erosion' must list {k} coefficients")
    erosion = [_number(c, f"erosion[{i}]") for i, c in enumerate(erosion)]
    if not isinstance(doc["dislocation"], dict):
        raise ParseError(f"{path}: 'dislocation' must map types to atom lists")
    dislocation = {}
    for key, atoms in doc["dislocation"].items():
        try:
            i = int(key)
        except ValueError:
            raise ParseError(f"{path}: dislocation key {key!r} is not a type")
        if not 1 <= i <= k:
            raise ParseError(f"{path}: dislocation type {i} outside 1..{k}")
        parsed = []
        for n, atom in enumerate(atoms):
            where = f"dislocation[{key}][{n}]"
            if not isinstance(atom, dict) or "rate" not in atom \
                    or "fragments" not in atom:
                raise ParseError(f"{path}: {where} needs 'rate' and 'fragments'")
            rate = _number(atom["rate"], f"{where}.rate")
            pairs = []
            for pn, pair in enumerate(atom["fragments"]):
                if not isinstance(pair, list) or len(pair) != 2:
                    raise ParseError(
                        f"{path}: {where}.fragments[{pn}] must be [mass, type]")
                mass = _number(pair[0], f"{where}.fragments[{pn}]")
                pairs.append((mass, int(pair[1])))
            parsed.append((rate, pairs))
        dislocation[i] = parsed
    return measures.fragmentation_spec(
        k, dislocation, erosion=erosion, conservative=doc.get("conservative"))


def spec_to_document(spec: measures.FragmentationSpec) -> dict:
    """Inverse of parse_spec_file on canonical forms."""
    return {
        "types": spec.k,
        "erosion": list(spec.erosion),
        "conservative": spec.conservative,
        "dislocation": {
            str(i): [{"rate": atom.weight,
                      "fragments": [[m, t] for m, t in atom.outcome.parts]}
                     for atom in spec.atoms(i)]
            for i in range(1, spec.k + 1)
        },
    }


# --- shared helpers -------------------------------------------------------------

def _resolve_seed(args) -> int:
    if getattr(args, "replicas", 1) < 1:
        raise ParseError("--replicas must be at least 1")
    if getattr(args, "t", 1.0) <= 0:
        raise ParseError("--t must be positive")
    if args.seed is not None:
        return args.seed
    env = os.environ.get("MULTIFRAG_SEED")
    if env is None:
        raise ParseError("no --seed given and MULTIFRAG_SEED is unset")
    try:
        return int(env)
    except ValueError:
        raise ParseError(f"MULTIFRAG_SEED={env!r} is not an integer")


def _open_out(args):
    if args.out in (None, "-"):
        return sys.stdout, False
    return open(args.out, "w", newline=""), True


def _write_rows(args, header, rows):
    fh, close = _open_out(args)
    try:
        if args.format == "json":
            doc = [dict(zip(header, row)) for row in rows]
            json.dump(doc, fh, sort_keys=True)
            fh.write("\n")
        else:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([repr(v) if isinstance(v, float) else v
                                 for v in row])
    finally:
        if close:
            fh.close()


def _write_json(args, doc):
    fh, close = _open_out(args)
    try:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")
    finally:
        if close:
            fh.close()


def _parse_times(text, fallback):
    if not text:
        return [fallback]
    return [float(v) for v in text.split(",")]


def _theta_values(args, spec):
    if args.theta_grid:
        try:
            lo, hi, step = (float(v) for v in args.theta_grid.split(":"))
        except ValueError:
            raise ParseError("--theta-grid expects lo:hi:step")
        if step <= 0 or hi < lo:
            raise ParseError("--theta-grid expects lo <= hi and step > 0")
        n = int(math.floor((hi - lo) / step + 1e-9)) + 1
        values = [lo + i * step for i in range(n)]
    elif args.theta is not None:
        values = [float(v) for v in args.theta.split(",")]
    else:
        values = [0.0, 0.5, 1.0, 2.0]
    floor = measures.theta_lower(spec)
    for th in values:
        if th <= floor:
            raise ThetaOutOfDomain(f"theta = {th} at or below {floor}")
    return values


# --- subcommands ----------------------------------------------------------------

def cmd_validate(args):
    try:
        spec = parse_spec_file(args.spec)
    except SpecValidationError as exc:
        _write_json(args, {"valid": False,
                           "violations": [{"code": c, "message": m}
                                          for c, m in exc.violations]})
        raise
    _write_json(args, {
        "valid": True,
        "types": spec.k,
        "conservative": spec.conservative,
        "erosion": list(spec.erosion),
        "total_rates": [spec.total_rate(i) for i in range(1, spec.k + 1)],
    })
    return EXIT_OK


def cmd_simulate(args):
    spec = parse_spec_file(args.spec)
    seed = _resolve_seed(args)
    times = sorted(_parse_times(args.times, args.t))
    rows = []
    for r in range(args.replicas):
        path = simulate.simulate_mass_fragmentation(
            spec, max(times), replica_stream(seed, r),
            initial_type=args.initial_type, mass_floor=args.mass_floor,
            max_fragments=args.max_fragments)
        for t in times:
            snap = path.snapshot(t)
            order = np.argsort(-snap.masses, kind="stable")
            for n in order:
                rows.append((r, t, int(n), float(snap.masses[n]),
                             int(snap.types[n]), int(snap.frozen[n])))
    _write_rows(args, ["replica", "time", "fragment_id", "mass", "type",
                       "frozen_flag"], rows)
    return EXIT_OK


def cmd_partition(args):
    spec = parse_spec_file(args.spec)
    seed = _resolve_seed(args)
    times = sorted(_parse_times(args.times, args.t))
    rows = []
    for r in range(args.replicas):
        path = simulate.simulate_partition_fragmentation(
            spec, args.n, max(times), replica_stream(seed, r),
            initial_type=args.initial_type)
        for t in times:
            state = path.at(t)
            for idx, (elems, typ) in enumerate(state.blocks):
                rows.append((r, t, idx, "|".join(str(e) for e in elems), typ))
    _write_rows(args, ["replica", "time", "block", "elements", "type"], rows)
    return EXIT_OK


def cmd_tagged(args):
    spec = parse_spec_file(args.spec)
    seed = _resolve_seed(args)
    rows = []
    for r in range(args.replicas):
        path = simulate.simulate_tagged(
            spec, args.t, replica_stream(seed, r),
            initial_type=args.initial_type)
        for t, j, s in zip(path.times, path.j_values, path.s_values):
            rows.append((r, float(t), int(j), float(s)))
    _write_rows(args, ["replica", "time", "J", "S"], rows)
    return EXIT_OK


def cmd_spectral(args):
    spec = parse_spec_file(args.spec)
    thetas = _theta_values(args, spec)
    grid = []
    for th in thetas:
        sd = spectral.perron_eigen(spec, th, with_derivatives=True)
        grid.append({
            "theta": th,
            "phi": sd.phi,
            "phi_d1": sd.phi_d1,
            "phi_d2": sd.phi_d2,
            "u": [float(x) for x in sd.u],
            "v": [float(x) for x in sd.v],
        })
    tb, dphi = spectral.theta_bar(spec)
    report = {"theta_bar": tb, "phi_prime_at_theta_bar": dphi}
    if args.format == "json":
        _write_json(args, {"grid": grid, **report})
    else:
        header = (["theta", "phi", "phi_d1", "phi_d2"]
                  + [f"u_{j}" for j in range(1, spec.k + 1)]
                  + [f"v_{j}" for j in range(1, spec.k + 1)])
        rows = [tuple([g["theta"], g["phi"], g["phi_d1"], g["phi_d2"]]
                      + g["u"] + g["v"]) for g in grid]
        _write_rows(args, header, rows)
        dest = sys.stderr if args.out in (None, "-") else sys.stdout
        json.dump(report, dest, sort_keys=True)
        dest.write("\n")
    return EXIT_OK


def cmd_martingale(args):
    spec = parse_spec_file(args.spec)
    seed = _resolve_seed(args)
    thetas = _theta_values(args, spec)
    times = sorted(_parse_times(args.times, args.t))
    sds = {th: spectral.perron_eigen(spec, th) for th in thetas}
    rows = []
    for r in range(args.replicas):
        path = simulate.simulate_mass_fragmentation(
            spec, max(times), replica_stream(seed, r),
            initial_type=args.initial_type, mass_floor=args.mass_floor,
            max_fragments=args.max_fragments)
        for t in times:
            snap = path.snapshot(t)
            for th in thetas:
                m = asymptotics.biggins_martingale(snap, sds[th])
                rows.append((r, th, t, m))
    _write_rows(args, ["replica", "theta", "t", "M"], rows)
    return EXIT_OK


def cmd_limits(args):
    spec = parse_spec_file(args.spec)
    seed = _resolve_seed(args)
    lam = measures.intensity_matrix(spec)
    u = asymptotics.stationary_distribution(lam)
    d1, d2 = spectral.phi_derivatives(spec, 0.0)
    f = asymptotics.make_test_function(args.f, args.f_center, args.f_width)
    j_arr, s_arr = simulate.tagged_ensemble(
        spec, [args.t], args.replicas, seed, initial_type=args.initial_type)
    j_t, s_t = j_arr[0], s_arr[0]
    # size-biased identity: population mass-averages equal tagged expectations
    y = (-s_t + d1 * args.t) / math.sqrt(args.t)
    clt_vals = f(y, j_t)
    marg = np.array([(j_t == j).mean() for j in range(1, spec.k + 1)])
    marg_se = np.sqrt(marg * (1 - marg) / args.replicas)
    doc = {
        "t": args.t,
        "replicas": args.replicas,
        "phi_d1_at_0": d1,
        "phi_d2_at_0": d2,
        "stationary": [float(x) for x in u],
        "type_marginal": [float(x) for x in marg],
        "type_marginal_se": [float(x) for x in marg_se],
        "lln_location": float((s_t / args.t).mean()),
        "clt_mean": float(clt_vals.mean()),
        "clt_se": float(clt_vals.std(ddof=1) / math.sqrt(args.replicas)),
        "clt_oracle": asymptotics.gaussian_limit(f, u, -d2),
    }
    _write_json(args, doc)
    return EXIT_OK


def cmd_ldcount(args):
    spec = parse_spec_file(args.spec)
    seed = _resolve_seed(args)
    asymptotics.lattice_check(spec)
    tb, _ = spectral.theta_bar(spec)
    theta = args.theta_frac * tb
    sd = spectral.perron_eigen(spec, theta, with_derivatives=True)
    times = sorted(float(v) for v in args.t_grid.split(","))
    floor = args.a * math.exp(-max(times) * sd.phi_d1)
    counts = np.zeros((len(times), args.replicas, spec.k))

    def visit(ti, rep, mass, typ, frozen):
        t = times[ti]
        lo = args.a * math.exp(-t * sd.phi_d1)
        hi = args.b * math.exp(-t * sd.phi_d1)
        sel = (mass >= lo) & (mass <= hi)
        for j in range(1, spec.k + 1):
            np.add.at(counts[ti, :, j - 1], rep[sel & (typ == j)], 1.0)

    simulate.mass_ensemble(spec, times, args.replicas, seed, visit,
                           initial_type=args.initial_type, mass_floor=floor,
                           replica_chunk=args.replica_chunk,
                           max_fragments=args.max_fragments)
    rows = []
    for ti, t in enumerate(times):
        for j in range(1, spec.k + 1):
            shape = asymptotics.ld_predicted_shape(t, theta, args.a, args.b,
                                                   j, sd)
            mean = float(counts[ti, :, j - 1].mean())
            se = float(counts[ti, :, j - 1].std(ddof=1)
                       / math.sqrt(args.replicas))
            rows.append((t, theta, j, mean, se, shape))
    _write_rows(args, ["t", "theta", "type", "mean_count", "se",
                       "predicted_shape"], rows)
    return EXIT_OK


def cmd_report(args):
    spec = parse_spec_file(args.spec)
    seed = _resolve_seed(args)
    lam = measures.intensity_matrix(spec)
    u0 = asymptotics.stationary_distribution(lam)
    sd0 = spectral.perron_eigen(spec, 0.0, with_derivatives=True)
    tb, dphi = spectral.theta_bar(spec)
    j_arr, s_arr = simulate.tagged_ensemble(spec, [args.t], args.replicas,
                                            seed, initial_type=args.initial_type)
    drift = float((s_arr[0] / args.t).mean())
    doc = {
        "spec": spec_to_document(spec),
        "intensity": [[float(x) for x in row] for row in lam],
        "irreducible": spectral.irreducibility_check(lam),
        "stationary": [float(x) for x in u0],
        "phi_at_0": sd0.phi,
        "phi_d1_at_0": sd0.phi_d1,
        "phi_d2_at_0": sd0.phi_d2,
        "theta_bar": tb,
        "phi_prime_at_theta_bar": dphi,
        "tagged_mean_drift": drift,
        "tagged_drift_se": float((s_arr[0] / args.t).std(ddof=1)
                                 / math.sqrt(args.replicas)),
        "seed": seed,
    }
    _write_json(args, doc)
    return EXIT_OK


# --- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="multifrag",
        description="simulate and analyze multitype fragmentation models")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seeded=True):
        p.add_argument("--spec", required=True, help="model JSON file")
        p.add_argument("--out", default=None, help="output path ('-' = stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        if seeded:
            p.add_argument("--seed", type=int, default=None,
                           help="64-bit seed (or MULTIFRAG_SEED)")
            p.add_argument("--replicas", type=int, default=100)
            p.add_argument("--initial-type", dest="initial_type", type=int,
                           default=1)

    p = sub.add_parser("validate", help="check a model file")
    common(p, seeded=False)
    p.set_defaults(func=cmd_validate, format="json")

    p = sub.add_parser("simulate", help="mass-fragmentation snapshots")
    common(p)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--times", default=None, help="comma list of snapshot times")
    p.add_argument("--mass-floor", dest="mass_floor", type=float, default=1e-9)
    p.add_argument("--max-fragments", dest="max_fragments", type=int,
                   default=2_000_000)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("partition", help="partition-valued paths on {1..n}")
    common(p)
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--times", default=None)
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("tagged", help="tagged-fragment (J, S) paths")
    common(p)
    p.add_argument("--t", type=float, default=1.0)
    p.set_defaults(func=cmd_tagged)

    p = sub.add_parser("spectral", help="phi, derivatives, eigenvectors, "
                                        "critical exponent")
    common(p, seeded=False)
    p.add_argument("--theta", default=None, help="comma list of theta values")
    p.add_argument("--theta-grid", dest="theta_grid", default=None,
                   help="lo:hi:step")
    p.set_defaults(func=cmd_spectral)

    p = sub.add_parser("martingale", help="additive martingale replica table")
    common(p)
    p.add_argument("--theta", default=None, help="comma list of theta values")
    p.add_argument("--theta-grid", dest="theta_grid", default=None)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--times", default=None)
    p.add_argument("--mass-floor", dest="mass_floor", type=float, default=1e-9)
    p.add_argument("--max-fragments", dest="max_fragments", type=int,
                   default=2_000_000)
    p.set_defaults(func=cmd_martingale)

    p = sub.add_parser("limits", help="LLN/CLT functionals vs. their limits")
    common(p)
    p.add_argument("--t", type=float, default=50.0)
    p.add_argument("--f", choices=("bump", "sigmoid", "coswin"),
                   default="bump")
    p.add_argument("--f-center", dest="f_center", type=float, default=0.0)
    p.add_argument("--f-width", dest="f_width", type=float, default=1.0)
    p.set_defaults(func=cmd_limits, format="json")

    p = sub.add_parser("ldcount", help="windowed fragment counts vs. "
                                       "predicted growth")
    common(p)
    p.add_argument("--theta-frac", dest="theta_frac", type=float, default=0.5,
                   help="theta as a fraction of theta_bar")
    p.add_argument("--t-grid", dest="t_grid", default="8,10,12,14,16")
    p.add_argument("--a", type=float, default=0.5)
    p.add_argument("--b", type=float, default=2.0)
    p.add_argument("--replica-chunk", dest="replica_chunk", type=int,
                   default=None)
    p.add_argument("--max-fragments", dest="max_fragments", type=int,
                   default=50_000_000)
    p.set_defaults(func=cmd_ldcount)

    p = sub.add_parser("report", help="aggregate model summary")
    common(p)
    p.add_argument("--t", type=float, default=5.0)
    p.set_defaults(func=cmd_report, format="json")

    return parser


def _emit_error(exc: Exception) -> None:
    doc = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, SpecValidationError):
        doc["violations"] = [{"code": c, "message": m}
                             for c, m in exc.violations]
    json.dump(doc, sys.stderr, sort_keys=True)
    sys.stderr.write("\n")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        _emit_error(exc)
        return EXIT_PARSE
    except _VALIDATION_ERRORS as exc:
        _emit_error(exc)
        return EXIT_VALIDATION
    except _NUMERIC_ERRORS as exc:
        _emit_error(exc)
        return EXIT_NUMERIC
    except ResourceCapExceeded as exc:
        _emit_error(exc)
        return EXIT_RESOURCE
    except MultifragError as exc:
        _emit_error(exc)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
