"""``covest`` command line: decompose, optimize, verify, scaling, simulate.

Exit codes: 0 success (all checks pass), 1 verification failure,
2 invalid input. Reports are JSON with sorted keys; ``scaling`` defaults
to CSV. Random draws use ``numpy.random.default_rng`` (PCG64) seeded by
``--rng-seed``, so identical invocations give byte-identical output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import gpovm as gp
from .errors import CovestError, InfeasibleError, NumericalDegeneracyError
from .groups import group_from_document, rep_from_document, rep_power, u1, u1_rep
from .irreps import decompose
from .optimal import (
    build_parallel_scheme,
    optimal_parallel_input,
    parallel_risk,
    psi_from_coords,
    psi_from_seed,
    solve_optimal_seed,
    verify_simulation,
)
from .suites import SUITES, Problem, catalogue, round_report, run_suite

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
MAX_DOUBLED_DIM = 4096


class InputError(Exception):
    """Bad command-line input; maps to exit code 2."""


# ---------------------------------------------------------------- helpers


def load_document(text: str | None, what: str):
    """A JSON document given inline or as a file path."""
    if text is None:
        return None
    s = text.strip()
    if s.startswith("{") or s.startswith("["):
        source = s
    else:
        p = Path(text)
        if not p.is_file():
            raise InputError(f"{what}: no such file {text!r}")
        source = p.read_text()
    try:
        return json.loads(source)
    except json.JSONDecodeError as exc:
        raise InputError(f"{what}: invalid JSON ({exc})") from None


def complex_pairs(v) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=complex).reshape(-1)]


def parse_pairs(data, what: str) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InputError(f"{what} must be a list of [re, im] pairs")
    return arr[:, 0] + 1j * arr[:, 1]


def clamp_risk(r: float, vmax: float) -> float:
    """Remove round-off outside ``[0, max v]``."""
    if -1e-12 < r < 0:
        return 0.0
    if vmax < r < vmax + 1e-12:
        return vmax
    return r


def build_problem(args) -> Problem:
    if args.problem:
        byname = {p.name: p for p in catalogue()}
        if args.problem not in byname:
            raise InputError(f"unknown built-in problem {args.problem!r}; choose from {sorted(byname)}")
        if args.group or args.rep:
            raise InputError("--problem cannot be combined with --group/--rep")
        p = byname[args.problem]
        if args.copies == 1 and args.error is None:
            return p
        base = p.base if p.base is not None else p.rep
        if args.copies > 1 and p.copies != 1:
            raise InputError(f"{p.name} is already a tensor power; --copies is not supported for it")
        rep = rep_power(base, args.copies)
        err = p.error if args.error is None else gp.error_from_document(load_document(args.error, "--error"), rep)
        return Problem(p.name, rep, err, base if p.base is not None else None, args.copies)
    gdoc = load_document(args.group, "--group")
    rdoc = load_document(args.rep, "--rep")
    if gdoc is None or rdoc is None:
        raise InputError("need --group and --rep (or --problem)")
    G = group_from_document(gdoc)
    base = rep_from_document(rdoc, G)
    if args.copies < 1:
        raise InputError("--copies must be >= 1")
    rep = rep_power(base, args.copies)
    edoc = load_document(args.error, "--error")
    if edoc is None:
        edoc = {"kind": "sine2" if G.is_u1 else "delta"}
    err = gp.error_from_document(edoc, rep)
    return Problem("custom", rep, err, base, args.copies)


def guard(p: Problem, args) -> None:
    D = p.rep.d * p.rep.d
    if D > MAX_DOUBLED_DIM and not args.unsafe_large:
        raise InputError(f"doubled-space dimension d^2 = {D} exceeds {MAX_DOUBLED_DIM}; pass --unsafe-large to proceed")


def config_echo(args) -> dict:
    return {
        "problem": args.problem,
        "group": args.group,
        "rep": args.rep,
        "copies": args.copies,
        "error": args.error,
        "criterion": args.criterion,
        "tol": args.tol,
        "rng_seed": args.rng_seed,
    }


def emit(args, report: dict) -> None:
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    write(args, text)


def write(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- commands


def cmd_decompose(args) -> int:
    p = build_problem(args)
    guard(p, args)
    dec = decompose(p.rep, seed=args.rng_seed)
    report = dict(dec.summary())
    report["off_block_residual"] = float(report["off_block_residual"])
    if p.rep.is_u1:
        report["modes"] = {str(b.mode): b.mult for b in dec.blocks}
    if args.emit_basis:
        V = dec.require_basis()
        report["basis_change"] = [complex_pairs(row) for row in V]
    report["ok"] = dec.off_block_residual <= args.tol
    return finish(args, report, EXIT_OK if report["ok"] else EXIT_FAIL)


def _criterion_risk(M, p: Problem, criterion: str) -> float:
    if criterion == "worst":
        return gp.worst_risk(M, p.rep, p.error)
    return gp.bayes_risk(M, p.rep, p.error)


def cmd_optimize(args) -> int:
    p = build_problem(args)
    guard(p, args)
    dec = p.decomposition()
    opt = solve_optimal_seed(p.rep, dec, p.error)
    par = optimal_parallel_input(p.rep, dec, p.error)
    scheme = build_parallel_scheme(dec)
    psi = psi_from_coords(opt.coords, dec, scheme)
    vmax = p.error.max_value
    report = {
        "risk": clamp_risk(opt.risk, vmax),
        "criterion": args.criterion,
        "parallel_risk": clamp_risk(par.risk, vmax),
        "psi_vector": complex_pairs(psi),
        "decomposition_summary": dec.summary(),
    }
    checks = {"equality_gap": abs(opt.risk - par.risk)}
    if opt.vector is not None:
        M = gp.covariant_gpovm(opt.vector, p.rep)
        report["seed_vector"] = complex_pairs(opt.vector)
        report["risk"] = clamp_risk(_criterion_risk(M, p, args.criterion), vmax)
        sim = verify_simulation(opt.vector, p.rep, dec, p.error, tol=args.tol)
        report["simulation"] = {"max_deviation": sim.max_deviation,
                                "amplitude_deviation": sim.amplitude_deviation,
                                "passed": sim.passed}
        checks["seed_consistency"] = abs(report["risk"] - opt.risk)
        checks["simulation"] = max(sim.max_deviation, sim.amplitude_deviation, sim.risk_deviation)
    else:
        report["seed_coordinates"] = complex_pairs(opt.coords)
    checks["psi_consistency"] = abs(parallel_risk(psi, scheme, p.rep, p.error) - opt.risk)
    report["checks"] = checks
    report["passed"] = max(checks.values()) <= args.tol
    return finish(args, report, EXIT_OK if report["passed"] else EXIT_FAIL)


def cmd_verify(args) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    problems = None
    if args.problem or args.group or args.rep:
        p = build_problem(args)
        guard(p, args)
        problems = [p]
    results = {n: run_suite(n, problems, rng_seed=args.rng_seed, trials=args.trials) for n in names}
    passed = all(r["passed"] for r in results.values())
    report = {"suites": round_report(results), "passed": passed, "rng_seed": args.rng_seed}
    if not passed:
        for n, r in results.items():
            if not r["passed"]:
                print(f"suite {n} failed; witness: {json.dumps(round_report(r.get('witness')), sort_keys=True)}",
                      file=sys.stderr)
    return finish(args, report, EXIT_OK if passed else EXIT_FAIL)


def scaling_rows(max_copies: int) -> list:
    """``(n, risk*, risk* (n+2)^2)`` for ``n`` uses of a U(1) phase with modes ``{0, 1}``."""
    rows = []
    for n in range(1, max_copies + 1):
        G = u1(4 * n + 1)
        f = rep_power(u1_rep(G, {0: 1, 1: 1}), n)
        dec = decompose(f)
        r = optimal_parallel_input(f, dec, gp.sine_squared(G)).risk
        rows.append((n, r, r * (n + 2) ** 2))
    return rows


def cmd_scaling(args) -> int:
    if not 1 <= args.max_copies <= 64:
        raise InputError("--max-copies must be between 1 and 64")
    rows = scaling_rows(args.max_copies)
    if args.format == "json":
        report = {"rows": [{"n": n, "risk": r, "scaled": s} for n, r, s in rows]}
        return finish(args, report, EXIT_OK)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "risk", "risk_times_n_plus_2_squared"])
    for n, r, s in rows:
        w.writerow([n, repr(float(r)), repr(float(s))])
    write(args, buf.getvalue())
    return EXIT_OK


def cmd_simulate(args) -> int:
    p = build_problem(args)
    guard(p, args)
    doc = load_document(args.input, "--input")
    if not isinstance(doc, dict):
        raise InputError("--input must be a JSON object with 'seed_vector' or 'psi_vector'")
    dec = p.decomposition()
    scheme = build_parallel_scheme(dec)
    vmax = p.error.max_value
    report = {}
    passed = True
    if "seed_vector" in doc:
        X = parse_pairs(doc["seed_vector"], "seed_vector")
        if X.size != p.rep.d ** 2:
            raise InputError(f"seed_vector has {X.size} entries, expected d^2 = {p.rep.d ** 2}")
        M = gp.covariant_gpovm(X, p.rep)
        sim = verify_simulation(X, p.rep, dec, p.error, tol=args.tol)
        report.update({
            "feasibility_residual": gp.master_constraint_check(M, p.rep),
            "bayes_risk": clamp_risk(gp.bayes_risk(M, p.rep, p.error), vmax),
            "worst_risk": clamp_risk(gp.worst_risk(M, p.rep, p.error), vmax),
            "parallel_risk": clamp_risk(sim.parallel_risk, vmax),
            "psi_vector": complex_pairs(psi_from_seed(X, dec, scheme)),
            "simulation": {"max_deviation": sim.max_deviation, "worst_pair": list(sim.worst_pair),
                           "amplitude_deviation": sim.amplitude_deviation, "passed": sim.passed},
        })
        passed = sim.passed
    elif "psi_vector" in doc:
        psi = parse_pairs(doc["psi_vector"], "psi_vector")
        if psi.size != scheme.dim:
            raise InputError(f"psi_vector has {psi.size} entries, the parallel scheme needs {scheme.dim}")
        report["parallel_risk"] = clamp_risk(parallel_risk(psi, scheme, p.rep, p.error), vmax)
    else:
        raise InputError("--input needs 'seed_vector' or 'psi_vector'")
    report["passed"] = passed
    return finish(args, report, EXIT_OK if passed else EXIT_FAIL)


def finish(args, report: dict, code: int) -> int:
    report["config"] = config_echo(args)
    report["version"] = __version__
    if args.timing:
        report["timing_seconds"] = time.perf_counter() - args._t0
    for k in ("risk", "parallel_risk", "bayes_risk", "worst_risk"):
        if isinstance(report.get(k), float) and not math.isfinite(report[k]):
            code = EXIT_FAIL
    emit(args, report)
    return code


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--group", help="group document (JSON file path or inline JSON)")
    common.add_argument("--rep", help="representation document (path or inline JSON)")
    common.add_argument("--problem", help="built-in problem name, e.g. z4-partial-delta")
    common.add_argument("--copies", type=int, default=1, help="number of parallel uses n")
    common.add_argument("--error", help="error-function document (default: delta, or sine2 on U(1))")
    common.add_argument("--criterion", choices=("bayes", "worst"), default="bayes")
    common.add_argument("--tol", type=float, default=1e-9)
    common.add_argument("--rng-seed", type=int, default=0)
    common.add_argument("--out", help="write the report to this file instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--unsafe-large", action="store_true", help=f"allow d^2 > {MAX_DOUBLED_DIM}")
    common.add_argument("--timing", action="store_true", help="include wall-clock time (breaks byte-identity)")

    parser = argparse.ArgumentParser(prog="covest", description="Optimal covariant estimation of group actions.")
    parser.add_argument("--version", action="version", version=f"covest {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("decompose", parents=[common], help="isotypic decomposition of f^{(x)n}")
    d.add_argument("--emit-basis", action="store_true")
    d.set_defaults(func=cmd_decompose)

    o = sub.add_parser("optimize", parents=[common], help="optimal seed, parallel input and simulation check")
    o.set_defaults(func=cmd_optimize)

    v = sub.add_parser("verify", parents=[common], help="run property suites")
    v.add_argument("--suite", choices=SUITES + ("all",), default="all")
    v.add_argument("--trials", type=int, default=None)
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("scaling", parents=[common], help="risk* versus number of U(1) phase uses")
    s.add_argument("--max-copies", type=int, default=32)
    s.set_defaults(func=cmd_scaling)

    m = sub.add_parser("simulate", parents=[common], help="evaluate a given seed or parallel input")
    m.add_argument("--input", required=True, help="JSON with 'seed_vector' or 'psi_vector' ([re, im] pairs)")
    m.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    args._t0 = time.perf_counter()
    if args.format is None:
        args.format = "csv" if args.command == "scaling" else "json"
    if args.format == "csv" and args.command != "scaling":
        print("error: --format csv is only available for 'scaling'", file=sys.stderr)
        return EXIT_INPUT
    if getattr(args, "trials", None) is not None and args.trials < 1:
        print("error: --trials must be >= 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except (InputError, InfeasibleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalDegeneracyError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (CovestError, ValueError, KeyError) as exc:
        print(f"error: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
