"""Command-line front end.

``adveig <command> -c <config> [--out DIR] [--nx N] [--ny N] [--A A] [--dump-matrix]``

Exit status is 0 when every check passes, 2 when a check fails or the solver
gives up, and 1 for usage or configuration errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Callable, Optional

from . import analysis as an
from . import functional as fn
from .config import ConfigError, build_problem, load_config
from .eigen import EigenError, principal_eigenpair
from .mesh import write_field_csv
from .operator import write_matrix_market
from .problem import Problem
from .report import write_csv, write_json, write_report

__all__ = ["main", "COMMANDS"]

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _path(out: str, name: str) -> str:
    return os.path.join(out, name)


def _finish(out: str, name: str, eff: dict, body: dict, passed: bool) -> bool:
    body = dict(body)
    # the output location is not part of the problem, keep reports relocatable
    body["config"] = {k: v for k, v in eff.items() if k != "output"}
    body["pass"] = bool(passed)
    write_json(body, _path(out, name))
    return passed


def cmd_solve(problem: Problem, eff: dict, out: str) -> bool:
    A = eff["amplitudes"]["A"]
    M, Ms = problem.operators(A)
    pair = principal_eigenpair(M, Ms, tol=problem.tol, max_iter=problem.max_iter, shift=problem.shift)
    write_field_csv(_path(out, "u.csv"), pair.u, names=["u"])
    write_field_csv(_path(out, "v.csv"), pair.v, names=["v"])
    body = {"A": A, "eigen": pair.summary(), "peclet": M.peclet}
    ok = pair.positivity_ok and max(pair.residual_u, pair.residual_v) <= 1e-8
    print(f"lambda = {pair.lam:.12g}  (A = {A:g}, residual {max(pair.residual_u, pair.residual_v):.2e})")
    return _finish(out, "eig.json", eff, body, ok)


def cmd_sweep(problem: Problem, eff: dict, out: str) -> bool:
    rep = an.sweep(problem, delta=eff["analysis"]["delta"])
    write_report(rep, "csv", _path(out, "sweep.csv"))
    cls = rep.classification
    deriv_ok = all(r.derivative_ok for r in rep.rows[1:-1]) if len(rep.rows) > 2 else True
    ok = rep.residuals_ok and (cls is None or cls.ok) and (deriv_ok or not problem.compliant)
    body = rep.as_dict()
    body["derivatives_consistent"] = deriv_ok
    for r in rep.rows:
        print(f"A = {r.A:<8g} lambda = {r.lam:.12g}  dlam = {r.dlam_formula:.6g}")
    if cls is not None:
        print(f"classification: {cls.label} (expected {cls.expected}{', ' + cls.note if cls.note else ''})")
    return _finish(out, "sweep.json", eff, body, ok)


def cmd_verify(problem: Problem, eff: dict, out: str) -> bool:
    opts = eff["analysis"]
    records = an.identity_suite(
        problem,
        eff["amplitudes"]["A"],
        directions=opts["directions"],
        t=opts["t"],
        seed=opts["seed"],
        decomposition_tol=opts["decomposition_tol"],
    )
    for r in records:
        print(f"{'PASS' if r['pass'] else 'FAIL'}  {r['check']:<20} {r['residual']:.3e} <= {r['tolerance']:.1e}")
    ok = all(r["pass"] for r in records)
    return _finish(out, "verify.json", eff, {"records": records}, ok)


def cmd_minmax(problem: Problem, eff: dict, out: str) -> bool:
    opts = eff["analysis"]
    rep = an.minmax_verify(problem, A=eff["amplitudes"]["A"], step=opts["scan_step"], seed=opts["seed"])
    for name, c in rep.checks.items():
        print(f"{'PASS' if c['pass'] else 'FAIL'}  {name}")
    return _finish(out, "minmax.json", eff, rep.as_dict(), rep.passed)


def cmd_bound(problem: Problem, eff: dict, out: str) -> bool:
    K = eff["analysis"]["K"]
    family = an.first_integral_family(problem, K)
    bound = an.first_integral_bound(problem, family)
    lams = [problem.solve(A).lam for A in problem.amplitudes]
    bounded = [lam <= bound + 1e-6 for lam in lams]
    body = {
        "bound": bound,
        "family_size": len(family),
        "annihilation": family.annihilation,
        "amplitudes": list(problem.amplitudes),
        "lambda": lams,
        "bounded": bounded,
    }
    print(f"first-integral bound = {bound:.12g} over {len(family)} functions")
    return _finish(out, "bound.json", eff, body, all(bounded))


def cmd_limit(problem: Problem, eff: dict, out: str) -> bool:
    amps = eff["amplitudes"]
    A_max = amps.get("A_max", max(problem.amplitudes or (64.0,)))
    rep = an.limit_probe(
        problem, A_max=A_max, A_start=amps.get("A_start", 1.0), tol_limit=eff["analysis"]["tol_limit"], K=eff["analysis"]["K"]
    )
    write_csv(_path(out, "limit.csv"), ("A", "lambda"), zip(rep.amplitudes, rep.lams))
    print(f"limit estimate {rep.limit_estimate:.12g}, bound {rep.bound:.12g}, cauchy {rep.cauchy}")
    return _finish(out, "limit.json", eff, rep.as_dict(), rep.passed)


def cmd_counterexample(problem: Problem, eff: dict, out: str) -> bool:
    rep = an.counterexample_probe(problem, delta=eff["analysis"]["limit_delta"])
    write_csv(_path(out, "counterexample.csv"), ("A", "lambda"), zip(rep.amplitudes, rep.lams))
    print(f"lambda falls from {rep.lams[0]:.6g} to {rep.lams[-1]:.6g}; c at inflow = {rep.c_inflow:g}")
    return _finish(out, "counterexample.json", eff, rep.as_dict(), rep.passed)


def cmd_gradflow(problem: Problem, eff: dict, out: str) -> bool:
    rep = an.gradient_flow_sweep(problem, rtol=eff["analysis"]["rtol"])
    write_csv(
        _path(out, "gradflow.csv"),
        ("A", "lambda_advective", "lambda_symmetric"),
        zip(rep.amplitudes, rep.lam_advective, rep.lam_symmetric),
    )
    for A, x, y in zip(rep.amplitudes, rep.lam_advective, rep.lam_symmetric):
        print(f"A = {A:<6g} {x:.12g}  {y:.12g}")
    return _finish(out, "gradflow.json", eff, rep.as_dict(), rep.passed)


COMMANDS: dict[str, Callable[[Problem, dict, str], bool]] = {
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
    "minmax": cmd_minmax,
    "bound": cmd_bound,
    "limit": cmd_limit,
    "counterexample": cmd_counterexample,
    "gradflow": cmd_gradflow,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="adveig", description="Principal eigenvalues of advection-diffusion operators.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("-c", "--config", required=True, help="problem configuration file")
    p.add_argument("--out", help="output directory (default: [output] dir)")
    p.add_argument("--nx", type=int, help="override the number of nodes in x")
    p.add_argument("--ny", type=int, help="override the number of nodes in y")
    p.add_argument("--A", type=float, dest="A", help="amplitude for solve, verify and minmax")
    p.add_argument("--dump-matrix", action="store_true", help="also write the operators in MatrixMarket format")
    return p


def main(argv: Optional[list[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = load_config(args.config)
        problem, eff = build_problem(cfg, args.nx, args.ny, args.A)
    except UsageError as exc:
        print(f"adveig: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"adveig: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = args.out or eff["output"]["dir"]
    try:
        os.makedirs(out, exist_ok=True)
        if args.dump_matrix:
            M, Ms = problem.operators(eff["amplitudes"]["A"])
            write_matrix_market(M, _path(out, "operator.mtx"))
            write_matrix_market(Ms, _path(out, "adjoint.mtx"))
        ok = COMMANDS[args.command](problem, eff, out)
    except (an.AnalysisError, fn.ConeViolation) as exc:
        # the problem does not meet the command's preconditions
        print(f"adveig: {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EigenError as exc:
        print(f"adveig: solver error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except OSError as exc:
        print(f"adveig: cannot write output: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
