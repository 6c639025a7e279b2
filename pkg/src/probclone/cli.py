"""Command-line interface.

    probclone check     PROBLEM --q 1,1,1
    probclone optimize  PROBLEM [--multistart K]
    probclone identify  PROBLEM
    probclone surface   PROBLEM --resolution 50
    probclone simulate  PROBLEM [--q ...] --shots 100000 --seed 1
    probclone oracle    PROBLEM --grid-step 0.002

Results are JSON (CSV for ``surface``) on stdout or in ``--output``. Exit
status: 0 success, 1 error, 2 infeasible point (``check`` only).
"""

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import feasibility, machine, optimize, oracle
from .errors import CloningError
from .hermitian import PSD_TOL
from .problem import CloningProblem, build_grams, load_problem

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2


class UsageError(CloningError):
    pass


def parse_q(text, N):
    try:
        q = [float(x) for x in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"--q: cannot parse {text!r}") from exc
    if len(q) != N:
        raise UsageError(f"--q needs {N} values, got {len(q)}")
    if any(not (0.0 <= x <= 1.0) for x in q):
        raise UsageError("--q values must lie in [0, 1]")
    return np.array(q)


def _point_fields(problem, q, tol):
    rep = feasibility.check(problem, q, tol)
    return {
        "q": [float(x) for x in q],
        "p": [float(1.0 - x) for x in q],
        "Q": float(problem.priors @ q),
        "success": float(1.0 - problem.priors @ q),
        "det": rep.det,
        "min_eig": rep.min_eig,
        "feasible": rep.feasible,
        "on_surface": rep.on_surface,
    }, rep


def _optimum_doc(problem, opt, tol):
    doc = opt.to_dict()
    doc["min_eig"] = feasibility.check(problem, opt.q_star, tol).min_eig
    doc["identification"] = problem.identification
    doc["generalized"] = problem.generalized
    return doc


def _options(args):
    return optimize.OptimizeOptions(multistart=args.multistart, tol=args.tol)


def cmd_check(args, problem):
    if args.q is None:
        raise UsageError("check requires --q")
    doc, rep = _point_fields(problem, parse_q(args.q, problem.N), args.tol)
    return doc, EXIT_OK if rep.feasible else EXIT_INFEASIBLE


def cmd_optimize(args, problem):
    return _optimum_doc(problem, optimize.optimize(problem, _options(args)), args.tol), EXIT_OK


def cmd_identify(args, problem):
    ident = CloningProblem(problem.states, m=problem.m, priors=problem.priors)
    return _optimum_doc(ident, optimize.optimize(ident, _options(args)), args.tol), EXIT_OK


def cmd_surface(args, problem):
    points = optimize.surface_mesh(problem, args.resolution)
    grams = build_grams(problem)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["q1", "q2", "q3", "det"])
    for pt in points:
        det = float(np.linalg.det(feasibility.build_m(grams, pt)).real)
        w.writerow([repr(float(x)) for x in pt.q] + [repr(det)])
    return buf.getvalue(), EXIT_OK


def cmd_simulate(args, problem):
    if args.q is not None:
        q = parse_q(args.q, problem.N)
    else:
        q = optimize.optimize(problem, _options(args)).q_star.q
    mach = machine.construct(problem, q, args.tol)
    results = machine.simulate_all(mach, args.shots, args.seed)
    doc, _ = _point_fields(problem, q, args.tol)
    doc.update({
        "seed": args.seed,
        "shots": args.shots,
        "isometry_deviation": machine.verify_isometry(mach, build_grams(problem)),
        "states": [{"index": r.state_index, "successes": r.successes, "failures": r.failures,
                    "rate": r.rate, "p_born": r.p_born} for r in results],
    })
    return doc, EXIT_OK


def cmd_oracle(args, problem):
    opt = oracle.grid_optimum(problem, args.grid_step, args.tol)
    doc = opt.to_dict()
    doc["grid_step"] = args.grid_step
    if problem.N <= 3:
        c = oracle.region_census(problem, args.grid_step, args.tol)
        doc["census"] = {"feasible": c.feasible, "infeasible": c.infeasible,
                         "near_surface": c.near_surface, "components": c.components,
                         "connected": c.connected}
    return doc, EXIT_OK


COMMANDS = {
    "check": cmd_check,
    "optimize": cmd_optimize,
    "identify": cmd_identify,
    "surface": cmd_surface,
    "simulate": cmd_simulate,
    "oracle": cmd_oracle,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="probclone",
        description="Feasibility and optimal failure probabilities for probabilistic "
                    "cloning and unambiguous identification of known pure states.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("problem", help="problem JSON file")
    parser.add_argument("--q", help="comma-separated failure probabilities (check, simulate)")
    parser.add_argument("--tol", type=float, default=PSD_TOL, help="relative PSD tolerance")
    parser.add_argument("--seed", type=int, default=0, help="RNG seed for simulate")
    parser.add_argument("--shots", type=int, default=100_000, help="shots per input state")
    parser.add_argument("--grid-step", type=float, default=0.01, help="oracle grid step")
    parser.add_argument("--resolution", type=int, default=50, help="surface mesh resolution")
    parser.add_argument("--multistart", type=int, default=None,
                        help="direction starts (default max(64, 8*2^N))")
    parser.add_argument("--output", help="write the result here instead of stdout")
    return parser


def run(args):
    """Execute a parsed command; returns ``(text, exit_code)``."""
    try:
        if args.tol < 0:
            raise UsageError("--tol must be nonnegative")
        if args.shots < 1:
            raise UsageError("--shots must be >= 1")
        problem = load_problem(args.problem)
        result, code = COMMANDS[args.command](args, problem)
    except (CloningError, ValueError, OSError) as exc:
        err = {"error": type(exc).__name__, "detail": str(exc)}
        return json.dumps(err, sort_keys=True) + "\n", EXIT_ERROR
    if isinstance(result, str):
        return result, code
    return json.dumps(result, sort_keys=True, indent=2) + "\n", code


def main(argv=None):
    args = build_parser().parse_args(argv)
    text, code = run(args)
    if args.output and code != EXIT_ERROR:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
