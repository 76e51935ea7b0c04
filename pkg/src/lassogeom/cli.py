"""Command-line entry point: ``lassogeom <subcommand> ...``.

Numbers are printed with ``repr`` so every value round-trips in full
double precision regardless of locale.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys

import numpy as np

from . import bounds as B
from .geometry import (OutOfRangeError, calibrate, delta_l1_closed_form, delta_monte_carlo,
                       delta_upper_bound)
from .model import ProblemInstance, SeedSpec, SignalModel
from .records import format_value
from .regularizers import L1, Nuclear
from .solvers import (ConvergenceError, SolveConfig, solve_constrained, solve_l2_lasso,
                      solve_l22_lasso)

log = logging.getLogger("lassogeom")


def _print_rows(cols, rows, out=None):
    w = csv.writer(out or sys.stdout, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([format_value(r[c]) for c in cols])


def _l1_geometry(n, k):
    x0 = np.zeros(n)
    x0[:k] = 1.0  # delta depends on x0 only through k
    return L1(n).geometry(SignalModel.sparse(x0))


def _nuclear_geometry(d, r):
    X0 = np.zeros((d, d))
    X0[np.arange(r), np.arange(r)] = 1.0
    return Nuclear(d).geometry(SignalModel.lowrank(X0, r))


def _geometry_from_args(a):
    if a.reg == "nuclear":
        if a.d is None or a.r is None:
            raise SystemExit("--reg nuclear needs --d and --r")
        return _nuclear_geometry(a.d, a.r)
    if a.n is None or a.k is None:
        raise SystemExit("--reg l1 needs --n and --k")
    return _l1_geometry(a.n, a.k)


def cmd_distance(a):
    geom = _geometry_from_args(a)
    rows = []
    for lam in a.lam:
        if a.method == "closed_form":
            if a.reg != "l1":
                raise SystemExit("closed_form is only available for --reg l1")
            est, se = float(delta_l1_closed_form(a.n, a.k, lam)), 0.0
        elif a.method == "analytic_bound":
            est, se = float(delta_upper_bound(geom, lam)), 0.0
        else:
            est, se = delta_monte_carlo(geom, lam, a.samples, SeedSpec(a.seed))
        rows.append({"lambda": float(lam), "delta": float(est), "stderr": float(se),
                     "method": a.method})
    _print_rows(("lambda", "delta", "stderr", "method"), rows)
    return 0


def cmd_calibrate(a):
    geom = _geometry_from_args(a)
    method = "closed_form" if a.reg == "l1" else "monte_carlo"
    rep = calibrate(geom, a.m, method=method, samples=a.samples, seed=SeedSpec(a.seed))
    for key in ("m", "feasible", "lam_min", "lam_best", "lam_max", "delta_min", "delta_best",
                "delta_max", "method", "golden_tol", "root_xtol"):
        val = getattr(rep, key)
        print(f"{key}={'none' if val is None else format_value(val)}")
    return 0 if rep.feasible else 3


def cmd_bound(a):
    t = a.t if a.t is not None else B.t_for_failure_probability(0.05)
    if a.flavor == "sharp":
        print(f"value={format_value(B.sharp_estimate(a.m, a.delta, a.znorm))}")
        print("flavor=sharp_estimate")
        return 0
    fn = B.regularized_bound if a.flavor == "regularized" else B.constrained_bound
    rep = fn(a.m, a.delta, t, a.znorm)
    print(f"value={format_value(rep.value)}")
    print(f"probability={format_value(rep.probability)}")
    print(f"probability_meaningful={format_value(rep.probability_meaningful)}")
    print(f"t={format_value(rep.t)}")
    print(f"flavor={rep.flavor}")
    return 0


def _load_matrix(path):
    return np.loadtxt(path, delimiter=",", ndmin=2)


def cmd_solve(a):
    A = _load_matrix(a.input[0])
    y = np.loadtxt(a.input[1], delimiter=",", ndmin=1).ravel()
    if A.shape[0] != y.size:
        raise SystemExit(f"A has {A.shape[0]} rows but y has {y.size} entries")
    n = A.shape[1]
    if a.reg == "nuclear":
        d = math.isqrt(n)
        if d * d != n:
            raise SystemExit("nuclear regularizer needs n to be a perfect square")
        f = Nuclear(d)
    else:
        f = L1(n)
    # x0 and z are unknown for user data; the instance only needs y = A x0 + z
    inst = ProblemInstance(A, np.zeros(n), y)
    cfg = SolveConfig(max_iter=a.max_iter, raise_on_failure=False)
    solver = {"l2": solve_l2_lasso, "l22": solve_l22_lasso, "constrained": solve_constrained}
    sol = solver[a.estimator](inst, f, a.lam, cfg)
    if not sol.converged:
        log.warning("solver stopped after %d iterations without certification", sol.iterations)
    lines = "\n".join(format_value(float(v)) for v in sol.x) + "\n"
    if a.output:
        with open(a.output, "w", encoding="utf-8") as fh:
            fh.write(lines)
    else:
        sys.stdout.write(lines)
    print(f"# objective={format_value(sol.objective)} iterations={sol.iterations} "
          f"residual={'none' if sol.residual is None else format_value(sol.residual)} "
          f"converged={int(sol.converged)} nonunique={int(sol.nonunique)} "
          f"zero_residual={int(sol.zero_residual)}", file=sys.stderr)
    return 0 if sol.converged else 2


def cmd_simulate(a):
    from .harness.config import load_config
    from .harness.sweep import run_sweep, write_csv

    cfg = load_config(a.config)
    out = a.output or (cfg.path(cfg.output_csv) if cfg.output_csv else None)
    if out is None:
        raise SystemExit("no output path: set output_csv in the config or pass --output")
    records = run_sweep(cfg, workers=a.workers)
    write_csv(records, out, cfg)
    bad = sum(r.violated for r in records)
    failed = sum(not r.converged for r in records)
    log.info("%d records, %d violations, %d unconverged -> %s", len(records), bad, failed, out)
    return 0


def cmd_figures(a):
    from dataclasses import replace

    from .harness.config import load_config
    from .harness.figures import emit_figure1, emit_figure2
    from .harness.sweep import run_sweep

    cfg = load_config(a.config)
    if a.t is not None:
        cfg = replace(cfg, t_policy=f"fixed:{a.t!r}")
    out_dir = a.out_dir or (cfg.path(cfg.out_dir) if cfg.out_dir else None)
    if out_dir is None:
        raise SystemExit("no output directory: set out_dir in the config or pass --out-dir")
    if cfg.regularizer == "l1":
        f1 = emit_figure1(cfg, out_dir)
        log.info("figure 1 -> %s", f1["svg"])
    records = run_sweep(cfg, workers=a.workers)
    f2 = emit_figure2(records, out_dir,
                      title=f"Normalized error, n={cfg.n}, m={cfg.m}, t policy {cfg.t_policy}")
    log.info("figure 2 -> %s", f2["svg"])
    return 0


def cmd_prove(a):
    from .harness.config import load_config
    from .harness.proving import run_proof_checks

    cfg = load_config(a.config)
    rows = run_proof_checks(cfg)
    _print_rows(("check", "holds", "margin", "detail"), rows)
    return 0 if all(r["holds"] for r in rows) else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lassogeom", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def geom_args(sp):
        sp.add_argument("--reg", choices=("l1", "nuclear"), default="l1")
        sp.add_argument("--n", type=int)
        sp.add_argument("--k", type=int)
        sp.add_argument("--d", type=int)
        sp.add_argument("--r", type=int)

    sp = sub.add_parser("distance", help="Gaussian squared distance delta(lambda df(x0))")
    geom_args(sp)
    sp.add_argument("--lambda", dest="lam", type=float, nargs="+", required=True)
    sp.add_argument("--method", choices=("closed_form", "analytic_bound", "monte_carlo"),
                    default="closed_form")
    sp.add_argument("--samples", type=int, default=100_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_distance)

    sp = sub.add_parser("calibrate", help="lambda_min, lambda_best, lambda_max for given m")
    geom_args(sp)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--samples", type=int, default=20_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_calibrate)

    sp = sub.add_parser("bound", help="evaluate an error bound")
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--t", type=float, help="default: 5 exp(-t^2/32) = 0.05")
    sp.add_argument("--znorm", type=float, required=True)
    sp.add_argument("--flavor", choices=("regularized", "constrained", "sharp"),
                    default="regularized")
    sp.set_defaults(func=cmd_bound)

    sp = sub.add_parser("solve", help="solve a lasso from CSV data")
    sp.add_argument("--input", nargs=2, metavar=("A_CSV", "Y_CSV"), required=True)
    sp.add_argument("--lambda", dest="lam", type=float, required=True,
                    help="lambda (l2), tau (l22) or the budget (constrained)")
    sp.add_argument("--reg", choices=("l1", "nuclear"), default="l1")
    sp.add_argument("--estimator", choices=("l2", "l22", "constrained"), default="l2")
    sp.add_argument("--max-iter", type=int, default=200_000)
    sp.add_argument("--output", help="write x as one value per line (default stdout)")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("simulate", help="run a configured sweep and write the trial CSV")
    sp.add_argument("--config", required=True)
    sp.add_argument("--workers", type=int)
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("figures", help="emit figure tables and SVG plots")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out-dir")
    sp.add_argument("--t", type=float, help="fixed t for the bound curve")
    sp.add_argument("--workers", type=int)
    sp.set_defaults(func=cmd_figures)

    sp = sub.add_parser("prove", help="numerical checks of the proof ingredients")
    sp.add_argument("--config", required=True)
    sp.set_defaults(func=cmd_prove)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (OutOfRangeError, ConvergenceError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
