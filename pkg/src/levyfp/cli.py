"""Command line front end. Every subcommand writes CSV data and exits 0 only
when its embedded checks pass (1 on a failed check, 2 on bad input)."""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import csvio
from ._errors import ConfigError, DomainError, EvaluationError, NumericalError
from .analysis import run_probe
from .config import parse_config
from .operator import assemble_lfp
from .reference import Tc1Params, Tc3Params, exact_homogeneous, exact_kinetic
from .stable_density import eval_density
from .studies import (StudyReport, Trace, build_problem, conservation_tolerance, run_convergence_study,
                      run_decay_study, run_tail_study, simulate)
from .weights import VelocityGrid, build_weights

log = logging.getLogger("levyfp")


class Checks:
    """Collects named pass/fail checks and prints one line each."""

    def __init__(self):
        self.results = []

    def __call__(self, name, ok, detail=""):
        ok = bool(ok)
        self.results.append((name, ok))
        print(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f": {detail}" if detail else ""))
        return ok

    @property
    def ok(self):
        return all(ok for _, ok in self.results)


def _out(args, default):
    return Path(args.out) if args.out else Path(default)


def _grid(args):
    if args.J is not None:
        h = args.h if args.h is not None else args.L / args.J
        return VelocityGrid(h, args.J, args.K)
    if args.h is None or args.L is None:
        raise DomainError("give --J with --h or --L, or give --h and --L")
    return VelocityGrid(args.h, int(round(args.L / args.h)), args.K)


def _load_config(path):
    return parse_config(Path(path).read_text())


def cmd_density(args, check):
    v = np.linspace(args.vmin, args.vmax, args.n)
    mu = np.asarray(eval_density(args.alpha, v), dtype=float)
    check("density finite and positive", np.all(np.isfinite(mu)) and np.all(mu > 0))
    path = csvio.write_csv(_out(args, "density.csv"), ("v", "mu"), zip(v, mu), {"alpha": args.alpha})
    print(f"wrote {path}")


def cmd_weights(args, check):
    w = build_weights(args.alpha, args.h, args.K)
    k = np.arange(1, w.K + 1)
    check("weights positive", np.all(w.beta[1:] > 0) and w.beta_K_boundary > 0)
    rows = zip(k, w.beta[1:], w.scaled())
    cfg = {"alpha": args.alpha, "h": args.h, "K": w.K, "beta_K_boundary": w.beta_K_boundary}
    path = csvio.write_csv(_out(args, "weights.csv"), ("k", "beta", "beta_scaled"), rows, cfg)
    print(f"wrote {path}")


def cmd_operator(args, check):
    grid = _grid(args)
    op = assemble_lfp(args.alpha, grid, args.gamma)
    M = op.M
    kernel = float(np.max(np.abs(op.L_mat @ M)) / np.max(M))
    colmass = float(np.max(np.abs(op.mass_weights @ op.L_mat)))
    check("equilibrium in kernel", kernel <= 1e-12, f"|L M|/|M| = {kernel:.3e}")
    check("weighted mass conserved", colmass <= 1e-10 * np.max(np.abs(op.L_mat)), f"|w^T L| = {colmass:.3e}")
    cfg = {"alpha": args.alpha, "h": grid.h, "J": grid.J, "K": grid.K, "I_L": op.I_L,
           "gamma_decay": op.gamma_decay if op.gamma_decay is not None else "none"}
    rows = ([grid.v[i], M[i], *op.L_mat[i]] for i in range(op.n))
    cols = ("v", "M", *[f"L{j}" for j in range(-grid.J, grid.J + 1)])
    path = csvio.write_csv(_out(args, "operator.csv"), cols, rows, cfg,
                           notes=[f"kernel residual {kernel:.3e}"])
    vm_path = path.with_name(path.stem + "_vm.csv")
    csvio.write_csv(vm_path, ("v_half", "VM"), zip(grid.v[:-1] + 0.5 * grid.h, op.VM), cfg)
    print(f"I_L = {op.I_L:.6g}; wrote {path} and {vm_path}")


def cmd_probe(args, check):
    rows = run_probe(args.alpha, args.h, args.suite, eps=args.eps)
    r = np.array([(a, b) for _, a, b in rows])
    check("ratios finite and positive", np.all(np.isfinite(r)) and np.all(r > 0))
    q = r[:, 0] / r[:, 1]
    check("ratio stable between h and h/2 (factor 2)", np.all((q > 0.5) & (q < 2.0)),
          f"range [{q.min():.3f}, {q.max():.3f}]")
    cfg = {"alpha": args.alpha, "h": args.h, "suite": args.suite, "eps": args.eps}
    path = csvio.write_csv(_out(args, f"probe_{args.suite}.csv"), ("test", "ratio_h", "ratio_h2"), rows, cfg)
    print(f"wrote {path}")


def _assert_conservation(check, cfg, trace):
    drift = trace.mass_drift()
    tol = conservation_tolerance(cfg)
    check("weighted mass conserved", drift <= tol, f"relative drift {drift:.3e} (tol {tol:.0e})")


def _mark_success(prefix, check):
    if check.ok:
        Path(f"{prefix}.ok").write_text("ok\n")


_RUN_FLAGS = ("model", "scheme", "alpha", "h", "J", "L", "K_ratio", "gamma_decay", "Nx", "period", "dt", "T",
              "init", "init_scale", "seed", "every", "linear_solver")


def _run_config(args):
    text = Path(args.config).read_text() if args.config else ""
    overrides = {k: getattr(args, k) for k in _RUN_FLAGS if getattr(args, k, None) is not None}
    if overrides:
        kept = [ln for ln in text.splitlines() if ln.split("#", 1)[0].split("=", 1)[0].strip() not in overrides]
        text = "\n".join(kept + [f"{k} = {v}" for k, v in overrides.items()])
    return parse_config(text)


def _state_rows(problem, f):
    v = problem.op.grid.v
    if problem.kinetic:
        return ("x", "v", "f"), [(x, vj, f[i, j]) for i, x in enumerate(problem.pg.x) for j, vj in enumerate(v)]
    return ("v", "f"), list(zip(v, f))


def cmd_run(args, check):
    cfg = _run_config(args)
    prefix = args.out or cfg.output
    conf = cfg.as_dict()
    problem = build_problem(cfg)
    snap_every = args.snapshot_every
    counter = {"n": 0}

    def snapshot(t, f):
        if snap_every and counter["n"] % snap_every == 0:
            cols, rows = _state_rows(problem, f)
            csvio.write_csv(f"{prefix}_snapshot_t{t:.6f}.csv", cols, rows, conf)
        counter["n"] += 1

    f, trace = simulate(problem, on_snapshot=snapshot if snap_every else None)
    if not check("state finite", np.all(np.isfinite(f))):
        return
    _assert_conservation(check, cfg, trace)
    if cfg.scheme == "euler":
        check("l2(1/M) norm non-increasing", trace.norm_increases() == 0)
    if min(trace.min_f) < 0:
        print(f"note: minimum value {min(trace.min_f):.3e} (nonnegativity is monitored, not enforced)")
    e_inf, e_2 = trace.max_error()
    if not math.isnan(e_inf):
        print(f"max error: linf {e_inf:.4e}, l2mu {e_2:.4e}")
    csvio.write_csv(f"{prefix}_trace.csv", Trace.COLUMNS, trace.rows(), conf)
    cols, rows = _state_rows(problem, f)
    csvio.write_csv(f"{prefix}_state.csv", cols, rows, conf)
    _mark_success(prefix, check)
    print(f"wrote {prefix}_trace.csv, {prefix}_state.csv")


def cmd_reference(args, check):
    grid = _grid(args)
    v = grid.v
    if args.case == "tc1":
        f = np.asarray(exact_homogeneous(Tc1Params(args.alpha), args.t, v))
        rows = zip(v, f)
        cols = ("v", "f")
    else:
        x = args.period / args.Nx * np.arange(args.Nx)
        X, V = np.meshgrid(x, v, indexing="ij")
        f = exact_kinetic(Tc3Params(), args.t, X, V)
        rows = zip(X.ravel(), V.ravel(), f.ravel())
        cols = ("x", "v", "f")
    check("reference finite", np.all(np.isfinite(f)))
    cfg = {"case": args.case, "t": args.t, "alpha": args.alpha if args.case == "tc1" else 1.0,
           "h": grid.h, "J": grid.J}
    path = csvio.write_csv(_out(args, f"reference_{args.case}.csv"), cols, rows, cfg)
    print(f"wrote {path}")


def cmd_convergence(args, check):
    cfg = _load_config(args.config)
    prefix = args.out or cfg.output
    rep = run_convergence_study(cfg, args.levels, workers=args.workers)
    check("all levels completed", rep.failure is None, rep.failure or "")
    tol = conservation_tolerance(cfg)
    check("weighted mass conserved on every level", all(r.mass_drift <= tol for r in rep.rows))
    for r in rep.rows:
        print(f"  h={r.resolution:<10.6g} Nx={r.Nx:<5d} linf={r.error_linf:.4e} l2mu={r.error_l2mu:.4e} "
              f"order={StudyReport.fmt_order(r.order_l2mu)} ({r.runtime_seconds:.1f} s)")
    if args.min_order is not None:
        o = rep.fitted_order(3, args.norm)
        check(f"fitted order over last three levels >= {args.min_order}",
              not math.isnan(o) and o >= args.min_order, f"{o:.3f}")
    csvio.write_csv(f"{prefix}_convergence.csv", StudyReport.COLUMNS, rep.table(), cfg.as_dict())
    csvio.write_csv(f"{prefix}_timing.csv", ("h", "runtime_seconds"),
                    [(r.resolution, r.runtime_seconds) for r in rep.rows])
    _mark_success(prefix, check)
    print(f"wrote {prefix}_convergence.csv")


def cmd_decay(args, check):
    cfg = _load_config(args.config)
    prefix = args.out or cfg.output
    rep = run_decay_study(cfg)
    tol = conservation_tolerance(cfg)
    drift = rep.mass_drift()
    check("weighted mass conserved", drift <= tol, f"relative drift {drift:.3e}")
    print(f"fitted rate {rep.rate:.5f} (R^2 {rep.r2:.6f})")
    if not math.isnan(rep.ref_rate):
        print(f"reference rate {rep.ref_rate:.5f} (R^2 {rep.ref_r2:.6f}); max error {rep.error_linf:.4e}")
        if args.rate_tol is not None:
            rel = abs(rep.rate / rep.ref_rate - 1.0)
            check("rate matches reference", rel <= args.rate_tol, f"relative difference {rel:.4f}")
    csvio.write_csv(f"{prefix}_decay.csv", rep.COLUMNS, rep.table(), cfg.as_dict(),
                    notes=[f"rate {rep.rate!r}", f"r2 {rep.r2!r}", f"ref_rate {rep.ref_rate!r}"])
    _mark_success(prefix, check)
    print(f"wrote {prefix}_decay.csv")


def cmd_tails(args, check):
    cfg = _load_config(args.config)
    prefix = args.out or cfg.output
    times = [float(t) for t in args.times.split(",")] if args.times else None
    fits = run_tail_study(cfg, times)
    for fit in fits:
        if fit.skipped:
            print(f"  t={fit.t:g}: skipped ({fit.skipped})")
        else:
            print(f"  t={fit.t:g}: slope {fit.slope:.4f} (left {fit.slope_left:.4f}), {fit.points} points")
            if args.expect is not None:
                check(f"slope at t={fit.t:g} within {args.tol} of {args.expect}",
                      abs(fit.slope - args.expect) <= args.tol)
    rows = [(f.t, f.slope, f.slope_left, f.points, f.skipped or "") for f in fits]
    csvio.write_csv(f"{prefix}_tails.csv", ("t", "slope", "slope_left", "points", "skipped"), rows,
                    cfg.as_dict())
    _mark_success(prefix, check)
    print(f"wrote {prefix}_tails.csv")


def build_parser():
    p = argparse.ArgumentParser(prog="levyfp", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def grid_args(sp):
        sp.add_argument("--h", type=float)
        sp.add_argument("--J", type=int)
        sp.add_argument("--L", type=float)
        sp.add_argument("--K", type=int)

    s = sub.add_parser("density", help="tabulate the stable density")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--vmin", type=float, default=-10.0)
    s.add_argument("--vmax", type=float, default=10.0)
    s.add_argument("--n", type=int, default=201)
    s.set_defaults(func=cmd_density)

    s = sub.add_parser("weights", help="tabulate the fractional Laplacian weights")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--h", type=float, default=1.0)
    s.add_argument("--K", type=int, default=101)
    s.set_defaults(func=cmd_weights)

    s = sub.add_parser("operator", help="assemble the truncated operator and check it")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--gamma", type=float)
    grid_args(s)
    s.set_defaults(func=cmd_operator)

    s = sub.add_parser("probe", help="functional-inequality probes on the test battery")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--h", type=float, default=0.25)
    s.add_argument("--suite", choices=("poincare", "interp", "commutator"), required=True)
    s.add_argument("--eps", type=float, default=0.1)
    s.set_defaults(func=cmd_probe)

    s = sub.add_parser("run", help="run one configuration (config file and/or flags)")
    s.add_argument("config", nargs="?")
    for key in _RUN_FLAGS:  # values are validated by parse_config
        names = ["--" + key.replace("_", "-")] + (["--nx"] if key == "Nx" else [])
        s.add_argument(*names, dest=key)
    s.add_argument("--snapshot-every", type=int, default=0, help="write the state every n recorded snapshots")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("reference", help="tabulate a reference solution")
    s.add_argument("--case", choices=("tc1", "tc3"), required=True)
    s.add_argument("--t", type=float, default=0.0)
    s.add_argument("--alpha", type=float, default=1.0)
    s.add_argument("--Nx", type=int, default=64)
    s.add_argument("--period", type=float, default=2 * math.pi)
    grid_args(s)
    s.set_defaults(func=cmd_reference)

    s = sub.add_parser("convergence", help="mesh refinement study")
    s.add_argument("config")
    s.add_argument("--levels", type=int)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--min-order", type=float)
    s.add_argument("--norm", choices=("l2mu", "linf"), default="l2mu")
    s.set_defaults(func=cmd_convergence)

    s = sub.add_parser("decay", help="long-time decay to equilibrium")
    s.add_argument("config")
    s.add_argument("--rate-tol", type=float)
    s.set_defaults(func=cmd_decay)

    s = sub.add_parser("tails", help="tail slopes of the homogeneous solution")
    s.add_argument("config")
    s.add_argument("--times")
    s.add_argument("--expect", type=float)
    s.add_argument("--tol", type=float, default=0.15)
    s.set_defaults(func=cmd_tails)

    for sp in sub.choices.values():
        sp.add_argument("--out", help="output file (or prefix for config-driven commands)")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    check = Checks()
    try:
        args.func(args, check)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 2
    except (DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (EvaluationError, NumericalError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    return 0 if check.ok else 1


if __name__ == "__main__":
    sys.exit(main())
