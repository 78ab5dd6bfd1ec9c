"""Command-line front end: ``radii``, ``solve``, ``certify`` and ``sweep``.

Exit codes: 0 success, 2 certification violation, 3 config or validation
error, 4 solver non-convergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np

from .certify import CertificationError, certify, check_envelope, slack
from .config import ConfigError, ExperimentConfig, Sweep, density_of, starts_from
from .families import generalized_q
from .records import write_sweep_csv, write_trace_csv
from .scalar import MajorantError, a_priori_bound, compute_radii, newton_scalar_map, scalar_sequence
from .solver import newton_solve

EXIT_OK = 0
EXIT_VIOLATION = 2
EXIT_CONFIG = 3
EXIT_NONCONVERGED = 4

ROOT_TOL = 1e-8
CYCLE_TOL = 1e-10

log = logging.getLogger("majorant_newton")


def _radii(cfg: ExperimentConfig, model):
    try:
        return compute_radii(model, cfg.kappa)
    except MajorantError as exc:
        raise ConfigError(str(exc)) from None


def _dump_json(path: Optional[Path], payload: dict) -> None:
    if path is not None:
        path.write_text(json.dumps(payload, indent=2, default=_np_default))


def _np_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def run_radii(cfg: ExperimentConfig, out_dir=None, stream=None) -> int:
    stream = stream or sys.stdout
    model = cfg.build_model()
    rep = _radii(cfg, model)
    print(f"majorant: {model.name}", file=stream)
    for key in ("kappa", "nu", "rho", "sigma", "r"):
        print(f"{key:>6} = {getattr(rep, key):.15g}", file=stream)
    print(f"{'optimal':>6} = {rep.rho_is_optimal}", file=stream)
    if rep.unbounded:
        print("note: f' < 0 up to the scan cap; nu reported at the cap", file=stream)
    if rep.rho_noncontiguous:
        print("note: |n_f(t)|/t returns below 1 after rho; first crossing reported", file=stream)
    _dump_json(cfg.output(cfg.report_path, out_dir, None), {"model": model.name, **rep.as_dict()})
    return EXIT_OK


def _check_inside(problem, x0) -> None:
    center = problem.x_star if problem.x_star is not None else x0
    if np.linalg.norm(x0 - center) >= problem.kappa:
        raise ConfigError(f"x0 {x0.tolist()} lies outside the kappa ball")


def _starts(cfg, problem, r):
    center = problem.x_star if problem.x_star is not None else np.zeros(problem.dim)
    return starts_from(cfg, r, problem.dim, center)


def run_solve(cfg: ExperimentConfig, out_dir=None) -> int:
    model = cfg.build_model()
    problem = cfg.build_problem(model)
    rep = _radii(cfg, model) if problem.x_star is not None else None
    r = rep.r if rep is not None else math.inf
    starts = _starts(cfg, problem, r)
    for x0 in starts:
        _check_inside(problem, x0)
    path = cfg.output(cfg.csv_path, out_dir, "trace.csv")
    multi = len(starts) > 1
    all_ok = True
    for i, x0 in enumerate(starts):
        trace = newton_solve(problem, x0, cfg.max_iters, cfg.step_atol, cfg.residual_atol)
        t = None
        if trace.error_norms is not None and 0 < trace.error_norms[0] < r:
            t = scalar_sequence(model, trace.error_norms[0], cfg.max_iters, radius=r).t
        write_trace_csv(path, trace, t, model.p, run=i if multi else None, append=i > 0)
        log.info("run %d: %s after %d iterations", i, trace.status, trace.iterations)
        all_ok = all_ok and trace.converged
    return EXIT_OK if all_ok else EXIT_NONCONVERGED


def run_certify(cfg: ExperimentConfig, out_dir=None) -> int:
    model = cfg.build_model()
    problem = cfg.build_problem(model)
    if problem.x_star is None:
        raise ConfigError("certification needs a problem with a known root")
    rep = _radii(cfg, model)
    starts = _starts(cfg, problem, rep.r)
    try:
        report = certify(problem, model, starts, samples=cfg.samples, probes=cfg.probes,
                         seed=cfg.seed, max_iters=cfg.max_iters, step_atol=cfg.step_atol,
                         residual_atol=cfg.residual_atol, radii=rep)
    except CertificationError as exc:
        raise ConfigError(str(exc)) from None
    path = cfg.output(cfg.report_path, out_dir, "report.json")
    path.write_text(report.to_json(indent=2))
    status = "ok" if report.ok else f"{len(report.violations)} violation(s)"
    print(f"certify {problem.name} vs {model.name}: {status} "
          f"(hypothesis margin {report.hypothesis_margin:.3g})")
    for v in report.violations[:10]:
        print(f"  {v['check']}: lhs={v['lhs']:.6g} rhs={v['rhs']:.6g} at {v['where']}")
    return EXIT_OK if report.ok else EXIT_VIOLATION


def sweep_entry(problem, model, rep, x0, fraction, cfg, density=None):
    """Solve from one start and summarize the run as a sweep row."""
    trace = newton_solve(problem, x0, cfg.max_iters, cfg.step_atol, cfg.residual_atol)
    errs = trace.error_norms
    t0 = errs[0]
    row = {
        "x0_norm": t0,
        "fraction": fraction,
        "converged": trace.converged and errs[-1] <= ROOT_TOL,
        "iterations": trace.iterations,
        "final_error": errs[-1],
        "envelope_ok": None,
        "order_tail": None,
        "two_cycle": (len(trace.iterates) > 2
                      and float(np.linalg.norm(trace.iterates[2] - trace.iterates[0])) <= CYCLE_TOL),
        "q_bound_ok": None,
        "status": trace.status,
    }
    p = model.p
    if p is not None:
        order = [b / a ** (p + 1) for a, b in zip(errs, errs[1:]) if a > 0]
        row["order_tail"] = order[-1] if order else None
    if 0 < t0 < rep.r:
        scalar = scalar_sequence(model, t0, cfg.max_iters, radius=rep.r)
        row["envelope_ok"] = check_envelope(trace, scalar).ok
        if p is not None:
            q = generalized_q(density, t0) if density is not None else abs(newton_scalar_map(model, t0)) / t0
            row["q_bound_ok"] = all(
                e <= a_priori_bound(t0, q * t0, p, k) + slack(t0) for k, e in enumerate(errs))
    return row, errs


def _threads() -> Optional[int]:
    raw = os.environ.get("MAJORANT_NEWTON_THREADS")
    if not raw:
        return None
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"MAJORANT_NEWTON_THREADS must be an integer, got {raw!r}") from None


def run_sweep(cfg: ExperimentConfig, out_dir=None) -> int:
    if not isinstance(cfg.x0, Sweep):
        raise ConfigError("sweep needs x0 as a radial sweep {count, min_frac, max_frac} or {fractions}")
    model = cfg.build_model()
    problem = cfg.build_problem(model)
    if problem.x_star is None:
        raise ConfigError("sweep needs a problem with a known root")
    rep = _radii(cfg, model)
    starts = _starts(cfg, problem, rep.r)
    for x0 in starts:
        _check_inside(problem, x0)
    density = density_of(cfg.majorant, cfg.base_dir)
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        results = list(pool.map(
            lambda a: sweep_entry(problem, model, rep, a[0], a[1], cfg, density),
            zip(starts, cfg.x0.fractions)))
    results.sort(key=lambda rt: rt[0]["x0_norm"])
    rows = [rt[0] for rt in results]
    write_sweep_csv(cfg.output(cfg.csv_path, out_dir, "sweep.csv"), rows)
    plot = cfg.output(cfg.plot_path, out_dir, None)
    if plot is not None:
        from .plotting import sweep_svg

        sweep_svg(plot, rows, [rt[1] for rt in results])
    for row in rows:
        print(f"x0/r={row['fraction']:<8.4g} converged={row['converged']!s:<5} "
              f"iters={row['iterations']:<3} err={row['final_error']:.3g} "
              f"two_cycle={row['two_cycle']}")
    return EXIT_OK


COMMANDS = {"radii": run_radii, "solve": run_solve, "certify": run_certify, "sweep": run_sweep}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="majorant-newton",
                                     description="Newton's method under majorant conditions")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="experiment config (JSON)")
    parser.add_argument("--out-dir", default=None, help="directory for relative output paths")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = ExperimentConfig.load(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out_dir is not None:
            Path(args.out_dir).mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, args.out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
