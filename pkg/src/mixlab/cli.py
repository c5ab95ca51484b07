"""``mixlab`` command line: solve, eig, moser, regularity, maxprinciple and verify."""

from __future__ import annotations

import argparse
import contextlib
import logging
import os
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from .checks import (
    EXIT_CONFIG,
    EXIT_FAIL,
    EXIT_NUMERIC,
    EXIT_PASS,
    SUITE_NAMES,
    ConfigRejected,
    run_max_principle_check,
    run_suite,
    write_table,
)
from .config import ConfigError, ExperimentConfig, build_config
from .expr import EvaluationError
from .grid import write_csv
from .operator import assemble_mixed
from .regularity import boundary_fit, estimate_gradient_holder, moser_trace, sublinear_trace
from .solver import SolverError, solve_semilinear
from .spectral import eigengap, principal_eigenpair

log = logging.getLogger("mixlab")


def _thread_limit():
    """Honor ``MIXLAB_THREADS`` (0 or unset: library default)."""
    raw = os.environ.get("MIXLAB_THREADS", "0")
    try:
        limit = int(raw)
    except ValueError:
        raise ConfigError(f"MIXLAB_THREADS must be an integer, got {raw!r}") from None
    if limit <= 0:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=limit)


def _add_config_options(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat key=value configuration file")
    group = p.add_argument_group("configuration overrides")
    for fl in fields(ExperimentConfig):
        help_text = f"one of: {', '.join(SUITE_NAMES)}" if fl.name == "suite" else None
        group.add_argument(
            f"--{fl.name.replace('_', '-')}", dest=fl.name, default=None, metavar=fl.name.upper(), help=help_text
        )


def _config(args) -> ExperimentConfig:
    overrides = {fl.name: getattr(args, fl.name) for fl in fields(ExperimentConfig)}
    return build_config(overrides, args.config)


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _solve(cfg: ExperimentConfig, grid=None):
    grid = grid or cfg.grid
    g = cfg.g_expr
    res = solve_semilinear(grid, cfg.order, lambda x, u: g(x, u), cfg.solve_config, t=cfg.t)
    if not res.converged:
        raise SolverError("solve_semilinear", "not_converged", res.residual_sup, res.history)
    return res


def cmd_solve(cfg: ExperimentConfig, args) -> int:
    res = _solve(cfg)
    out = _out_dir(cfg)
    write_csv(res.u, out / "solution.csv")
    write_table(out / "history.csv", ("iter", "residual"), list(enumerate(res.history)))
    for event in res.events:
        log.info(event)
    print(f"converged in {res.iterations} iterations, residual {res.residual_sup:.3e}, "
          f"sup u = {res.u.sup():.10g} (normalization={cfg.normalization})")
    return EXIT_PASS


def cmd_eig(cfg: ExperimentConfig, args) -> int:
    op = assemble_mixed(cfg.grid, cfg.order, cfg.t)
    pair = principal_eigenpair(op)
    lam1, lam2 = eigengap(op, pair=pair)
    out = _out_dir(cfg)
    write_table(out / "eig.csv", ("s", "t", "n", "lambda1", "lambda2", "residual"),
                [(cfg.s, cfg.t, cfg.n, lam1, lam2, pair.residual)])
    if args.eigenfunction:
        write_csv(pair.phi1, out / "eigenfunction.csv")
    print(f"lambda1={lam1:.12g} lambda2={lam2:.12g} (normalization={cfg.normalization})")
    return EXIT_PASS


def cmd_moser(cfg: ExperimentConfig, args) -> int:
    u = _solve(cfg).u
    if args.sublinear:
        tr = sublinear_trace(u, cfg.order, cfg.m_max)
    else:
        tr = moser_trace(u, cfg.two_star, cfg.m_max)
    out = _out_dir(cfg)
    write_table(out / "moser.csv", ("m", "beta", "A"),
                [(m + 1, b, a) for m, (b, a) in enumerate(zip(tr.beta_seq, tr.A_seq))])
    print(f"C0_estimate={tr.C0_estimate:.10g} sup u={u.sup():.10g}" + (" (truncated)" if tr.truncated else ""))
    return EXIT_PASS


def cmd_regularity(cfg: ExperimentConfig, args) -> int:
    grid = cfg.grid
    sols = []
    for _ in range(cfg.levels):
        sols.append(_solve(cfg, grid).u)
        grid = grid.refine()
    alphas = [float(a) for a in args.alphas.split(",")]
    rep = estimate_gradient_holder(sols, alphas, window=args.window, order=args.order)
    fit = boundary_fit(sols[-1], args.fit_fraction, s=cfg.order, side=args.side)
    rep.boundary_slope_a = fit.boundary_slope_a
    rep.boundary_quadratic_b = fit.boundary_quadratic_b
    rep.r2_linear_model = fit.r2_linear_model
    rep.r2_fractional_model = fit.r2_fractional_model
    rep.fractional_coefficient = fit.fractional_coefficient
    out = _out_dir(cfg)
    write_table(out / "regularity.csv", ("alpha", "level", "quotient", "flag"),
                [(a, lv, q, "pass" if ok else "fail") for a, lv, q, ok in rep.rows])
    (out / "report.txt").write_text(f"normalization={cfg.normalization}\n" + rep.to_text())
    print(rep.to_text(), end="")
    return EXIT_PASS


def cmd_maxprinciple(cfg: ExperimentConfig, args) -> int:
    rep = run_max_principle_check(cfg)
    out = _out_dir(cfg)
    write_csv(rep.u, out / "solution.csv")
    print(f"{rep.verdict.upper()}: {rep.message} (normalization={cfg.normalization})")
    return EXIT_FAIL if rep.verdict == "fail" else EXIT_PASS


def cmd_verify(cfg: ExperimentConfig, args) -> int:
    if cfg.suite not in SUITE_NAMES:
        print(f"unknown suite {cfg.suite!r}; valid suites: {', '.join(SUITE_NAMES)}", file=sys.stderr)
        return EXIT_CONFIG
    code, results = run_suite(cfg)
    for r in results:
        note = f" [{r.note}]" if r.note else ""
        print(f"{r.status.upper():8s} {r.name}: measured {r.measured:.6g}, threshold {r.threshold}{note}")
    return code


COMMANDS = {
    "solve": cmd_solve,
    "eig": cmd_eig,
    "moser": cmd_moser,
    "regularity": cmd_regularity,
    "maxprinciple": cmd_maxprinciple,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mixlab", description="Mixed local-nonlocal operator laboratory")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        _add_config_options(p)
        if name == "eig":
            p.add_argument("--eigenfunction", action="store_true", help="also write eigenfunction.csv")
        elif name == "moser":
            p.add_argument("--sublinear", action="store_true", help="fractional-exponent trace B_m")
        elif name == "regularity":
            p.add_argument("--alphas", default="0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0")
            p.add_argument("--window", default="full", choices=("full", "interior", "left", "right"))
            p.add_argument("--order", type=int, default=1, choices=(1, 2))
            p.add_argument("--fit-fraction", type=float, default=0.1)
            p.add_argument("--side", default="left", choices=("left", "right"))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        cfg = _config(args)
        with _thread_limit():
            return COMMANDS[args.command](cfg, args)
    except (ConfigError, ConfigRejected) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(exc.reason_line())
        return EXIT_NUMERIC
    except (EvaluationError, np.linalg.LinAlgError) as exc:
        print(f"FAIL {args.command} {type(exc).__name__} nan")
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
