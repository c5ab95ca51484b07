"""Verification checks, the strong-maximum-principle probe and the suite runner.

Every check returns a :class:`CheckResult` carrying a measured value, its
threshold, a verdict and a plot-ready table.  ``run_suite`` writes one CSV per
check plus ``summary.txt`` and maps the verdicts to an exit code.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.special import gamma

from .config import ExperimentConfig
from .expr import parse_expression
from .grid import FractionalOrder, Grid, GridFunction, seminorm_sq_values
from .operator import assemble_fractional, assemble_mixed
from .regularity import (
    DIVERGENCE_THRESHOLD,
    boundary_fit,
    convexity_gap_values,
    fractional_holder_ratio,
    moser_trace,
    phi_values,
    second_difference_lp,
    sublinear_trace,
    w2p_window,
)
from .solver import SolverError, continuation_solve, detect_nonuniqueness, solve_linear, solve_semilinear
from .spectral import DENSE_LIMIT, dense_eigenvalues, eigengap, principal_eigenpair

log = logging.getLogger(__name__)

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


class ConfigRejected(ValueError):
    """The configured problem violates a check's hypotheses."""


@dataclass
class CheckResult:
    name: str
    anchor: str
    measured: float
    threshold: str
    status: str  # pass, fail, rejected or error
    header: tuple[str, ...] = ()
    rows: list[tuple] = field(default_factory=list)
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "pass"


def _verdict(ok: bool) -> str:
    return "pass" if ok else "fail"


def bump_fractional_laplacian(x: np.ndarray, s: float) -> np.ndarray:
    """Closed form of ``(-Delta)^s (1 - x^2)_+^(1+s)`` inside ``(-1, 1)``."""
    c = 4.0**s * gamma(2 + s) * gamma(0.5 + s) / gamma(0.5)
    return c * (1.0 - (1.0 + 2.0 * s) * np.asarray(x) ** 2)


def _solve_f(cfg: ExperimentConfig, grid: Grid, order, f_text: str | None = None, t: float | None = None):
    expr = cfg.f_expr if f_text is None else parse_expression(f_text)
    op = assemble_mixed(grid, order, cfg.t if t is None else t)
    f = GridFunction(grid, expr(grid.nodes))
    return solve_linear(op, f, cfg.solve_config), op


def _g_callable(text: str):
    expr = parse_expression(text)
    return lambda x, u: expr(x, u)


def check_operator_consistency(cfg: ExperimentConfig, s_values=(0.25, 0.5, 0.75), n: int = 1023) -> CheckResult:
    grid = Grid(-1.0, 1.0, n)
    x = grid.nodes
    centre = np.arange(n // 2 - 2, n // 2 + 3)
    rows, worst = [], 0.0
    for s in s_values:
        A = assemble_fractional(grid, FractionalOrder(s))
        v = A @ np.clip(1.0 - x**2, 0.0, None) ** (1 + s)
        exact = bump_fractional_laplacian(x[centre], s)
        rel = np.abs(v[centre] - exact) / np.abs(exact)
        worst = max(worst, float(rel.max()))
        rows += [(s, x[i], v[i], e, r) for i, e, r in zip(centre, exact, rel)]
    return CheckResult(
        "operator_consistency", "principal-value definition of the fractional Laplacian",
        worst, "<= 1e-3", _verdict(worst <= 1e-3),
        ("s", "x", "discrete", "exact", "relerr"), rows, "normalization=standard",
    )


def check_local_eigenvalue(cfg: ExperimentConfig, n_values=(63, 255, 1023, 2047)) -> CheckResult:
    rows, ok, rel_pi = [], True, math.nan
    for n in n_values:
        grid = Grid(0.0, 1.0, n)
        pair = principal_eigenpair(assemble_mixed(grid, 0.5, 0.0))
        exact = 2.0 / grid.h**2 * (1.0 - math.cos(math.pi * grid.h))
        rel_exact = abs(pair.lambda1 - exact) / exact
        rel_pi = abs(pair.lambda1 - math.pi**2) / math.pi**2
        ok &= rel_exact <= 1e-8
        rows.append((n, pair.lambda1, exact, rel_exact, rel_pi))
    ok &= rel_pi <= 1e-3
    return CheckResult(
        "local_eigenvalue", "principal eigenvalue, variational characterization",
        rel_pi, "<= 1e-3 vs pi^2; <= 1e-8 vs closed form", _verdict(ok),
        ("n", "lambda1", "closed_form", "relerr_closed_form", "relerr_pi2"), rows,
    )


def check_mixed_eigen(cfg: ExperimentConfig) -> CheckResult:
    op = assemble_mixed(cfg.grid, cfg.order, cfg.t)
    pair = principal_eigenpair(op)
    lam1, lam2 = eigengap(op, pair=pair)
    rel = math.nan
    ok = True
    if op.n <= DENSE_LIMIT:
        d1, d2 = dense_eigenvalues(op, 2)
        rel = max(abs(lam1 - d1) / d1, abs(lam2 - d2) / d2)
        ok &= rel <= 1e-6
    min_phi = float(pair.phi1.values.min())
    ok &= lam2 - lam1 > 1e-6 * lam1 and min_phi > 0
    if cfg.t > 0:
        ok &= lam1 > (math.pi / cfg.grid.length) ** 2
    return CheckResult(
        "mixed_eigen", "simplicity and sign of the principal eigenpair",
        rel, "<= 1e-6 vs dense; gap > 1e-6 lambda1; min phi1 > 0", _verdict(ok),
        ("s", "t", "n", "lambda1", "lambda2", "residual"),
        [(cfg.s, cfg.t, cfg.n, lam1, lam2, pair.residual)],
        f"normalization={cfg.normalization}; min phi1={min_phi:.6e}",
    )


@dataclass
class MaxPrincipleReport:
    verdict: str  # pass, fail or trivial
    min_u: float
    max_u: float
    margin: float
    message: str
    u: GridFunction | None = None


def _sample_g(g, grid: Grid, bound: float, points: int = 100) -> float:
    xs = np.linspace(grid.a, grid.b, points + 2)[1:-1]
    us = np.linspace(-bound, bound, points)
    X, U = np.meshgrid(xs, us, indexing="ij")
    return float(np.min(g(X, U)))


def run_max_principle_check(cfg: ExperimentConfig) -> MaxPrincipleReport:
    """Solve ``L u = g(x, u)`` and test strict interior positivity with a quantitative margin.

    ``g`` must be nonnegative on ``Omega x [-|u|_inf, |u|_inf]`` (10^4 samples);
    otherwise :class:`ConfigRejected` is raised.
    """
    g = _g_callable(cfg.g)
    grid = cfg.grid
    if _sample_g(g, grid, 0.0) < 0:
        raise ConfigRejected("g takes negative values; maximum principle hypotheses unmet")
    res = solve_semilinear(grid, cfg.order, g, cfg.solve_config, t=cfg.t)
    if not res.converged:
        raise SolverError("run_max_principle_check", "not_converged", res.residual_sup, res.history)
    u = res.u
    bound = u.sup()
    if _sample_g(g, grid, bound) < 0:
        raise ConfigRejected("g takes negative values; maximum principle hypotheses unmet")
    lo, hi = float(u.values.min()), float(u.values.max())
    if bound == 0.0:
        return MaxPrincipleReport("trivial", lo, hi, 0.0, "trivial solution, principle vacuous", u)
    margin = 1e-3 * hi * grid.h / grid.length
    ok = lo > 0 and lo >= margin
    msg = f"min u = {lo:.6e}, required >= {margin:.6e}"
    return MaxPrincipleReport(_verdict(ok), lo, hi, margin, msg, u)


def check_max_principle(cfg: ExperimentConfig, s_values=(0.25, 0.5, 0.75)) -> CheckResult:
    rows, ok, worst = [], True, math.inf
    for s in s_values:
        rep = run_max_principle_check(cfg.replace(s=s))
        rows.append((s, rep.min_u, rep.max_u, rep.margin, rep.verdict))
        ok &= rep.verdict == "pass"
        worst = min(worst, rep.min_u / rep.margin if rep.margin > 0 else 0.0)
    return CheckResult(
        "max_principle", "strong maximum principle",
        worst, "min u / margin > 1", _verdict(ok),
        ("s", "min_u", "max_u", "margin", "verdict"), rows, f"g={cfg.g}; normalization={cfg.normalization}",
    )


def _random_truncation(cfg: ExperimentConfig, samples: int):
    rng = np.random.default_rng(cfg.seed)
    beta = 4.0 - rng.uniform(0.0, 3.0, samples)  # (1, 4]
    T = 2.0 - rng.uniform(0.0, 2.0, samples)  # (0, 2]
    a = rng.uniform(-3.0, 3.0, samples) * T
    b = rng.uniform(-3.0, 3.0, samples) * T
    return a, b, beta, T


def check_convexity(cfg: ExperimentConfig, samples: int = 100_000) -> CheckResult:
    a, b, beta, T = _random_truncation(cfg, samples)
    gap = convexity_gap_values(a, b, beta, T)
    worst = float(gap.min())
    k = int(np.argmin(gap))
    return CheckResult(
        "convexity", "convexity inequality for the truncated power",
        worst, ">= -1e-12", _verdict(worst >= -1e-12),
        ("a", "b", "beta", "T", "gap"), [(a[k], b[k], beta[k], T[k], worst)], f"samples={samples}",
    )


def check_truncation(cfg: ExperimentConfig, samples: int = 100_000) -> CheckResult:
    a, b, beta, T = _random_truncation(cfg, samples)
    fa, da = phi_values(a, beta, T)
    fb, _ = phi_values(b, beta, T)
    absa = np.abs(a)
    lip = beta * T ** (beta - 1)
    scale = lambda r: np.maximum(1.0, np.abs(r))  # noqa: E731
    excess = {
        "phi<=|t|^beta": (fa - absa**beta) / scale(absa**beta),
        "|phi'|<=beta|t|^(beta-1)": (np.abs(da) - beta * absa ** (beta - 1)) / scale(beta * absa ** (beta - 1)),
        "|t phi'|<=beta phi": (np.abs(a * da) - beta * fa) / scale(beta * fa),
        "lipschitz": (np.abs(fa - fb) - lip * np.abs(a - b)) / scale(lip * np.abs(a - b)),
    }
    rows = [(k, float(v.max())) for k, v in excess.items()]
    worst = max(v for _, v in rows)
    return CheckResult(
        "truncation", "pointwise bounds and Lipschitz constant of the truncated power",
        worst, "<= 1e-12", _verdict(worst <= 1e-12), ("bound", "max_excess"), rows, f"samples={samples}",
    )


def _nonincreasing_after_peak(seq) -> bool:
    k = int(np.argmax(seq))
    tail = np.asarray(seq[k:])
    return bool(np.all(np.diff(tail) <= 1e-12 * tail[:-1]))


def check_moser(cfg: ExperimentConfig) -> CheckResult:
    rows, ok, c0 = [], True, []
    grid = cfg.grid
    for level in range(2):
        u, _ = _solve_f(cfg, grid, cfg.order)
        tr = moser_trace(u, cfg.two_star, cfg.m_max)
        ok &= not tr.truncated and all(map(math.isfinite, tr.A_seq)) and _nonincreasing_after_peak(tr.A_seq)
        ok &= u.sup() <= tr.C0_estimate * tr.A_seq[0]
        c0.append(tr.C0_estimate)
        rows += [(grid.n, m + 1, b, A) for m, (b, A) in enumerate(zip(tr.beta_seq, tr.A_seq))]
        grid = grid.refine()
    change = abs(c0[1] / c0[0] - 1.0)
    ok &= change <= 0.10
    return CheckResult(
        "moser", "Moser iteration bound A_(m+1) <= C0 A_1",
        change, "C0 change <= 0.10; |u|_inf <= C0 A_1", _verdict(ok),
        ("n", "m", "beta", "A"), rows, f"two_star={cfg.two_star}; C0={c0}",
    )


def check_sublinear(cfg: ExperimentConfig, g_text: str = "1 + abs(u)^0.5", s: float = 0.25, starts: int = 10) -> CheckResult:
    order = FractionalOrder(s, cfg.normalization)
    grid = cfg.grid
    g = _g_callable(g_text)
    op = assemble_mixed(grid, order, cfg.t)
    rng = np.random.default_rng(cfg.seed)
    sols, rows = [], []
    for k in range(starts):
        u0 = rng.uniform(-1.0, 1.0, grid.n) * 10.0 ** rng.uniform(-2, 2)
        res = solve_semilinear(grid, order, g, cfg.solve_config, t=cfg.t, u0=u0, op=op)
        if not res.converged:
            raise SolverError("check_sublinear", "not_converged", res.residual_sup, res.history)
        sols.append(res.u.values)
        rows.append(("start", k, res.u.sup(), res.iterations))
    spread = max(float(np.max(np.abs(v - sols[0]))) for v in sols)
    ok = spread <= 1e-6
    chat = []
    u_grid = grid
    u = GridFunction(grid, sols[0])
    for level in range(2):
        if level:
            u_grid = u_grid.refine()
            u = solve_semilinear(u_grid, order, g, cfg.solve_config, t=cfg.t).u
        tr = sublinear_trace(u, order, cfg.m_max)
        ok &= not tr.truncated and all(map(math.isfinite, tr.A_seq))
        chat.append(u.sup() / tr.A_seq[0])
        rows += [("trace", u_grid.n, b, B) for b, B in zip(tr.beta_seq, tr.A_seq)]
    ok &= abs(chat[1] / chat[0] - 1.0) <= 0.10
    lam1 = principal_eigenpair(op).lambda1
    flag, first, second = detect_nonuniqueness(
        grid, order, lambda x, u: lam1 * u, cfg.solve_config, t=cfg.t, seed=cfg.seed, op=op
    )
    rows.append(("resonant", grid.n, first.u.sup(), second.u.sup()))
    ok &= flag
    note = f"g={g_text}; s={s}; C_hat={chat}; resonant={'non-unique/resonant' if flag else 'unique'}"
    return CheckResult(
        "sublinear", "uniform bound for strictly sublinear growth; resonant counterexample",
        spread, "spread <= 1e-6; resonant case flagged", _verdict(ok), ("kind", "k", "a", "b"), rows, note,
    )


HOLDER_PAIRS = (
    (0.1, 0.5), (0.2, 0.5), (0.25, 0.45), (0.3, 0.35),
    (0.35, 0.5), (0.4, 0.5), (0.45, 0.6), (0.6, 0.5), (0.75, 0.5),
)


def hat_profile(grid: Grid) -> GridFunction:
    return GridFunction(grid, grid.boundary_distance)


def check_holder_threshold(cfg: ExperimentConfig, pairs=HOLDER_PAIRS, n_values=(511, 1023, 2047)) -> CheckResult:
    rows, ok = [], True
    worst_growth = math.inf
    for s, alpha in pairs:
        ratios = [fractional_holder_ratio(hat_profile(Grid(0.0, 1.0, n)), s, alpha) for n in n_values]
        growth = [b / a for a, b in zip(ratios, ratios[1:])]
        total = alpha + 2 * s
        if total <= 0.95:
            expected = "stable"
            good = all(abs(r / ratios[0] - 1.0) <= 0.2 for r in ratios)
        elif total >= 1.2:
            expected = "grows"
            good = all(gr >= 1.3 for gr in growth)
            worst_growth = min(worst_growth, min(growth))
        else:
            expected, good = "unclassified", True
        ok &= good
        for n, r, gr in zip(n_values, ratios, [math.nan] + growth):
            rows.append((s, alpha, n, r, gr, expected, _verdict(good)))
    return CheckResult(
        "holder_threshold", "Hölder estimate of the fractional term, threshold alpha + 2s <= 1",
        worst_growth, "stable within 20% if alpha+2s <= 0.95; growth >= 1.3 if alpha+2s >= 1.2", _verdict(ok),
        ("s", "alpha", "n", "ratio", "growth", "expected", "verdict"), rows,
    )


def check_boundary(cfg: ExperimentConfig, s: float = 0.25, n_values=(1023, 2047)) -> CheckResult:
    rows, ok, slopes = [], True, []
    order = FractionalOrder(s, cfg.normalization)
    for n in n_values:
        u, _ = _solve_f(cfg, Grid(cfg.a, cfg.b, n), order, "1", 1.0)
        rep = boundary_fit(u, 0.1, s=s)
        ok &= rep.r2_linear_model > rep.r2_fractional_model
        slopes.append(rep.boundary_slope_a)
        rows.append((n, rep.boundary_slope_a, rep.boundary_quadratic_b, rep.r2_linear_model, rep.r2_fractional_model))
    change = abs(slopes[-1] / slopes[-2] - 1.0)
    ok &= change <= 0.02
    return CheckResult(
        "boundary", "linear boundary behaviour a d + O(d^2)",
        change, "R2 linear > R2 fractional; slope change <= 0.02", _verdict(ok),
        ("n", "a", "b", "r2_linear", "r2_fractional"), rows, f"s={s}; side=left",
    )


WEAK_FORM_CASES = (("1 + u/2", 0.3), ("1 + abs(u)^0.5", 0.25))


def check_weak_form(cfg: ExperimentConfig, cases=WEAK_FORM_CASES, tests: int = 50) -> CheckResult:
    rng = np.random.default_rng(cfg.seed)
    grid, h = cfg.grid, cfg.grid.h
    rows, worst = [], 0.0
    for g_text, s in cases:
        g = _g_callable(g_text)
        order = FractionalOrder(s, cfg.normalization)
        op = assemble_mixed(grid, order, cfg.t)
        res = solve_semilinear(grid, order, g, cfg.solve_config, t=cfg.t, op=op)
        if not res.converged:
            raise SolverError("check_weak_form", "not_converged", res.residual_sup, res.history)
        u = res.u.values
        Au, gu = op.matvec(u), g(grid.nodes, u)
        phis = rng.uniform(-1.0, 1.0, (tests, grid.n))
        lhs = h * phis @ Au
        rhs = h * phis @ gu
        # scale by h sum |g phi| so sign changes in phi cannot blow up the ratio
        rel = np.abs(lhs - rhs) / (h * np.abs(phis) @ np.abs(gu))
        worst = max(worst, float(rel.max()))
        rows += [(g_text, s, k, l, r, e) for k, (l, r, e) in enumerate(zip(lhs, rhs, rel))]
    return CheckResult(
        "weak_form", "weak solution identity against test functions",
        worst, "<= 1e-6", _verdict(worst <= 1e-6), ("g", "s", "test", "bilinear", "load", "relerr"), rows,
    )


def random_smooth_fields(grid: Grid, count: int, modes: int, seed: int) -> np.ndarray:
    """``(n, count)`` sine series with ``N(0, 1)/k`` coefficients; same draws on every grid."""
    rng = np.random.default_rng(seed)
    k = np.arange(1, modes + 1)
    coef = rng.standard_normal((count, modes)) / k
    shape = np.sin(np.pi * np.outer((grid.nodes - grid.a) / grid.length, k))
    return shape @ coef.T


def norm_ratios(grid: Grid, s: float, fields: np.ndarray) -> np.ndarray:
    semi = seminorm_sq_values(grid, s, fields)
    padded = np.vstack([np.zeros(fields.shape[1]), fields, np.zeros(fields.shape[1])])
    grad = np.sum(np.diff(padded, axis=0) ** 2, axis=0) / grid.h
    return semi / grad


def check_norm_equivalence(cfg: ExperimentConfig, n_values=(511, 1023), count: int = 1000, modes: int = 8) -> CheckResult:
    rows, K = [], []
    for n in n_values:
        grid = Grid(cfg.a, cfg.b, n)
        r = norm_ratios(grid, cfg.s, random_smooth_fields(grid, count, modes, cfg.seed))
        K.append(float(r.max()))
        rows.append((n, cfg.s, float(r.max()), float(r.min()), float(np.median(r))))
    change = abs(K[-1] / K[-2] - 1.0)
    return CheckResult(
        "norm_equivalence", "equivalence of the X_0^1 norm and the H^1 seminorm",
        change, "K change <= 0.15", _verdict(change <= 0.15),
        ("n", "s", "K", "ratio_min", "ratio_median"), rows, f"fields={count}; modes={modes}",
    )


def check_continuity(cfg: ExperimentConfig, steps=(4, 8)) -> CheckResult:
    rows, gaps, ok = [], [], True
    f = GridFunction(cfg.grid, cfg.f_expr(cfg.grid.nodes))
    op = assemble_mixed(cfg.grid, cfg.order, 1.0)
    for m in steps:
        ts = [k / m for k in range(m + 1)]
        sols = continuation_solve(cfg.grid, cfg.order, f, ts, cfg.solve_config, op=op)
        sups = [u.sup() for u in sols]
        ok &= all(b < a for a, b in zip(sups, sups[1:]))
        gaps.append(max((b - a).sup() for a, b in zip(sols, sols[1:])))
        rows += [(1.0 / m, t, sup) for t, sup in zip(ts, sups)]
    ratio = gaps[1] / gaps[0]
    ok &= 0.3 <= ratio <= 0.7
    return CheckResult(
        "continuity", "method of continuity along L_t",
        ratio, "sup strictly decreasing; gap ratio in [0.3, 0.7]", _verdict(ok),
        ("step", "t", "sup_u"), rows, f"normalization={cfg.normalization}",
    )


def w2p_s_grid() -> np.ndarray:
    """20 orders: 0.05..0.95 in steps of 0.05 plus a point just past the branch switch."""
    return np.sort(np.append(np.round(np.linspace(0.05, 0.95, 19), 12), 0.5 + 1e-9))


def check_w2p(cfg: ExperimentConfig, s: float = 0.75, p_values=(1.5, 3.0), n_values=(511, 1023, 2047)) -> CheckResult:
    rows, ok = [], True
    for sv in w2p_s_grid():
        for dim in (1, 2, 3):
            lo, hi = w2p_window(sv, dim)
            want = (1.0, math.inf) if sv <= 0.5 else (float(dim), dim / (2 * sv - 1))
            good = (lo, hi) == want and lo < hi
            ok &= good
            rows.append(("window", sv, dim, lo, hi, _verdict(good)))
    order = FractionalOrder(s, cfg.normalization)
    norms = {p: [] for p in p_values}
    for n in n_values:
        u, _ = _solve_f(cfg, Grid(cfg.a, cfg.b, n), order, "1", 1.0)
        for p in p_values:
            norms[p].append(second_difference_lp(u, p))
    worst = 0.0
    for p in p_values:
        growth = [b / a for a, b in zip(norms[p], norms[p][1:])]
        worst = max(worst, max(growth))
        good = all(gr <= DIVERGENCE_THRESHOLD for gr in growth)
        ok &= good
        for n, v, gr in zip(n_values, norms[p], [math.nan] + growth):
            rows.append(("second_difference", s, p, n, v, gr))
    return CheckResult(
        "w2p", "W^(2,p) solvability window",
        worst, f"window formula exact; growth <= {DIVERGENCE_THRESHOLD}", _verdict(ok),
        ("kind", "a", "b", "c", "d", "e"), rows, f"1-D window at s={s}: {w2p_window(s, 1)}",
    )


SUITES: dict[str, tuple[Callable[[ExperimentConfig], CheckResult], ...]] = {
    "operator": (check_operator_consistency,),
    "eig": (check_local_eigenvalue, check_mixed_eigen),
    "maxprinciple": (check_max_principle,),
    "convexity": (check_convexity,),
    "truncation": (check_truncation,),
    "moser": (check_moser,),
    "sublinear": (check_sublinear,),
    "holder": (check_holder_threshold,),
    "boundary": (check_boundary,),
    "weakform": (check_weak_form,),
    "norms": (check_norm_equivalence,),
    "continuity": (check_continuity,),
    "w2p": (check_w2p,),
}
SUITE_NAMES = tuple(SUITES) + ("all",)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_table(path, header, rows) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def run_check(check, cfg: ExperimentConfig) -> CheckResult:
    """Run one check fail-soft: exceptions become ``error``/``rejected`` results."""
    name = check.__name__.removeprefix("check_")
    try:
        return check(cfg)
    except ConfigRejected as exc:
        return CheckResult(name, "", math.nan, "", "rejected", note=str(exc))
    except SolverError as exc:
        return CheckResult(name, "", exc.residual, "", "error", note=exc.reason_line())
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        log.exception("check %s failed", name)
        return CheckResult(name, "", math.nan, "", "error", note=f"{type(exc).__name__}: {exc}")


def exit_code(results) -> int:
    statuses = {r.status for r in results}
    if "error" in statuses:
        return EXIT_NUMERIC
    if "rejected" in statuses:
        return EXIT_CONFIG
    if "fail" in statuses:
        return EXIT_FAIL
    return EXIT_PASS


def summary_text(cfg: ExperimentConfig, results) -> str:
    lines = [f"normalization={cfg.normalization} seed={cfg.seed} n={cfg.n} s={cfg.s} t={cfg.t}"]
    for r in results:
        lines.append(
            f"{r.name} | {r.anchor} | measured={_fmt(r.measured)} | threshold {r.threshold} | {r.status.upper()}"
            + (f" | {r.note}" if r.note else "")
        )
    return "\n".join(lines) + "\n"


def run_suite(cfg: ExperimentConfig, suite: str | None = None, out_dir=None) -> tuple[int, list[CheckResult]]:
    """Run the named suite; writes ``<check>.csv`` and ``summary.txt`` into ``out_dir``."""
    suite = suite or cfg.suite
    if suite not in SUITE_NAMES:
        raise KeyError(suite)
    checks = [c for name in SUITES for c in SUITES[name]] if suite == "all" else list(SUITES[suite])
    out = Path(out_dir or cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    results = []
    for check in checks:
        res = run_check(check, cfg)
        results.append(res)
        if res.header:
            write_table(out / f"{res.name}.csv", res.header, res.rows)
    (out / "summary.txt").write_text(summary_text(cfg, results))
    return exit_code(results), results
