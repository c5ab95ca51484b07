"""Linear, semilinear and continuation solves for ``A(t) u = g(x, u)``."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .grid import Grid, GridFunction, as_order
from .operator import MixedOperator, assemble_mixed

log = logging.getLogger(__name__)

Nonlinearity = Callable[[np.ndarray, np.ndarray], np.ndarray]


class SolverError(RuntimeError):
    """Numerical failure carrying the last residual and the residual history."""

    def __init__(self, op: str, reason: str, residual: float, history: Sequence[float] = ()):
        super().__init__(f"{op}: {reason} (residual {residual:.3e})")
        self.op = op
        self.reason = reason
        self.residual = float(residual)
        self.history = list(history)

    def reason_line(self) -> str:
        return f"FAIL {self.op} {self.reason} {self.residual:.6e}"


@dataclass(frozen=True)
class SolveConfig:
    cg_tol: float = 1e-10
    cg_max_iter: int | None = None  # None means 10 n
    picard_damping: float = 0.7
    picard_tol: float = 1e-8
    picard_max_iter: int = 500
    newton_switch_tol: float = 1e-3
    newton: bool = False
    # "tridiagonal" factors the banded part of A(t); "jacobi" and "none" are plain
    preconditioner: str = "tridiagonal"

    def __post_init__(self):
        for name in ("cg_tol", "picard_tol", "newton_switch_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.picard_damping <= 1:
            raise ValueError("picard_damping must lie in (0, 1]")
        if self.picard_max_iter < 1 or (self.cg_max_iter is not None and self.cg_max_iter < 1):
            raise ValueError("iteration limits must be positive")
        if self.preconditioner not in ("tridiagonal", "jacobi", "none"):
            raise ValueError(f"unknown preconditioner {self.preconditioner!r}")


@dataclass
class CGInfo:
    iterations: int
    residual: float
    converged: bool
    history: list[float] = field(default_factory=list)


def conjugate_gradient(
    matvec: Callable[[np.ndarray], np.ndarray],
    b: np.ndarray,
    x0: np.ndarray | None = None,
    tol: float = 1e-10,
    max_iter: int = 1000,
    precond: Callable[[np.ndarray], np.ndarray] | None = None,
    callback: Callable[[np.ndarray], None] | None = None,
) -> tuple[np.ndarray, CGInfo]:
    """Preconditioned CG; stops when ``||b - A x||_2 <= tol ||b||_2``.

    ``callback`` sees every iterate including ``x0``.
    """
    b = np.asarray(b, dtype=float)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    bnorm = np.linalg.norm(b)
    if callback is not None:
        callback(x)
    if bnorm == 0.0:
        return np.zeros_like(b), CGInfo(0, 0.0, True, [0.0])
    r = b - matvec(x)
    rel = np.linalg.norm(r) / bnorm
    history = [rel]
    if rel <= tol:
        return x, CGInfo(0, rel, True, history)
    z = precond(r) if precond else r
    p = z.copy()
    rz = r @ z
    for k in range(1, max_iter + 1):
        Ap = matvec(p)
        alpha = rz / (p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        rel = np.linalg.norm(r) / bnorm
        history.append(rel)
        if callback is not None:
            callback(x)
        if rel <= tol:
            return x, CGInfo(k, rel, True, history)
        z = precond(r) if precond else r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, CGInfo(max_iter, rel, False, history)


def _preconditioner(op: MixedOperator, kind: str):
    if kind == "tridiagonal":
        return op.tridiagonal_solver()
    if kind == "jacobi":
        d = 2.0 / op.grid.h**2 + op.t * op.A_frac[0, 0]
        return lambda r: r / d
    return None


def solve_linear(
    op: MixedOperator,
    f: GridFunction,
    cfg: SolveConfig | None = None,
    x0: GridFunction | np.ndarray | None = None,
    callback=None,
    name: str = "solve_linear",
) -> GridFunction:
    """Solve ``A(t) u = f`` by preconditioned conjugate gradients."""
    cfg = cfg or SolveConfig()
    if f.grid != op.grid:
        raise ValueError("right-hand side lives on a different grid")
    if isinstance(x0, GridFunction):
        x0 = x0.values
    max_iter = cfg.cg_max_iter or 10 * op.n
    x, info = conjugate_gradient(
        op.matvec, f.values, x0, cfg.cg_tol, max_iter, _preconditioner(op, cfg.preconditioner), callback
    )
    if not info.converged:
        raise SolverError(name, "cg_not_converged", info.residual, info.history)
    return f.with_values(x)


@dataclass
class SemilinearResult:
    u: GridFunction
    residual_sup: float
    iterations: int
    converged: bool
    history: list[float]
    events: list[str] = field(default_factory=list)


def _finite_difference_dg(g: Nonlinearity, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    step = 1e-6 * (1.0 + np.abs(u))
    return (g(x, u + step) - g(x, u - step)) / (2.0 * step)


def _eval_g(g: Nonlinearity, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    out = np.broadcast_to(np.asarray(g(x, u), dtype=float), u.shape)
    if not np.all(np.isfinite(out)):
        raise SolverError("solve_semilinear", "nonfinite_nonlinearity", float("nan"))
    return out


def solve_semilinear(
    grid: Grid,
    s,
    g: Nonlinearity,
    cfg: SolveConfig | None = None,
    *,
    t: float = 1.0,
    u0: GridFunction | np.ndarray | None = None,
    dg: Nonlinearity | None = None,
    op: MixedOperator | None = None,
) -> SemilinearResult:
    """Damped Picard iteration ``u <- (1-w) u + w A^{-1} g(x, u)`` with optional Newton finish.

    Convergence means ``||A u - g(., u)||_inf <= picard_tol (1 + ||g(., u)||_inf)``.
    With ``cfg.newton`` the iteration switches to Newton on ``A - diag(dg/du)`` once the
    scaled residual drops below ``newton_switch_tol``; an indefinite Jacobian sends it
    back to Picard and is logged in ``events``.
    """
    cfg = cfg or SolveConfig()
    op = op or assemble_mixed(grid, s, t)
    x = grid.nodes
    if u0 is None:
        u = np.zeros(grid.n)
    else:
        u = np.array(u0.values if isinstance(u0, GridFunction) else u0, dtype=float)
    omega = cfg.picard_damping
    history: list[float] = []
    events: list[str] = []
    growth = 0
    newton_ok = cfg.newton
    v_prev = None
    for k in range(cfg.picard_max_iter + 1):
        gu = _eval_g(g, x, u)
        res = op.matvec(u) - gu
        rsup = float(np.max(np.abs(res)))
        scale = 1.0 + float(np.max(np.abs(gu)))
        history.append(rsup)
        if rsup <= cfg.picard_tol * scale:
            return SemilinearResult(GridFunction(grid, u), rsup, k, True, history, events)
        if k == cfg.picard_max_iter:
            break
        growth = growth + 1 if len(history) > 1 and rsup > history[-2] else 0
        if growth >= 20:
            raise SolverError("solve_semilinear", "diverging", rsup, history)
        if newton_ok and rsup <= cfg.newton_switch_tol * scale:
            d = dg(x, u) if dg is not None else _finite_difference_dg(g, x, u)
            J = op.matrix - np.diag(d)
            try:
                factor = cho_factor(J)
            except LinAlgError:
                events.append(f"iter {k}: Newton Jacobian not positive definite, back to Picard")
                log.info("Newton Jacobian indefinite at iteration %d; falling back to Picard", k)
                newton_ok = False
            else:
                u = u - cho_solve(factor, res)
                continue
        v = solve_linear(op, GridFunction(grid, gu), cfg, x0=v_prev, name="solve_semilinear").values
        v_prev = v
        u = (1.0 - omega) * u + omega * v
    return SemilinearResult(GridFunction(grid, u), history[-1], cfg.picard_max_iter, False, history, events)


def detect_nonuniqueness(
    grid: Grid,
    s,
    g: Nonlinearity,
    cfg: SolveConfig | None = None,
    *,
    t: float = 1.0,
    u0: np.ndarray | None = None,
    scale: float = 2.0,
    threshold: float = 1e-3,
    seed: int = 42,
    op: MixedOperator | None = None,
) -> tuple[bool, SemilinearResult, SemilinearResult]:
    """Solve from ``u0`` and from ``scale * u0``; differing limits flag a resonant problem.

    Returns ``(non_unique, first, second)``; the flag is raised when the converged
    solutions differ by more than ``threshold`` in relative sup norm.
    """
    op = op or assemble_mixed(grid, s, t)
    if u0 is None:
        u0 = np.random.default_rng(seed).uniform(0.5, 1.5, grid.n)
    first = solve_semilinear(grid, s, g, cfg, u0=u0, op=op)
    second = solve_semilinear(grid, s, g, cfg, u0=scale * np.asarray(u0), op=op)
    a, b = first.u.values, second.u.values
    denom = max(np.max(np.abs(a)), np.max(np.abs(b)), np.finfo(float).tiny)
    return bool(np.max(np.abs(a - b)) / denom > threshold), first, second


def continuation_solve(
    grid: Grid,
    s,
    f: GridFunction,
    t_values: Sequence[float],
    cfg: SolveConfig | None = None,
    op: MixedOperator | None = None,
) -> list[GridFunction]:
    """Solve ``A(t) u = f`` along increasing ``t``, warm-starting each solve from the last."""
    t_values = [float(t) for t in t_values]
    if any(not 0.0 <= t <= 1.0 for t in t_values):
        raise ValueError("continuation parameters must lie in [0, 1]")
    if any(b <= a for a, b in zip(t_values, t_values[1:])):
        raise ValueError("continuation parameters must be strictly increasing")
    base = op or assemble_mixed(grid, as_order(s), 1.0)
    out: list[GridFunction] = []
    prev = None
    for t in t_values:
        # failures carry t in the op tag
        u = solve_linear(base.with_t(t), f, cfg, x0=prev, name=f"continuation_solve[t={t:g}]")
        out.append(u)
        prev = u
    return out
