"""Truncation function, Moser iterates, exponent windows and numerical regularity probes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .grid import Grid, GridFunction, as_order, holder_quotient
from .operator import assemble_fractional

DIVERGENCE_THRESHOLD = 1.15
LOG_PATH_EXPONENT = 200.0


@dataclass(frozen=True)
class TruncationParams:
    beta: float
    T: float

    def __post_init__(self):
        if not self.beta > 1:
            raise ValueError(f"beta must exceed 1, got {self.beta}")
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")


def phi_values(t, beta, T) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized truncation function and derivative; ``beta`` and ``T`` broadcast against ``t``."""
    t, beta, T = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (t, beta, T)))
    slope = beta * T ** (beta - 1)
    a = np.abs(t)
    inside = a < T
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.where(inside, a**beta, slope * (a - T) + T**beta)
        der = np.where(inside, beta * a ** (beta - 1), slope) * np.sign(t)
    return val, der


def truncation_phi(t, p: TruncationParams):
    """``|t|^beta`` on ``(-T, T)``, continued linearly (C^1) outside; returns ``(phi, phi')``."""
    val, der = phi_values(t, p.beta, p.T)
    if val.ndim == 0:
        return float(val), float(der)
    return val, der


def convexity_gap_values(a, b, beta, T) -> np.ndarray:
    """``(phi(a) phi'(a) - phi(b) phi'(b)) (a - b) - (phi(a) - phi(b))^2``, vectorized.

    Evaluated in extended precision: on a common linear branch the two terms
    cancel exactly and double rounding alone would leave ``-1e-11`` residue.
    """
    ld = np.longdouble
    a, b, beta, T = (np.asarray(v, dtype=ld) for v in (a, b, beta, T))
    slope = beta * T ** (beta - 1)

    def phi(t):
        m = np.abs(t)
        inside = m < T
        val = np.where(inside, m**beta, slope * (m - T) + T**beta)
        der = np.where(inside, beta * m ** (beta - 1), slope) * np.sign(t)
        return val, der

    with np.errstate(divide="ignore", invalid="ignore"):
        fa, da = phi(a)
        fb, db = phi(b)
    gap = (fa * da - fb * db) * (a - b) - (fa - fb) ** 2
    return gap.astype(float)


def convexity_gap(a, b, p: TruncationParams):
    """Gap of the convexity inequality; nonnegative for the convex truncation function."""
    gap = convexity_gap_values(a, b, p.beta, p.T)
    return float(gap) if gap.ndim == 0 else gap


def critical_exponent(n_dim: int) -> float:
    """Sobolev exponent of ``H^1``: ``2n/(n-2)``, infinite for ``n <= 2``."""
    return 2.0 * n_dim / (n_dim - 2) if n_dim > 2 else math.inf


def fractional_critical_exponent(s: float, n_dim: int = 1) -> float:
    """Sobolev exponent of ``H^s``: ``2n/(n-2s)``, infinite for ``n <= 2s``."""
    return 2.0 * n_dim / (n_dim - 2 * s) if n_dim > 2 * s else math.inf


def w2p_window(s, n_dim: int = 1) -> tuple[float, float]:
    """Admissible ``p`` range for ``W^{2,p}`` solvability: ``(1, inf)`` up to ``s = 1/2``, then ``(n, n/(2s-1))``."""
    s = as_order(s).s
    if n_dim < 1:
        raise ValueError("dimension must be at least 1")
    if s <= 0.5:
        return 1.0, math.inf
    return float(n_dim), n_dim / (2 * s - 1)


@dataclass(frozen=True)
class MoserTrace:
    two_star: float
    beta_seq: tuple[float, ...]
    A_seq: tuple[float, ...]
    C0_estimate: float
    truncated: bool = False
    kind: str = "A"


def _log_integral(u: GridFunction, p: float) -> float:
    """``log(h sum |u_i|^p)``; ``-inf`` for the zero field."""
    a = np.abs(u.values)
    a = a[a > 0]
    if a.size == 0:
        return -math.inf
    if p <= LOG_PATH_EXPONENT:
        val = u.grid.h * float(np.sum(a**p))
        return math.log(val) if val > 0 else -math.inf
    return math.log(u.grid.h) + float(logsumexp(p * np.log(a)))


def _iterate(u: GridFunction, exponent: float, betas: list[float], power) -> tuple[list[float], bool]:
    values = []
    truncated = False
    for beta in betas:
        L = _log_integral(u, exponent * beta)
        # log(1 + exp(L)) stays finite where exp(L) overflows
        log_a = float(np.logaddexp(0.0, L)) * power(beta)
        if not math.isfinite(log_a) or log_a > 700:
            truncated = True
            break
        values.append(math.exp(log_a))
    return values, truncated


def moser_trace(u: GridFunction, two_star: float, m_max: int) -> MoserTrace:
    """``beta_1 = (2*+1)/2``, ``2 beta_{m+1} + 2* - 2 = 2* beta_m`` and
    ``A_m = (1 + int |u|^{2* beta_m})^{1/(2*(beta_m - 1))}``.
    """
    if not two_star > 2:
        raise ValueError("two_star must exceed 2")
    if m_max < 1:
        raise ValueError("m_max must be at least 1")
    betas = [(two_star + 1) / 2]
    for _ in range(m_max - 1):
        betas.append((two_star * betas[-1] - two_star + 2) / 2)
    A, truncated = _iterate(u, two_star, betas, lambda b: 1.0 / (two_star * (b - 1)))
    betas = betas[: len(A)]
    c0 = max(A) / A[0] if A else math.nan
    return MoserTrace(two_star, tuple(betas), tuple(A), c0, truncated, "A")


def sublinear_trace(
    u: GridFunction, s, m_max: int, two_star_s: float | None = None, beta1: float = 2.0
) -> MoserTrace:
    """``B_m = (1 + int |u|^{2*_s beta_m})^{1/(2*_s beta_m)}`` with ``2 beta_{m+1} = 2*_s beta_m``.

    In 1-D the fractional exponent ``2/(1-2s)`` is finite only for ``s < 1/2``;
    otherwise ``two_star_s`` must be supplied.
    """
    order = as_order(s)
    if two_star_s is None:
        two_star_s = fractional_critical_exponent(order.s, 1)
        if not math.isfinite(two_star_s):
            raise ValueError("2*_s is infinite for s >= 1/2 in 1-D; pass two_star_s")
    if not two_star_s > 2:
        raise ValueError("two_star_s must exceed 2")
    if beta1 < 1 or m_max < 1:
        raise ValueError("need beta1 >= 1 and m_max >= 1")
    betas = [beta1]
    for _ in range(m_max - 1):
        betas.append(two_star_s * betas[-1] / 2)
    B, truncated = _iterate(u, two_star_s, betas, lambda b: 1.0 / (two_star_s * b))
    betas = betas[: len(B)]
    c0 = max(B) / B[0] if B else math.nan
    return MoserTrace(two_star_s, tuple(betas), tuple(B), c0, truncated, "B")


def fractional_holder_ratio(u: GridFunction, s, alpha: float) -> float:
    """``[A_frac u]_alpha / (||u||_inf + ||Du||_inf)`` over interior nodes."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    denom = u.sup() + float(np.max(np.abs(u.forward_gradient())))
    if denom == 0.0:
        raise ValueError("zero field: Hölder ratio undefined")
    v = assemble_fractional(u.grid, as_order(s)) @ u.values
    return holder_quotient(v, alpha, x=u.grid.nodes) / denom


@dataclass
class RegularityReport:
    fitted_alpha: float = math.nan
    boundary_slope_a: float = math.nan
    boundary_quadratic_b: float = math.nan
    r2_linear_model: float = math.nan
    r2_fractional_model: float = math.nan
    threshold_flags: dict[float, bool] = field(default_factory=dict)
    fractional_coefficient: float = math.nan
    side: str = "left"
    rows: list[tuple[float, int, float, bool]] = field(default_factory=list)

    def to_text(self) -> str:
        """Flat ``key=value`` block, one line per field."""
        lines = [
            f"fitted_alpha={self.fitted_alpha:.17g}",
            f"boundary_slope_a={self.boundary_slope_a:.17g}",
            f"boundary_quadratic_b={self.boundary_quadratic_b:.17g}",
            f"r2_linear_model={self.r2_linear_model:.17g}",
            f"r2_fractional_model={self.r2_fractional_model:.17g}",
            f"fractional_coefficient={self.fractional_coefficient:.17g}",
            f"side={self.side}",
        ]
        for alpha, ok in sorted(self.threshold_flags.items()):
            lines.append(f"flag[{alpha:g}]={'pass' if ok else 'fail'}")
        return "\n".join(lines) + "\n"


def _r2(y: np.ndarray, yhat: np.ndarray) -> float:
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0
    return max(0.0, 1.0 - float(np.sum((y - yhat) ** 2)) / ss_tot)


def boundary_fit(u: GridFunction, fit_fraction: float = 0.1, s=0.5, side: str = "left") -> RegularityReport:
    """Fit ``u ~ a d + b d^2`` and, as a competitor, ``u ~ c d^s`` near one boundary.

    Uses the nodes with boundary distance ``d <= fit_fraction (b - a)`` on ``side``.
    """
    g = u.grid
    if side == "left":
        d = g.nodes - g.a
    elif side == "right":
        d = g.b - g.nodes
    else:
        raise ValueError("side must be 'left' or 'right'")
    mask = d <= fit_fraction * g.length * (1 + 1e-12)
    if mask.sum() < 8:
        raise ValueError(f"boundary window holds {int(mask.sum())} nodes, need at least 8")
    d, y = d[mask], u.values[mask]
    X = np.column_stack([d, d * d])
    (a, b), *_ = np.linalg.lstsq(X, y, rcond=None)
    ds = d ** as_order(s).s
    c = float(ds @ y / (ds @ ds))
    return RegularityReport(
        boundary_slope_a=float(a),
        boundary_quadratic_b=float(b),
        r2_linear_model=_r2(y, X @ np.array([a, b])),
        r2_fractional_model=_r2(y, c * ds),
        fractional_coefficient=c,
        side=side,
    )


def discrete_derivative(u: GridFunction, order: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Forward differences at cell midpoints (boundary cells included), or second differences at nodes."""
    g = u.grid
    if order == 1:
        xs = g.a + g.h * (np.arange(g.n + 1) + 0.5)
        return u.forward_gradient(), xs
    if order == 2:
        return np.diff(u.padded(), 2) / g.h**2, g.nodes
    raise ValueError("derivative order must be 1 or 2")


def second_difference_lp(u: GridFunction, p: float) -> float:
    """Midpoint ``L^p`` norm of the nodal second differences."""
    d2, _ = discrete_derivative(u, 2)
    return float((u.grid.h * np.sum(np.abs(d2) ** p)) ** (1.0 / p))


def _window_mask(x: np.ndarray, grid: Grid, window) -> np.ndarray:
    L = grid.length
    if window == "full":
        lo, hi = 0.0, 1.0
    elif window == "interior":
        lo, hi = 0.25, 0.75
    elif window == "left":
        lo, hi = 0.0, 0.1
    elif window == "right":
        lo, hi = 0.9, 1.0
    else:
        lo, hi = window
    return (x >= grid.a + lo * L) & (x <= grid.a + hi * L)


def estimate_gradient_holder(
    solutions: Sequence[GridFunction],
    alpha_grid: Sequence[float],
    window="full",
    order: int = 1,
    threshold: float = DIVERGENCE_THRESHOLD,
) -> RegularityReport:
    """Hölder quotients of the discrete derivative across refinement levels.

    An exponent passes when the quotient grows by at most ``threshold`` per level;
    ``fitted_alpha`` is the largest passing exponent.  ``window`` is ``"full"``,
    ``"interior"``, ``"left"``, ``"right"`` or a pair of domain fractions.
    """
    if len(solutions) < 3:
        raise ValueError("need at least three refinement levels")
    grids = [u.grid for u in solutions]
    if any((g.a, g.b) != (grids[0].a, grids[0].b) for g in grids):
        raise ValueError("refinement levels live on different domains")
    if any(g2.n <= g1.n for g1, g2 in zip(grids, grids[1:])):
        raise ValueError("refinement levels must have increasing node counts")
    derivs = []
    for u in solutions:
        dv, xs = discrete_derivative(u, order)
        m = _window_mask(xs, u.grid, window)
        derivs.append((dv[m], xs[m]))
    report = RegularityReport(side=str(window))
    passing = []
    for alpha in alpha_grid:
        q = [holder_quotient(dv, alpha, x=xs) for dv, xs in derivs]
        ok = all(b <= threshold * a for a, b in zip(q, q[1:]))
        report.threshold_flags[float(alpha)] = ok
        for level, val in enumerate(q):
            report.rows.append((float(alpha), level, val, ok))
        if ok:
            passing.append(alpha)
    report.fitted_alpha = float(max(passing)) if passing else math.nan
    return report
