"""Discrete -Laplacian, fractional Laplacian and the mixed family ``A(t) = A_local + t A_frac``.

The fractional part interpolates ``u`` piecewise linearly (zero outside the
domain) and integrates the kernel ``|z|^(-1-2s)`` exactly on every cell with
``|z| >= h``.  On the singular cell ``|z| < h`` the symmetric second difference
``u(x+z) + u(x-z) - 2u(x) ~ z^2 u''`` is used.  On a uniform grid every
pairwise weight depends only on the node offset, so the matrix is Toeplitz and
assembled from one weight sequence.

Linear interpolation misses ``-u'' h^2 theta(1-theta)/2`` on every cell, which
summed against the kernel is an ``O(h^(2-2s))`` error, the dominant one for
``s > 1/2``.  Its exact coefficient for quadratics is folded back into the
nearest-neighbour weight (``interpolation_defect``), capped at half of that
weight so off-diagonal entries stay nonpositive for small ``s``.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import cholesky_banded, cho_solve_banded, toeplitz
from scipy.special import zeta

from .grid import FractionalOrder, Grid, GridFunction, as_order

_SERIES_FROM = 16
_SERIES_TERMS = 12


def _powm1_over_p(x: np.ndarray, p: float) -> np.ndarray:
    """``(x^p - 1) / p``, continuous through ``p = 0`` where it is ``log x``."""
    lx = np.log(x)
    if p == 0.0:
        return lx
    return np.expm1(p * lx) / p


def _second_difference_weights(m: np.ndarray, s: float) -> np.ndarray:
    """``-(1/2s) * second difference of (m^p - 1)/p`` at integers ``m >= 2``, ``p = 1 - 2s``.

    This is the integral of the unit hat centred at ``m`` against ``t^(-1-2s)``.
    Large offsets use the even Taylor series of ``(1+x)^p + (1-x)^p - 2`` with
    ``x = 1/m`` to avoid cancellation.
    """
    p = 1.0 - 2.0 * s
    m = np.asarray(m, dtype=float)
    out = np.empty_like(m)
    near = m < _SERIES_FROM
    mn = m[near]
    out[near] = -(
        _powm1_over_p(mn + 1, p) - 2 * _powm1_over_p(mn, p) + _powm1_over_p(mn - 1, p)
    ) / (2 * s)
    mf = m[~near]
    if mf.size:
        x2 = mf ** -2.0
        acc = np.zeros_like(mf)
        # binom(p, 2k) / p, finite at p = 0
        for k in range(_SERIES_TERMS, 0, -1):
            coef = np.prod([p - j for j in range(1, 2 * k)]) / math.factorial(2 * k)
            acc = acc * x2 + coef
        acc *= x2
        out[~near] = -(mf**p) * 2.0 * acc / (2 * s)
    return out


def _binom_neg(q: float, k: int) -> float:
    out = 1.0
    for i in range(k):
        out *= (-q - i) / (i + 1)
    return out


def interpolation_defect(s: float, terms: int = 25) -> float:
    """``J(s) = sum_{k>=1} int_0^1 theta(1-theta) (k+theta)^(-1-2s) dtheta``.

    Expanding about cell midpoints ``k + 1/2`` turns the sum into Hurwitz zeta values.
    """
    q = 1.0 + 2.0 * s
    total = 0.0
    for j in range(terms):
        moment = 2.0 * (0.25 * 0.5 ** (2 * j + 1) / (2 * j + 1) - 0.5 ** (2 * j + 3) / (2 * j + 3))
        total += _binom_neg(q, 2 * j) * moment * zeta(q + 2 * j, 1.5)
    return total


def _first_weight(s: float) -> float:
    # singular-cell share plus the outer half of the first hat on [1, 2]
    p = 1.0 - 2.0 * s
    outer = (1.0 - 2.0 ** (-2 * s)) / s - float(_powm1_over_p(np.array(2.0), p))
    return 1.0 / (2 - 2 * s) + outer


def quadratic_correction(s: float) -> float:
    return min(interpolation_defect(s), 0.5 * _first_weight(s))


def kernel_weights(n_offsets: int, s: float) -> np.ndarray:
    """Scaled pairwise weights ``omega_m`` for offsets ``m = 0..n_offsets``.

    The physical weight between nodes ``m`` apart is ``c_s h^(-2s) omega_m``.
    Entry 0 holds the total one-sided mass ``1/(2-2s) + 1/(2s) - J``.
    """
    corr = quadratic_correction(s)
    w = np.empty(n_offsets + 1)
    w[0] = 1.0 / (2 - 2 * s) + 1.0 / (2 * s) - corr
    if n_offsets >= 1:
        w[1] = _first_weight(s) - corr
    if n_offsets >= 2:
        w[2:] = _second_difference_weights(np.arange(2, n_offsets + 1), s)
    return w


def one_sided_tail(i: np.ndarray, s: float) -> np.ndarray:
    """Scaled kernel mass ``sum_{m >= i} omega_m`` of all nodes at offset ``>= i`` on one side.

    Telescopes to ``(i^p - (i-1)^p) / (2 s p)``; for ``i = 1`` it is the full one-sided mass.
    """
    i = np.asarray(i, dtype=float)
    p = 1.0 - 2.0 * s
    out = np.full_like(i, 1.0 / (2 - 2 * s) + 1.0 / (2 * s) - quadratic_correction(s))
    far = i >= 2
    ii = i[far]
    # (i^p - (i-1)^p)/p = i^p * (1 - (1 - 1/i)^p)/p
    lg = np.log1p(-1.0 / ii)
    diff = -np.expm1(p * lg) / p if p != 0.0 else -lg
    out[far] = ii**p * diff / (2 * s)
    return out


def assemble_local(grid: Grid) -> np.ndarray:
    """Three-point ``-u''`` with zero Dirichlet neighbours, as a dense symmetric matrix."""
    n, h = grid.n, grid.h
    A = np.zeros((n, n))
    idx = np.arange(n)
    A[idx, idx] = 2.0 / h**2
    A[idx[:-1], idx[1:]] = -1.0 / h**2
    A[idx[1:], idx[:-1]] = -1.0 / h**2
    return A


def fractional_row_sums(grid: Grid, s) -> np.ndarray:
    """Closed-form row sums of ``A_frac``: kernel mass of the nodes at or beyond the boundary."""
    order = as_order(s)
    i = np.arange(1, grid.n + 1)
    scaled = one_sided_tail(i, order.s) + one_sided_tail(grid.n + 1 - i, order.s)
    return order.c_s * grid.h ** (-order.two_s) * scaled


def assemble_fractional(grid: Grid, s) -> np.ndarray:
    """Dense symmetric Toeplitz matrix of the discrete ``(-Delta)^s`` with zero exterior data."""
    order = as_order(s)
    scale = order.c_s * grid.h ** (-order.two_s)
    w = kernel_weights(grid.n - 1, order.s) * scale
    col = -w.copy()
    col[0] = 2.0 * w[0]
    return toeplitz(col)


@dataclass(frozen=True, eq=False)
class MixedOperator:
    """``A(t) = A_local + t A_frac`` on a fixed grid; immutable once assembled."""

    grid: Grid
    order: FractionalOrder
    t: float
    A_local: np.ndarray
    A_frac: np.ndarray

    def __post_init__(self):
        for a in (self.A_local, self.A_frac):
            a.setflags(write=False)
        object.__setattr__(self, "_A", None)
        object.__setattr__(self, "_band", None)

    @property
    def matrix(self) -> np.ndarray:
        """Dense ``A(t)``, formed on first use."""
        if self._A is None:
            A = self.A_local + self.t * self.A_frac
            A.setflags(write=False)
            object.__setattr__(self, "_A", A)
        return self._A

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def s(self) -> float:
        return self.order.s

    def with_t(self, t: float) -> MixedOperator:
        _check_t(t)
        return MixedOperator(self.grid, self.order, float(t), self.A_local, self.A_frac)

    def local_matvec(self, v: np.ndarray) -> np.ndarray:
        """Three-point stencil applied in O(n); works on ``(n,)`` and ``(n, k)`` arrays."""
        out = 2.0 * v
        out[1:] -= v[:-1]
        out[:-1] -= v[1:]
        return out / self.grid.h**2

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if self.t == 0.0:
            return self.local_matvec(v)
        return self.local_matvec(v) + self.t * (self.A_frac @ v)

    def quadratic_form(self, v: np.ndarray) -> float:
        """``h v^T A v``, the discrete energy ``int u L u``."""
        return float(self.grid.h * (v @ self.matvec(v)))

    def tridiagonal_solver(self):
        """Solver for the tridiagonal part of ``A(t)`` via a cached banded Cholesky factor."""
        if self._band is None:
            n, h = self.n, self.grid.h
            ab = np.zeros((2, n))
            ab[1] = 2.0 / h**2 + self.t * self.A_frac[0, 0]
            if n > 1:
                ab[0, 1:] = -1.0 / h**2 + self.t * self.A_frac[0, 1]
            object.__setattr__(self, "_band", cholesky_banded(ab))
        band = self._band
        return lambda r: cho_solve_banded((band, False), r)


def _check_t(t: float):
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"continuation parameter must lie in [0, 1], got t={t}")


def assemble_mixed(grid: Grid, s, t: float = 1.0) -> MixedOperator:
    order = as_order(s)
    _check_t(t)
    if order.degenerate:
        warnings.warn(f"s={order.s} lies outside [0.05, 0.95]; c_s is nearly degenerate", stacklevel=2)
    return MixedOperator(grid, order, float(t), assemble_local(grid), assemble_fractional(grid, order))


def apply(op: MixedOperator | np.ndarray, u: GridFunction) -> GridFunction:
    if isinstance(op, MixedOperator):
        if op.grid != u.grid:
            raise ValueError("operator and grid function live on different grids")
        return u.with_values(op.matvec(u.values))
    A = np.asarray(op)
    if A.shape != (u.grid.n, u.grid.n):
        raise ValueError(f"matrix shape {A.shape} does not match n={u.grid.n}")
    return u.with_values(A @ u.values)


def dump_matrix(op: MixedOperator, path, band: int = 5, full: bool = False) -> None:
    """Write ``i,j,value`` triplets of ``A(t)`` (band ``|i-j| <= band``) plus per-row tails.

    Tail rows use ``j = -1`` and hold ``t`` times the row sum of ``A_frac``.
    """
    A = op.matrix
    n = op.n
    tails = op.t * A_frac_row_sums(op)
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "j", "value"])
        for i in range(n):
            lo, hi = (0, n) if full else (max(0, i - band), min(n, i + band + 1))
            for j in range(lo, hi):
                w.writerow([i, j, f"{A[i, j]:.17g}"])
        for i in range(n):
            w.writerow([i, -1, f"{tails[i]:.17g}"])


def A_frac_row_sums(op: MixedOperator) -> np.ndarray:
    return fractional_row_sums(op.grid, op.order)
