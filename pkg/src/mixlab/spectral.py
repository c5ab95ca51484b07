"""Principal eigenpair and the first spectral gap of ``A(t)``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh

from .grid import GridFunction
from .operator import MixedOperator
from .solver import SolveConfig, SolverError, solve_linear

DENSE_LIMIT = 1024


@dataclass(frozen=True)
class EigenPair:
    lambda1: float
    phi1: GridFunction
    residual: float
    iterations: int = 0


def _normalize(v: np.ndarray, h: float) -> np.ndarray:
    v = v / np.sqrt(h * (v @ v))
    # largest-magnitude entry positive, for deterministic output
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    return v


def rayleigh_quotient(op: MixedOperator, u: GridFunction) -> float:
    v = u.values
    nrm = v @ v
    if nrm == 0.0:
        raise ValueError("Rayleigh quotient of the zero field")
    return float(v @ op.matvec(v) / nrm)


def _inverse_iteration(op, x, tol, max_iter, deflate=None, name="principal_eigenpair"):
    h = op.grid.h
    cfg = SolveConfig(cg_tol=min(1e-12, 1e-3 * tol))
    if deflate is not None:
        x = x - (deflate @ x) * h * deflate
    x = _normalize(x, h)
    lam = float(x @ op.matvec(x) / (x @ x))
    res = np.inf
    for k in range(1, max_iter + 1):
        y = solve_linear(op, GridFunction(op.grid, x), cfg, x0=x / lam, name=name).values
        if deflate is not None:
            y = y - (deflate @ y) * h * deflate
        x = _normalize(y, h)
        Ax = op.matvec(x)
        lam = float(x @ Ax / (x @ x))
        res = float(np.sqrt(h * np.sum((Ax - lam * x) ** 2)))
        if res <= tol * lam:
            return lam, x, res, k
    raise SolverError(name, "not_converged", res)


def principal_eigenpair(op: MixedOperator, tol: float = 1e-8, max_iter: int = 10_000) -> EigenPair:
    """Inverse power iteration from a positive start, read out by the Rayleigh quotient.

    Stops once ``||A phi - lambda phi||_{L^2} <= tol * lambda`` with ``||phi||_{L^2} = 1``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    x0 = np.sin(np.pi * np.arange(1, op.n + 1) / (op.n + 1)) + 0.1
    lam, x, res, k = _inverse_iteration(op, x0, tol, max_iter)
    return EigenPair(lam, GridFunction(op.grid, x), res, k)


def dense_eigenvalues(op: MixedOperator, k: int = 2) -> np.ndarray:
    """Smallest ``k`` eigenvalues of the dense matrix (symmetric LAPACK solver)."""
    return eigh(op.matrix, eigvals_only=True, subset_by_index=[0, k - 1])


def eigengap(
    op: MixedOperator, tol: float = 1e-8, max_iter: int = 10_000, pair: EigenPair | None = None
) -> tuple[float, float]:
    """The two smallest eigenvalues, the second by inverse iteration deflated against ``phi_1``.

    Falls back to a dense solve for ``n <= 1024`` when deflation fails.
    """
    if op.n < 2:
        raise ValueError("need at least two nodes for a second eigenvalue")
    pair = pair or principal_eigenpair(op, tol, max_iter)
    phi = pair.phi1.values
    # antisymmetric start: overlaps the second mode, not the first
    x0 = np.cos(np.pi * np.arange(1, op.n + 1) / (op.n + 1))
    try:
        lam2, _, _, _ = _inverse_iteration(op, x0, tol, max_iter, deflate=phi, name="eigengap")
        if not lam2 > pair.lambda1:
            raise SolverError("eigengap", "deflation_collapsed", lam2)
    except SolverError:
        if op.n > DENSE_LIMIT:
            raise
        lam1, lam2 = dense_eigenvalues(op, 2)
        return float(lam1), float(lam2)
    return pair.lambda1, lam2

