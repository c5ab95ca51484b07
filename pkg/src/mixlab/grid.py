"""Uniform 1-D grids, grid functions that vanish outside the domain, and discrete norms.

Every grid function carries values on the ``n`` interior nodes only.  The two
boundary nodes and the whole exterior ``R \\ (a, b)`` hold the value 0.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Literal

import numpy as np
from scipy.special import gamma

Normalization = Literal["standard", "unit"]


@dataclass(frozen=True)
class Grid:
    """Uniform grid on ``(a, b)`` with ``n`` interior nodes ``x_i = a + i h``."""

    a: float
    b: float
    n: int

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)) or self.b <= self.a:
            raise ValueError(f"need a < b, got a={self.a}, b={self.b}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"need a positive integer node count, got n={self.n}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def h(self) -> float:
        return (self.b - self.a) / (self.n + 1)

    @property
    def length(self) -> float:
        return self.b - self.a

    @property
    def nodes(self) -> np.ndarray:
        x = self.a + self.h * np.arange(1, self.n + 1)
        x.setflags(write=False)
        return x

    @property
    def boundary_distance(self) -> np.ndarray:
        x = self.nodes
        return np.minimum(x - self.a, self.b - x)

    def refine(self) -> Grid:
        """Halve the spacing; every old node stays a node (``n -> 2n + 1``)."""
        return Grid(self.a, self.b, 2 * self.n + 1)

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (x > self.a) & (x < self.b)


def build_grid(a: float, b: float, n: int) -> Grid:
    return Grid(float(a), float(b), n)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Values on the interior nodes of ``grid``; identically zero elsewhere."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.shape[0] != self.grid.n:
            raise ValueError(f"expected {self.grid.n} values, got shape {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, grid: Grid, fn: Callable[[np.ndarray], np.ndarray]) -> GridFunction:
        return cls(grid, np.broadcast_to(fn(grid.nodes), (grid.n,)))

    @classmethod
    def zeros(cls, grid: Grid) -> GridFunction:
        return cls(grid, np.zeros(grid.n))

    def __call__(self, x) -> np.ndarray:
        """Piecewise-linear evaluation; exactly 0 outside ``(a, b)``."""
        g = self.grid
        xs = np.concatenate(([g.a], g.nodes, [g.b]))
        us = np.concatenate(([0.0], self.values, [0.0]))
        x = np.asarray(x, dtype=float)
        return np.where(g.contains(x), np.interp(x, xs, us), 0.0)

    def with_values(self, values) -> GridFunction:
        return GridFunction(self.grid, values)

    def _check(self, other: GridFunction):
        if other.grid != self.grid:
            raise ValueError("grid functions live on different grids")

    def __add__(self, other: GridFunction) -> GridFunction:
        self._check(other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: GridFunction) -> GridFunction:
        self._check(other)
        return self.with_values(self.values - other.values)

    def __mul__(self, c: float) -> GridFunction:
        return self.with_values(c * self.values)

    __rmul__ = __mul__

    def __neg__(self) -> GridFunction:
        return self.with_values(-self.values)

    def __abs__(self) -> GridFunction:
        return self.with_values(np.abs(self.values))

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def padded(self) -> np.ndarray:
        """Values including the two zero boundary nodes."""
        return np.concatenate(([0.0], self.values, [0.0]))

    def forward_gradient(self) -> np.ndarray:
        """Forward differences on all ``n + 1`` cells, boundary cells included."""
        return np.diff(self.padded()) / self.grid.h


def fractional_constant(s: float) -> float:
    """The 1-D constant making the singular integral equal the Fourier symbol ``|xi|^(2s)``."""
    return 4.0**s * gamma(0.5 + s) / (math.sqrt(math.pi) * abs(gamma(-s)))


@dataclass(frozen=True)
class FractionalOrder:
    s: float
    normalization: Normalization = "standard"

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"fractional order must lie in (0, 1), got s={self.s}")
        if self.normalization not in ("standard", "unit"):
            raise ValueError(f"unknown normalization {self.normalization!r}")

    @property
    def two_s(self) -> float:
        return 2.0 * self.s

    @property
    def c_s(self) -> float:
        if self.normalization == "unit":
            return 1.0
        return fractional_constant(self.s)

    @property
    def degenerate(self) -> bool:
        # c_s collapses towards 0 at both ends of (0, 1)
        return not 0.05 <= self.s <= 0.95


def as_order(s) -> FractionalOrder:
    return s if isinstance(s, FractionalOrder) else FractionalOrder(float(s))


def lp_norm(u: GridFunction, p: float = 2.0) -> float:
    """Midpoint-rule ``L^p`` norm; ``p = inf`` gives the max over nodes."""
    if p == math.inf:
        return u.sup()
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    a = np.abs(u.values)
    m = a.max(initial=0.0)
    if m == 0.0:
        return 0.0
    # scale by the max so large p does not overflow
    return float(m * (u.grid.h * np.sum((a / m) ** p)) ** (1.0 / p))


def exterior_mass(grid: Grid, s: float) -> np.ndarray:
    """``int_{R \\ (a,b)} |x_i - y|^(-1-2s) dy`` for every interior node."""
    x = grid.nodes
    return ((x - grid.a) ** (-2 * s) + (grid.b - x) ** (-2 * s)) / (2 * s)


def seminorm_sq_values(grid: Grid, s: float, values: np.ndarray) -> np.ndarray | float:
    """Gagliardo seminorm squared for raw interior values; ``values`` may be ``(n,)`` or ``(n, k)``."""
    h = grid.h
    v = np.asarray(values, dtype=float)
    parts = np.zeros((max(grid.n - 1, 1),) + v.shape[1:])
    for m in range(1, grid.n):
        d = v[m:] - v[:-m]
        parts[m - 1] = np.sum(d * d, axis=0) * (m * h) ** (-1.0 - 2 * s)
    interior = 2.0 * h * h * np.sum(parts, axis=0)
    tail = exterior_mass(grid, s)
    if v.ndim == 2:
        tail = tail[:, None]
    exterior = 2.0 * h * np.sum(v * v * tail, axis=0)
    out = interior + exterior
    return float(out) if v.ndim == 1 else out


def gagliardo_seminorm_sq(u: GridFunction, s) -> float:
    """Riemann-sum approximation of ``[u]_s^2`` over ``R x R`` with ``u = 0`` outside.

    Interior pairs contribute ``h^2 (u_i - u_j)^2 / |x_i - x_j|^(1+2s)`` (the
    ``i = j`` terms are dropped); each interior node additionally interacts with
    the exterior through the exact tail integral, counted twice for symmetry.
    """
    return seminorm_sq_values(u.grid, as_order(s).s, u.values)


def gradient_sq(u: GridFunction) -> float:
    """``||u'||_{L^2}^2`` from forward differences including both boundary cells."""
    d = u.forward_gradient()
    return math.fsum(d * d) * u.grid.h


def norm_x01_sq(u: GridFunction, s) -> float:
    return gradient_sq(u) + gagliardo_seminorm_sq(u, s)


def holder_quotient(u: GridFunction | np.ndarray, alpha: float, window=None, x=None) -> float:
    """Discrete Hölder seminorm ``max |u_i - u_j| / |x_i - x_j|^alpha`` over a node window.

    ``window`` is a ``slice`` or index array into the nodes; by default all nodes.
    Plain arrays need explicit coordinates ``x``.
    """
    if isinstance(u, GridFunction):
        vals, xs = u.values, u.grid.nodes
    else:
        if x is None:
            raise ValueError("coordinates required for a bare array")
        vals, xs = np.asarray(u, dtype=float), np.asarray(x, dtype=float)
    if window is not None:
        vals, xs = vals[window], xs[window]
    if len(vals) < 2:
        raise ValueError("Hölder window needs at least two nodes")
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    best = 0.0
    # blockwise over offsets keeps memory O(n)
    for m in range(1, len(vals)):
        q = np.abs(vals[m:] - vals[:-m]) / np.abs(xs[m:] - xs[:-m]) ** alpha
        best = max(best, float(q.max()))
    return best


def write_csv(u: GridFunction, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "u"])
        for xi, ui in zip(u.grid.nodes, u.values):
            w.writerow([f"{xi:.17g}", f"{ui:.17g}"])


def read_csv(path, grid: Grid | None = None) -> GridFunction:
    """Read an ``x,u`` file; the grid is inferred from uniform node spacing unless given."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    x, v = data[:, 0], data[:, 1]
    if grid is None:
        if len(x) == 1:
            raise ValueError("cannot infer a grid from a single node; pass one explicitly")
        h = (x[-1] - x[0]) / (len(x) - 1)
        grid = Grid(float(x[0] - h), float(x[-1] + h), len(x))
    if not np.allclose(x, grid.nodes, rtol=0, atol=1e-12 * max(1.0, abs(grid.b))):
        raise ValueError("CSV nodes do not match the grid")
    return GridFunction(grid, v)
