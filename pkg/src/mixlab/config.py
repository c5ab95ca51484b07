"""Experiment configuration: flat ``key=value`` files plus command-line overrides."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from .expr import ExpressionError, parse_expression
from .grid import FractionalOrder, Grid
from .solver import SolveConfig


class ConfigError(ValueError):
    """Invalid or inconsistent configuration (CLI exit code 2)."""


@dataclass(frozen=True)
class ExperimentConfig:
    a: float = 0.0
    b: float = 1.0
    n: int = 1023
    s: float = 0.5
    t: float = 1.0
    normalization: str = "standard"
    g: str = "1"
    f: str = "1"
    suite: str = "all"
    out: str = "mixlab_out"
    seed: int = 42
    two_star: float = 6.0
    m_max: int = 8
    levels: int = 3
    cg_tol: float = 1e-10
    cg_max_iter: int = 0  # 0 means 10 n
    picard_damping: float = 0.7
    picard_tol: float = 1e-8
    picard_max_iter: int = 500
    newton_switch_tol: float = 1e-3
    newton: bool = False
    preconditioner: str = "tridiagonal"

    def __post_init__(self):
        # validate everything up front so no computation starts on a bad config
        try:
            self.grid
            self.order
            self.solve_config
            if not 0.0 <= self.t <= 1.0:
                raise ValueError(f"t must lie in [0, 1], got {self.t}")
            if self.two_star <= 2 or self.m_max < 1 or self.levels < 3:
                raise ValueError("need two_star > 2, m_max >= 1 and levels >= 3")
            g, f = self.g_expr, self.f_expr
        except ExpressionError as exc:
            raise ConfigError(f"bad expression: {exc}") from exc
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if "u" in f.variables:
            raise ConfigError("f may depend on x only")

    @property
    def grid(self) -> Grid:
        return Grid(self.a, self.b, self.n)

    @property
    def order(self) -> FractionalOrder:
        return FractionalOrder(self.s, self.normalization)

    @property
    def solve_config(self) -> SolveConfig:
        return SolveConfig(
            cg_tol=self.cg_tol,
            cg_max_iter=self.cg_max_iter or None,
            picard_damping=self.picard_damping,
            picard_tol=self.picard_tol,
            picard_max_iter=self.picard_max_iter,
            newton_switch_tol=self.newton_switch_tol,
            newton=self.newton,
            preconditioner=self.preconditioner,
        )

    @property
    def g_expr(self):
        return parse_expression(self.g)

    @property
    def f_expr(self):
        return parse_expression(self.f)

    def replace(self, **changes) -> ExperimentConfig:
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        return "".join(f"{fl.name}={_format(getattr(self, fl.name))}\n" for fl in fields(self))


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _coerce(name: str, kind, raw: str):
    raw = raw.strip()
    try:
        if kind in (bool, "bool"):
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind in (int, "int"):
            return int(raw)
        if kind in (float, "float"):
            return float(raw)
    except ValueError:
        raise ConfigError(f"cannot read {name}={raw!r} as {getattr(kind, '__name__', kind)}") from None
    return raw


FIELD_TYPES = {fl.name: fl.type for fl in fields(ExperimentConfig)}


def parse_pairs(lines) -> dict[str, str]:
    """``key=value`` lines; blank lines and ``#`` comments are skipped."""
    out = {}
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key] = value
    return out


def build_config(values: dict[str, object] | None = None, path=None) -> ExperimentConfig:
    """Defaults, then the file at ``path``, then ``values`` (later wins)."""
    merged: dict[str, object] = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        merged.update(parse_pairs(text.splitlines()))
    merged.update({k: v for k, v in (values or {}).items() if v is not None})
    unknown = sorted(set(merged) - set(FIELD_TYPES))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    typed = {
        k: _coerce(k, FIELD_TYPES[k], v) if isinstance(v, str) else v for k, v in merged.items()
    }
    return ExperimentConfig(**typed)
