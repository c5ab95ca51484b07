"""Numerical laboratory for the mixed operator ``-Delta + (-Delta)^s`` on an interval with zero exterior data."""

from .grid import (
    FractionalOrder,
    Grid,
    GridFunction,
    build_grid,
    fractional_constant,
    gagliardo_seminorm_sq,
    holder_quotient,
    lp_norm,
    norm_x01_sq,
    read_csv,
    write_csv,
)
from .operator import MixedOperator, apply, assemble_fractional, assemble_local, assemble_mixed
from .solver import (
    SemilinearResult,
    SolveConfig,
    SolverError,
    continuation_solve,
    detect_nonuniqueness,
    solve_linear,
    solve_semilinear,
)
from .spectral import EigenPair, eigengap, principal_eigenpair, rayleigh_quotient
from .regularity import (
    MoserTrace,
    RegularityReport,
    TruncationParams,
    boundary_fit,
    convexity_gap,
    estimate_gradient_holder,
    fractional_holder_ratio,
    moser_trace,
    sublinear_trace,
    truncation_phi,
    w2p_window,
)
from .expr import Expression, parse_expression
from .config import ExperimentConfig, build_config
from .checks import run_max_principle_check, run_suite

__all__ = [name for name in dir() if not name.startswith("_")]
