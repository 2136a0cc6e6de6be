"""Fractional integral operators, weakly singular Volterra solvers and nonlocal thermistor problems."""

from ._backend import BACKEND
from .errors import (
    AccuracyError,
    ConsistencyError,
    DivergenceError,
    DomainError,
    EvaluationError,
    FracError,
    InputValidationError,
    PreconditionError,
    SingularityError,
)
from .expr import ExprFn, parse_expr
from .operators import (
    GridFn,
    GridPolicy,
    RLIntegrator,
    caputo_derivative,
    make_grid,
    rl_derivative,
    rl_integral,
)
from .thermistor import (
    BoundReport,
    CaputoSpec,
    RLSpec,
    TSSpec,
    caputo_local_radius,
    continue_caputo,
    gronwall_envelope,
    solve_caputo_local,
    solve_rl,
    solve_ts,
    uniqueness_threshold_rl,
    uniqueness_threshold_ts,
)
from .timescale import TimeScale, TsGridFn, delta_integral, sigma, ts_frac_derivative, ts_frac_integral
from .volterra import (
    SolveReport,
    VolterraProblem,
    abel_first_kind_convolution,
    abel_second_kind,
    fixed_point,
    picard_solve,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AccuracyError",
    "BoundReport",
    "CaputoSpec",
    "ConsistencyError",
    "DivergenceError",
    "DomainError",
    "EvaluationError",
    "ExprFn",
    "FracError",
    "GridFn",
    "GridPolicy",
    "InputValidationError",
    "PreconditionError",
    "RLIntegrator",
    "RLSpec",
    "SingularityError",
    "SolveReport",
    "TSSpec",
    "TimeScale",
    "TsGridFn",
    "VolterraProblem",
    "abel_first_kind_convolution",
    "abel_second_kind",
    "caputo_derivative",
    "caputo_local_radius",
    "continue_caputo",
    "delta_integral",
    "fixed_point",
    "gronwall_envelope",
    "make_grid",
    "parse_expr",
    "picard_solve",
    "rl_derivative",
    "rl_integral",
    "sigma",
    "solve_caputo_local",
    "solve_rl",
    "solve_ts",
    "ts_frac_derivative",
    "ts_frac_integral",
    "uniqueness_threshold_rl",
    "uniqueness_threshold_ts",
]
