"""Finite-difference American option pricing with direct double-sweep LCP solvers."""

from .discretization import (
    LcpProblem,
    MMatrixReport,
    ModelParams,
    SchemeParams,
    TridiagonalMatrix,
    assemble_matrix,
    bdf2_rhs,
    check_m_matrix,
    transform_to_standard,
    trapezoidal_rhs,
)
from .grids import (
    SpaceGrid,
    TimeGrid,
    make_constant_time_grid,
    make_hyperbolic_space_grid,
    make_sqrt_time_grid,
    make_uniform_space_grid,
)
from .pricer import (
    OptionSpec,
    PriceResult,
    black_scholes_price,
    interpolate_at,
    payoff_values,
    price_american,
    price_european,
)
from .solvers import (
    ConvergenceError,
    DecompositionError,
    LuulFactors,
    SolveReport,
    SolverError,
    brute_force_lcp,
    exercise_region,
    luul_decompose,
    plan_sweeps,
    solve_classic_bs,
    solve_double_sweep,
    solve_fast_double_sweep,
    solve_linear,
    solve_policy_iteration,
    solve_psor,
)

__version__ = "0.1.0"
