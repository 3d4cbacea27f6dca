"""Backward TR-BDF2 stepping, payoffs, spot interpolation and analytics."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .discretization import (
    ModelParams,
    SchemeParams,
    TridiagonalMatrix,
    assemble_matrix,
    bdf2_rhs,
    trapezoidal_rhs,
)
from .grids import SpaceGrid, TimeGrid
from .solvers import (
    LuulFactors,
    SolverError,
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

__all__ = [
    "OptionSpec",
    "PriceResult",
    "payoff_values",
    "price_american",
    "price_european",
    "interpolate_at",
    "black_scholes_price",
    "SOLVER_KINDS",
]

PAYOFF_KINDS = ("call", "put", "butterfly", "straddle")
SOLVER_KINDS = ("luul", "luul-fast", "bs", "pi", "psor")


@dataclass(frozen=True)
class OptionSpec:
    """Contract description: payoff shape, strike(s), expiry, exercise style."""

    kind: str
    strike: float
    maturity: float
    strike2: float | None = None  # upper strike of a butterfly
    exercise: str = "american"

    def __post_init__(self):
        if self.kind not in PAYOFF_KINDS:
            raise ValueError(f"unknown payoff kind {self.kind!r}")
        if self.strike <= 0.0:
            raise ValueError("strike must be positive")
        if self.maturity <= 0.0:
            raise ValueError("maturity must be positive")
        if self.kind == "butterfly":
            if self.strike2 is None or not self.strike < self.strike2:
                raise ValueError("butterfly needs strikes K1 < K2")
        elif self.strike2 is not None:
            raise ValueError("strike2 only applies to butterflies")
        if self.exercise not in ("american", "european"):
            raise ValueError("exercise must be 'american' or 'european'")


@dataclass
class PriceResult:
    """Price at the spot plus optional per-step diagnostics."""

    price: float
    spot: float
    solver: str
    values: np.ndarray  # f at the valuation date, one entry per grid node
    iterations: int  # total LCP iterations over all stages
    wall_time: float
    exercise_bands: list = field(default_factory=list)  # (t_{j-1}, bands) per step
    surface: np.ndarray | None = None  # (n+1, m+1) when retained


def payoff_values(spec: OptionSpec, grid: SpaceGrid) -> np.ndarray:
    """Payoff evaluated at each grid node."""
    x = grid.nodes
    k = spec.strike
    if spec.kind == "call":
        return np.maximum(x - k, 0.0)
    if spec.kind == "put":
        return np.maximum(k - x, 0.0)
    if spec.kind == "straddle":
        return np.abs(x - k)
    # butterfly: long K1 and K2 calls, short two mid-strike calls
    k2 = spec.strike2
    mid = 0.5 * (k + k2)
    return (
        np.maximum(x - k, 0.0)
        - 2.0 * np.maximum(x - mid, 0.0)
        + np.maximum(x - k2, 0.0)
    )


def _limited_slope(d_left: float, d_right: float, slope: float) -> float:
    """Fritsch-Carlson style limiter on a node slope."""
    if d_left * d_right <= 0.0:
        return 0.0
    cap = 3.0 * min(abs(d_left), abs(d_right))
    if abs(slope) > cap:
        return math.copysign(cap, slope)
    return slope


def _node_slope(x: np.ndarray, f: np.ndarray, j: int) -> float:
    """Quadratic-exact three-point slope at node j, monotonicity-limited."""
    last = x.size - 1
    if 0 < j < last:
        hl = x[j] - x[j - 1]
        hr = x[j + 1] - x[j]
        dl = (f[j] - f[j - 1]) / hl
        dr = (f[j + 1] - f[j]) / hr
        slope = (hl * dr + hr * dl) / (hl + hr)
        return _limited_slope(dl, dr, slope)
    if j == 0:
        h0 = x[1] - x[0]
        h1 = x[2] - x[1]
        d0 = (f[1] - f[0]) / h0
        d1 = (f[2] - f[1]) / h1
        slope = d0 + h0 * (d0 - d1) / (h0 + h1)
        if slope * d0 <= 0.0:
            return 0.0
        if abs(slope) > 3.0 * abs(d0):
            return 3.0 * d0
        return slope
    h0 = x[last] - x[last - 1]
    h1 = x[last - 1] - x[last - 2]
    d0 = (f[last] - f[last - 1]) / h0
    d1 = (f[last - 1] - f[last - 2]) / h1
    slope = d0 + h0 * (d0 - d1) / (h0 + h1)
    if slope * d0 <= 0.0:
        return 0.0
    if abs(slope) > 3.0 * abs(d0):
        return 3.0 * d0
    return slope


def interpolate_at(values: np.ndarray, grid: SpaceGrid, spot: float) -> float:
    """Monotone cubic Hermite interpolation at the spot; exact on nodes."""
    x = grid.nodes
    f = np.asarray(values, dtype=np.float64)
    if f.shape != x.shape:
        raise ValueError("value vector length mismatch")
    if not x[0] <= spot <= x[-1]:
        raise ValueError(f"spot {spot} outside grid [{x[0]}, {x[-1]}]")
    i = int(np.searchsorted(x, spot, side="right")) - 1
    if i >= x.size - 1:
        i = x.size - 2
    if spot == x[i]:
        return float(f[i])
    if spot == x[i + 1]:
        return float(f[i + 1])
    h = x[i + 1] - x[i]
    d0 = _node_slope(x, f, i)
    d1 = _node_slope(x, f, i + 1)
    s = (spot - x[i]) / h
    h00 = (1.0 + 2.0 * s) * (1.0 - s) ** 2
    h10 = s * (1.0 - s) ** 2
    h01 = s**2 * (3.0 - 2.0 * s)
    h11 = s**2 * (s - 1.0)
    return float(h00 * f[i] + h * h10 * d0 + h01 * f[i + 1] + h * h11 * d1)


class _StepOperator:
    """Per-step matrix assembly with reuse when nothing changes.

    With constant model parameters and a repeated step size the matrix,
    its factorizations and M*F are computed once and shared by both
    stages of every step.
    """

    def __init__(self, sgrid, params, scheme, payoff, need_factors):
        self.sgrid = sgrid
        self.params = params
        self.scheme = scheme
        self.payoff = payoff
        self.need_factors = need_factors
        self.reusable = params.is_constant
        self._k = None
        self.matrix: TridiagonalMatrix | None = None
        self.factors: LuulFactors | None = None
        self.mf: np.ndarray | None = None

    def prepare(self, k: float, t_eval: float) -> None:
        if (
            self.matrix is not None
            and self.reusable
            and abs(k - self._k) <= 1e-12 * k
        ):
            return
        self.matrix = assemble_matrix(self.sgrid, self.params, k, t_eval, self.scheme)
        self.factors = luul_decompose(self.matrix) if self.need_factors else None
        self.mf = self.matrix.matvec(self.payoff)
        self._k = k


def _solve_stage(solver, op, v, spec, z0, psor_opts, use_planning, bs_direction):
    if solver == "luul":
        if use_planning:
            plan = plan_sweeps(v)
            if plan == "lu-only":
                return solve_classic_bs(op.factors, v, "upward")
            if plan == "ul-only":
                return solve_classic_bs(op.factors, v, "downward")
        return solve_double_sweep(op.factors, v)
    if solver == "luul-fast":
        return solve_fast_double_sweep(op.matrix, v)
    if solver == "bs":
        if bs_direction is None:
            # put convention sweeps from below; everything else from above
            bs_direction = "downward" if spec.kind == "put" else "upward"
        return solve_classic_bs(op.factors, v, bs_direction)
    if solver == "pi":
        return solve_policy_iteration(op.matrix, v)
    if solver == "psor":
        return solve_psor(op.matrix, v, z0=z0, **psor_opts)
    raise ValueError(f"unknown solver {solver!r}")


def price_american(
    spec: OptionSpec,
    params: ModelParams,
    sgrid: SpaceGrid,
    tgrid: TimeGrid,
    spot: float,
    solver: str = "luul",
    scheme: SchemeParams = SchemeParams(),
    retain_surface: bool = False,
    use_sweep_planning: bool = False,
    bs_direction: str | None = None,
    psor_omega: float = 1.2,
    psor_tol: float = 1e-12,
    psor_max_iters: int = 20000,
) -> PriceResult:
    """Backward induction over both TR-BDF2 stages with the chosen LCP solver."""
    if solver not in SOLVER_KINDS:
        raise ValueError(f"unknown solver {solver!r}")
    if abs(tgrid.maturity - spec.maturity) > 1e-12 * max(1.0, spec.maturity):
        raise ValueError("time grid maturity must match the contract")
    t0 = time.perf_counter()
    payoff = payoff_values(spec, sgrid)
    psor_opts = {"omega": psor_omega, "tol": psor_tol, "max_iters": psor_max_iters}

    times = tgrid.times
    n = tgrid.n
    f = payoff.copy()
    op = _StepOperator(
        sgrid, params, scheme, payoff, need_factors=solver in ("luul", "bs")
    )
    surface = [f.copy()] if retain_surface else None
    bands = []
    total_iters = 0

    for j in range(n, 0, -1):
        k = times[j] - times[j - 1]
        t_eval = 0.5 * (times[j] + times[j - 1])
        try:
            op.prepare(k, t_eval)
            g = trapezoidal_rhs(op.matrix, f)
            rep = _solve_stage(
                solver, op, g - op.mf, spec, f - payoff, psor_opts,
                use_sweep_planning, bs_direction,
            )
            total_iters += rep.iterations
            f_star = payoff + rep.z
            h = bdf2_rhs(f_star, f, scheme)
            rep = _solve_stage(
                solver, op, h - op.mf, spec, rep.z, psor_opts,
                use_sweep_planning, bs_direction,
            )
            total_iters += rep.iterations
        except SolverError as exc:
            raise SolverError(f"time step {j} (t = {times[j]:g}): {exc}") from exc
        f = payoff + rep.z
        bands.append((float(times[j - 1]), exercise_region(rep.z)))
        if retain_surface:
            surface.append(f.copy())

    price = interpolate_at(f, sgrid, spot)
    return PriceResult(
        price=price,
        spot=spot,
        solver=solver,
        values=f,
        iterations=total_iters,
        wall_time=time.perf_counter() - t0,
        exercise_bands=bands,
        surface=np.array(surface[::-1]) if retain_surface else None,
    )


def price_european(
    spec: OptionSpec,
    params: ModelParams,
    sgrid: SpaceGrid,
    tgrid: TimeGrid,
    spot: float,
    scheme: SchemeParams = SchemeParams(),
    retain_surface: bool = False,
) -> PriceResult:
    """Constraint-free TR-BDF2 stepping (plain tridiagonal solves)."""
    if abs(tgrid.maturity - spec.maturity) > 1e-12 * max(1.0, spec.maturity):
        raise ValueError("time grid maturity must match the contract")
    t0 = time.perf_counter()
    payoff = payoff_values(spec, sgrid)
    times = tgrid.times
    f = payoff.copy()
    op = _StepOperator(sgrid, params, scheme, payoff, need_factors=False)
    surface = [f.copy()] if retain_surface else None

    for j in range(tgrid.n, 0, -1):
        k = times[j] - times[j - 1]
        t_eval = 0.5 * (times[j] + times[j - 1])
        op.prepare(k, t_eval)
        f_star = solve_linear(op.matrix, trapezoidal_rhs(op.matrix, f))
        f = solve_linear(op.matrix, bdf2_rhs(f_star, f, scheme))
        if retain_surface:
            surface.append(f.copy())

    price = interpolate_at(f, sgrid, spot)
    return PriceResult(
        price=price,
        spot=spot,
        solver="linear",
        values=f,
        iterations=0,
        wall_time=time.perf_counter() - t0,
        surface=np.array(surface[::-1]) if retain_surface else None,
    )


def _norm_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def black_scholes_price(
    kind: str,
    spot: float,
    strike: float,
    maturity: float,
    rate: float,
    drift: float,
    vol: float,
) -> float:
    """Closed-form European value with distinct discount rate and drift."""
    if kind not in ("call", "put"):
        raise ValueError("closed form available for vanilla call/put only")
    df = math.exp(-rate * maturity)
    fwd = spot * math.exp(drift * maturity)
    stddev = vol * math.sqrt(maturity)
    if stddev == 0.0:
        intrinsic = max(fwd - strike, 0.0) if kind == "call" else max(strike - fwd, 0.0)
        return df * intrinsic
    d1 = (math.log(fwd / strike) + 0.5 * stddev**2) / stddev
    d2 = d1 - stddev
    if kind == "call":
        return df * (fwd * _norm_cdf(d1) - strike * _norm_cdf(d2))
    return df * (strike * _norm_cdf(-d2) - fwd * _norm_cdf(-d1))
