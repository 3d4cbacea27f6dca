"""Direct and iterative solvers for the tridiagonal complementarity problem.

The problem is posed in the shifted form: find z >= 0 with M z >= v and
z'(M z - v) = 0, M tridiagonal. The direct path factorizes M both ways
(LU top-down and UL bottom-up) and runs two projected substitution sweeps,
keeping the running maximum; this is exact whenever the zero set of the
solution is one contiguous index band. Policy iteration and projected SOR
are provided as exact/iterative references, and a brute-force active-set
enumeration serves as the verification oracle on small systems.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass

import numpy as np
from numba import njit

from .discretization import LcpProblem, TridiagonalMatrix

__all__ = [
    "LuulFactors",
    "SolveReport",
    "SolverError",
    "DecompositionError",
    "ConvergenceError",
    "luul_decompose",
    "solve_double_sweep",
    "solve_classic_bs",
    "solve_fast_double_sweep",
    "plan_sweeps",
    "solve_policy_iteration",
    "solve_psor",
    "solve_linear",
    "brute_force_lcp",
    "exercise_region",
    "dump_problem",
]


class SolverError(Exception):
    """Base class for solver failures."""


class DecompositionError(SolverError):
    def __init__(self, row: int, part: str):
        self.row = row
        self.part = part
        super().__init__(f"zero or non-finite pivot in {part} factor at row {row}")


class ConvergenceError(SolverError):
    def __init__(self, solver: str, iterations: int, residual: float):
        self.solver = solver
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"{solver} did not converge in {iterations} iterations "
            f"(residual {residual:.3e})"
        )


# ---------------------------------------------------------------------------
# numba kernels (sequential recurrences)
# ---------------------------------------------------------------------------


@njit(cache=True)
def _lu_factor_kernel(a, b, c):
    n = b.size
    l = np.empty(n)
    u = np.zeros(n)
    l[0] = b[0]
    if n > 1:
        u[0] = c[0] / l[0]
    for i in range(1, n):
        l[i] = b[i] - a[i] * u[i - 1]
        if i < n - 1:
            u[i] = c[i] / l[i]
    return l, u


@njit(cache=True)
def _ul_factor_kernel(a, b, c):
    n = b.size
    ubar = np.empty(n)
    lbar = np.zeros(n)
    ubar[n - 1] = b[n - 1]
    if n > 1:
        lbar[n - 1] = a[n - 1] / ubar[n - 1]
    for i in range(n - 2, -1, -1):
        ubar[i] = b[i] - c[i] * lbar[i + 1]
        if i > 0:
            lbar[i] = a[i] / ubar[i]
    return ubar, lbar


@njit(cache=True)
def _double_sweep_kernel(a, c, l, u, ubar, lbar, v):
    n = v.size
    y = np.empty(n)
    z = np.empty(n)
    # LU back-solve with projected backward substitution
    y[0] = v[0] / l[0]
    for i in range(1, n):
        y[i] = (v[i] - a[i] * y[i - 1]) / l[i]
    zi = y[n - 1]
    z[n - 1] = zi if zi > 0.0 else 0.0
    for i in range(n - 2, -1, -1):
        zi = y[i] - u[i] * z[i + 1]
        z[i] = zi if zi > 0.0 else 0.0
    # UL back-solve with projected forward substitution over the running max
    y[n - 1] = v[n - 1] / ubar[n - 1]
    for i in range(n - 2, -1, -1):
        y[i] = (v[i] - c[i] * y[i + 1]) / ubar[i]
    if y[0] > z[0]:
        z[0] = y[0]
    for i in range(1, n):
        zbar = y[i] - lbar[i] * z[i - 1]
        if zbar > z[i]:
            z[i] = zbar
    return z


@njit(cache=True)
def _sweep_lu_kernel(a, l, u, v):
    n = v.size
    y = np.empty(n)
    z = np.empty(n)
    y[0] = v[0] / l[0]
    for i in range(1, n):
        y[i] = (v[i] - a[i] * y[i - 1]) / l[i]
    zi = y[n - 1]
    z[n - 1] = zi if zi > 0.0 else 0.0
    for i in range(n - 2, -1, -1):
        zi = y[i] - u[i] * z[i + 1]
        z[i] = zi if zi > 0.0 else 0.0
    return z


@njit(cache=True)
def _sweep_ul_kernel(c, ubar, lbar, v):
    n = v.size
    y = np.empty(n)
    z = np.empty(n)
    y[n - 1] = v[n - 1] / ubar[n - 1]
    for i in range(n - 2, -1, -1):
        y[i] = (v[i] - c[i] * y[i + 1]) / ubar[i]
    zi = y[0]
    z[0] = zi if zi > 0.0 else 0.0
    for i in range(1, n):
        zi = y[i] - lbar[i] * z[i - 1]
        z[i] = zi if zi > 0.0 else 0.0
    return z


@njit(cache=True)
def _fast_double_sweep_kernel(a, b, c, v):
    n = b.size
    y = np.empty(n)
    z = np.empty(n)
    zbar = np.empty(n)
    # fused LU sweep
    y[0] = b[0]
    z[0] = v[0]
    for i in range(1, n):
        y[i] = b[i] - a[i] * c[i - 1] / y[i - 1]
        z[i] = v[i] - a[i] * z[i - 1] / y[i - 1]
    z[n - 1] = z[n - 1] / y[n - 1]
    if z[n - 1] < 0.0:
        z[n - 1] = 0.0
    for i in range(n - 2, -1, -1):
        z[i] = (z[i] - c[i] * z[i + 1]) / y[i]
        if z[i] < 0.0:
            z[i] = 0.0
    # fused UL sweep over the running max
    y[n - 1] = b[n - 1]
    zbar[n - 1] = v[n - 1]
    for i in range(n - 2, -1, -1):
        y[i] = b[i] - c[i] * a[i + 1] / y[i + 1]
        zbar[i] = v[i] - c[i] * zbar[i + 1] / y[i + 1]
    zb = zbar[0] / y[0]
    if zb > z[0]:
        z[0] = zb
    for i in range(1, n):
        zb = (zbar[i] - a[i] * z[i - 1]) / y[i]
        if zb > z[i]:
            z[i] = zb
    return z


@njit(cache=True)
def _thomas_kernel(a, b, c, d):
    n = b.size
    cp = np.empty(n)
    x = np.empty(n)
    beta = b[0]
    cp[0] = c[0] / beta
    x[0] = d[0] / beta
    for i in range(1, n):
        den = b[i] - a[i] * cp[i - 1]
        cp[i] = c[i] / den
        x[i] = (d[i] - a[i] * x[i - 1]) / den
    for i in range(n - 2, -1, -1):
        x[i] -= cp[i] * x[i + 1]
    return x


@njit(cache=True)
def _policy_iteration_kernel(a, b, c, v, max_iters):
    n = b.size
    active = np.zeros(n, np.bool_)
    aa = np.empty(n)
    bb = np.empty(n)
    cc = np.empty(n)
    vv = np.empty(n)
    z = np.zeros(n)
    for it in range(1, max_iters + 1):
        for i in range(n):
            if active[i]:
                aa[i] = 0.0
                bb[i] = 1.0
                cc[i] = 0.0
                vv[i] = 0.0
            else:
                aa[i] = a[i]
                bb[i] = b[i]
                cc[i] = c[i]
                vv[i] = v[i]
        z = _thomas_kernel(aa, bb, cc, vv)
        changed = False
        for i in range(n):
            res = b[i] * z[i] - v[i]
            if i > 0:
                res += a[i] * z[i - 1]
            if i < n - 1:
                res += c[i] * z[i + 1]
            prefer_constraint = z[i] < res
            if prefer_constraint != active[i]:
                active[i] = prefer_constraint
                changed = True
        if not changed:
            return z, it, True
    return z, max_iters, False


@njit(cache=True)
def _psor_kernel(a, b, c, v, z, omega, tol, max_iters):
    n = b.size
    delta = 0.0
    for it in range(1, max_iters + 1):
        delta = 0.0
        for i in range(n):
            s = v[i]
            if i > 0:
                s -= a[i] * z[i - 1]
            if i < n - 1:
                s -= c[i] * z[i + 1]
            znew = z[i] + omega * (s / b[i] - z[i])
            if znew < 0.0:
                znew = 0.0
            d = znew - z[i]
            if d < 0.0:
                d = -d
            if d > delta:
                delta = d
            z[i] = znew
        if delta < tol:
            return z, it, delta
    return z, max_iters, delta


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LuulFactors:
    """Both triangular factorizations of one tridiagonal matrix.

    LU part: L has sub-diagonal a_i and diagonal l_diag, U is unit upper
    with super-diagonal u_super. UL part: Ubar has diagonal ubar_diag and
    super-diagonal c_i, Lbar is unit lower with sub-diagonal lbar_sub.
    Immutable; safe to share across the two stages of a time step.
    """

    matrix: TridiagonalMatrix
    l_diag: np.ndarray
    u_super: np.ndarray  # u_super[i] = U[i, i+1]; last entry 0
    ubar_diag: np.ndarray
    lbar_sub: np.ndarray  # lbar_sub[i] = Lbar[i, i-1]; first entry 0

    @property
    def l_sub(self) -> np.ndarray:
        return self.matrix.a

    @property
    def ubar_super(self) -> np.ndarray:
        return self.matrix.c

    @property
    def size(self) -> int:
        return self.matrix.size


@dataclass(frozen=True)
class SolveReport:
    """Solution vector plus bookkeeping about how it was obtained."""

    z: np.ndarray
    solver: str
    iterations: int
    sweep_plan: str = "both"  # "both" | "lu-only" | "ul-only"
    wall_time: float = 0.0


def _check_pivots(diag: np.ndarray, part: str) -> None:
    bad = ~np.isfinite(diag) | (diag == 0.0)
    if bad.any():
        raise DecompositionError(int(np.argmax(bad)), part)


def luul_decompose(matrix: TridiagonalMatrix) -> LuulFactors:
    """Factor M = L U and M = Ubar Lbar in one pass each."""
    l_diag, u_super = _lu_factor_kernel(matrix.a, matrix.b, matrix.c)
    _check_pivots(l_diag, "LU")
    ubar_diag, lbar_sub = _ul_factor_kernel(matrix.a, matrix.b, matrix.c)
    _check_pivots(ubar_diag, "UL")
    return LuulFactors(matrix, l_diag, u_super, ubar_diag, lbar_sub)


def _require_finite(z: np.ndarray, solver: str) -> None:
    if not np.all(np.isfinite(z)):
        raise SolverError(
            f"{solver} produced a non-finite value at row {int(np.argmax(~np.isfinite(z)))}"
        )


def solve_double_sweep(factors: LuulFactors, v: np.ndarray) -> SolveReport:
    """Projected LU sweep, then projected UL sweep over the running max.

    Exact whenever the true solution has at most one contiguous zero band;
    otherwise a (typically very accurate) approximation.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.size != factors.size:
        raise ValueError("right-hand side length mismatch")
    t0 = time.perf_counter()
    z = _double_sweep_kernel(
        factors.matrix.a,
        factors.matrix.c,
        factors.l_diag,
        factors.u_super,
        factors.ubar_diag,
        factors.lbar_sub,
        v,
    )
    _require_finite(z, "double sweep")
    return SolveReport(z, "luul", 1, "both", time.perf_counter() - t0)


def solve_classic_bs(
    factors: LuulFactors, v: np.ndarray, direction: str = "downward"
) -> SolveReport:
    """Single projected sweep (classic Brennan-Schwartz).

    "downward" runs the UL factorization (put convention, zero band at the
    low end); "upward" runs the LU factorization (call convention, zero
    band at the high end). Exact only for a matching one-sided band.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.size != factors.size:
        raise ValueError("right-hand side length mismatch")
    t0 = time.perf_counter()
    if direction == "downward":
        z = _sweep_ul_kernel(factors.matrix.c, factors.ubar_diag, factors.lbar_sub, v)
        plan = "ul-only"
    elif direction == "upward":
        z = _sweep_lu_kernel(factors.matrix.a, factors.l_diag, factors.u_super, v)
        plan = "lu-only"
    else:
        raise ValueError("direction must be 'downward' or 'upward'")
    _require_finite(z, "classic sweep")
    return SolveReport(z, "bs", 1, plan, time.perf_counter() - t0)


def solve_fast_double_sweep(matrix: TridiagonalMatrix, v: np.ndarray) -> SolveReport:
    """Fused factorization + double sweep; no reusable factors."""
    v = np.asarray(v, dtype=np.float64)
    if v.size != matrix.size:
        raise ValueError("right-hand side length mismatch")
    t0 = time.perf_counter()
    z = _fast_double_sweep_kernel(matrix.a, matrix.b, matrix.c, v)
    _require_finite(z, "fast double sweep")
    return SolveReport(z, "luul-fast", 1, "both", time.perf_counter() - t0)


def plan_sweeps(v: np.ndarray) -> str:
    """Pick the cheapest sweep set from the sign pattern of v.

    Zeros are transparent (they carry the preceding nonzero sign). With at
    most one sign change, a right-hand side starting positive has its
    constraint-active block at the high end, so the LU sweep suffices; one
    starting negative has it at the low end, so the UL sweep suffices.
    All-zero input defaults to "ul-only" (z = 0 either way).
    """
    v = np.asarray(v, dtype=np.float64)
    signs = np.sign(v)
    nz = signs[signs != 0.0]
    if nz.size == 0:
        return "ul-only"
    changes = int(np.count_nonzero(np.diff(nz)))
    if changes > 1:
        return "both"
    return "lu-only" if nz[0] > 0 else "ul-only"


def solve_policy_iteration(
    matrix: TridiagonalMatrix, v: np.ndarray, max_iters: int = 100
) -> SolveReport:
    """Howard-style policy iteration; exact for any zero-band structure.

    Each node picks the PDE row or the constraint row, the resulting
    tridiagonal system is solved, and the policy is re-evaluated from the
    row residuals until it stabilizes. Starts all-inactive, so the first
    iterate is the unconstrained solve.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.size != matrix.size:
        raise ValueError("right-hand side length mismatch")
    t0 = time.perf_counter()
    z, iters, converged = _policy_iteration_kernel(
        matrix.a, matrix.b, matrix.c, v, max_iters
    )
    if not converged:
        raise ConvergenceError("policy iteration", iters, float("nan"))
    _require_finite(z, "policy iteration")
    return SolveReport(np.maximum(z, 0.0), "pi", iters, "both", time.perf_counter() - t0)


def solve_psor(
    matrix: TridiagonalMatrix,
    v: np.ndarray,
    omega: float = 1.2,
    tol: float = 1e-12,
    max_iters: int = 20000,
    z0: np.ndarray | None = None,
) -> SolveReport:
    """Projected SOR with relaxation factor omega in (0, 2)."""
    if not 0.0 < omega < 2.0:
        raise ValueError("omega must be in (0, 2)")
    v = np.asarray(v, dtype=np.float64)
    if v.size != matrix.size:
        raise ValueError("right-hand side length mismatch")
    z = np.maximum(v / matrix.b, 0.0) if z0 is None else np.maximum(z0, 0.0).copy()
    t0 = time.perf_counter()
    z, iters, delta = _psor_kernel(
        matrix.a, matrix.b, matrix.c, v, z, omega, tol, max_iters
    )
    if delta >= tol:
        raise ConvergenceError("projected SOR", iters, float(delta))
    _require_finite(z, "projected SOR")
    return SolveReport(z, "psor", iters, "both", time.perf_counter() - t0)


def solve_linear(matrix: TridiagonalMatrix, d: np.ndarray) -> np.ndarray:
    """Plain tridiagonal solve (no projection); the European stepping path."""
    d = np.asarray(d, dtype=np.float64)
    if d.size != matrix.size:
        raise ValueError("right-hand side length mismatch")
    x = _thomas_kernel(matrix.a, matrix.b, matrix.c, d)
    _require_finite(x, "tridiagonal solve")
    return x


def brute_force_lcp(
    matrix: TridiagonalMatrix, v: np.ndarray, tol: float = 1e-10
) -> np.ndarray:
    """Enumerate all active sets; return the unique feasible solution.

    Restricted to systems of at most 16 rows. An active set forces z = 0
    on its rows; the complementary rows split into contiguous segments
    whose tridiagonal sub-systems are solved densely. Feasibility requires
    z >= -tol everywhere and M z - v >= -tol on the active rows.
    """
    v = np.asarray(v, dtype=np.float64)
    n = matrix.size
    if v.size != n:
        raise ValueError("right-hand side length mismatch")
    if n > 16:
        raise ValueError("brute-force enumeration limited to 16 rows")
    dense = matrix.to_dense()

    # solution of every contiguous inactive segment [l, r]
    seg = np.full((n, n, n), np.nan)
    for lo in range(n):
        for hi in range(lo, n):
            try:
                sol = np.linalg.solve(dense[lo : hi + 1, lo : hi + 1], v[lo : hi + 1])
            except np.linalg.LinAlgError:
                continue
            seg[lo, hi, lo : hi + 1] = sol

    masks = np.arange(2**n, dtype=np.uint32)
    idx = np.arange(n)
    active = ((masks[:, None] >> idx) & 1).astype(bool)

    prev_act = np.maximum.accumulate(np.where(active, idx, -1), axis=1)
    rev = active[:, ::-1]
    nxt_rev = np.maximum.accumulate(np.where(rev, idx, -1), axis=1)[:, ::-1]
    next_act = np.where(nxt_rev >= 0, n - 1 - nxt_rev, n)

    lo = np.clip(prev_act + 1, 0, n - 1)
    hi = np.clip(next_act - 1, 0, n - 1)
    z = np.where(active, 0.0, seg[lo, hi, idx[None, :]])

    mz = matrix.b * z
    mz[:, 1:] += matrix.a[1:] * z[:, :-1]
    mz[:, :-1] += matrix.c[:-1] * z[:, 1:]
    with np.errstate(invalid="ignore"):
        ok_z = np.all(np.nan_to_num(z, nan=-np.inf) >= -tol, axis=1)
        resid_ok = (mz - v >= -tol) | ~active  # NaN compares as infeasible
        ok = ok_z & np.all(resid_ok, axis=1)
    hits = np.flatnonzero(ok)
    if hits.size == 0:
        raise SolverError("no feasible active set; matrix is likely not an M-matrix")
    return np.maximum(z[hits[0]], 0.0)


def exercise_region(z: np.ndarray, tol: float | None = None) -> list[tuple[int, int]]:
    """Maximal contiguous index bands where z is (numerically) zero."""
    z = np.asarray(z, dtype=np.float64)
    if tol is None:
        tol = 1e-13 * max(1.0, float(np.max(np.abs(z), initial=0.0)))
    flat = np.concatenate(([False], z <= tol, [False]))
    edges = np.flatnonzero(np.diff(flat))
    return [(int(lo), int(hi - 1)) for lo, hi in edges.reshape(-1, 2)]


def dump_problem(
    problem: LcpProblem,
    payoff_values: np.ndarray | None = None,
    solution: np.ndarray | None = None,
) -> str:
    """JSON debug dump of a problem (and optionally floor and solution)."""
    doc = {
        "a": problem.matrix.a.tolist(),
        "b": problem.matrix.b.tolist(),
        "c": problem.matrix.c.tolist(),
        "v": problem.v.tolist(),
    }
    if payoff_values is not None:
        doc["F"] = np.asarray(payoff_values, dtype=np.float64).tolist()
    if solution is not None:
        doc["solution"] = np.asarray(solution, dtype=np.float64).tolist()
    return json.dumps(doc, indent=2)
