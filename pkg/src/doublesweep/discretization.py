"""TR-BDF2 assembly of the tridiagonal system and its complementarity form.

One step of the scheme solves two implicit stages against the same matrix
M = I + (alpha*k/2) * L_h, where L_h is the centrally discretized
convection-diffusion-discount operator. The trapezoidal stage right-hand
side is g = (2I - M) f, the BDF2 stage combines the stage value and the
previous step. Both stages become a linear complementarity problem once
the early-exercise floor is subtracted out.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .grids import SpaceGrid

__all__ = [
    "TridiagonalMatrix",
    "ModelParams",
    "SchemeParams",
    "MMatrixReport",
    "LcpProblem",
    "assemble_matrix",
    "trapezoidal_rhs",
    "bdf2_rhs",
    "check_m_matrix",
    "transform_to_standard",
]

TRBDF2_ALPHA = 2.0 - math.sqrt(2.0)

ScalarField = Union[float, Callable[[np.ndarray, float], np.ndarray]]
TimeField = Union[float, Callable[[float], float]]


@dataclass(frozen=True)
class TridiagonalMatrix:
    """Row coefficients of a tridiagonal matrix of logical size m + 1.

    All three arrays have length m + 1; a[0] and c[m] are stored as 0.
    """

    a: np.ndarray  # lower diagonal, a[i] multiplies f_{i-1}
    b: np.ndarray  # main diagonal
    c: np.ndarray  # upper diagonal, c[i] multiplies f_{i+1}

    def __post_init__(self):
        a = np.asarray(self.a, dtype=np.float64)
        b = np.asarray(self.b, dtype=np.float64)
        c = np.asarray(self.c, dtype=np.float64)
        if not (a.shape == b.shape == c.shape) or b.ndim != 1:
            raise ValueError("a, b, c must be 1-d arrays of equal length")
        if a[0] != 0.0 or c[-1] != 0.0:
            raise ValueError("a[0] and c[m] must be stored as 0")
        for arr, name in ((a, "a"), (b, "b"), (c, "c")):
            object.__setattr__(self, name, arr)

    @property
    def size(self) -> int:
        return self.b.size

    def matvec(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=np.float64)
        if f.shape != self.b.shape:
            raise ValueError("vector length mismatch")
        out = self.b * f
        out[1:] += self.a[1:] * f[:-1]
        out[:-1] += self.c[:-1] * f[1:]
        return out

    def to_dense(self) -> np.ndarray:
        n = self.size
        dense = np.zeros((n, n))
        idx = np.arange(n)
        dense[idx, idx] = self.b
        dense[idx[1:], idx[:-1]] = self.a[1:]
        dense[idx[:-1], idx[1:]] = self.c[:-1]
        return dense

    def to_json(self) -> str:
        # shortest-round-trip float repr: decodes bit-exactly
        return json.dumps(
            {"a": self.a.tolist(), "b": self.b.tolist(), "c": self.c.tolist()}
        )

    @classmethod
    def from_json(cls, text: str) -> "TridiagonalMatrix":
        doc = json.loads(text)
        return cls(
            np.asarray(doc["a"], dtype=np.float64),
            np.asarray(doc["b"], dtype=np.float64),
            np.asarray(doc["c"], dtype=np.float64),
        )


@dataclass(frozen=True)
class ModelParams:
    """Rate r(x, t), drift mu(t) and volatility sigma(x, t).

    Each field is either a constant or a callable; constants enable the
    assemble-once fast path in the pricer.
    """

    rate: ScalarField = 0.0
    drift: TimeField = 0.0
    vol: ScalarField = 0.0

    @property
    def is_constant(self) -> bool:
        return not any(callable(f) for f in (self.rate, self.drift, self.vol))

    def rate_at(self, x: np.ndarray, t: float) -> np.ndarray:
        if callable(self.rate):
            return np.broadcast_to(
                np.asarray(self.rate(x, t), dtype=np.float64), x.shape
            ).copy()
        return np.full_like(x, float(self.rate))

    def drift_at(self, t: float) -> float:
        if callable(self.drift):
            return float(self.drift(t))
        return float(self.drift)

    def vol_at(self, x: np.ndarray, t: float) -> np.ndarray:
        if callable(self.vol):
            vol = np.broadcast_to(
                np.asarray(self.vol(x, t), dtype=np.float64), x.shape
            ).copy()
        else:
            vol = np.full_like(x, float(self.vol))
        if np.any(vol < 0.0):
            raise ValueError("volatility must be non-negative")
        return vol


@dataclass(frozen=True)
class SchemeParams:
    """TR-BDF2 parameter; the default makes both stages share one matrix."""

    alpha: float = TRBDF2_ALPHA


# condition labels for MMatrixReport
DRIFT_BOUND = "drift-bound"
RATE_BOUND = "rate-bound"
BOUNDARY_SIGN = "boundary-sign"


@dataclass(frozen=True)
class MMatrixReport:
    """Diagnostic for the sign/dominance conditions of the system matrix."""

    is_m_matrix: bool
    violations: tuple  # of (row index, condition label)

    def __post_init__(self):
        if self.is_m_matrix != (len(self.violations) == 0):
            raise ValueError("is_m_matrix must match emptiness of violations")

    def rows(self, condition: str | None = None):
        return [r for r, cond in self.violations if condition in (None, cond)]


@dataclass(frozen=True)
class LcpProblem:
    """Transformed complementarity problem: z >= 0, M z >= v, z'(Mz - v) = 0."""

    matrix: TridiagonalMatrix
    v: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v, dtype=np.float64)
        object.__setattr__(self, "v", v)
        if v.shape != self.matrix.b.shape:
            raise ValueError("right-hand side length mismatch")
        if not np.all(np.isfinite(v)):
            raise ValueError("right-hand side must be finite")


def assemble_matrix(
    grid: SpaceGrid,
    params: ModelParams,
    k: float,
    t_eval: float,
    scheme: SchemeParams = SchemeParams(),
) -> TridiagonalMatrix:
    """Build M = I + (alpha*k/2) * L_h for one time step of size k.

    Interior rows use the second-order central stencil on the (possibly
    non-uniform) grid; the boundary rows impose a vanishing second
    derivative with one-sided first-order convection.
    """
    if k <= 0.0:
        raise ValueError("time step k must be positive")
    x = grid.nodes
    dx = grid.spacings
    m = grid.m
    lam = 0.5 * scheme.alpha * k

    sig2 = params.vol_at(x, t_eval) ** 2
    r = params.rate_at(x, t_eval)
    mu = params.drift_at(t_eval)

    a = np.zeros(m + 1)
    b = np.zeros(m + 1)
    c = np.zeros(m + 1)

    xi = x[1:m]
    dxl = dx[: m - 1]  # dx_{i-1}
    dxr = dx[1:m]  # dx_i
    sig2x2 = sig2[1:m] * xi**2
    a[1:m] = lam / (dxl * (dxl + dxr)) * (mu * xi * dxr - sig2x2)
    b[1:m] = 1.0 + lam * (r[1:m] + (mu * (dxl - dxr) * xi + sig2x2) / (dxr * dxl))
    c[1:m] = -lam / (dxr * (dxl + dxr)) * (mu * xi * dxl + sig2x2)

    b[0] = 1.0 + lam * (r[0] + mu * x[0] / dx[0])
    c[0] = -lam * mu * x[0] / dx[0]
    a[m] = lam * mu * x[m] / dx[m - 1]
    b[m] = 1.0 + lam * (r[m] - mu * x[m] / dx[m - 1])
    return TridiagonalMatrix(a, b, c)


def trapezoidal_rhs(matrix: TridiagonalMatrix, f_current: np.ndarray) -> np.ndarray:
    """g = (2I - M) f, written row-wise as g_i = -a f_{i-1} + (2-b) f_i - c f_{i+1}."""
    f = np.asarray(f_current, dtype=np.float64)
    if f.shape != matrix.b.shape:
        raise ValueError("vector length mismatch")
    return 2.0 * f - matrix.matvec(f)


def bdf2_rhs(
    f_star: np.ndarray,
    f_current: np.ndarray,
    scheme: SchemeParams = SchemeParams(),
) -> np.ndarray:
    """h = (f*/alpha - (1-alpha)^2/alpha * f) / (2 - alpha), componentwise."""
    f_star = np.asarray(f_star, dtype=np.float64)
    f_current = np.asarray(f_current, dtype=np.float64)
    if f_star.shape != f_current.shape:
        raise ValueError("vector length mismatch")
    alpha = scheme.alpha
    return (f_star / alpha - (1.0 - alpha) ** 2 / alpha * f_current) / (2.0 - alpha)


def check_m_matrix(
    grid: SpaceGrid,
    params: ModelParams,
    k: float,
    t_eval: float,
    scheme: SchemeParams = SchemeParams(),
) -> MMatrixReport:
    """Report which rows break the sign and dominance conditions.

    Interior rows need the drift bounded by sigma^2 x / dx on both sides
    and 1 + (alpha*k/2) r >= 0; the boundary rows need mu*x_0 >= 0 and
    mu*x_m <= 0. Violations are diagnostic only: the direct solvers stay
    valid for sign-violating boundary rows.
    """
    if k <= 0.0:
        raise ValueError("time step k must be positive")
    x = grid.nodes
    dx = grid.spacings
    m = grid.m
    lam = 0.5 * scheme.alpha * k
    sig2 = params.vol_at(x, t_eval) ** 2
    r = params.rate_at(x, t_eval)
    mu = params.drift_at(t_eval)

    violations = []
    for i in range(1, m):
        lo = -sig2[i] * x[i] / dx[i - 1]
        hi = sig2[i] * x[i] / dx[i]
        if not (lo <= mu <= hi):
            violations.append((i, DRIFT_BOUND))
    for i in range(m + 1):
        if 1.0 + lam * r[i] < 0.0:
            violations.append((i, RATE_BOUND))
    if mu * x[0] < 0.0:
        violations.append((0, BOUNDARY_SIGN))
    if mu * x[m] > 0.0:
        violations.append((m, BOUNDARY_SIGN))
    violations.sort()
    return MMatrixReport(is_m_matrix=not violations, violations=tuple(violations))


def transform_to_standard(
    matrix: TridiagonalMatrix,
    rhs: np.ndarray,
    payoff_values: np.ndarray,
) -> LcpProblem:
    """Shift the stage problem by the payoff floor: v = rhs - M * payoff.

    The solved unknown is z = f - payoff; consumers recover f = z + payoff.
    """
    rhs = np.asarray(rhs, dtype=np.float64)
    payoff_values = np.asarray(payoff_values, dtype=np.float64)
    if rhs.shape != matrix.b.shape or payoff_values.shape != matrix.b.shape:
        raise ValueError("vector length mismatch")
    return LcpProblem(matrix, rhs - matrix.matvec(payoff_values))
