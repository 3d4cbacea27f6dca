"""Spatial and temporal mesh construction.

Spatial grids live in asset-price space (x >= 0); time grids run from the
valuation date t_0 = 0 to the contract expiry t_n = T. All builders return
immutable value objects with the node arrays plus derived spacings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SpaceGrid",
    "TimeGrid",
    "make_uniform_space_grid",
    "make_hyperbolic_space_grid",
    "make_constant_time_grid",
    "make_sqrt_time_grid",
    "DEFAULT_STRETCH",
]

DEFAULT_STRETCH = 0.05


@dataclass(frozen=True)
class SpaceGrid:
    """Strictly increasing asset-price nodes x_0..x_m."""

    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=np.float64)
        object.__setattr__(self, "nodes", nodes)
        if nodes.ndim != 1 or nodes.size < 3:
            raise ValueError("space grid needs at least 3 nodes (m >= 2)")
        if not np.all(np.diff(nodes) > 0.0):
            raise ValueError("space grid nodes must be strictly increasing")
        if nodes[0] < 0.0:
            raise ValueError("space grid must start at x_0 >= 0")

    @property
    def m(self) -> int:
        """Number of intervals (node count minus one)."""
        return self.nodes.size - 1

    @property
    def spacings(self) -> np.ndarray:
        """dx_i = x_{i+1} - x_i, length m."""
        return np.diff(self.nodes)

    def to_json(self) -> str:
        return json.dumps({"nodes": self.nodes.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "SpaceGrid":
        return cls(np.asarray(json.loads(text)["nodes"], dtype=np.float64))


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing times t_0 = 0 .. t_n = T (year fractions)."""

    times: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        object.__setattr__(self, "times", times)
        if times.ndim != 1 or times.size < 2:
            raise ValueError("time grid needs at least 2 times (n >= 1)")
        if times[0] != 0.0:
            raise ValueError("time grid must start at t_0 = 0")
        if not np.all(np.diff(times) > 0.0):
            raise ValueError("time grid must be strictly increasing")

    @property
    def n(self) -> int:
        return self.times.size - 1

    @property
    def maturity(self) -> float:
        return float(self.times[-1])

    @property
    def steps(self) -> np.ndarray:
        """k_j = t_j - t_{j-1}, length n."""
        return np.diff(self.times)

    @property
    def is_constant_step(self) -> bool:
        k = self.steps
        return bool(np.all(np.abs(k - k[0]) <= 1e-14 * k[0]))

    def to_json(self) -> str:
        return json.dumps({"nodes": self.times.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "TimeGrid":
        return cls(np.asarray(json.loads(text)["nodes"], dtype=np.float64))


def make_uniform_space_grid(x_min: float, x_max: float, m: int) -> SpaceGrid:
    """m equal intervals on [x_min, x_max], i.e. m + 1 nodes."""
    if m < 2:
        raise ValueError("need m >= 2 intervals")
    if not x_min < x_max:
        raise ValueError("need x_min < x_max")
    return SpaceGrid(np.linspace(x_min, x_max, m + 1))


def make_hyperbolic_space_grid(
    x_min: float,
    x_max: float,
    m: int,
    center: float,
    stretch: float = DEFAULT_STRETCH,
) -> SpaceGrid:
    """Sinh-stretched grid with node density peaking at `center`.

    x(xi) = center + alpha * sinh(c2*xi + c1*(1 - xi)) for xi = i/m, with
    c1, c2 chosen so the endpoints land exactly on x_min, x_max and
    alpha = stretch * (x_max - x_min). Small stretch concentrates nodes
    at the center; stretch -> inf recovers the uniform grid.
    """
    if m < 2:
        raise ValueError("need m >= 2 intervals")
    if not (x_min < center < x_max):
        raise ValueError("center must lie strictly inside (x_min, x_max)")
    if stretch <= 0.0:
        raise ValueError("stretch must be positive")
    alpha = stretch * (x_max - x_min)
    c1 = np.arcsinh((x_min - center) / alpha)
    c2 = np.arcsinh((x_max - center) / alpha)
    xi = np.linspace(0.0, 1.0, m + 1)
    nodes = center + alpha * np.sinh(c2 * xi + c1 * (1.0 - xi))
    # pin the endpoints against round-off
    nodes[0] = x_min
    nodes[-1] = x_max
    return SpaceGrid(nodes)


def make_constant_time_grid(maturity: float, n: int) -> TimeGrid:
    """n equal steps from 0 to maturity."""
    if n < 1:
        raise ValueError("need n >= 1 steps")
    if maturity <= 0.0:
        raise ValueError("maturity must be positive")
    return TimeGrid(np.linspace(0.0, maturity, n + 1))


def make_sqrt_time_grid(maturity: float, n: int) -> TimeGrid:
    """Square-root step law t_j = T - (n - j)^2 / n^2 * T.

    Steps shrink toward expiry, clustering resolution where the payoff
    kink enters the backward time stepping.
    """
    if n < 1:
        raise ValueError("need n >= 1 steps")
    if maturity <= 0.0:
        raise ValueError("maturity must be positive")
    j = np.arange(n + 1, dtype=np.float64)
    times = maturity - (n - j) ** 2 / n**2 * maturity
    times[0] = 0.0
    times[-1] = maturity
    return TimeGrid(times)
