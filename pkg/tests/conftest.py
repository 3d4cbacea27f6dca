"""Shared fixtures: random M-matrix instances and the 16-node golden system."""

from __future__ import annotations

import numpy as np
import pytest

from doublesweep import (
    ModelParams,
    OptionSpec,
    TridiagonalMatrix,
    assemble_matrix,
    make_uniform_space_grid,
    payoff_values,
    trapezoidal_rhs,
)
from doublesweep.golden import load_tables

# filled by the acceptance tests; printed as one line per criterion at the end
ACCEPTANCE_REPORT: list[tuple[int, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_REPORT:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number, ok, detail in sorted(ACCEPTANCE_REPORT):
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"CRITERION {number:2d}: {status} — {detail}")


def random_m_matrix(rng: np.random.Generator, size: int) -> TridiagonalMatrix:
    """Strictly diagonally dominant tridiagonal matrix with nonpositive wings."""
    a = -rng.uniform(0.05, 1.0, size)
    c = -rng.uniform(0.05, 1.0, size)
    a[0] = 0.0
    c[-1] = 0.0
    slack = rng.uniform(0.05, 1.0, size)
    b = np.abs(a) + np.abs(c) + slack
    return TridiagonalMatrix(a, b, c)


def random_rhs(rng: np.random.Generator, size: int, transitions: int) -> np.ndarray:
    """Right-hand side whose sign alternates across `transitions` cut points."""
    magnitudes = rng.uniform(0.1, 5.0, size)
    if transitions == 0:
        sign = rng.choice((-1.0, 1.0))
        return sign * magnitudes
    cuts = np.sort(rng.choice(np.arange(1, size), size=transitions, replace=False))
    sign = rng.choice((-1.0, 1.0))
    v = np.empty(size)
    start = 0
    for cut in list(cuts) + [size]:
        v[start:cut] = sign * magnitudes[start:cut]
        sign = -sign
        start = cut
    return v


def make_lcp_instances(count: int, seed: int = 20240817):
    """Deterministic batch of (matrix, v) pairs, sizes 3..13, 0..3 transitions."""
    rng = np.random.default_rng(seed)
    instances = []
    for i in range(count):
        size = int(rng.integers(3, 14))
        transitions = min(int(rng.integers(0, 4)), size - 1)
        instances.append(
            (random_m_matrix(rng, size), random_rhs(rng, size, transitions))
        )
    return instances


def complementarity_residual(matrix: TridiagonalMatrix, z, v) -> float:
    """max |min(z, Mz - v)| componentwise (0 for an exact LCP solution)."""
    slack = matrix.matvec(z) - np.asarray(v)
    return float(np.max(np.abs(np.minimum(z, slack))))


@pytest.fixture(scope="session")
def golden():
    return load_tables()


@pytest.fixture(scope="session")
def appendix_a_system(golden):
    """Assembled 16-node butterfly trapezoidal stage: (matrix, v, F, doc)."""
    doc = golden["appendixA"]
    cfg = doc["config"]
    grid = make_uniform_space_grid(cfg["x_min"], cfg["x_max"], cfg["space_nodes"] - 1)
    params = ModelParams(rate=cfg["rate"], drift=cfg["drift"], vol=cfg["vol"])
    spec = OptionSpec(
        "butterfly", cfg["strike"], cfg["maturity"], strike2=cfg["strike2"]
    )
    k = cfg["maturity"] / cfg["time_steps"]
    matrix = assemble_matrix(grid, params, k, cfg["maturity"] - 0.5 * k)
    payoff = payoff_values(spec, grid)
    g = trapezoidal_rhs(matrix, payoff)
    return matrix, g - matrix.matvec(payoff), payoff, doc
