#!/usr/bin/env python3
"""Benchmark the LCP solvers on the negative-rate American put.

Times each solver over the same backward induction (median of 9 runs after
two warmups) for both constant and square-root time-step laws, and prints
the cross-solver timing ratios.
"""

import sys

from doublesweep.cli import RunConfig, cmd_bench


def main() -> int:
    cfg = RunConfig(
        command="bench",
        payoff="put",
        strike=100.0,
        spot=100.0,
        rate=-0.012,
        drift=0.004,
        vol=0.10,
        expiry=360.0 / 365.0,
        n=100,
        m=2000,
        space_grid="hyperbolic",
    )
    return cmd_bench(cfg)


if __name__ == "__main__":
    sys.exit(main())
