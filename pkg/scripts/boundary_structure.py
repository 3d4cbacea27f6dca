#!/usr/bin/env python3
"""Print the early-exercise band of the negative-rate American put over time.

Under r < 0 < mu - r the put develops an interior exercise band: the
constraint is active on a contiguous price interval with continuation
regions on both sides, i.e. two early-exercise boundaries. This script
solves the Table-1-style configuration and prints, for each time level,
the price interval on which the solved value equals the payoff.
"""

import sys

from doublesweep import (
    ModelParams,
    OptionSpec,
    make_constant_time_grid,
    make_hyperbolic_space_grid,
    price_american,
)
from doublesweep.cli import RunConfig, default_x_max


def main() -> int:
    maturity = 360.0 / 365.0
    cfg = RunConfig(
        payoff="put", strike=100.0, spot=100.0, rate=-0.012, drift=0.004,
        vol=0.10, expiry=maturity, n=100, m=2000,
    )
    sgrid = make_hyperbolic_space_grid(0.0, default_x_max(cfg), cfg.m, cfg.strike)
    tgrid = make_constant_time_grid(maturity, cfg.n)
    spec = OptionSpec("put", cfg.strike, maturity)
    params = ModelParams(rate=cfg.rate, drift=cfg.drift, vol=cfg.vol)
    result = price_american(spec, params, sgrid, tgrid, cfg.spot, solver="pi")

    nodes = sgrid.nodes
    print(f"price (PI solver): {result.price:.9f}")
    print("t (years)   exercise band in price space")
    for t, bands in result.exercise_bands:
        # keep bands where the payoff is strictly positive (genuine exercise)
        genuine = [
            (nodes[lo], nodes[hi])
            for lo, hi in bands
            if nodes[lo] < cfg.strike
        ]
        label = ", ".join(f"[{lo:8.3f}, {hi:8.3f}]" for lo, hi in genuine) or "none"
        print(f"{t:9.4f}   {label}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
