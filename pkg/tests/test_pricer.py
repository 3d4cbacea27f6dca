import math

import numpy as np
import pytest

from doublesweep import (
    ModelParams,
    OptionSpec,
    assemble_matrix,
    bdf2_rhs,
    black_scholes_price,
    interpolate_at,
    make_constant_time_grid,
    make_hyperbolic_space_grid,
    make_uniform_space_grid,
    payoff_values,
    price_american,
    price_european,
    trapezoidal_rhs,
)
from doublesweep.solvers import solve_linear


class TestPayoffs:
    def test_put(self):
        grid = make_uniform_space_grid(0.0, 200.0, 2)
        spec = OptionSpec("put", 100.0, 1.0)
        np.testing.assert_array_equal(
            payoff_values(spec, grid), np.array([100.0, 0.0, 0.0])
        )

    def test_butterfly_sixteen_nodes(self):
        grid = make_uniform_space_grid(0.0, 300.0, 15)
        spec = OptionSpec("butterfly", 90.0, 0.25, strike2=110.0)
        expected = np.zeros(16)
        expected[5] = 10.0
        np.testing.assert_array_equal(payoff_values(spec, grid), expected)

    def test_straddle(self):
        grid = make_uniform_space_grid(0.0, 200.0, 10)
        spec = OptionSpec("straddle", 100.0, 1.0)
        values = payoff_values(spec, grid)
        assert values[3] == 40.0  # x = 60
        assert values[5] == 0.0
        assert values[8] == 60.0

    def test_butterfly_needs_ordered_strikes(self):
        with pytest.raises(ValueError):
            OptionSpec("butterfly", 110.0, 0.25, strike2=90.0)

    def test_positive_strike_and_maturity_required(self):
        with pytest.raises(ValueError):
            OptionSpec("put", -1.0, 1.0)
        with pytest.raises(ValueError):
            OptionSpec("put", 100.0, 0.0)


class TestInterpolation:
    def test_exact_at_nodes(self):
        grid = make_uniform_space_grid(0.0, 10.0, 10)
        values = np.sin(grid.nodes)
        for i in (0, 3, 10):
            assert interpolate_at(values, grid, grid.nodes[i]) == values[i]

    def test_reproduces_linears(self):
        grid = make_hyperbolic_space_grid(0.0, 10.0, 17, center=4.0)
        values = 2.0 * grid.nodes + 3.0
        for spot in (0.3, 4.123, 9.7):
            assert interpolate_at(values, grid, spot) == pytest.approx(
                2.0 * spot + 3.0, abs=1e-12
            )

    def test_reproduces_quadratics_on_interior(self):
        grid = make_uniform_space_grid(0.0, 10.0, 20)
        values = grid.nodes**2 - 3.0 * grid.nodes + 1.0
        for spot in (2.3, 5.05, 7.77):
            expected = spot**2 - 3.0 * spot + 1.0
            assert interpolate_at(values, grid, spot) == pytest.approx(
                expected, abs=1e-10
            )

    def test_outside_grid_rejected(self):
        grid = make_uniform_space_grid(0.0, 10.0, 10)
        with pytest.raises(ValueError):
            interpolate_at(np.zeros(11), grid, 10.5)


ATM_PUT = OptionSpec("put", 100.0, 1.0)
ATM_PARAMS = ModelParams(rate=0.01, drift=0.01, vol=0.2)


def atm_grids(n=100, m=400):
    x_max = 100.0 * math.exp(4 * 0.2 + 0.01)
    return (
        make_hyperbolic_space_grid(0.0, x_max, m, center=100.0),
        make_constant_time_grid(1.0, n),
    )


class TestEuropean:
    def test_matches_closed_form(self):
        sgrid, tgrid = atm_grids(m=2000)
        result = price_european(ATM_PUT, ATM_PARAMS, sgrid, tgrid, 100.0)
        reference = black_scholes_price("put", 100.0, 100.0, 1.0, 0.01, 0.01, 0.2)
        assert result.price == pytest.approx(reference, abs=2e-3)

    def test_zero_vol_zero_rates_call_is_intrinsic(self):
        spec = OptionSpec("call", 100.0, 1.0)
        params = ModelParams(rate=0.0, drift=0.0, vol=0.0)
        sgrid = make_uniform_space_grid(0.0, 200.0, 100)
        tgrid = make_constant_time_grid(1.0, 10)
        assert price_european(spec, params, sgrid, tgrid, 100.0).price == pytest.approx(
            0.0, abs=1e-12
        )
        assert price_european(spec, params, sgrid, tgrid, 150.0).price == pytest.approx(
            50.0, abs=1e-9
        )


class TestAmerican:
    def test_american_dominates_european(self):
        sgrid, tgrid = atm_grids()
        american = price_american(ATM_PUT, ATM_PARAMS, sgrid, tgrid, 100.0).price
        european = price_european(ATM_PUT, ATM_PARAMS, sgrid, tgrid, 100.0).price
        assert american >= european - 1e-12

    def test_american_dominates_payoff_at_spot(self):
        sgrid, tgrid = atm_grids()
        result = price_american(ATM_PUT, ATM_PARAMS, sgrid, tgrid, 80.0)
        assert result.price >= 20.0 - 1e-6

    def test_solved_values_stay_above_floor(self):
        sgrid, tgrid = atm_grids(n=20, m=200)
        result = price_american(ATM_PUT, ATM_PARAMS, sgrid, tgrid, 100.0)
        floor = payoff_values(ATM_PUT, sgrid)
        assert np.all(result.values >= floor - 1e-12)

    def test_all_solvers_agree(self):
        sgrid, tgrid = atm_grids(n=20, m=200)
        prices = {
            solver: price_american(
                ATM_PUT, ATM_PARAMS, sgrid, tgrid, 100.0, solver=solver
            ).price
            for solver in ("luul", "luul-fast", "bs", "pi", "psor")
        }
        reference = prices["pi"]
        for solver, price in prices.items():
            assert price == pytest.approx(reference, abs=1e-8), solver

    def test_sweep_planning_changes_nothing(self):
        sgrid, tgrid = atm_grids(n=20, m=200)
        plain = price_american(ATM_PUT, ATM_PARAMS, sgrid, tgrid, 100.0)
        planned = price_american(
            ATM_PUT, ATM_PARAMS, sgrid, tgrid, 100.0, use_sweep_planning=True
        )
        assert planned.price == pytest.approx(plain.price, abs=1e-12)

    def test_surface_retention_shape(self):
        sgrid, tgrid = atm_grids(n=10, m=50)
        result = price_american(
            ATM_PUT, ATM_PARAMS, sgrid, tgrid, 100.0, retain_surface=True
        )
        assert result.surface is not None
        assert result.surface.shape == (tgrid.n + 1, sgrid.m + 1)
        np.testing.assert_array_equal(result.surface[-1], payoff_values(ATM_PUT, sgrid))
        np.testing.assert_array_equal(result.surface[0], result.values)

    def test_unknown_solver_rejected(self):
        sgrid, tgrid = atm_grids(n=2, m=20)
        with pytest.raises(ValueError):
            price_american(ATM_PUT, ATM_PARAMS, sgrid, tgrid, 100.0, solver="magic")


class TestSmallGridAgreement:
    """Call and put on a coarse 20x20 grid: the two direct solvers coincide."""

    def test_pi_and_double_sweep_agree_to_machine_precision(self):
        params = ModelParams(rate=0.01, drift=0.005, vol=0.08)
        sgrid = make_uniform_space_grid(0.0, 400.0, 20)
        tgrid = make_constant_time_grid(1.0, 20)
        for kind in ("call", "put"):
            spec = OptionSpec(kind, 100.0, 1.0)
            p_pi = price_american(spec, params, sgrid, tgrid, 90.0, solver="pi").price
            p_ds = price_american(spec, params, sgrid, tgrid, 90.0, solver="luul").price
            assert abs(p_pi - p_ds) <= 5e-15 * p_pi


class TestNegativeRateStructure:
    """Under r < 0 < mu - r the put exercises on an interior price band."""

    @pytest.fixture(scope="class")
    @staticmethod
    def solved():
        maturity = 360.0 / 365.0
        x_max = 100.0 * math.exp(4 * 0.1 * math.sqrt(maturity) + 0.004 * maturity)
        sgrid = make_hyperbolic_space_grid(0.0, x_max, 1000, center=100.0)
        tgrid = make_constant_time_grid(maturity, 100)
        params = ModelParams(rate=-0.012, drift=0.004, vol=0.10)
        spec = OptionSpec("put", 100.0, maturity)
        result = price_american(spec, params, sgrid, tgrid, 100.0, solver="pi")
        return sgrid, result

    @staticmethod
    def genuine_bands(sgrid, bands):
        # keep bands strictly below the strike: the far out-of-the-money
        # tail is numerically zero without being an exercise decision
        return [
            (sgrid.nodes[lo], sgrid.nodes[hi])
            for lo, hi in bands
            if sgrid.nodes[lo] < 100.0
        ]

    def test_interior_band_near_expiry(self, solved):
        sgrid, result = solved
        t_last, bands = result.exercise_bands[0]  # level closest to expiry
        genuine = self.genuine_bands(sgrid, bands)
        assert len(genuine) == 1
        low, high = genuine[0]
        assert 0.0 < low < high < 100.0  # continuation below AND above

    def test_boundaries_spread_toward_expiry(self, solved):
        sgrid, result = solved
        lows, highs = [], []
        for _, bands in result.exercise_bands:  # ordered toward t = 0
            genuine = self.genuine_bands(sgrid, bands)
            if len(genuine) == 1:
                lows.append(genuine[0][0])
                highs.append(genuine[0][1])
        assert len(lows) > 50
        # walking backward from expiry the band shrinks monotonically
        assert np.all(np.diff(lows) >= -1e-9)
        assert np.all(np.diff(highs) <= 1e-9)


class TestConvergenceOrders:
    """The LCP stepping keeps second order in time; replacing the LCP by a
    plain solve plus post-projection degrades convergence to first order."""

    PARAMS = ModelParams(rate=0.01, drift=0.01, vol=1.0)
    SPEC = OptionSpec("butterfly", 90.0, 0.25, strike2=110.0)

    @pytest.fixture(scope="class")
    @staticmethod
    def sgrid():
        return make_uniform_space_grid(0.0, 300.0, 300)

    def explicit_projection_price(self, sgrid, n):
        floor = payoff_values(self.SPEC, sgrid)
        tgrid = make_constant_time_grid(0.25, n)
        times = tgrid.times
        f = floor.copy()
        for j in range(n, 0, -1):
            k = times[j] - times[j - 1]
            matrix = assemble_matrix(sgrid, self.PARAMS, k, 0.5 * (times[j] + times[j - 1]))
            f_star = np.maximum(solve_linear(matrix, trapezoidal_rhs(matrix, f)), floor)
            f = np.maximum(solve_linear(matrix, bdf2_rhs(f_star, f)), floor)
        return interpolate_at(f, sgrid, 110.0)

    def test_lcp_second_order_in_time(self, sgrid):
        prices = [
            price_american(
                self.SPEC, self.PARAMS, sgrid, make_constant_time_grid(0.25, n), 110.0
            ).price
            for n in (15, 31, 63, 127)
        ]
        diffs = np.diff(prices)
        ratios = diffs[:-1] / diffs[1:]
        assert np.all(ratios >= 3.0) and np.all(ratios <= 5.0)

    def test_post_projection_degrades_to_first_order(self, sgrid):
        prices = [
            self.explicit_projection_price(sgrid, n) for n in (15, 31, 63, 127)
        ]
        diffs = np.diff(prices)
        ratios = diffs[:-1] / diffs[1:]
        assert np.all(ratios <= 2.6)


class TestBlackScholes:
    def test_put_call_parity(self):
        call = black_scholes_price("call", 105.0, 100.0, 2.0, 0.03, 0.01, 0.25)
        put = black_scholes_price("put", 105.0, 100.0, 2.0, 0.03, 0.01, 0.25)
        forward = 105.0 * math.exp(0.01 * 2.0)
        parity = math.exp(-0.03 * 2.0) * (forward - 100.0)
        assert call - put == pytest.approx(parity, abs=1e-12)

    def test_zero_vol_is_discounted_intrinsic_of_forward(self):
        price = black_scholes_price("call", 100.0, 90.0, 1.0, 0.02, 0.05, 0.0)
        expected = math.exp(-0.02) * (100.0 * math.exp(0.05) - 90.0)
        assert price == pytest.approx(expected, abs=1e-12)
