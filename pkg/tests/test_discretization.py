import numpy as np
import pytest

from doublesweep import (
    ModelParams,
    SchemeParams,
    TridiagonalMatrix,
    assemble_matrix,
    bdf2_rhs,
    check_m_matrix,
    make_uniform_space_grid,
    transform_to_standard,
    trapezoidal_rhs,
)
from doublesweep.discretization import TRBDF2_ALPHA


class TestTridiagonalMatrix:
    def test_matvec_matches_dense(self):
        rng = np.random.default_rng(7)
        a = -rng.uniform(0, 1, 6)
        c = -rng.uniform(0, 1, 6)
        a[0] = c[-1] = 0.0
        b = rng.uniform(2, 3, 6)
        matrix = TridiagonalMatrix(a, b, c)
        f = rng.normal(size=6)
        np.testing.assert_allclose(matrix.matvec(f), matrix.to_dense() @ f, atol=1e-14)

    def test_corner_entries_must_be_zero(self):
        with pytest.raises(ValueError):
            TridiagonalMatrix(np.array([1.0, 0.0]), np.ones(2), np.zeros(2))

    def test_json_round_trip_is_bit_exact(self):
        rng = np.random.default_rng(11)
        a = -rng.uniform(0, 1, 5)
        c = -rng.uniform(0, 1, 5)
        a[0] = c[-1] = 0.0
        matrix = TridiagonalMatrix(a, rng.uniform(2, 3, 5), c)
        back = TridiagonalMatrix.from_json(matrix.to_json())
        np.testing.assert_array_equal(back.a, matrix.a)
        np.testing.assert_array_equal(back.b, matrix.b)
        np.testing.assert_array_equal(back.c, matrix.c)


class TestAssembly:
    def test_sixteen_node_butterfly_system(self, appendix_a_system):
        matrix, _, payoff, doc = appendix_a_system
        np.testing.assert_allclose(matrix.a, doc["a"], atol=1e-12)
        np.testing.assert_allclose(matrix.b, doc["b"], atol=1e-12)
        np.testing.assert_allclose(matrix.c, doc["c"], atol=1e-12)
        # spot-check individual entries
        assert matrix.b[1] == pytest.approx(1.024651845916799, abs=1e-15)
        assert matrix.c[1] == pytest.approx(-0.012325922958399462, abs=1e-15)
        assert matrix.a[15] == pytest.approx(0.0036611652351682144, abs=1e-15)
        np.testing.assert_allclose(payoff, doc["F"], atol=0.0)

    def test_trapezoidal_rhs_matches_printed_vector(self, appendix_a_system):
        matrix, _, payoff, doc = appendix_a_system
        g = trapezoidal_rhs(matrix, payoff)
        np.testing.assert_allclose(g, doc["g"], atol=1e-12)

    def test_rejects_nonpositive_step(self):
        grid = make_uniform_space_grid(0.0, 100.0, 4)
        params = ModelParams(rate=0.01, drift=0.0, vol=0.2)
        with pytest.raises(ValueError):
            assemble_matrix(grid, params, 0.0, 0.5)

    def test_time_dependent_coefficients_are_evaluated(self):
        grid = make_uniform_space_grid(0.0, 100.0, 4)
        params = ModelParams(rate=lambda x, t: 0.01 * t * np.ones_like(x),
                             drift=0.0, vol=0.2)
        m1 = assemble_matrix(grid, params, 0.1, 0.5)
        m2 = assemble_matrix(grid, params, 0.1, 1.0)
        assert not np.allclose(m1.b, m2.b)


class TestRhs:
    def test_bdf2_with_zero_stage_value(self):
        alpha = TRBDF2_ALPHA
        f = np.array([1.0, 2.0, 3.0])
        h = bdf2_rhs(np.zeros(3), f)
        expected = -((1.0 - alpha) ** 2) / (alpha * (2.0 - alpha)) * f
        np.testing.assert_allclose(h, expected, atol=1e-15)

    def test_trapezoidal_is_two_f_minus_mf(self):
        rng = np.random.default_rng(3)
        a = -rng.uniform(0, 1, 5)
        c = -rng.uniform(0, 1, 5)
        a[0] = c[-1] = 0.0
        matrix = TridiagonalMatrix(a, rng.uniform(2, 3, 5), c)
        f = rng.normal(size=5)
        np.testing.assert_allclose(
            trapezoidal_rhs(matrix, f), 2.0 * f - matrix.to_dense() @ f, atol=1e-14
        )


class TestMMatrixCheck:
    def test_clean_configuration_is_m_matrix(self):
        grid = make_uniform_space_grid(0.0, 400.0, 100)
        params = ModelParams(rate=0.01, drift=0.0, vol=0.2)
        report = check_m_matrix(grid, params, 0.01, 0.5)
        assert report.is_m_matrix
        assert report.violations == ()

    def test_positive_drift_breaks_top_boundary_row_sign(self):
        grid = make_uniform_space_grid(0.0, 400.0, 100)
        params = ModelParams(rate=0.01, drift=0.01, vol=0.2)
        report = check_m_matrix(grid, params, 0.01, 0.5)
        assert not report.is_m_matrix
        assert 100 in report.rows("boundary-sign")

    def test_large_drift_breaks_interior_bound(self):
        grid = make_uniform_space_grid(0.0, 400.0, 20)
        params = ModelParams(rate=0.01, drift=0.5, vol=0.05)
        report = check_m_matrix(grid, params, 0.01, 0.5)
        assert report.rows("drift-bound")


class TestTransform:
    def test_shift_by_payoff_floor(self):
        rng = np.random.default_rng(5)
        a = -rng.uniform(0, 1, 5)
        c = -rng.uniform(0, 1, 5)
        a[0] = c[-1] = 0.0
        matrix = TridiagonalMatrix(a, rng.uniform(2, 3, 5), c)
        rhs = rng.normal(size=5)
        floor = rng.uniform(0, 2, 5)
        problem = transform_to_standard(matrix, rhs, floor)
        np.testing.assert_allclose(
            problem.v, rhs - matrix.to_dense() @ floor, atol=1e-14
        )

    def test_zero_floor_is_identity(self):
        matrix = TridiagonalMatrix(
            np.array([0.0, -1.0]), np.array([2.0, 2.0]), np.array([-1.0, 0.0])
        )
        rhs = np.array([1.0, -1.0])
        problem = transform_to_standard(matrix, rhs, np.zeros(2))
        np.testing.assert_array_equal(problem.v, rhs)


def test_scheme_default_alpha_shares_stage_matrix():
    # at alpha = 2 - sqrt(2) the BDF2 stage matrix coincides with the
    # trapezoidal one: (1-alpha)/(2-alpha) == alpha/2
    alpha = SchemeParams().alpha
    assert (1.0 - alpha) / (2.0 - alpha) == pytest.approx(alpha / 2.0, abs=1e-15)
