from fractions import Fraction

import numpy as np
import pytest

from cogs.errors import BoundViolationError
from cogs.spectral_analysis import (
    QuadFormMatrix,
    SPECTRUM_HEADER,
    a_plus,
    eigen_Ak,
    eps_plus,
    eps_plus_definitional,
    lambda_bounds,
    lplus_energy_derivative,
    partial_sum_diagnostics,
    q_decay_rate,
    q_operator_matrix,
    q_operator_norm,
    spectrum_rows,
)
from cogs.weighted_basis import BasisCoefficients, d_plus, tridiagonal_L


class TestCoefficients:

    def test_eps_first_value(self):
        assert eps_plus(1) == Fraction(62, 405)

    def test_eps_closed_form_matches_definition(self):
        for k in range(1, 300):
            assert eps_plus(k) == eps_plus_definitional(k)

    def test_a_plus_first_value(self):
        assert a_plus(1) == Fraction(121, 324)

    def test_rejects_zero_index(self):
        with pytest.raises(ValueError):
            eps_plus(0)
        with pytest.raises(ValueError):
            eigen_Ak(0)


class TestQuadForm:

    @pytest.mark.parametrize("k", [1, 2, 3, 7, 50])
    def test_closed_form_eigenvalues(self, k):
        block = QuadFormMatrix.at(k)
        expected = np.linalg.eigvalsh(block.matrix())
        np.testing.assert_allclose(block.eigenvalues(), expected, rtol=1e-12)

    def test_positive_definite(self):
        for k in range(1, 60):
            assert QuadFormMatrix.at(k).is_positive_definite()

    def test_form(self):
        block = QuadFormMatrix.at(3)
        x = np.array([0.3, -1.2])
        assert block.form(*x) == pytest.approx(float(x @ block.matrix() @ x))


class TestBounds:

    def test_within_published_interval(self):
        bounds = lambda_bounds(1000)
        assert 1 / 50 < bounds.lambda_inf <= 0.25 <= bounds.lambda_sup < 3 / 5
        assert bounds.within_bounds
        assert bounds.to_dict()["verdict"] == "pass"

    def test_tail_limit_is_approached(self):
        lam1, lam2 = eigen_Ak(5000)
        assert abs(lam1 - 0.25) < 1e-3
        assert abs(lam2 - 0.25) < 1e-3

    def test_stable_under_larger_range(self):
        small, large = lambda_bounds(200), lambda_bounds(2000)
        assert small.lambda_inf == pytest.approx(large.lambda_inf, rel=1e-12)
        assert small.lambda_sup == pytest.approx(large.lambda_sup, rel=1e-12)

    def test_rejects_small_range(self):
        with pytest.raises(ValueError):
            lambda_bounds(3)

    def test_bound_violation_is_reported(self, monkeypatch):
        import cogs.spectral_analysis as module
        monkeypatch.setattr(module, "UPPER_BOUND", Fraction(1, 5))
        with pytest.raises(BoundViolationError):
            lambda_bounds(50)
        assert not lambda_bounds(50, strict=False).within_bounds


def test_lplus_energy_derivative():
    c = BasisCoefficients(2, np.array([1.0, 2.0, 0.0, 0.0, 0.0]))
    expected = float((d_plus(1) - d_plus(3)) + 4 * (d_plus(2) - d_plus(4)))
    assert lplus_energy_derivative(c) == pytest.approx(expected)
    with pytest.raises(ValueError):
        lplus_energy_derivative(BasisCoefficients(3, np.ones(5)))


class TestPartialSums:

    @pytest.mark.parametrize("n", [1, 2, 5, 17, 30])
    def test_decomposition(self, rng, n):
        """S_n = 2Q_n + R_{n-1} + R_n"""
        K = 30
        c = rng.standard_normal(K)
        c_dot = tridiagonal_L("+", 2, K) * c
        sums = partial_sum_diagnostics(c, c_dot, n)
        assert sums.remainder() == pytest.approx(2.0 * sums.q_n, rel=1e-10, abs=1e-12)

    def test_within_bounds(self, rng):
        bounds = lambda_bounds(100)
        K = 40
        c = rng.standard_normal(K)
        sums = partial_sum_diagnostics(c, tridiagonal_L("+", 2, K) * c, 25)
        assert sums.within(bounds.lambda_inf, bounds.lambda_sup)

    def test_blocks_are_positive(self, rng):
        c = rng.standard_normal(12)
        sums = partial_sum_diagnostics(c, tridiagonal_L("+", 2, 12) * c)
        assert all(block >= 0 for block in sums.q_blocks)

    def test_rejects_mismatch(self):
        with pytest.raises(ValueError):
            partial_sum_diagnostics(np.ones(5), np.ones(4))
        with pytest.raises(ValueError):
            partial_sum_diagnostics(np.ones(5), np.ones(5), n=6)


class TestQOperator:

    def test_matrix_reports_residual(self):
        G, residual = q_operator_matrix(8)
        assert G.shape == (8, 8)
        assert residual > 0

    def test_norm_is_finite(self):
        norm = q_operator_norm(10)
        assert np.isfinite(norm) and norm > 0
        G, _ = q_operator_matrix(10)
        assert norm == pytest.approx(float(np.linalg.svd(G, compute_uv=False)[0]), rel=1e-3)

    def test_decay_rate(self):
        assert q_decay_rate(0.0, 3.0) == 1.0
        assert q_decay_rate(0.1, 0.5) == pytest.approx(0.8)


def test_spectrum_rows():
    rows = spectrum_rows(5)
    assert len(rows) == 5
    assert len(rows[0]) == len(SPECTRUM_HEADER)
    k, dp, dm, a_k, eps, lam1, lam2 = rows[0]
    assert k == 1
    assert dp == 0.75 and dm == -2.25
    assert a_k == float(Fraction(121, 324))
    assert eps == float(Fraction(62, 405))
    assert lam1 <= lam2
