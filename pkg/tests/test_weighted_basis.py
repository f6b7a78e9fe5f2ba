from fractions import Fraction

import numpy as np
import pytest

from cogs.errors import SpanError
from cogs.spectral_core import differentiate, divide_by_sine, evaluate, multiply, sine_mode
from cogs.weighted_basis import (
    BasisCoefficients,
    basis_function,
    coefficients_from_u,
    d_kappa,
    d_minus,
    d_plus,
    from_basis,
    from_u_field,
    h2_inner,
    h2_norm,
    hardy_ratio,
    kappa_diagonal_closed_form,
    to_basis,
    to_u_field,
    tridiagonal_L,
)


class TestBasis:

    def test_basis_function_modes(self):
        e = basis_function(2, 3)
        assert e.n_max == 5
        assert e.a[3] == pytest.approx(-1.0 / 3.0)
        assert e.a[5] == pytest.approx(1.0 / 5.0)

    def test_basis_function_rejects_small_truncation(self):
        with pytest.raises(ValueError):
            basis_function(2, 3, n_max=4)

    def test_basis_is_orthonormal(self):
        for l in range(1, 8):
            coeffs, residual = to_basis(basis_function(2, l, 12))
            assert residual < 1e-14
            np.testing.assert_allclose(coeffs.c, BasisCoefficients.unit(l, 10).c, atol=1e-15)

    def test_gram_matrix_by_quadrature(self):
        """∫ e'_k e'_l /(4π sin²θ) dθ 的中点求积给出单位矩阵"""
        nodes = 512
        thetas = (np.arange(nodes) + 0.5) * 2.0 * np.pi / nodes
        scaled = np.array([evaluate(differentiate(basis_function(2, l, 16)), thetas) / np.sin(thetas)
                           for l in range(1, 13)])
        gram = scaled @ scaled.T * (2.0 * np.pi / nodes) / (4.0 * np.pi)
        np.testing.assert_allclose(gram, np.eye(12), atol=1e-12)

    def test_round_trip_from_coefficients(self, rng):
        for kappa in (1, 2, 3):
            c = BasisCoefficients(kappa, rng.standard_normal(15))
            back, residual = to_basis(from_basis(c), kappa=kappa)
            np.testing.assert_allclose(back.c, c.c, atol=1e-12)
            assert residual < 1e-12

    def test_sine_theta_is_outside_span(self):
        """sin θ 的导数在 θ = 0 处不为零，不属于 ℋ₂"""
        with pytest.raises(SpanError) as info:
            to_basis(sine_mode(1, 6))
        assert info.value.residual > 0.5
        coeffs, residual = to_basis(sine_mode(1, 6), strict=False)
        assert residual > 0.5
        assert coeffs.K == 4

    def test_too_small_truncation(self):
        with pytest.raises(ValueError):
            to_basis(sine_mode(1, 2))

    def test_h2_inner_is_coefficient_dot(self, rng):
        c1, c2 = rng.standard_normal(10), rng.standard_normal(10)
        f = from_basis(BasisCoefficients(2, c1))
        g = from_basis(BasisCoefficients(2, c2))
        assert h2_inner(f, g) == pytest.approx(float(np.dot(c1, c2)), rel=1e-12)
        assert h2_norm(f) == pytest.approx(float(np.linalg.norm(c1)), rel=1e-12)


class TestWeightedDerivative:

    def test_u_field_of_basis_element(self):
        """e_{2,k} 对应 u = sin((k+1)θ)"""
        u = to_u_field(basis_function(2, 3, 8))
        expected = np.zeros(u.n_max + 1)
        expected[4] = 1.0
        np.testing.assert_allclose(u.a, expected, atol=1e-15)

    def test_u_is_weighted_derivative(self, rng):
        """u = -∂_θη / (2 sin θ)"""
        c = BasisCoefficients(2, rng.standard_normal(9))
        eta = from_basis(c)
        u = to_u_field(eta)
        product = multiply(u, sine_mode(1, u.n_max), u.n_max + 1)
        expected = -0.5 * differentiate(eta)
        np.testing.assert_allclose(product.b[:expected.n_max + 1], expected.b, atol=1e-12)
        np.testing.assert_allclose(product.a, 0.0, atol=1e-12)

    def test_inverse(self, rng):
        c = BasisCoefficients(2, rng.standard_normal(7))
        eta = from_basis(c)
        back = from_u_field(to_u_field(eta))
        np.testing.assert_allclose(back.a, eta.a, atol=1e-12)
        np.testing.assert_allclose(coefficients_from_u(to_u_field(eta)).c, c.c, atol=1e-12)


class TestTridiagonalCoefficients:

    def test_known_values(self):
        assert d_plus(1) == Fraction(3, 4)
        assert d_plus(2) == 0
        assert d_minus(1) == Fraction(-9, 4)
        assert d_minus(2) == 0
        assert d_plus(1) - d_plus(3) == Fraction(11, 18)

    def test_kappa_two_matches_plus(self):
        for l in range(1, 40):
            assert d_kappa(2, l) == d_plus(l)

    def test_diagonal_closed_form(self):
        for kappa in range(1, 6):
            for l in range(1, 60):
                assert d_kappa(kappa, l) - d_kappa(kappa, l + kappa) == kappa_diagonal_closed_form(kappa, l)

    def test_diagonal_signs_up_to_ten_thousand(self):
        """有理算术下 2 ≤ k ≤ 10⁴：L⁻ 对角元 < -1/2，L⁺ 对角元 ≤ -3/8（k = 2 处取等）"""
        minus = [d_minus(k) for k in range(2, 10_003)]
        plus = [d_plus(k) for k in range(2, 10_003)]
        for i in range(len(minus) - 2):
            assert minus[i] - minus[i + 2] < Fraction(-1, 2)
            assert plus[i] - plus[i + 2] <= Fraction(-3, 8)
        assert plus[0] - plus[2] == Fraction(-3, 8)

    def test_rejects_bad_indices(self):
        with pytest.raises(ValueError):
            d_plus(0)
        with pytest.raises(ValueError):
            d_kappa(0, 3)


class TestTridiagonalOperator:

    def test_requires_room(self):
        with pytest.raises(ValueError):
            tridiagonal_L("+", 2, 3)

    def test_minus_only_for_kappa_two(self):
        with pytest.raises(ValueError):
            tridiagonal_L("-", 3, 10)

    def test_dense_matches_matvec(self, rng):
        for sign in ("+", "-"):
            op = tridiagonal_L(sign, 2, 12)
            c = rng.standard_normal(12)
            np.testing.assert_allclose(op.to_dense() @ c, op * c, atol=1e-13)

    def test_off_diagonal_is_antisymmetric(self):
        op = tridiagonal_L("+", 2, 20)
        m = op.to_dense()
        off = m - np.diag(np.diag(m))
        np.testing.assert_allclose(off, -off.T, atol=1e-15)

    def test_first_column(self):
        """L⁺ e_{2,1} = (11/18) e_{2,1} - (5/36) e_{2,3}"""
        column = tridiagonal_L("+", 2, 6).column(1)
        np.testing.assert_allclose(column, [11 / 18, 0, -5 / 36, 0, 0, 0], atol=1e-15)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            tridiagonal_L("+", 2, 8) * np.ones(5)


def test_hardy_ratio_is_scale_invariant(rng):
    eta = from_basis(BasisCoefficients(2, rng.standard_normal(10)))
    r = hardy_ratio(eta)
    assert np.isfinite(r) and r > 0
    assert hardy_ratio(3.0 * eta) == pytest.approx(r, rel=1e-12)


def test_hardy_ratio_of_basis_element():
    """e_{2,1}/sin θ = -4 sin²θ/3，最大模 4/3，分母 2√π"""
    r = hardy_ratio(basis_function(2, 1))
    assert r == pytest.approx((4.0 / 3.0) / (2.0 * np.sqrt(np.pi)), rel=1e-12)


def test_hardy_ratio_of_zero():
    with pytest.raises(ValueError):
        hardy_ratio(from_basis(BasisCoefficients(2, np.zeros(4))))


def test_divide_by_sine_used_by_hardy_ratio_is_even():
    q = divide_by_sine(basis_function(2, 2))
    assert not np.any(q.a)
