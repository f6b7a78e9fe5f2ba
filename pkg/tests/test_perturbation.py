import numpy as np
import pytest

from cogs.model_dynamics import PRESETS, MhdState, rhs_mhd
from cogs.perturbation import (
    PerturbationState,
    UState,
    g_field,
    lie_bracket,
    nonlinear_N1,
    nonlinear_N2,
    op_L1_minus,
    op_L1_plus,
    op_L_kappa,
    op_L_minus,
    op_L_plus,
    op_Q,
    rhs_perturbation,
    u_nonlinear_rhs,
)
from cogs.spectral_core import velocity_from_vorticity, sine_mode
from cogs.weighted_basis import (
    BasisCoefficients,
    basis_function,
    from_basis,
    to_basis,
    tridiagonal_L,
    u_from_coefficients,
)


def _small_state(rng, K, scale=1e-2):
    plus = from_basis(BasisCoefficients(2, scale * rng.standard_normal(K)))
    minus = from_basis(BasisCoefficients(2, scale * rng.standard_normal(K)))
    return PerturbationState(plus, minus)


class TestOperators:

    def test_L_minus_kills_sin_two_theta(self):
        image = op_L_minus(sine_mode(2, 6))
        np.testing.assert_allclose(image.a, 0.0, atol=1e-15)

    def test_L_minus_of_sin_theta(self):
        """L⁻ sin θ = (3/4) sin 3θ - (9/4) sin θ"""
        image = op_L_minus(sine_mode(1, 4))
        expected = np.zeros(image.n_max + 1)
        expected[1], expected[3] = -9 / 4, 3 / 4
        np.testing.assert_allclose(image.a, expected, atol=1e-14)
        np.testing.assert_allclose(image.b, 0.0, atol=1e-14)

    def test_Q_of_sin_two_theta_vanishes(self):
        np.testing.assert_allclose(op_Q(sine_mode(2, 4)).a, 0.0, atol=1e-15)

    def test_Q_lowers_frequency(self):
        """Q e_{2,1} = (4/3) sin θ，不在 ℋ₂ 中"""
        image = op_Q(basis_function(2, 1))
        assert image.a[1] == pytest.approx(4.0 / 3.0)
        np.testing.assert_allclose(image.a[2:], 0.0, atol=1e-15)

    @pytest.mark.parametrize("sign, op", [("+", op_L_plus), ("-", op_L_minus)])
    def test_tridiagonal_columns(self, sign, op):
        """L± e_{2,k} 的展开与三对角表示一致"""
        n = 18
        K = n - 2
        matrix = tridiagonal_L(sign, 2, K + 2)
        for k in range(1, K + 1):
            coeffs, residual = to_basis(op(basis_function(2, k, n), n_out=n + 2))
            assert residual < 1e-10
            np.testing.assert_allclose(coeffs.resized(K + 2).c, matrix.column(k), atol=1e-11)

    def test_L_kappa_two_is_L_plus(self, random_odd):
        f = random_odd(10)
        np.testing.assert_allclose(op_L_kappa(f, 2).a, op_L_plus(f).a, atol=1e-13)

    def test_L_kappa_rejects_zero(self, random_odd):
        with pytest.raises(ValueError):
            op_L_kappa(random_odd(4), 0)

    def test_lie_bracket_antisymmetric(self, random_odd):
        f, g = random_odd(8), random_odd(8)
        np.testing.assert_allclose(lie_bracket(f, g).a, -lie_bracket(g, f).a, atol=1e-14)


class TestNonlinearTerms:

    def test_single_mode_self_bracket_vanishes(self):
        state = PerturbationState(sine_mode(1, 6), sine_mode(1, 6) * 0.0)
        np.testing.assert_allclose(nonlinear_N1(state).a, 0.0, atol=1e-15)
        np.testing.assert_allclose(nonlinear_N2(state).a, 0.0, atol=1e-15)

    def test_symmetric_cancellation(self, random_odd):
        eta = random_odd(8)
        state = PerturbationState(eta, eta)
        np.testing.assert_allclose(nonlinear_N2(state).a, 0.0, atol=1e-14)

    def test_matches_full_model(self, rng):
        """ω± = -sin 2θ + (η⁺ ± η⁻) 时，完整模型的右端项等于扰动系统右端项之和与差"""
        state = _small_state(rng, 12)
        plus, minus = state.to_vorticity()
        d_omega_plus, d_omega_minus = rhs_mhd(MhdState(plus, minus), PRESETS["degregorio"])
        d_eta_plus, d_eta_minus = rhs_perturbation(state)
        np.testing.assert_allclose(d_omega_plus.a, (d_eta_plus + d_eta_minus).a, atol=1e-12)
        np.testing.assert_allclose(d_omega_minus.a, (d_eta_plus - d_eta_minus).a, atol=1e-12)
        np.testing.assert_allclose(d_omega_plus.b, 0.0, atol=1e-12)

    def test_linear_only_drops_nonlinearity(self, rng):
        state = _small_state(rng, 8)
        d_plus, _ = rhs_perturbation(state, linear_only=True)
        np.testing.assert_allclose(d_plus.a, op_L_plus(state.eta_plus, state.n_max).a, atol=1e-15)

    def test_q_term_changes_minus_only(self, rng):
        state = _small_state(rng, 8)
        base = rhs_perturbation(state)
        stretched = rhs_perturbation(state, q=0.3)
        np.testing.assert_allclose(base[0].a, stretched[0].a, atol=1e-15)
        assert np.max(np.abs(base[1].a - stretched[1].a)) > 0


class TestUFormulation:

    @pytest.mark.parametrize("sign", ["+", "-"])
    def test_L1_matches_tridiagonal(self, rng, sign):
        K = 10
        c = rng.standard_normal(K)
        eta = from_basis(BasisCoefficients(2, c))
        u = u_from_coefficients(BasisCoefficients(2, c))
        v = velocity_from_vorticity(eta)
        op = op_L1_plus if sign == "+" else op_L1_minus
        image = op(u, eta, v)
        padded = np.concatenate([c, np.zeros(2)])
        expected = u_from_coefficients(BasisCoefficients(2, tridiagonal_L(sign, 2, K + 2) * padded))
        n = max(image.n_max, expected.n_max)
        np.testing.assert_allclose(image.resized(n).a, expected.resized(n).a, atol=1e-12)
        np.testing.assert_allclose(image.b, 0.0, atol=1e-12)

    def test_g_field_of_basis_element(self):
        g = g_field(BasisCoefficients.unit(3, 5))
        expected = np.zeros(g.n_max + 1)
        expected[4] = 1.0
        np.testing.assert_allclose(g.b, expected)

    def test_nonlinear_matches_vorticity_form(self, rng):
        state = _small_state(rng, 8, scale=0.1)
        n_full = 2 * state.n_max
        derived = []
        for term in (nonlinear_N1(state, n_full), nonlinear_N2(state, 0.0, n_full)):
            coeffs, residual = to_basis(term)
            assert residual < 1e-10
            derived.append(u_from_coefficients(coeffs))
        result = u_nonlinear_rhs(UState.from_perturbation(state))
        for got, want in zip((result.u_plus, result.u_minus), derived):
            n = max(got.n_max, want.n_max)
            np.testing.assert_allclose(got.resized(n).a, want.resized(n).a, atol=1e-12)
