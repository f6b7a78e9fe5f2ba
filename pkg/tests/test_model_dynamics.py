import math

import numpy as np
import pytest

from cogs.errors import BreakdownError
from cogs.model_dynamics import (
    PRESETS,
    MhdState,
    ModelParams,
    excited_state,
    integrate,
    rhs_mhd,
    rhs_osw,
    rk4_step,
    simulation_presets,
    step_rk4,
)
from cogs.spectral_core import FourierField, sine_mode, velocity_from_vorticity


class TestModelParams:

    def test_presets(self):
        assert ModelParams.preset("mhd-dvz") == ModelParams(1.0, 1.5, -0.5)
        assert ModelParams.preset("degregorio") == ModelParams.osw(1.0)
        assert ModelParams.preset("clm").a == 0.0
        assert ModelParams.preset("ccf").a == -1.0

    def test_unknown_preset(self):
        with pytest.raises(ValueError):
            ModelParams.preset("euler")

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            ModelParams(math.nan, 1.0, 0.0)


def test_excited_state_velocity():
    omega, u = excited_state(2)
    np.testing.assert_allclose(velocity_from_vorticity(omega).a, u.a, atol=1e-15)
    with pytest.raises(ValueError):
        excited_state(0)


@pytest.mark.parametrize("kappa", [1, 2, 3])
def test_excited_states_are_stationary(kappa):
    omega = sine_mode(kappa, 8, -1.0)
    assert rhs_osw(omega, 1.0).coefficient_norm() < 1e-12


@pytest.mark.parametrize("name", ["degregorio", "mhd-dvz", "mhd-vv"])
def test_diagonal_excited_state_is_stationary(name):
    """a = p + q 时对角激发态是稳态"""
    state = MhdState.diagonal(sine_mode(2, 8, -1.0))
    d_plus, d_minus = rhs_mhd(state, PRESETS[name])
    assert d_plus.coefficient_norm() < 1e-12
    assert d_minus.coefficient_norm() < 1e-12


def test_clm_excited_state_is_not_stationary():
    d_plus, _ = rhs_mhd(MhdState.diagonal(sine_mode(2, 8, -1.0)), PRESETS["clm"])
    assert d_plus.coefficient_norm() > 0.1


@pytest.mark.parametrize("a, p", [(1.0, 1.0), (0.0, 0.3), (-1.0, 2.0), (0.5, -0.5)])
def test_diagonal_reduction(random_field, a, p):
    """p + q = 1 的对角数据上两个分量都等于 OSW 右端项"""
    omega = random_field(10)
    d_plus, d_minus = rhs_mhd(MhdState.diagonal(omega), ModelParams(a, p, 1.0 - p))
    expected = rhs_osw(omega, a)
    for got in (d_plus, d_minus):
        np.testing.assert_allclose(got.a, expected.a, atol=1e-12)
        np.testing.assert_allclose(got.b, expected.b, atol=1e-12)


def test_rk4_is_fourth_order():
    """y' = -y 的全局误差随步长以四阶收敛"""
    def solve(dt):
        y = (np.array([1.0]),)
        for _ in range(int(round(1.0 / dt))):
            y = rk4_step(lambda z: (-z[0],), y, dt)
        return abs(y[0][0] - math.exp(-1.0))

    ratio = solve(0.1) / solve(0.05)
    assert 14.0 < ratio < 18.0


def test_rk4_on_fields():
    f = sine_mode(1, 3)
    (g,) = rk4_step(lambda y: (-1.0 * y[0],), (f,), 0.1)
    assert g.a[1] == pytest.approx(math.exp(-0.1), rel=1e-6)


class TestStep:

    def test_zero_step(self):
        state = MhdState.diagonal(sine_mode(1, 4))
        assert step_rk4(state, PRESETS["clm"], 0.0) is state

    def test_negative_step(self):
        with pytest.raises(ValueError):
            step_rk4(MhdState.diagonal(sine_mode(1, 4)), PRESETS["clm"], -0.1)

    def test_time_advances(self):
        state = step_rk4(MhdState.diagonal(sine_mode(1, 4)), PRESETS["clm"], 0.01)
        assert state.time == pytest.approx(0.01)


class TestIntegrate:

    def test_excited_state_stays_put(self):
        state = MhdState.diagonal(sine_mode(2, 16, -1.0))
        final, trace = integrate(state, PRESETS["degregorio"], 1.0, dt=1e-2, sample_interval=0.1)
        np.testing.assert_allclose(final.omega_plus.a, state.omega_plus.a, atol=1e-12)
        assert len(trace) == 11
        assert final.time == pytest.approx(1.0)
        np.testing.assert_allclose(trace.column("l2_plus"), 1.0, atol=1e-12)

    def test_continues_from_initial_time(self):
        state = MhdState.diagonal(sine_mode(2, 8, -1.0), time=2.0)
        final, trace = integrate(state, PRESETS["degregorio"], 0.5, dt=0.1)
        assert final.time == pytest.approx(2.5)
        assert trace.times[0] == pytest.approx(2.0)

    def test_adaptive_matches_fixed_when_calm(self):
        state = MhdState(sine_mode(1, 8, 0.1), sine_mode(2, 8, 0.1))
        fixed, _ = integrate(state, PRESETS["mhd-dvz"], 0.2, dt=1e-2)
        adaptive, _ = integrate(state, PRESETS["mhd-dvz"], 0.2, dt=1e-2, adaptive=True)
        np.testing.assert_allclose(fixed.omega_plus.a, adaptive.omega_plus.a, atol=1e-15)

    def test_breakdown_reports_time_and_trace(self):
        state = MhdState.diagonal(sine_mode(1, 6))
        with pytest.raises(BreakdownError) as info:
            integrate(state, PRESETS["clm"], 1.0, dt=1e-2, blowup_threshold=0.5)
        assert info.value.time == pytest.approx(1e-2)
        assert info.value.trace.breakdown_time == pytest.approx(1e-2)
        assert len(info.value.trace) == 1

    def test_odd_data_stays_odd(self, random_odd):
        """奇初值在积分过程中不产生余弦分量"""
        excited = sine_mode(2, 16, -1.0)
        state = MhdState(excited + random_odd(16, 0.05), excited + random_odd(16, 0.05))
        for name in ("mhd-dvz", "degregorio"):
            final, _ = integrate(state, PRESETS[name], 0.5, dt=1e-2)
            assert final.omega_plus.max_cos() < 1e-13
            assert final.omega_minus.max_cos() < 1e-13

    def test_rejects_bad_arguments(self):
        state = MhdState.diagonal(sine_mode(1, 4))
        with pytest.raises(ValueError):
            integrate(state, PRESETS["clm"], -1.0)
        with pytest.raises(ValueError):
            integrate(state, PRESETS["clm"], 1.0, dt=0.0)


def test_simulation_presets():
    presets = simulation_presets(12, 1e-3, seed=7)
    assert set(presets) == {"degregorio-groundstate", "excited-steady", "excited-perturbed", "clm-sine"}
    params, state = presets["excited-perturbed"]
    assert params == PRESETS["degregorio"]
    assert state.n_max == 12
    difference = (state.omega_plus - state.omega_minus).coefficient_norm()
    assert 0 < difference < 0.1


def test_mhd_state_aligns_truncations():
    state = MhdState(sine_mode(1, 3), FourierField.zeros(7))
    assert state.omega_plus.n_max == 7 and state.omega_minus.n_max == 7
