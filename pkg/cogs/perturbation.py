"""
第一激发态 Ω_2 = -sin 2θ 附近的扰动系统

∂_t η⁺ = L⁺η⁺ + N₁，∂_t η⁻ = L⁻η⁻ + N₂
以及加权导数变量 u± 下的等价形式
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from cogs.spectral_core import (
    FourierField,
    OddField,
    as_odd,
    cosine_mode,
    differentiate,
    divide_by_sine,
    hilbert,
    multiply,
    sine_mode,
    velocity_from_vorticity,
)
from cogs.weighted_basis import (
    BasisCoefficients,
    coefficients_from_u,
    from_basis,
    to_basis,
    u_from_coefficients,
)


@dataclass(frozen=True)
class PerturbationState:
    """扰动 (η⁺, η⁻)，两者均为奇函数且截断一致"""
    eta_plus: OddField
    eta_minus: OddField
    time: float = 0.0

    def __post_init__(self):
        plus = as_odd(self.eta_plus)
        minus = as_odd(self.eta_minus)
        n = max(plus.n_max, minus.n_max)
        object.__setattr__(self, 'eta_plus', as_odd(plus.resized(n)))
        object.__setattr__(self, 'eta_minus', as_odd(minus.resized(n)))

    @property
    def n_max(self) -> int:
        return self.eta_plus.n_max

    def to_vorticity(self) -> Tuple[FourierField, FourierField]:
        """ω± = -sin 2θ + (η⁺ ± η⁻)"""
        n = max(self.n_max, 2)
        background = sine_mode(2, n, -1.0)
        plus = background + self.eta_plus + self.eta_minus
        minus = background + self.eta_plus - self.eta_minus
        return plus, minus


@dataclass(frozen=True)
class UState:
    """加权导数变量 u± = -√π ρ_2^{1/2} ∂_θ η±"""
    u_plus: FourierField
    u_minus: FourierField
    time: float = 0.0

    @classmethod
    def from_perturbation(cls, state: PerturbationState) -> "UState":
        cp, _ = to_basis(state.eta_plus)
        cm, _ = to_basis(state.eta_minus)
        return cls(u_from_coefficients(cp), u_from_coefficients(cm), state.time)


def lie_bracket(f: FourierField, g: FourierField, n_out: Optional[int] = None) -> FourierField:
    """{f, g} = f ∂_θ g - g ∂_θ f，n_out 默认取精确截断"""
    f, g = f._aligned(g)
    n_out = 2 * f.n_max if n_out is None else n_out
    return multiply(f, differentiate(g), n_out) - multiply(g, differentiate(f), n_out)


def _background(kappa: int, n: int) -> FourierField:
    return sine_mode(kappa, max(n, kappa))


def _bracket_with_mode(f: FourierField, kappa: int, n_out: Optional[int]) -> FourierField:
    """{f, sin κθ}，结果截断为 n_out，默认 n_max + κ（精确）"""
    n = max(f.n_max, kappa)
    n_out = n + kappa if n_out is None else n_out
    return lie_bracket(f.resized(n), _background(kappa, n), n_out).resized(n_out)


def op_L(f: FourierField, n_out: Optional[int] = None) -> FourierField:
    """L f = {f/2, sin 2θ}"""
    return _bracket_with_mode(0.5 * f, 2, n_out)


def op_A(f: FourierField, n_out: Optional[int] = None) -> FourierField:
    """A f = {v(f), sin 2θ}，v(f) 为 f 作为涡度对应的速度"""
    return _bracket_with_mode(velocity_from_vorticity(as_odd(f)), 2, n_out)


def op_Q(f: FourierField, n_out: Optional[int] = None) -> FourierField:
    """Q f = sin 2θ·Hf + cos 2θ·f，sin kθ ↦ sin((k-2)θ)"""
    n = max(f.n_max, 2)
    n_out = n + 2 if n_out is None else n_out
    f = f.resized(n)
    result = multiply(sine_mode(2, n), hilbert(f), 2 * n) + multiply(cosine_mode(2, n), f, 2 * n)
    return result.resized(n_out)


def op_L_plus(f: FourierField, n_out: Optional[int] = None) -> FourierField:
    """L⁺ = L + A"""
    return op_L(f, n_out) + op_A(f, n_out)


def op_L_minus(f: FourierField, q: float = 0.0, n_out: Optional[int] = None) -> FourierField:
    """L⁻ = L - A - 2qQ"""
    result = op_L(f, n_out) - op_A(f, n_out)
    if q != 0.0:
        result = result - 2.0 * q * op_Q(f, n_out)
    return result


def op_L_kappa(f: FourierField, kappa: int, n_out: Optional[int] = None) -> FourierField:
    """
    第 κ 激发态附近的线性化算子 L_κ f = {f/κ + v(f), sin κθ}

    κ = 2 时与 L⁺ 一致
    """
    if kappa < 1:
        raise ValueError(f"κ 必须为正整数: {kappa}")
    f = as_odd(f)
    return _bracket_with_mode(f / kappa + velocity_from_vorticity(f), kappa, n_out)


def nonlinear_N1(state: PerturbationState, n_out: Optional[int] = None) -> FourierField:
    """N₁ = {η⁺, v⁺} - {η⁻, v⁻}"""
    v_plus = velocity_from_vorticity(state.eta_plus)
    v_minus = velocity_from_vorticity(state.eta_minus)
    return (lie_bracket(state.eta_plus, v_plus, n_out)
            - lie_bracket(state.eta_minus, v_minus, n_out))


def nonlinear_N2(state: PerturbationState, q: float = 0.0, n_out: Optional[int] = None) -> FourierField:
    """N₂ = {η⁻, v⁺} - {η⁺, v⁻} - 2q(η⁻Hη⁺ - η⁺Hη⁻)"""
    v_plus = velocity_from_vorticity(state.eta_plus)
    v_minus = velocity_from_vorticity(state.eta_minus)
    result = (lie_bracket(state.eta_minus, v_plus, n_out)
              - lie_bracket(state.eta_plus, v_minus, n_out))
    if q != 0.0:
        result = result - 2.0 * q * _cross_stretching(state, n_out)
    return result


def _cross_stretching(state: PerturbationState, n_out: Optional[int]) -> FourierField:
    """η⁻Hη⁺ - η⁺Hη⁻"""
    n_out = 2 * state.n_max if n_out is None else n_out
    return (multiply(state.eta_minus, hilbert(state.eta_plus), n_out)
            - multiply(state.eta_plus, hilbert(state.eta_minus), n_out))


def rhs_perturbation(
    state: PerturbationState,
    q: float = 0.0,
    linear_only: bool = False
) -> Tuple[FourierField, FourierField]:
    """
    扰动系统右端项，截断回 n_max

    Args:
        state: 当前扰动
        q: 拉伸参数，主参数区 q = 0
        linear_only: 为 True 时只保留 L±η±

    Returns:
        (dη⁺/dt, dη⁻/dt)
    """
    n = state.n_max
    d_plus = op_L_plus(state.eta_plus, n)
    d_minus = op_L_minus(state.eta_minus, q, n)
    if not linear_only:
        d_plus = d_plus + nonlinear_N1(state, n)
        d_minus = d_minus + nonlinear_N2(state, q, n)
    return d_plus, d_minus


# ---- u 变量形式 ----

def _times_mode(f: FourierField, kind: str, k: int, n_out: int) -> FourierField:
    n = max(f.n_max, k)
    mode = sine_mode(k, n) if kind == "sin" else cosine_mode(k, n)
    return multiply(f.resized(n), mode, n_out)


def op_L1_plus(u: FourierField, eta: FourierField, v: FourierField,
               n_out: Optional[int] = None) -> FourierField:
    """
    L₁⁺(u) = -(1/2)sin 2θ ∂u - cos²θ u - 2cosθ H(sinθ u) + 2cosθ η + 4cosθ v
    (u, η, v) 需由同一个 η 经加权变换与速度恢复得到
    """
    return _op_L1(u, eta, v, 1.0, n_out)


def op_L1_minus(u: FourierField, eta: FourierField, v: FourierField,
                n_out: Optional[int] = None) -> FourierField:
    """L₁⁻(u) = -(1/2)sin 2θ ∂u - cos²θ u + 2cosθ H(sinθ u) + 2cosθ η - 4cosθ v"""
    return _op_L1(u, eta, v, -1.0, n_out)


def _op_L1(u, eta, v, sign, n_out):
    n = max(u.n_max, eta.n_max, v.n_max, 2)
    n_out = n + 2 if n_out is None else n_out
    big = n + 2
    u, eta, v = u.resized(n), eta.resized(n), v.resized(n)
    transport = -0.5 * _times_mode(differentiate(u), "sin", 2, big)
    # cos²θ = (1 + cos 2θ)/2
    squeeze = -0.5 * (u.resized(big) + _times_mode(u, "cos", 2, big))
    stretch = _times_mode(hilbert(_times_mode(u, "sin", 1, n + 1)), "cos", 1, big)
    coupling = _times_mode(eta, "cos", 1, big)
    velocity = _times_mode(v, "cos", 1, big)
    result = transport + squeeze - 2.0 * sign * stretch + 2.0 * coupling + 4.0 * sign * velocity
    return result.resized(n_out)


def h_field(eta: FourierField) -> FourierField:
    """h = √π ρ_2^{1/2} v = v/(2 sin θ)，由精确除法得到的余弦级数"""
    return 0.5 * divide_by_sine(velocity_from_vorticity(as_odd(eta)))


def g_field(coeffs: BasisCoefficients) -> FourierField:
    """g = √π ρ_2^{1/2} ∂²v = Σ c_k cos((k+1)θ)"""
    b = np.zeros(coeffs.K + 2)
    b[2:] = coeffs.c
    return FourierField(coeffs.K + 1, np.zeros(coeffs.K + 2), b)


def _transport_block(h, u_a, n_out):
    """-2 sinθ h ∂u_a - 2 cosθ h u_a"""
    n = max(h.n_max, u_a.n_max) + 1
    h = h.resized(n)
    return (-2.0 * _times_mode(multiply(h, differentiate(u_a).resized(n), 2 * n), "sin", 1, n_out)
            - 2.0 * _times_mode(multiply(h, u_a.resized(n), 2 * n), "cos", 1, n_out))


def u_nonlinear_rhs(s: UState, q: float = 0.0, n_out: Optional[int] = None) -> UState:
    """
    u 变量下的非线性项 (𝒩₁, 𝒩₂)

    𝒩₁ = -2 sinθ h⁺∂u⁺ - 2 cosθ h⁺u⁺ - η⁺g⁺ + η⁻g⁻ + 2 cosθ u⁻h⁻ + 2 sinθ h⁻∂u⁻
    𝒩₂ = -2 sinθ h⁺∂u⁻ - 2 cosθ h⁺u⁻ - η⁻g⁺ + η⁺g⁻ + 2 cosθ u⁺h⁻ + 2 sinθ h⁻∂u⁺
    q ≠ 0 时额外的拉伸项 -2q(η⁻Hη⁺ - η⁺Hη⁻) 直接经加权变换加入 𝒩₂
    """
    cp = coefficients_from_u(s.u_plus)
    cm = coefficients_from_u(s.u_minus)
    K = max(cp.K, cm.K)
    cp, cm = cp.resized(K), cm.resized(K)
    eta_p, eta_m = from_basis(cp), from_basis(cm)
    u_p, u_m = u_from_coefficients(cp), u_from_coefficients(cm)
    h_p, h_m = h_field(eta_p), h_field(eta_m)
    g_p, g_m = g_field(cp), g_field(cm)
    n = K + 2
    full = 2 * n + 2
    n_out = full if n_out is None else n_out

    def prod(x, y):
        return multiply(x.resized(n), y.resized(n), full)

    n1 = (_transport_block(h_p, u_p, full) - prod(eta_p, g_p) + prod(eta_m, g_m)
          - _transport_block(h_m, u_m, full))
    n2 = (_transport_block(h_p, u_m, full) - prod(eta_m, g_p) + prod(eta_p, g_m)
          - _transport_block(h_m, u_p, full))
    if q != 0.0:
        extra = _cross_stretching(PerturbationState(eta_p, eta_m), 2 * eta_p.n_max)
        coeffs, _ = to_basis(extra)
        n2 = n2 - 2.0 * q * u_from_coefficients(coeffs)
    return UState(n1.resized(n_out), n2.resized(n_out), s.time)
