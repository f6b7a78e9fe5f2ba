"""
第一激发态附近的数值实验
线性不稳定包络、线性衰减、非线性稳定性、Lipschitz 意义下的非线性不稳定性与存在时间
"""

import math
import os
from fractions import Fraction
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from dotenv import load_dotenv

from cogs.errors import BreakdownError, PreconditionError
from cogs.galerkin import GalerkinSystem, norm_observer
from cogs.logger import get_file_logger
from cogs.model_dynamics import DT, SAMPLE_INTERVAL
from cogs.output import EnergyTrace
from cogs.spectral_analysis import lambda_bounds, lplus_energy_derivative
from cogs.spectral_core import FourierField
from cogs.weighted_basis import BasisCoefficients, d_minus, d_plus, to_basis

load_dotenv()

N_MAX = int(os.getenv("N_MAX", 256))
STABILITY_MARGIN = float(os.getenv("STABILITY_MARGIN", 2))
STABILITY_DECAY_RATE = float(os.getenv("STABILITY_DECAY_RATE", 0.375))
STABILITY_THRESHOLD = float(os.getenv("STABILITY_THRESHOLD", 1e-2))
INSTABILITY_FACTOR = float(os.getenv("INSTABILITY_FACTOR", 10))
INSTABILITY_SOBOLEV_M = int(os.getenv("INSTABILITY_SOBOLEV_M", 4))

# 严格不等式在数值上改为带相对松弛的非严格不等式
COMPARISON_SLACK = 1e-8
LAMBDA_K_MAX = 1000
DIAGONAL_SWEEP_K = 10000

logger = get_file_logger('Experiments', 'experiments.log')


# ---- 包络 ----

@dataclass(frozen=True)
class EnvelopeParams:
    """包络参数：λ、⟨η₀⁺, η₀⁺⟩ 与 ⟨L⁺η₀⁺, η₀⁺⟩"""
    lam: float
    ip0: float
    lp0: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"λ 必须为正: {self.lam}")
        if self.ip0 < 0:
            raise ValueError(f"⟨η₀, η₀⟩ 不能为负: {self.ip0}")

    @property
    def admissible(self) -> bool:
        return self.ip0 > 0 and self.lp0 >= -math.sqrt(self.lam) * self.ip0


def envelope_E(t, p: EnvelopeParams):
    """
    E(t) = (ip0 + lp0/√λ)/2·e^{2√λt} + (ip0 - lp0/√λ)/2·e^{-2√λt}

    即 y'' = 4λy，y(0) = ip0，y'(0) = 2·lp0 的解

    Args:
        t: 时间（标量或数组）
        p: 包络参数

    Returns:
        与 t 同形状的包络值
    """
    if not p.admissible:
        raise PreconditionError(
            f"包络正性条件不满足: ip0 = {p.ip0}, lp0 = {p.lp0}, λ = {p.lam}", p.lp0)
    s = math.sqrt(p.lam)
    t = np.asarray(t, dtype=float)
    value = (0.5 * (p.ip0 + p.lp0 / s) * np.exp(2 * s * t)
             + 0.5 * (p.ip0 - p.lp0 / s) * np.exp(-2 * s * t))
    return float(value) if value.ndim == 0 else value


@lru_cache(maxsize=8)
def _computed_bounds(k_max: int) -> Tuple[float, float]:
    bounds = lambda_bounds(k_max)
    return bounds.lambda_inf, bounds.lambda_sup


def resolve_lambda(source: str = "computed") -> Tuple[float, float]:
    """
    包络使用的 (λ₁, λ₂)

    "computed" 取计算得到的 λ_inf、λ_sup，"bounds" 取解析界 (1/50, 3/5)
    """
    if source == "computed":
        return _computed_bounds(LAMBDA_K_MAX)
    if source == "bounds":
        return 1.0 / 50.0, 3.0 / 5.0
    raise ValueError(f"不支持的 λ 来源: {source}")


# ---- 工具函数 ----

@dataclass(frozen=True)
class HorizonParams:
    """能量不等式 dI/dt ≤ C₁I + C₂I² 的常数与初始范数"""
    c1: float
    c2: float
    i_m0: float

    def __post_init__(self):
        if not (self.c1 > 0 and self.c2 > 0 and self.i_m0 > 0):
            raise ValueError(f"C₁、C₂ 与 I_m(0) 必须为正: {self}")


def existence_horizon(p: HorizonParams) -> float:
    """T₀ = (1/C₁) ln(1 + C₁/(2C₂ I_m(0)))"""
    return math.log1p(p.c1 / (2.0 * p.c2 * p.i_m0)) / p.c1


def time_of_instability(lam: float, factor: float, delta: float, u0_norm: float) -> float:
    """t_K = (1/√λ) ln(4Kδ/‖u₀⁺‖)"""
    if not (lam > 0 and factor > 0 and delta > 0 and u0_norm > 0):
        raise ValueError("λ、K、δ 与 ‖u₀⁺‖ 必须为正")
    return math.log(4.0 * factor * delta / u0_norm) / math.sqrt(lam)


def fit_exponential_rate(
    trace: EnergyTrace,
    column: str,
    window: Optional[Tuple[float, float]] = None
) -> Tuple[float, float]:
    """
    log(value) 对 t 的最小二乘斜率

    Args:
        trace: 轨迹
        column: 列名
        window: 时间窗 [t0, t1]，默认整个轨迹

    Returns:
        (斜率, r²)
    """
    t = trace.times
    values = trace.column(column)
    if window is not None:
        mask = (t >= window[0] - 1e-12) & (t <= window[1] + 1e-12)
        t, values = t[mask], values[mask]
    if len(t) < 2:
        raise ValueError(f"时间窗内的采样点不足: {len(t)}")
    if np.any(values <= 0):
        raise ValueError(f"列 {column} 在时间窗内含有非正值")
    logs = np.log(values)
    slope, intercept = np.polyfit(t, logs, 1)
    residual = logs - (slope * t + intercept)
    ss_tot = float(np.sum((logs - logs.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(residual ** 2)) / ss_tot
    return float(slope), r2


def sobolev_norm_coefficients(c: np.ndarray, m: int) -> float:
    """(Σ_k Σ_{j≤m} (k+1)^{2j} c_k²)^{1/2}"""
    if m < 0:
        raise ValueError(f"Sobolev 阶数必须非负: {m}")
    c = np.asarray(c, dtype=float)
    freq2 = np.arange(2, len(c) + 2, dtype=float) ** 2
    weights = np.zeros_like(freq2)
    power = np.ones_like(freq2)
    for _ in range(m + 1):
        weights += power
        power = power * freq2
    return float(np.sqrt(np.dot(weights, c * c)))


def sobolev_norm_u(eta: FourierField, m: int) -> float:
    """u = -√π ρ_2^{1/2} ∂_θ η 的 H^m 范数，由基系数计算"""
    coeffs, _ = to_basis(eta)
    return sobolev_norm_coefficients(coeffs.c, m)


def is_even_mode(c: np.ndarray, tol: float = 0.0) -> bool:
    """只含偶数下标 e_{2,2}, e_{2,4}, ... 的系数"""
    c = np.asarray(c, dtype=float)
    return bool(np.all(np.abs(c[0::2]) <= tol))


def admissible_window(k: int, lam: float) -> Tuple[float, float]:
    """
    两模态初值 e_{2,1} + r e_{2,k} 中 r² 的容许区间

    下界保证 ⟨L⁺η, η⟩ ≤ √λ‖η‖²，上界保证 ⟨L⁺η, η⟩ ≥ 0
    """
    if k < 2:
        raise ValueError(f"第二个模态的下标至少为 2: {k}")
    gap = float(d_plus(k + 2) - d_plus(k))
    head = float(d_plus(1) - d_plus(3))
    s = math.sqrt(lam)
    return (head - s) / (s + gap), head / gap


def two_mode_data(k: int, ratio: float, K: int) -> np.ndarray:
    """c_1 = 1，c_k = √ratio"""
    if not 2 <= k <= K:
        raise ValueError(f"模态下标超出范围: k = {k}, K = {K}")
    c = np.zeros(K)
    c[0] = 1.0
    c[k - 1] = math.sqrt(ratio)
    return c


def energy_balance(system: GalerkinSystem, y) -> float:
    """2(⟨L⁺η⁺,η⁺⟩ + ⟨L⁻η⁻,η⁻⟩ + ⟨N₁,η⁺⟩ + ⟨N₂,η⁻⟩)，在 Galerkin 截断下等于 d/dt I₀²"""
    d_plus_c, d_minus_c = system(y)
    return float(2.0 * (np.dot(y[0], d_plus_c) + np.dot(y[1], d_minus_c)))


def _check_finite_trace(trace: EnergyTrace):
    for name in trace.columns:
        if not np.all(np.isfinite(trace.column(name))):
            raise BreakdownError(f"轨迹列 {name} 含有非有限值", float(trace.times[-1]))


# ---- 线性不稳定性 ----

@dataclass
class LinearInstabilityReport:
    trace: EnergyTrace
    verdict: bool
    lower_margin: float
    upper_margin: float
    fitted_rate: float
    r_squared: float
    lambda_inf: float
    lambda_sup: float
    ip0: float
    lp0: float

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "margins": {"lower": self.lower_margin, "upper": self.upper_margin},
            "fitted_rates": {"h2_plus": self.fitted_rate, "r_squared": self.r_squared},
            "params": {"lambda_inf": self.lambda_inf, "lambda_sup": self.lambda_sup,
                       "ip0": self.ip0, "lp0": self.lp0},
        }


def run_linear_instability(
    eta0_plus,
    eta0_minus=None,
    t_end: float = 5.0,
    dt: float = DT,
    K: Optional[int] = None,
    lambda_source: str = "computed",
    linear_mode: str = "tridiagonal",
    slack: float = COMPARISON_SLACK,
    sample_interval: float = SAMPLE_INTERVAL
) -> LinearInstabilityReport:
    """
    积分线性化系统并与包络 E₁（λ_inf）、E₂（λ_sup）比较

    Args:
        eta0_plus: η₀⁺（系数、BasisCoefficients 或张成空间中的奇函数）
        eta0_minus: η₀⁻，默认为零
        t_end: 终止时间
        dt: 时间步长
        K: Galerkin 截断，默认 N_MAX - 2
        lambda_source: λ 的来源
        linear_mode: 线性部分的求值方式
        slack: 比较时的相对松弛
        sample_interval: 采样间隔

    Returns:
        LinearInstabilityReport；比较从 t = dt 起进行
    """
    K = N_MAX - 2 if K is None else K
    system = GalerkinSystem(K, linear_only=True, linear_mode=linear_mode)
    y0 = system.initial(eta0_plus, eta0_minus)
    c0 = BasisCoefficients(2, y0[0])
    ip0 = float(np.dot(c0.c, c0.c))
    if ip0 == 0.0:
        raise PreconditionError("η₀⁺ 为零，线性不稳定实验要求 ‖η₀⁺‖ ≠ 0", 0.0)
    lp0 = lplus_energy_derivative(c0)
    if lp0 < 0:
        raise PreconditionError(f"⟨L⁺η₀⁺, η₀⁺⟩ = {lp0:.6g} < 0，不满足前提条件", lp0)
    lam_inf, lam_sup = resolve_lambda(lambda_source)

    _, trace = system.integrate(y0, t_end, dt, sample_interval=sample_interval)
    _check_finite_trace(trace)
    times = trace.times
    e1 = envelope_E(times, EnvelopeParams(lam_inf, ip0, lp0))
    e2 = envelope_E(times, EnvelopeParams(lam_sup, ip0, lp0))
    trace.add_column("envelope_e1", e1)
    trace.add_column("envelope_e2", e2)

    energy = trace.column("h2_plus") ** 2
    mask = times > 0
    lower = (energy[mask] - e1[mask]) / e1[mask]
    upper = (e2[mask] - energy[mask]) / e2[mask]
    lower_margin = float(lower.min()) if lower.size else 0.0
    upper_margin = float(upper.min()) if upper.size else 0.0
    rate, r2 = fit_exponential_rate(trace, "h2_plus", (0.5 * t_end, t_end)) if t_end > 0 else (0.0, 1.0)
    verdict = lower_margin >= -slack and upper_margin >= -slack
    logger.info(f"线性不稳定: ip0 = {ip0:.6g}, lp0 = {lp0:.6g}, 下裕量 {lower_margin:.3e}, "
                f"上裕量 {upper_margin:.3e}, 增长率 {rate:.6g}, 判定 {verdict}")
    return LinearInstabilityReport(trace, verdict, lower_margin, upper_margin, rate, r2,
                                   lam_inf, lam_sup, ip0, lp0)


# ---- 线性衰减 ----

@dataclass
class LinearDecayReport:
    trace: EnergyTrace
    verdict: bool
    plus_margin: float
    minus_margin: float
    rates: Dict[str, Optional[float]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "margins": {"plus": self.plus_margin, "minus": self.minus_margin},
            "fitted_rates": self.rates,
        }


def _decay_margin(times: np.ndarray, values: np.ndarray, rate: float, slack: float) -> Tuple[float, bool]:
    """min_t (e^{-rt}‖η₀‖ - ‖η(t)‖)/‖η₀‖ 及是否满足界"""
    initial = values[0]
    bound = np.exp(-rate * times) * initial
    if initial == 0.0:
        return 0.0, bool(np.all(values == 0.0))
    margin = float(np.min((bound - values) / initial))
    return margin, bool(np.all(values <= bound * (1.0 + slack)))


def run_linear_decay(
    eta0_plus=None,
    eta0_minus=None,
    t_end: float = 10.0,
    dt: float = DT,
    K: Optional[int] = None,
    slack: float = 1e-9,
    plus_rate: float = 0.375,
    minus_rate: float = 0.5,
    sample_interval: float = SAMPLE_INTERVAL
) -> LinearDecayReport:
    """
    ‖η⁻(t)‖ ≤ e^{-t/2}‖η₀⁻‖ 与偶模态 ‖η⁺(t)‖ ≤ e^{-3t/8}‖η₀⁺‖ 的逐点检验

    Args:
        eta0_plus: 只含偶数下标的 η₀⁺
        eta0_minus: 张成空间中任意的 η₀⁻

    Returns:
        LinearDecayReport，含拟合的对数线性衰减率
    """
    K = N_MAX - 2 if K is None else K
    system = GalerkinSystem(K, linear_only=True)
    y0 = system.initial(eta0_plus, eta0_minus)
    if not is_even_mode(y0[0]):
        offending = float(np.max(np.abs(y0[0][0::2])))
        raise PreconditionError(f"η₀⁺ 含奇数下标分量，最大系数 {offending:.3e}", offending)
    _, trace = system.integrate(y0, t_end, dt, sample_interval=sample_interval)
    _check_finite_trace(trace)
    times = trace.times
    plus_margin, plus_ok = _decay_margin(times, trace.column("h2_plus"), plus_rate, slack)
    minus_margin, minus_ok = _decay_margin(times, trace.column("h2_minus"), minus_rate, slack)

    rates: Dict[str, Optional[float]] = {}
    for name in ("h2_plus", "h2_minus"):
        values = trace.column(name)
        if t_end > 0 and np.all(values > 0):
            rates[name], _ = fit_exponential_rate(trace, name)
        else:
            rates[name] = None
    verdict = plus_ok and minus_ok
    logger.info(f"线性衰减: η⁺ 裕量 {plus_margin:.3e}, η⁻ 裕量 {minus_margin:.3e}, 衰减率 {rates}, 判定 {verdict}")
    return LinearDecayReport(trace, verdict, plus_margin, minus_margin, rates)


# ---- 非线性稳定性 ----

@dataclass
class NonlinearStabilityReport:
    trace: EnergyTrace
    verdict: Optional[bool]
    margin: float
    half_rate_holds: Optional[bool]
    i0_initial: float
    in_hypothesis: bool
    breakdown_time: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "margins": {"decay": self.margin},
            "fitted_rates": {},
            "params": {"i0_initial": self.i0_initial, "in_hypothesis": self.in_hypothesis,
                       "half_rate_holds": self.half_rate_holds,
                       "breakdown_time": self.breakdown_time},
        }


def run_nonlinear_stability(
    eta0_plus,
    eta0_minus=None,
    amplitude: float = 1.0,
    t_end: float = 20.0,
    dt: float = DT,
    K: Optional[int] = None,
    margin: float = STABILITY_MARGIN,
    decay_rate: float = STABILITY_DECAY_RATE,
    threshold: float = STABILITY_THRESHOLD,
    q: float = 0.0,
    sample_interval: float = SAMPLE_INTERVAL
) -> NonlinearStabilityReport:
    """
    完整非线性扰动系统的衰减检验 I₀(t) ≤ C·e^{-rt}·I₀(0)

    Args:
        eta0_plus: 只含偶数下标的 η₀⁺
        eta0_minus: η₀⁻
        amplitude: 初值的缩放
        t_end: 终止时间
        dt: 时间步长
        K: Galerkin 截断
        margin: 常数 C
        decay_rate: 衰减率 r
        threshold: 自举阈值 ε，I₀(0) 超过时只报告观测结果
        q: 拉伸参数

    Returns:
        NonlinearStabilityReport；verdict 为 None 表示不在定理假设之内
    """
    K = N_MAX - 2 if K is None else K
    system = GalerkinSystem(K, q=q)
    cp, cm = system.initial(eta0_plus, eta0_minus)
    y0 = (amplitude * cp, amplitude * cm)
    if not is_even_mode(y0[0]):
        offending = float(np.max(np.abs(y0[0][0::2])))
        raise PreconditionError(f"η₀⁺ 含奇数下标分量，最大系数 {offending:.3e}", offending)
    i0 = float(np.hypot(np.linalg.norm(y0[0]), np.linalg.norm(y0[1])))
    in_hypothesis = i0 <= threshold
    if not in_hypothesis:
        logger.info(f"I₀(0) = {i0:.3e} 超过阈值 {threshold:.3e}，只报告观测结果")

    breakdown_time = None
    try:
        _, trace = system.integrate(y0, t_end, dt, sample_interval=sample_interval)
    except BreakdownError as e:
        trace = e.trace
        breakdown_time = e.time
    times = trace.times
    values = trace.column("i0")
    if i0 == 0.0:
        return NonlinearStabilityReport(trace, True, 0.0, True, 0.0, True)

    bound = margin * np.exp(-decay_rate * times) * i0
    decay_margin = float(np.min((bound - values) / i0))
    holds = bool(np.all(values <= bound * (1.0 + COMPARISON_SLACK))) and breakdown_time is None
    half = bool(np.all(values <= margin * np.exp(-0.5 * times) * i0 * (1.0 + COMPARISON_SLACK)))
    verdict = holds if in_hypothesis else None
    logger.info(f"非线性稳定: I₀(0) = {i0:.3e}, 裕量 {decay_margin:.3e}, 判定 {verdict}, 1/2 衰减率 {half}")
    return NonlinearStabilityReport(trace, verdict, decay_margin, half if in_hypothesis else None,
                                    i0, in_hypothesis, breakdown_time)


# ---- 非线性不稳定性 ----

@dataclass
class InstabilityRun:
    epsilon: float
    i_m0: float
    u0_norm: float
    t_k: float
    sup_ratio: float
    exceed_time: Optional[float]
    breakdown_time: Optional[float] = None

    @property
    def exceeded(self) -> bool:
        return self.exceed_time is not None

    @property
    def within_window(self) -> bool:
        """超出时间落在 [t_K/2, 2·t_K] 内"""
        return self.exceeded and 0.5 * self.t_k <= self.exceed_time <= 2.0 * self.t_k


@dataclass
class NonlinearInstabilityReport:
    runs: List[InstabilityRun]
    verdict: bool
    factor: float
    m: int
    lambda_inf: float
    ip0: float
    lp0: float
    traces: Dict[float, EnergyTrace] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "margins": {f"{r.epsilon:g}": {"sup_ratio": r.sup_ratio, "exceed_time": r.exceed_time,
                                            "t_k": r.t_k, "within_window": r.within_window}
                        for r in self.runs},
            "fitted_rates": {},
            "params": {"factor": self.factor, "m": self.m, "lambda_inf": self.lambda_inf,
                       "ip0": self.ip0, "lp0": self.lp0},
        }


def run_nonlinear_instability(
    eta0_plus,
    epsilons: Sequence[float] = (1e-3, 1e-4),
    factor: float = INSTABILITY_FACTOR,
    m: int = INSTABILITY_SOBOLEV_M,
    K: Optional[int] = None,
    dt: float = DT,
    t_end: Optional[float] = None,
    lambda_source: str = "computed",
    sample_interval: float = SAMPLE_INTERVAL
) -> NonlinearInstabilityReport:
    """
    缩放初值族上 sup_t ‖u⁺(t)‖/I_m(0) 超过 K 的检验

    Args:
        eta0_plus: 满足 0 ≤ ⟨L⁺η₀, η₀⟩ ≤ √λ‖η₀‖² 的 η₀⁺，η₀⁻ = 0
        epsilons: 初值缩放
        factor: Lipschitz 常数 K（F(y) = K·y）
        m: I_m 的 Sobolev 阶数
        K: Galerkin 截断
        dt: 时间步长
        t_end: 每个运行的最长时间，默认 2·t_K
        lambda_source: λ 的来源

    Returns:
        NonlinearInstabilityReport；所有 ε 的超出时间都落在 [t_K/2, 2·t_K] 内时判定为真
    """
    K = N_MAX - 2 if K is None else K
    system = GalerkinSystem(K)
    c0, _ = system.initial(eta0_plus, None)
    ip0 = float(np.dot(c0, c0))
    if ip0 == 0.0:
        raise PreconditionError("η₀⁺ 为零", 0.0)
    lp0 = lplus_energy_derivative(BasisCoefficients(2, c0))
    lam_inf, _ = resolve_lambda(lambda_source)
    if not 0.0 <= lp0 <= math.sqrt(lam_inf) * ip0:
        raise PreconditionError(
            f"⟨L⁺η₀, η₀⟩ = {lp0:.6g} 不在 [0, √λ‖η₀‖² = {math.sqrt(lam_inf) * ip0:.6g}] 内", lp0)

    runs: List[InstabilityRun] = []
    traces: Dict[float, EnergyTrace] = {}
    for eps in epsilons:
        y0 = (eps * c0, np.zeros(K))
        i_m0 = sobolev_norm_coefficients(y0[0], m)
        u0 = float(np.linalg.norm(y0[0]))
        t_k = time_of_instability(lam_inf, factor, i_m0, u0)
        horizon = 2.0 * t_k if t_end is None else t_end

        def observer(t, y, i_m0=i_m0):
            row = norm_observer(t, y)
            row["ratio"] = row["h2_plus"] / i_m0
            row["i_m"] = float(np.hypot(sobolev_norm_coefficients(y[0], m),
                                        sobolev_norm_coefficients(y[1], m)))
            return row

        breakdown_time = None
        try:
            _, trace = system.integrate(y0, horizon, dt, observer=observer,
                                        sample_interval=sample_interval,
                                        stop=lambda t, y, i_m0=i_m0: np.linalg.norm(y[0]) > factor * i_m0)
        except BreakdownError as e:
            trace, breakdown_time = e.trace, e.time
        ratios = trace.column("ratio")
        above = np.nonzero(ratios > factor)[0]
        exceed_time = float(trace.times[above[0]]) if above.size else None
        runs.append(InstabilityRun(eps, i_m0, u0, t_k, float(ratios.max()), exceed_time, breakdown_time))
        traces[eps] = trace
        logger.info(f"非线性不稳定: ε = {eps:g}, I_m(0) = {i_m0:.3e}, t_K = {t_k:.4g}, "
                    f"sup 比值 {ratios.max():.4g}, 超出时间 {exceed_time}")

    verdict = all(r.within_window for r in runs)
    return NonlinearInstabilityReport(runs, verdict, factor, m, lam_inf, ip0, lp0, traces)


# ---- Galerkin 系数衰减 ----

@dataclass
class CoefficientDecayReport:
    trace: EnergyTrace
    verdict: bool
    sign: str
    envelope: np.ndarray
    constant: float
    peak_mode: int
    tail_slope: float
    decay_slope: float
    m: int

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "margins": {"tail_slope": self.tail_slope, "constant": self.constant,
                        "peak_mode": self.peak_mode},
            "fitted_rates": {"decay_slope": self.decay_slope},
            "params": {"sign": self.sign, "K": len(self.envelope), "m": self.m},
        }


def decay_envelope(amplitudes: np.ndarray) -> np.ndarray:
    """单调包络 E_k = max_{j≥k} A_j"""
    amplitudes = np.abs(np.asarray(amplitudes, dtype=float))
    return np.maximum.accumulate(amplitudes[::-1])[::-1]


def run_coefficient_decay(
    sign: str = "+",
    K: int = 64,
    t_end: float = 2.0,
    dt: float = 1e-3,
    power: float = 6.0,
    m: int = INSTABILITY_SOBOLEV_M,
    sample_interval: Optional[float] = None
) -> CoefficientDecayReport:
    """
    从 c_k(0) = k^{-power} 积分线性 Galerkin 系统，检验 |c_k(t)| ≤ C·k^{-m}

    A_k 为 c_k 在 [0, t_end] 上的最大模，E_k 为其单调包络。C = max_k E_k·k^m；
    在上半截断 k ≥ K/2 上对 log(E_k·k^m) 关于 log k 做线性拟合，斜率不为正时判定为真，
    即 E_k·k^m 没有在截断边缘继续增长

    Args:
        sign: "+" 积分 L⁺，"-" 积分 L⁻
        K: Galerkin 截断
        t_end: 终止时间
        dt: 时间步长
        power: 初值的衰减阶
        m: 检验的衰减阶
        sample_interval: 取最大模的采样间隔，默认每步

    Returns:
        CoefficientDecayReport
    """
    if sign not in ("+", "-"):
        raise ValueError(f"不支持的分量: {sign}")
    system = GalerkinSystem(K, linear_only=True)
    k = np.arange(1, K + 1, dtype=float)
    c0 = k ** (-power)
    y0 = (c0, np.zeros(K)) if sign == "+" else (np.zeros(K), c0)
    index = 0 if sign == "+" else 1
    peak = np.abs(c0)

    def observer(t, y):
        np.maximum(peak, np.abs(y[index]), out=peak)
        row = norm_observer(t, y)
        row["scaled_max"] = float(np.max(np.abs(y[index]) * k ** m))
        return row

    trace = system.integrate(y0, t_end, dt, observer=observer,
                             sample_interval=dt if sample_interval is None else sample_interval)[1]
    envelope = decay_envelope(peak)
    scaled = envelope * k ** m
    constant = float(scaled.max())
    peak_mode = int(np.argmax(scaled)) + 1
    tail = k >= K // 2
    tail_slope = float(np.polyfit(np.log(k[tail]), np.log(scaled[tail]), 1)[0])
    decay_slope = float(np.polyfit(np.log(k[1:]), np.log(envelope[1:]), 1)[0])
    verdict = bool(np.isfinite(constant)) and tail_slope <= 0.0
    logger.info(f"系数衰减 ({sign}): K = {K}, C = {constant:.4g} (k = {peak_mode}), "
                f"尾部斜率 {tail_slope:.3f}, 包络斜率 {decay_slope:.3f}, 判定 {verdict}")
    return CoefficientDecayReport(trace, verdict, sign, envelope, constant, peak_mode,
                                  tail_slope, decay_slope, m)


# ---- 存在时间常数 ----

def horizon_samples(trace: EnergyTrace, column: str = "i_m") -> Tuple[np.ndarray, np.ndarray]:
    """由轨迹的中心差分得到 (I, dI/dt) 样本"""
    t = trace.times
    values = trace.column(column)
    if len(t) < 3:
        raise ValueError("轨迹过短，无法做中心差分")
    slopes = (values[2:] - values[:-2]) / (t[2:] - t[:-2])
    return values[1:-1], slopes


def fit_horizon_constants(i_values: Iterable[float], di_values: Iterable[float]) -> Tuple[float, float]:
    """
    用最小二乘拟合 dI/dt ≈ C₁I + C₂I²，再放大使所有样本都位于上包络之下

    Returns:
        (C₁, C₂)，均为正
    """
    i_values = np.asarray(list(i_values), dtype=float)
    di_values = np.asarray(list(di_values), dtype=float)
    mask = i_values > 0
    i_values, di_values = i_values[mask], di_values[mask]
    if i_values.size < 2:
        raise ValueError("样本不足，无法拟合 C₁、C₂")
    design = np.column_stack([i_values, i_values ** 2])
    (c1, c2), *_ = np.linalg.lstsq(design, di_values, rcond=None)
    floor = 1e-12
    c1, c2 = max(float(c1), floor), max(float(c2), floor)
    envelope = c1 * i_values + c2 * i_values ** 2
    scale = max(1.0, float(np.max(di_values / envelope)))
    return c1 * scale, c2 * scale


# ---- 验收套件 ----

SUITES = ("linear-instability", "linear-decay", "nonlinear-stability", "nonlinear-instability",
          "coefficient-decay", "operators")


def random_coefficients(rng: np.random.Generator, K: int, modes: int = 8, even: bool = False) -> np.ndarray:
    """前 modes 个（偶数下标）系数随机，按 l^{-2} 衰减并归一化"""
    c = np.zeros(K)
    l = np.arange(1, K + 1)
    active = (l <= modes) & ((l % 2 == 0) if even else True)
    c[active] = rng.standard_normal(int(active.sum())) / l[active] ** 2
    norm = np.linalg.norm(c)
    return c / norm if norm > 0 else c


def diagonal_signs_hold(k_max: int) -> bool:
    """有理算术下逐项检查 2 ≤ k ≤ k_max 时 L⁻ 对角元 < -1/2、L⁺ 对角元 ≤ -3/8"""
    half, three_eighths = Fraction(-1, 2), Fraction(-3, 8)
    minus = [d_minus(k) for k in range(2, k_max + 3)]
    plus = [d_plus(k) for k in range(2, k_max + 3)]
    for i in range(k_max - 1):
        if not minus[i] - minus[i + 2] < half or not plus[i] - plus[i + 2] <= three_eighths:
            logger.warning(f"对角元符号在 k = {i + 2} 处不成立")
            return False
    return True


def suite_operators(n_max: int) -> Tuple[bool, dict]:
    """三对角列匹配、稳态、ε 公式与对角元符号"""
    from cogs.model_dynamics import rhs_osw
    from cogs.perturbation import op_L_minus, op_L_plus
    from cogs.spectral_analysis import eps_plus, eps_plus_definitional
    from cogs.spectral_core import sine_mode
    from cogs.weighted_basis import basis_function, tridiagonal_L

    K = n_max - 2
    worst = 0.0
    for sign, op in (("+", op_L_plus), ("-", op_L_minus)):
        matrix = tridiagonal_L(sign, 2, K + 2)
        for k in range(1, K + 1):
            image = op(basis_function(2, k, n_max), n_out=n_max + 2)
            coeffs, _ = to_basis(image)
            column = matrix.column(k)
            worst = max(worst, float(np.max(np.abs(coeffs.resized(K + 2).c - column))))
    stationary = max(rhs_osw(sine_mode(kappa, 8, -1.0), 1.0).coefficient_norm() for kappa in (1, 2, 3))
    eps_ok = eps_plus(1) == Fraction(62, 405) and all(
        eps_plus(k) == eps_plus_definitional(k) for k in range(1, 200))
    signs_ok = diagonal_signs_hold(DIAGONAL_SWEEP_K)
    ok = worst <= 1e-11 and stationary <= 1e-12 and eps_ok and signs_ok and d_minus(2) == 0
    return ok, {"column_error": worst, "stationarity": stationary, "eps_identity": eps_ok,
                "diagonal_signs": signs_ok}


def run_suite(name: str, config) -> Tuple[bool, dict]:
    """按默认参数运行一个验收套件，返回 (是否通过, 裕量)"""
    K = config.n_max - 2
    if name == "linear-instability":
        e21 = BasisCoefficients.unit(1, K)
        report = run_linear_instability(e21, e21, config.t_end, config.dt, K,
                                        lambda_source=config.lambda_source)
        floor = math.sqrt(report.lambda_inf) - 1e-3
        ok = report.verdict and report.fitted_rate >= floor
        return ok, {**report.to_dict(), "rate_floor": floor}
    if name == "linear-decay":
        rng = np.random.default_rng(config.seed)
        worst = {"plus": math.inf, "minus": math.inf}
        ok = True
        for _ in range(20):
            report = run_linear_decay(random_coefficients(rng, K, even=True),
                                      random_coefficients(rng, K), config.t_end, config.dt, K)
            ok = ok and report.verdict
            worst["plus"] = min(worst["plus"], report.plus_margin)
            worst["minus"] = min(worst["minus"], report.minus_margin)
        return ok, {"verdict": ok, "margins": worst}
    if name == "nonlinear-stability":
        report = run_nonlinear_stability(1e-3 * BasisCoefficients.unit(2, K).c,
                                         1e-3 * BasisCoefficients.unit(1, K).c,
                                         t_end=config.t_end, dt=config.dt, K=K,
                                         margin=config.margin, decay_rate=config.decay_rate)
        return bool(report.verdict), report.to_dict()
    if name == "nonlinear-instability":
        lam_inf, _ = resolve_lambda(config.lambda_source)
        lo, hi = admissible_window(2, lam_inf)
        report = run_nonlinear_instability(two_mode_data(2, 0.5 * (lo + hi), K), config.epsilons,
                                           config.factor, config.sobolev_m, K, config.dt,
                                           lambda_source=config.lambda_source)
        return report.verdict, report.to_dict()
    if name == "coefficient-decay":
        reports = [run_coefficient_decay(sign, K, config.t_end, config.dt, m=config.sobolev_m)
                   for sign in ("+", "-")]
        ok = all(r.verdict for r in reports)
        return ok, {"verdict": ok, "margins": {r.sign: r.to_dict()["margins"] for r in reports},
                    "fitted_rates": {r.sign: r.decay_slope for r in reports}}
    if name == "operators":
        return suite_operators(config.n_max)
    raise ValueError(f"不支持的验收套件: {name}")


# 未显式给出时各套件使用的参数
SUITE_DEFAULTS = {
    "linear-instability": {"t_end": 5.0, "dt": 1e-3},
    "linear-decay": {"t_end": 10.0, "dt": 1e-3, "n_max": 66},
    "nonlinear-stability": {"t_end": 20.0, "dt": 1e-2, "n_max": 64},
    "nonlinear-instability": {"dt": 1e-2, "n_max": 26},
    "coefficient-decay": {"t_end": 2.0, "dt": 1e-3, "n_max": 66},
    "operators": {"n_max": 256},
}


async def setup(cli):
    """注册 envelope 与 verify 子命令"""
    from cogs.errors import ConfigError, VerdictError
    from cogs.output import write_json, write_table
    from cogs.run_config import add_common_arguments, load_run_config

    def configure_envelope(parser):
        add_common_arguments(parser)
        parser.add_argument("--ip0", type=float, help="⟨η₀⁺, η₀⁺⟩")
        parser.add_argument("--lp0", type=float, help="⟨L⁺η₀⁺, η₀⁺⟩")

    def handle_envelope(args) -> int:
        config = load_run_config(args, experiment="envelope")
        ip0 = args.ip0 if args.ip0 is not None else config.data.get("ip0", 1.0)
        lp0 = args.lp0 if args.lp0 is not None else config.data.get("lp0", float(d_plus(1) - d_plus(3)))
        lam_inf, lam_sup = resolve_lambda(config.lambda_source)
        try:
            lower = EnvelopeParams(lam_inf, float(ip0), float(lp0))
            upper = EnvelopeParams(lam_sup, float(ip0), float(lp0))
        except ValueError as e:
            raise ConfigError(f"包络参数无效: {e}")
        steps = int(round(config.t_end / config.sample_interval))
        times = [i * config.sample_interval for i in range(steps + 1)]
        rows = [[t, envelope_E(t, lower), envelope_E(t, upper)] for t in times]
        out_dir = config.out_dir()
        write_table(os.path.join(out_dir, "envelope.csv"), ["time", "envelope_e1", "envelope_e2"], rows)
        print(f"✅ 包络已写入 {out_dir}（λ_inf = {lam_inf:.6g}, λ_sup = {lam_sup:.6g}）")
        return 0

    def configure_verify(parser):
        add_common_arguments(parser)
        parser.add_argument("suite", choices=SUITES + ("all",), help="验收套件")

    def handle_verify(args) -> int:
        suites = SUITES if args.suite == "all" else (args.suite,)
        failed = []
        results = {}
        for name in suites:
            config = load_run_config(args, experiment="verify", defaults=SUITE_DEFAULTS.get(name))
            print(f"🚀 运行验收套件 {name}: n_max = {config.n_max}, dt = {config.dt}, t_end = {config.t_end}")
            ok, margins = run_suite(name, config)
            results[name] = {"passed": ok, **margins}
            print(f"{'✅' if ok else '❌'} {name}: {margins.get('margins', margins)}")
            if not ok:
                failed.append(name)
        out_dir = load_run_config(args, experiment="verify").out_dir()
        write_json(os.path.join(out_dir, "verdict.json"), {"verdict": not failed, "suites": results})
        if failed:
            raise VerdictError(f"验收未通过: {', '.join(failed)}")
        return 0

    cli.add_command("envelope", "输出线性不稳定包络 E₁、E₂", configure_envelope, handle_envelope)
    cli.add_command("verify", "运行验收实验并给出判定", configure_verify, handle_verify)
