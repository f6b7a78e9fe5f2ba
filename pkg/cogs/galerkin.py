"""
扰动系统在加权基 e_{2,k} 下的 Galerkin 截断

状态为系数向量 (c⁺, c⁻)，线性部分用三对角表示（或谱方法求值后投影），
非线性部分在 2(K+2) 截断下精确计算后投影回前 K 个基系数
"""

import os
from typing import Callable, Optional, Tuple

import numpy as np

from cogs.errors import BreakdownError, ConfigError
from cogs.logger import get_file_logger
from cogs.model_dynamics import BLOWUP_THRESHOLD, DT, SAMPLE_INTERVAL, rk4_step
from cogs.output import EnergyTrace
from cogs.perturbation import (
    PerturbationState,
    nonlinear_N1,
    nonlinear_N2,
    op_L_minus,
    op_L_plus,
    op_Q,
)
from cogs.spectral_core import FourierField, OddField, as_odd
from cogs.weighted_basis import BasisCoefficients, from_basis, to_basis, tridiagonal_L

logger = get_file_logger('Galerkin', 'galerkin.log')

Coefficients = Tuple[np.ndarray, np.ndarray]


def project(f: OddField, K: int) -> np.ndarray:
    """把奇函数展开到加权基并保留前 K 个系数"""
    coeffs, _ = to_basis(f, strict=False)
    return coeffs.resized(K).c


class GalerkinSystem:
    """
    K 维 Galerkin 系统 ċ± = L±c± + P_K N±

    Args:
        K: 每个分量保留的基系数个数
        q: 拉伸参数
        linear_only: 只保留线性部分
        linear_mode: "tridiagonal" 直接用系数公式，"spectral" 在 Fourier 空间求值后投影
    """

    def __init__(self, K: int, q: float = 0.0, linear_only: bool = False,
                 linear_mode: str = "tridiagonal"):
        if K < 4:
            raise ValueError(f"截断 K = {K} 过小，至少需要 4")
        if linear_mode not in ("tridiagonal", "spectral"):
            raise ValueError(f"不支持的线性部分求值方式: {linear_mode}")
        self.K = K
        self.q = q
        self.linear_only = linear_only
        self.linear_mode = linear_mode
        self.l_plus = tridiagonal_L("+", 2, K)
        self.l_minus = tridiagonal_L("-", 2, K)

    def fields(self, y: Coefficients) -> PerturbationState:
        cp, cm = y
        return PerturbationState(from_basis(BasisCoefficients(2, cp)),
                                 from_basis(BasisCoefficients(2, cm)))

    def linear(self, y: Coefficients) -> Coefficients:
        cp, cm = y
        if self.linear_mode == "tridiagonal":
            d_plus = self.l_plus * cp
            d_minus = self.l_minus * cm
            if self.q != 0.0:
                eta_minus = from_basis(BasisCoefficients(2, cm))
                d_minus = d_minus - 2.0 * self.q * project(op_Q(eta_minus), self.K)
            return d_plus, d_minus
        state = self.fields(y)
        n_out = state.n_max + 2
        return (project(op_L_plus(state.eta_plus, n_out), self.K),
                project(op_L_minus(state.eta_minus, self.q, n_out), self.K))

    def nonlinear(self, y: Coefficients) -> Coefficients:
        state = self.fields(y)
        n_out = 2 * state.n_max
        return (project(nonlinear_N1(state, n_out), self.K),
                project(nonlinear_N2(state, self.q, n_out), self.K))

    def __call__(self, y: Coefficients) -> Coefficients:
        d_plus, d_minus = self.linear(y)
        if self.linear_only:
            return d_plus, d_minus
        n_plus, n_minus = self.nonlinear(y)
        return d_plus + n_plus, d_minus + n_minus

    def initial(self, eta_plus, eta_minus) -> Coefficients:
        """
        把初值转换为系数向量

        Args:
            eta_plus: BasisCoefficients、系数数组或在张成空间中的奇函数
            eta_minus: 同上

        Returns:
            (c⁺, c⁻)，长度均为 K
        """
        return _as_coefficients(eta_plus, self.K), _as_coefficients(eta_minus, self.K)

    def integrate(
        self,
        y0: Coefficients,
        t_end: float,
        dt: float = DT,
        observer: Optional[Callable[[float, Coefficients], dict]] = None,
        sample_interval: float = SAMPLE_INTERVAL,
        blowup_threshold: float = BLOWUP_THRESHOLD,
        stop: Optional[Callable[[float, Coefficients], bool]] = None
    ) -> Tuple[Coefficients, EnergyTrace]:
        """
        RK4 积分，每个采样间隔记录一次观测量；stop 在采样点返回 True 时提前结束

        Returns:
            (终态系数, 轨迹)；系数范数超过阈值或出现非有限值时抛出 BreakdownError
        """
        if t_end < 0:
            raise ValueError(f"终止时间必须非负: {t_end}")
        if dt <= 0:
            raise ValueError(f"时间步长必须为正: {dt}")
        observer = observer or norm_observer
        y = (np.asarray(y0[0], dtype=float), np.asarray(y0[1], dtype=float))
        trace = EnergyTrace()
        trace.append(**observer(0.0, y))
        steps = int(round(t_end / dt))
        every = max(1, int(round(sample_interval / dt)))
        t = 0.0
        for i in range(1, steps + 1):
            try:
                with np.errstate(over="ignore", invalid="ignore"):
                    y_next = rk4_step(self, y, dt)
            except ValueError:
                y_next = None
            t_next = i * dt
            if y_next is None or not all(np.all(np.isfinite(c)) for c in y_next):
                trace.breakdown_time = t_next
                error = BreakdownError(f"t = {t_next:.6g} 时出现非有限值", t_next, t)
                error.trace = trace
                logger.warning(f"Galerkin 积分中断: {error}")
                raise error
            size = max(np.linalg.norm(y_next[0]), np.linalg.norm(y_next[1]))
            if size > blowup_threshold:
                trace.breakdown_time = t_next
                error = BreakdownError(f"t = {t_next:.6g} 时系数范数 {size:.3e} 超过阈值", t_next, t)
                error.trace = trace
                logger.warning(f"Galerkin 积分中断: {error}")
                raise error
            y, t = y_next, t_next
            if i % every == 0 or i == steps:
                trace.append(**observer(t, y))
                if stop is not None and stop(t, y):
                    break
        logger.info(f"Galerkin 积分完成: K = {self.K}, q = {self.q}, linear_only = {self.linear_only}, t = {t:.6g}")
        return y, trace


def _as_coefficients(value, K: int) -> np.ndarray:
    if value is None:
        return np.zeros(K)
    if isinstance(value, BasisCoefficients):
        if value.kappa != 2:
            raise ValueError(f"扰动系统只在 κ = 2 下定义，收到 κ = {value.kappa}")
        return value.resized(K).c
    if isinstance(value, FourierField):
        coeffs, _ = to_basis(value)
        return coeffs.resized(K).c
    c = np.zeros(K)
    values = np.asarray(value, dtype=float).reshape(-1)
    m = min(K, values.shape[0])
    c[:m] = values[:m]
    return c


def norm_observer(t: float, y: Coefficients) -> dict:
    """ℋ₂ 范数与 I₀ = (‖η⁺‖² + ‖η⁻‖²)^{1/2}"""
    h2_plus = float(np.linalg.norm(y[0]))
    h2_minus = float(np.linalg.norm(y[1]))
    return {"time": t, "h2_plus": h2_plus, "h2_minus": h2_minus,
            "i0": float(np.hypot(h2_plus, h2_minus))}


def energy_rate(c: np.ndarray, sign: str = "+") -> float:
    """½ d/dt ‖c‖² = Σ (d_k - d_{k+2}) c_k²，沿线性流精确成立"""
    c = np.asarray(c, dtype=float)
    return float(np.dot(tridiagonal_L(sign, 2, max(len(c), 4)).diag[:len(c)], c * c))


def energy_second_derivative(c: np.ndarray) -> float:
    """
    沿 L⁺ 的截断线性流 d²/dt² ‖c‖² = 2‖Mc‖² + 2⟨c, M²c⟩

    直接由三对角矩阵计算，不做有限差分
    """
    M = tridiagonal_L("+", 2, len(c))
    first = M * np.asarray(c, dtype=float)
    return float(2.0 * np.dot(first, first) + 2.0 * np.dot(c, M * first))


async def setup(cli):
    """注册 linearize 子命令"""
    from cogs.run_config import add_common_arguments, load_run_config
    from cogs.output import build_manifest, write_json, write_trace

    def configure(parser):
        add_common_arguments(parser)
        parser.add_argument("--mode", choices=["tridiagonal", "spectral"], help="线性部分求值方式")
        parser.add_argument("--nonlinear", action="store_true", help="同时积分非线性项")

    def handle(args) -> int:
        config = load_run_config(args, experiment="linearize")
        if config.kappa != 2:
            raise ConfigError(f"扰动系统只在 κ = 2 下定义，收到 κ = {config.kappa}")
        K = config.n_max - 2
        system = GalerkinSystem(K, q=config.q, linear_only=not config.nonlinear,
                                linear_mode=config.linear_mode)
        data = config.data or {}
        plus = _coefficients_from_config(data.get("eta_plus"), K, default_l=1)
        minus = _coefficients_from_config(data.get("eta_minus"), K, default_l=None)
        print(f"🚀 开始积分 Galerkin 系统: K = {K}, 线性部分 = {config.linear_mode}, "
              f"非线性 = {config.nonlinear}, t_end = {config.t_end}")
        _, trace = system.integrate((plus, minus), config.t_end, config.dt,
                                    sample_interval=config.sample_interval)
        out_dir = config.out_dir()
        write_trace(os.path.join(out_dir, "trace.csv"), trace)
        write_json(os.path.join(out_dir, "manifest.json"),
                   build_manifest({"q": config.q, "K": K, "linear_mode": config.linear_mode,
                                   "nonlinear": config.nonlinear},
                                  config.dt, config.n_max, config.seed))
        print(f"✅ 积分完成，轨迹已写入 {out_dir}")
        return 0

    cli.add_command("linearize", "在加权基下积分线性化（或完整）扰动系统", configure, handle)


def _coefficients_from_config(value, K: int, default_l: Optional[int]) -> np.ndarray:
    """配置中的初值可以是 {"kappa", "c"} 系数，也可以是 Fourier 系数字典"""
    if value is None:
        return BasisCoefficients.unit(default_l, K).c if default_l else np.zeros(K)
    if "c" in value:
        return _as_coefficients(BasisCoefficients.from_dict(value), K)
    return _as_coefficients(as_odd(FourierField.from_dict(value)), K)
