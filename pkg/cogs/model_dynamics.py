"""
完整 MHD 模型及其单方程约化的右端项与时间积分

∂_t ω⁺ + a u⁻ ∂_θ ω⁺ = p ω⁺ Hω⁻ + q ω⁻ Hω⁺
∂_t ω⁻ + a u⁺ ∂_θ ω⁻ = p ω⁻ Hω⁺ + q ω⁺ Hω⁻，∂_θ u± = Hω±，u±(0) = 0
"""

import os
from dataclasses import asdict, dataclass
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from dotenv import load_dotenv

from cogs.errors import BreakdownError, ConfigError
from cogs.logger import get_file_logger
from cogs.output import EnergyTrace
from cogs.spectral_core import (
    FourierField,
    OddField,
    differentiate,
    hilbert,
    multiply,
    sine_mode,
    velocity_from_vorticity,
)

load_dotenv()

DT = float(os.getenv("DT", 1e-3))
SAMPLE_INTERVAL = float(os.getenv("SAMPLE_INTERVAL", 0.01))
BLOWUP_THRESHOLD = float(os.getenv("BLOWUP_THRESHOLD", 1e8))
HILBERT_HALVING_THRESHOLD = float(os.getenv("HILBERT_HALVING_THRESHOLD", 1e4))

logger = get_file_logger('ModelDynamics', 'dynamics.log')


@dataclass(frozen=True)
class ModelParams:
    """输运权重 a 与拉伸权重 p、q"""
    a: float
    p: float
    q: float

    def __post_init__(self):
        if not all(np.isfinite([self.a, self.p, self.q])):
            raise ValueError(f"模型参数必须为有限实数: {self}")

    @classmethod
    def osw(cls, a: float) -> "ModelParams":
        """对角数据 ω⁺ = ω⁻ 上约化为 OSW 模型的参数"""
        return cls(a, 1.0, 0.0)

    @classmethod
    def preset(cls, name: str) -> "ModelParams":
        if name not in PRESETS:
            raise ValueError(f"不支持的模型预设: {name}，可选 {sorted(PRESETS)}")
        return PRESETS[name]

    def to_dict(self) -> dict:
        return asdict(self)


PRESETS: Dict[str, ModelParams] = {
    "clm": ModelParams(0.0, 1.0, 0.0),
    "degregorio": ModelParams(1.0, 1.0, 0.0),
    "ccf": ModelParams(-1.0, 1.0, 0.0),
    "mhd-dvz": ModelParams(1.0, 1.5, -0.5),
    "mhd-vv": ModelParams(2.0, 1.0, 1.0),
}


@dataclass(frozen=True)
class MhdState:
    """(ω⁺, ω⁻) 与时间，两者截断一致"""
    omega_plus: FourierField
    omega_minus: FourierField
    time: float = 0.0

    def __post_init__(self):
        n = max(self.omega_plus.n_max, self.omega_minus.n_max)
        object.__setattr__(self, 'omega_plus', self.omega_plus.resized(n))
        object.__setattr__(self, 'omega_minus', self.omega_minus.resized(n))

    @property
    def n_max(self) -> int:
        return self.omega_plus.n_max

    @classmethod
    def diagonal(cls, omega: FourierField, time: float = 0.0) -> "MhdState":
        return cls(omega, omega, time)


def rhs_mhd(s: MhdState, params: ModelParams) -> Tuple[FourierField, FourierField]:
    """
    完整模型右端项，乘积去混叠并截断回 n_max

    Returns:
        (dω⁺/dt, dω⁻/dt)
    """
    n = s.n_max
    wp, wm = s.omega_plus, s.omega_minus
    up, um = velocity_from_vorticity(wp), velocity_from_vorticity(wm)
    hp, hm = hilbert(wp), hilbert(wm)
    d_plus = (-params.a * multiply(um, differentiate(wp), n)
              + params.p * multiply(wp, hm, n)
              + params.q * multiply(wm, hp, n))
    d_minus = (-params.a * multiply(up, differentiate(wm), n)
               + params.p * multiply(wm, hp, n)
               + params.q * multiply(wp, hm, n))
    return d_plus, d_minus


def rhs_osw(omega: FourierField, a: float) -> FourierField:
    """
    OSW 模型 ∂_t ω + a u ∂_θ ω = ω Hω 的右端项

    a = 1 为 De Gregorio 模型，a = 0 为 CLM 模型，a = -1 为 CCF 模型
    """
    n = omega.n_max
    u = velocity_from_vorticity(omega)
    return -a * multiply(u, differentiate(omega), n) + multiply(omega, hilbert(omega), n)


def excited_state(kappa: int) -> Tuple[OddField, OddField]:
    """Ω_κ = -sin(κθ)，U_κ = sin(κθ)/κ"""
    if kappa < 1:
        raise ValueError(f"κ 必须为正整数: {kappa}")
    return sine_mode(kappa, amplitude=-1.0), sine_mode(kappa, amplitude=1.0 / kappa)


def rk4_step(rhs: Callable[[Sequence], Sequence], y: Sequence, dt: float) -> tuple:
    """
    经典四级 Runge-Kutta 单步

    y 为分量元组，分量支持加法与数乘（numpy 数组或 FourierField）
    """
    k1 = rhs(y)
    k2 = rhs(tuple(yi + (0.5 * dt) * ki for yi, ki in zip(y, k1)))
    k3 = rhs(tuple(yi + (0.5 * dt) * ki for yi, ki in zip(y, k2)))
    k4 = rhs(tuple(yi + dt * ki for yi, ki in zip(y, k3)))
    return tuple(yi + (dt / 6.0) * (a + 2.0 * b + 2.0 * c + d)
                 for yi, a, b, c, d in zip(y, k1, k2, k3, k4))


def step_rk4(s: MhdState, params: ModelParams, dt: float) -> MhdState:
    """
    rhs_mhd 的 RK4 单步

    出现非有限值时抛出 BreakdownError，不做截断或修正
    """
    if dt < 0:
        raise ValueError(f"时间步长必须非负: {dt}")
    if dt == 0:
        return s
    try:
        with np.errstate(over='ignore', invalid='ignore'):
            plus, minus = rk4_step(lambda y: rhs_mhd(MhdState(y[0], y[1]), params),
                                   (s.omega_plus, s.omega_minus), dt)
    except ValueError as e:
        raise BreakdownError(f"t = {s.time + dt:.6g} 时出现非有限值: {e}", s.time + dt, s.time)
    return MhdState(plus, minus, s.time + dt)


def mhd_observer(s: MhdState) -> dict:
    """默认观测量：L² 范数与 Hω± 的最大模"""
    return {
        "time": s.time,
        "l2_plus": s.omega_plus.l2_norm(),
        "l2_minus": s.omega_minus.l2_norm(),
        "linf_H_plus": hilbert(s.omega_plus).sup_norm(),
        "linf_H_minus": hilbert(s.omega_minus).sup_norm(),
    }


def _check_blowup(s: MhdState, threshold: float):
    sup = max(s.omega_plus.sup_norm(), s.omega_minus.sup_norm())
    if not np.isfinite(sup) or sup > threshold:
        raise BreakdownError(f"t = {s.time:.6g} 时 ‖ω‖_∞ = {sup:.3e} 超过阈值 {threshold:.1e}", s.time)


def integrate(
    s: MhdState,
    params: ModelParams,
    t_end: float,
    dt: float = DT,
    observer: Optional[Callable[[MhdState], dict]] = None,
    sample_interval: float = SAMPLE_INTERVAL,
    adaptive: bool = False,
    blowup_threshold: float = BLOWUP_THRESHOLD
) -> Tuple[MhdState, EnergyTrace]:
    """
    重复 RK4 步进，每个采样间隔调用一次观测函数

    Args:
        s: 初始状态
        params: 模型参数
        t_end: 终止时间
        dt: 时间步长
        observer: 观测函数，返回一行轨迹数据
        sample_interval: 采样间隔
        adaptive: Hω 的最大模超过阈值时把步长减半
        blowup_threshold: ‖ω‖_∞ 的爆破阈值

    Returns:
        (终态, 轨迹)；爆破时抛出 BreakdownError，其 trace 属性保存爆破前的轨迹
    """
    if t_end < 0:
        raise ValueError(f"终止时间必须非负: {t_end}")
    if dt <= 0:
        raise ValueError(f"时间步长必须为正: {dt}")
    observer = observer or mhd_observer
    trace = EnergyTrace()
    trace.append(**observer(s))
    steps = int(round(t_end / dt))
    every = max(1, int(round(sample_interval / dt)))
    t0 = s.time
    logger.info(f"开始积分: params={params}, n_max={s.n_max}, dt={dt}, t_end={t_end}")
    try:
        for i in range(1, steps + 1):
            target = t0 + i * dt
            h = target - s.time
            if adaptive:
                linf = max(hilbert(s.omega_plus).sup_norm(), hilbert(s.omega_minus).sup_norm())
                if linf > HILBERT_HALVING_THRESHOLD:
                    s = step_rk4(s, params, 0.5 * h)
                    h = target - s.time
            s = step_rk4(s, params, h)
            _check_blowup(s, blowup_threshold)
            if i % every == 0 or i == steps:
                trace.append(**observer(s))
    except BreakdownError as e:
        trace.breakdown_time = e.time
        e.trace = trace
        logger.warning(f"积分在 t = {e.time:.6g} 处中断: {e}")
        raise
    logger.info(f"积分完成: t = {s.time:.6g}, 采样 {len(trace)} 个")
    return s, trace


def simulation_presets(n_max: int, amplitude: float, seed: int, kappa: int = 2) -> Dict[str, Tuple[ModelParams, MhdState]]:
    """
    模拟子命令的初值预设

    Args:
        n_max: 截断
        amplitude: 扰动幅度
        seed: 随机种子
        kappa: 激发态阶数

    Returns:
        {预设名: (模型参数, 初始状态)}
    """
    rng = np.random.default_rng(seed)
    ground = sine_mode(1, n_max, -1.0)
    excited = sine_mode(kappa, n_max, -1.0)
    bump = np.zeros(n_max + 1)
    top = min(n_max, 8)
    bump[1:top + 1] = rng.standard_normal(top) / np.arange(1, top + 1) ** 2
    perturbation = amplitude * OddField(n_max, bump, np.zeros(n_max + 1))
    return {
        "degregorio-groundstate": (PRESETS["degregorio"], MhdState.diagonal(ground + perturbation)),
        "excited-steady": (PRESETS["degregorio"], MhdState.diagonal(excited)),
        "excited-perturbed": (PRESETS["degregorio"], MhdState(excited + perturbation, excited - perturbation)),
        "clm-sine": (PRESETS["clm"], MhdState.diagonal(sine_mode(1, n_max))),
    }


async def setup(cli):
    """注册 simulate 子命令"""
    from cogs.run_config import add_common_arguments, load_run_config
    from cogs.output import build_manifest, write_json, write_trace

    def configure(parser):
        add_common_arguments(parser)
        parser.add_argument("--preset", help="初值预设名")
        parser.add_argument("--model", help="模型参数预设名")

    def handle(args) -> int:
        config = load_run_config(args, experiment="simulate")
        try:
            params, state = _initial_condition(config)
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"初值或模型参数无效: {e}")

        print(f"🚀 开始模拟: {params}, n_max = {config.n_max}, dt = {config.dt}, t_end = {config.t_end}")
        out_dir = config.out_dir()
        manifest = build_manifest(params.to_dict(), config.dt, config.n_max, config.seed,
                                  {"preset": config.preset, "t_end": config.t_end})
        try:
            final, trace = integrate(state, params, config.t_end, config.dt,
                                     sample_interval=config.sample_interval, adaptive=config.adaptive)
        except BreakdownError as e:
            write_trace(os.path.join(out_dir, "trace.csv"), e.trace)
            manifest["breakdown_time"] = e.time
            write_json(os.path.join(out_dir, "manifest.json"), manifest)
            raise
        write_trace(os.path.join(out_dir, "trace.csv"), trace)
        write_json(os.path.join(out_dir, "manifest.json"), manifest)
        print(f"✅ 模拟完成: t = {final.time:.6g}，轨迹已写入 {out_dir}")
        return 0

    cli.add_command("simulate", "运行完整模型或约化模型的时间积分", configure, handle)


def _initial_condition(config) -> Tuple[ModelParams, MhdState]:
    """由运行配置确定模型参数与初值，显式数据优先于预设"""
    if config.data:
        plus = FourierField.from_dict(config.data["omega_plus"]).resized(config.n_max)
        minus = FourierField.from_dict(config.data.get("omega_minus", config.data["omega_plus"]))
        state = MhdState(plus, minus.resized(config.n_max))
        params = ModelParams.preset(config.model or "degregorio")
    else:
        presets = simulation_presets(config.n_max, config.amplitude, config.seed, config.kappa)
        preset = config.preset or "excited-steady"
        if preset not in presets:
            raise ConfigError(f"不支持的初值预设: {preset}，可选 {sorted(presets)}")
        params, state = presets[preset]
        if config.model:
            params = ModelParams.preset(config.model)
    if config.params:
        params = ModelParams(**{**params.to_dict(), **config.params})
    return params, state
