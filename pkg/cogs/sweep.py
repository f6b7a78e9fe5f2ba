"""
随机初值集合上的并发实验
自举阈值的二进扫描与存在时间常数 C₁、C₂ 的经验拟合
"""

import asyncio
import math
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from cogs.errors import BreakdownError
from cogs.experiments import (
    existence_horizon,
    fit_horizon_constants,
    horizon_samples,
    HorizonParams,
    random_coefficients,
    run_nonlinear_stability,
    sobolev_norm_coefficients,
)
from cogs.galerkin import GalerkinSystem, norm_observer
from cogs.logger import get_file_logger
from cogs.output import write_json_async, write_trace_async

logger = get_file_logger('Sweep', 'sweep.log')


@dataclass
class ThresholdResult:
    """每个幅度下各随机种子的判定，以及全部通过的最大幅度"""
    threshold: Optional[float]
    table: Dict[float, List[Optional[bool]]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"threshold": self.threshold,
                "table": {f"{amp:g}": verdicts for amp, verdicts in self.table.items()}}


@dataclass
class HorizonFit:
    c1: float
    c2: float
    samples: int
    horizons: Dict[int, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"c1": self.c1, "c2": self.c2, "samples": self.samples,
                "horizons": {str(k): v for k, v in self.horizons.items()}}


def _stability_run(seed: int, amplitude: float, K: int, t_end: float, dt: float,
                   margin: float, decay_rate: float):
    rng = np.random.default_rng(seed)
    plus = random_coefficients(rng, K, even=True)
    minus = random_coefficients(rng, K)
    # 两个分量共同归一化，使 I₀(0) 恰为 amplitude
    scale = 1.0 / math.hypot(np.linalg.norm(plus), np.linalg.norm(minus))
    return run_nonlinear_stability(plus * scale, minus * scale, amplitude, t_end, dt, K,
                                   margin=margin, decay_rate=decay_rate, threshold=math.inf)


async def bootstrap_threshold(
    amplitudes: Sequence[float],
    seeds: Sequence[int],
    K: int,
    t_end: float,
    dt: float,
    margin: float,
    decay_rate: float,
    jobs: int,
    out_dir: Optional[str] = None
) -> ThresholdResult:
    """
    自举阈值：所有种子上衰减判定都成立的最大二进幅度

    Args:
        amplitudes: 候选幅度
        seeds: 随机种子集合
        K: Galerkin 截断
        t_end: 每个运行的终止时间
        dt: 时间步长
        margin: 衰减常数 C
        decay_rate: 衰减率
        jobs: 最大并发数
        out_dir: 每个运行写自己的轨迹文件，None 时不写文件

    Returns:
        ThresholdResult
    """
    semaphore = asyncio.Semaphore(jobs)
    loop = asyncio.get_running_loop()

    async def one(amplitude: float, seed: int) -> Optional[bool]:
        async with semaphore:
            report = await loop.run_in_executor(
                None,
                lambda: _stability_run(seed, amplitude, K, t_end, dt, margin, decay_rate)
            )
            if out_dir:
                name = f"amp{amplitude:g}_seed{seed}"
                await write_trace_async(os.path.join(out_dir, f"{name}.csv"), report.trace)
                await write_json_async(os.path.join(out_dir, f"{name}.json"), report.to_dict())
            return report.verdict if report.breakdown_time is None else False

    pairs = [(amp, seed) for amp in amplitudes for seed in seeds]
    print(f"⏳ [集合运行] 并发执行 {len(pairs)} 个稳定性运行（并发上限 {jobs}）...")
    results = await asyncio.gather(*(one(amp, seed) for amp, seed in pairs), return_exceptions=True)

    table: Dict[float, List[Optional[bool]]] = {amp: [] for amp in amplitudes}
    for (amp, seed), result in zip(pairs, results):
        if isinstance(result, Exception):
            print(f"❌ [集合运行] 幅度 {amp:g} 种子 {seed} 失败: {result}")
            logger.error(f"幅度 {amp:g} 种子 {seed} 失败: {result}")
            table[amp].append(False)
        else:
            table[amp].append(result)
    passing = [amp for amp, verdicts in table.items() if verdicts and all(v is True for v in verdicts)]
    threshold = max(passing) if passing else None
    logger.info(f"自举阈值扫描完成: 阈值 {threshold}, 表 {table}")
    return ThresholdResult(threshold, table)


def _horizon_run(seed: int, amplitude: float, K: int, t_end: float, dt: float, m: int):
    rng = np.random.default_rng(seed)
    system = GalerkinSystem(K)
    y0 = (amplitude * random_coefficients(rng, K), amplitude * random_coefficients(rng, K))

    def observer(t, y):
        row = norm_observer(t, y)
        row["i_m"] = float(math.hypot(sobolev_norm_coefficients(y[0], m),
                                      sobolev_norm_coefficients(y[1], m)))
        return row

    try:
        _, trace = system.integrate(y0, t_end, dt, observer=observer)
    except BreakdownError as e:
        trace = e.trace
    return trace


async def estimate_horizon_constants(
    seeds: Sequence[int],
    amplitude: float,
    K: int,
    t_end: float,
    dt: float,
    m: int,
    jobs: int,
    out_dir: Optional[str] = None
) -> HorizonFit:
    """
    在随机小初值集合上拟合 dI_m/dt ≤ C₁I_m + C₂I_m²，并给出每个运行的 T₀

    Returns:
        HorizonFit
    """
    semaphore = asyncio.Semaphore(jobs)
    loop = asyncio.get_running_loop()

    async def one(seed: int):
        async with semaphore:
            trace = await loop.run_in_executor(None, lambda: _horizon_run(seed, amplitude, K, t_end, dt, m))
            if out_dir:
                await write_trace_async(os.path.join(out_dir, f"horizon_seed{seed}.csv"), trace)
            return trace

    print(f"⏳ [集合运行] 并发执行 {len(seeds)} 个存在时间运行...")
    traces = await asyncio.gather(*(one(seed) for seed in seeds), return_exceptions=True)
    i_all: List[np.ndarray] = []
    di_all: List[np.ndarray] = []
    initial: Dict[int, float] = {}
    for seed, trace in zip(seeds, traces):
        if isinstance(trace, Exception):
            print(f"❌ [集合运行] 种子 {seed} 失败: {trace}")
            continue
        if len(trace) >= 3:
            i_values, slopes = horizon_samples(trace, "i_m")
            i_all.append(i_values)
            di_all.append(slopes)
        initial[seed] = float(trace.column("i_m")[0])
    if not i_all:
        raise ValueError("没有可用于拟合的轨迹")
    c1, c2 = fit_horizon_constants(np.concatenate(i_all), np.concatenate(di_all))
    horizons = {seed: existence_horizon(HorizonParams(c1, c2, i0)) for seed, i0 in initial.items() if i0 > 0}
    logger.info(f"存在时间常数: C₁ = {c1:.6g}, C₂ = {c2:.6g}")
    return HorizonFit(c1, c2, int(sum(len(x) for x in i_all)), horizons)


async def setup(cli):
    """注册 sweep 子命令"""
    from cogs.output import write_json
    from cogs.run_config import add_common_arguments, load_run_config

    def configure(parser):
        add_common_arguments(parser)
        parser.add_argument("--mode", dest="sweep_mode", choices=["threshold", "horizon"],
                            help="threshold 扫描自举阈值，horizon 拟合存在时间常数")

    def handle(args) -> int:
        config = load_run_config(args, experiment="sweep", defaults={"n_max": 34, "dt": 1e-2, "t_end": 10.0})
        K = config.n_max - 2
        seeds = [config.seed + i for i in range(config.ensemble)]
        out_dir = config.out_dir()
        if config.sweep_mode == "threshold":
            result = asyncio.run(bootstrap_threshold(
                sorted(config.amplitudes, reverse=True), seeds, K, config.t_end, config.dt,
                config.margin, config.decay_rate, config.jobs, out_dir))
            print(f"📊 自举阈值: {result.threshold}")
            write_json(os.path.join(out_dir, "threshold.json"), result.to_dict())
        else:
            fit = asyncio.run(estimate_horizon_constants(
                seeds, config.amplitude, K, config.t_end, config.dt, config.sobolev_m, config.jobs, out_dir))
            print(f"📊 C₁ = {fit.c1:.6g}, C₂ = {fit.c2:.6g}")
            write_json(os.path.join(out_dir, "horizon.json"), fit.to_dict())
        print(f"✅ 集合运行完成，结果已写入 {out_dir}")
        return 0

    cli.add_command("sweep", "在随机初值集合上扫描自举阈值或拟合存在时间常数", configure, handle)
