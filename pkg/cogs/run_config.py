"""
运行配置
JSON 配置文件校验为数据类，优先级：命令行参数 > 配置文件 > 环境变量 > 内置默认值
"""

import json
import os
from dataclasses import dataclass, field, fields
from typing import List, Optional

from dotenv import load_dotenv

from cogs.errors import ConfigError
from cogs.experiments import (
    INSTABILITY_FACTOR,
    INSTABILITY_SOBOLEV_M,
    N_MAX,
    STABILITY_DECAY_RATE,
    STABILITY_MARGIN,
)
from cogs.model_dynamics import DT, SAMPLE_INTERVAL

load_dotenv()

MAX_PARALLEL = int(os.getenv("MAX_PARALLEL", 4))
OUTPUT_DIR = os.getenv("OUTPUT_DIR", "runs")

# 命令行参数名 -> 配置字段名
ARG_FIELDS = {
    "out": "out",
    "seed": "seed",
    "jobs": "jobs",
    "kappa": "kappa",
    "nmax": "n_max",
    "dt": "dt",
    "tend": "t_end",
    "preset": "preset",
    "model": "model",
    "mode": "linear_mode",
    "nonlinear": "nonlinear",
    "sweep_mode": "sweep_mode",
}

# 环境变量名 -> (配置字段名, 类型)，设置后优先于子命令默认值
ENV_FIELDS = {
    "N_MAX": ("n_max", int),
    "DT": ("dt", float),
    "SAMPLE_INTERVAL": ("sample_interval", float),
    "STABILITY_MARGIN": ("margin", float),
    "STABILITY_DECAY_RATE": ("decay_rate", float),
    "INSTABILITY_FACTOR": ("factor", float),
    "INSTABILITY_SOBOLEV_M": ("sobolev_m", int),
}


@dataclass
class RunConfig:
    """所有子命令共用的参数记录，未知键一律拒绝"""
    experiment: str = "simulate"
    preset: Optional[str] = None
    model: Optional[str] = None
    params: Optional[dict] = None
    kappa: int = 2
    n_max: int = N_MAX
    dt: float = DT
    t_end: float = 1.0
    data: dict = field(default_factory=dict)
    lambda_source: str = "computed"
    seed: int = 0
    amplitude: float = 1e-3
    sample_interval: float = SAMPLE_INTERVAL
    adaptive: bool = False
    out: Optional[str] = None
    jobs: int = MAX_PARALLEL
    q: float = 0.0
    linear_mode: str = "tridiagonal"
    nonlinear: bool = False
    epsilons: List[float] = field(default_factory=lambda: [1e-3, 1e-4])
    factor: float = INSTABILITY_FACTOR
    sobolev_m: int = INSTABILITY_SOBOLEV_M
    margin: float = STABILITY_MARGIN
    decay_rate: float = STABILITY_DECAY_RATE
    amplitudes: List[float] = field(default_factory=lambda: [2.0 ** -j for j in range(2, 11)])
    ensemble: int = 4
    sweep_mode: str = "threshold"

    def __post_init__(self):
        try:
            for name in ("kappa", "n_max", "seed", "jobs", "sobolev_m", "ensemble"):
                value = getattr(self, name)
                if isinstance(value, bool) or int(value) != value:
                    raise ConfigError(f"{name} 必须为整数: {value!r}")
                setattr(self, name, int(value))
            for name in ("dt", "t_end", "amplitude", "sample_interval", "q", "factor", "margin", "decay_rate"):
                setattr(self, name, float(getattr(self, name)))
            self.epsilons = [float(x) for x in self.epsilons]
            self.amplitudes = [float(x) for x in self.amplitudes]
        except (TypeError, ValueError) as e:
            raise ConfigError(f"配置字段类型错误: {e}")
        if not isinstance(self.data, dict):
            raise ConfigError("data 必须是 JSON 对象")
        if self.kappa < 1:
            raise ConfigError(f"kappa 必须为正整数: {self.kappa}")
        if self.n_max < 6:
            raise ConfigError(f"n_max 至少为 6: {self.n_max}")
        if self.dt <= 0:
            raise ConfigError(f"dt 必须为正: {self.dt}")
        if self.t_end < 0:
            raise ConfigError(f"t_end 必须非负: {self.t_end}")
        if self.sample_interval <= 0:
            raise ConfigError(f"sample_interval 必须为正: {self.sample_interval}")
        if self.jobs < 1:
            raise ConfigError(f"jobs 至少为 1: {self.jobs}")
        if self.lambda_source not in ("computed", "bounds"):
            raise ConfigError(f"lambda_source 只能是 computed 或 bounds: {self.lambda_source}")
        if self.linear_mode not in ("tridiagonal", "spectral"):
            raise ConfigError(f"linear_mode 只能是 tridiagonal 或 spectral: {self.linear_mode}")
        if self.sweep_mode not in ("threshold", "horizon"):
            raise ConfigError(f"sweep_mode 只能是 threshold 或 horizon: {self.sweep_mode}")

    def out_dir(self) -> str:
        return self.out or os.path.join(OUTPUT_DIR, self.experiment)


def read_config_file(path: str) -> dict:
    """读取 JSON 配置并检查未知键"""
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"配置文件 {path} 不是有效的 JSON: {e}")
    except OSError as e:
        raise ConfigError(f"无法读取配置文件 {path}: {e}")
    if not isinstance(data, dict):
        raise ConfigError(f"配置文件 {path} 的顶层必须是 JSON 对象")
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"配置文件 {path} 含有未知键: {', '.join(unknown)}")
    return data


def load_run_config(args, experiment: str, defaults: Optional[dict] = None) -> RunConfig:
    """
    合并默认值、配置文件与命令行参数

    Args:
        args: argparse 命名空间
        experiment: 子命令名
        defaults: 子命令特有的默认值，低于环境变量、配置文件与命令行参数

    Returns:
        校验后的 RunConfig
    """
    values = dict(defaults or {})
    for env_name, (field_name, cast) in ENV_FIELDS.items():
        raw = os.getenv(env_name)
        if raw is None:
            continue
        try:
            values[field_name] = cast(raw)
        except ValueError:
            raise ConfigError(f"环境变量 {env_name} 的值无效: {raw!r}")
    path = getattr(args, "config", None)
    if path:
        file_values = read_config_file(path)
        declared = file_values.pop("experiment", experiment)
        if declared != experiment:
            raise ConfigError(f"配置文件声明的实验 {declared} 与子命令 {experiment} 不一致")
        values.update(file_values)
    for arg_name, field_name in ARG_FIELDS.items():
        value = getattr(args, arg_name, None)
        if value is not None and value is not False:
            values[field_name] = value
    values["experiment"] = experiment
    return RunConfig(**values)


def add_common_arguments(parser):
    """所有实验子命令共用的参数"""
    parser.add_argument("--config", help="JSON 配置文件路径")
    parser.add_argument("--out", help="输出目录")
    parser.add_argument("--seed", type=int, help="随机种子")
    parser.add_argument("--jobs", type=int, help="集合运行的并发数")
    parser.add_argument("--kappa", type=int, help="激发态阶数 κ")
    parser.add_argument("--nmax", type=int, help="Fourier 截断")
    parser.add_argument("--dt", type=float, help="时间步长")
    parser.add_argument("--tend", type=float, help="终止时间")

