"""
轨迹与结果文件的输出
CSV 轨迹、JSON 清单与判定结果，集合运行时异步写入
"""

import csv
import io
import json
import os
import platform
from datetime import datetime
from typing import Dict, Iterable, List, Optional

import aiofiles
import numpy as np
import psutil


class EnergyTrace:
    """
    按列存储的时间序列

    每次 append 一行，列名在第一行确定；所有值在声明爆破之前都必须有限
    """

    def __init__(self, columns: Optional[List[str]] = None):
        self.columns: List[str] = list(columns or [])
        self._data: Dict[str, List[float]] = {name: [] for name in self.columns}
        self.breakdown_time: Optional[float] = None

    def append(self, **row: float):
        if not self.columns:
            self.columns = list(row.keys())
            self._data = {name: [] for name in self.columns}
        if set(row) != set(self.columns):
            raise ValueError(f"轨迹列不一致: {sorted(row)} 与 {sorted(self.columns)}")
        for name in self.columns:
            self._data[name].append(float(row[name]))

    def add_column(self, name: str, values: Iterable[float]):
        values = [float(x) for x in values]
        if len(values) != len(self):
            raise ValueError(f"列 {name} 的长度 {len(values)} 与轨迹长度 {len(self)} 不一致")
        if name not in self.columns:
            self.columns.append(name)
        self._data[name] = values

    def column(self, name: str) -> np.ndarray:
        if name not in self._data:
            raise KeyError(f"轨迹中没有列: {name}")
        return np.asarray(self._data[name])

    @property
    def times(self) -> np.ndarray:
        return self.column("time")

    def __len__(self) -> int:
        return len(self._data[self.columns[0]]) if self.columns else 0

    def rows(self) -> Iterable[List[float]]:
        for i in range(len(self)):
            yield [self._data[name][i] for name in self.columns]

    def to_csv_text(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows():
            writer.writerow([repr(x) for x in row])
        return buffer.getvalue()


def write_table(path: str, header: List[str], rows: Iterable[Iterable]):
    """写 CSV 表，浮点数用 repr 保证逐字节可复现"""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(x) if isinstance(x, float) else x for x in row])


def write_trace(path: str, trace: EnergyTrace):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(trace.to_csv_text())


def write_json(path: str, payload: dict):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_jsonable(payload), f, ensure_ascii=False, indent=2, sort_keys=True)


async def write_trace_async(path: str, trace: EnergyTrace):
    """集合运行中每个运行写自己的文件"""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    async with aiofiles.open(path, "w", encoding="utf-8") as f:
        await f.write(trace.to_csv_text())


async def write_json_async(path: str, payload: dict):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    async with aiofiles.open(path, "w", encoding="utf-8") as f:
        await f.write(json.dumps(_jsonable(payload), ensure_ascii=False, indent=2, sort_keys=True))


def host_snapshot() -> dict:
    """运行主机信息"""
    memory = psutil.virtual_memory()
    return {
        "python": platform.python_version(),
        "cpu_count": psutil.cpu_count(logical=True),
        "memory_total_gb": round(memory.total / (1024 ** 3), 2),
        "memory_percent": memory.percent,
    }


def build_manifest(params: dict, dt: float, n_max: int, seed: int, extra: Optional[dict] = None) -> dict:
    """
    运行清单

    Args:
        params: 模型或实验参数
        dt: 时间步长
        n_max: 截断
        seed: 随机种子
        extra: 附加字段

    Returns:
        可直接写成 JSON 的字典
    """
    manifest = {
        "params": params,
        "dt": dt,
        "n_max": n_max,
        "seed": seed,
        "created": datetime.now().strftime('%Y-%m-%d %H:%M:%S'),
        "host": host_snapshot(),
    }
    if extra:
        manifest.update(extra)
    return manifest


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.floating):
        return _jsonable(float(value))
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, float) and not np.isfinite(value):
        return str(value)
    return value
