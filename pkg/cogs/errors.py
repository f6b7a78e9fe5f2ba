"""
实验工具链的异常定义
每个异常携带命令行退出码
"""

from typing import Optional


class LabError(Exception):
    """所有工具链异常的基类"""
    exit_code = 1


class ConfigError(LabError, ValueError):
    """自定义异常，用于表示运行配置无效"""
    exit_code = 2


class PreconditionError(LabError, ValueError):
    """自定义异常，用于表示实验初值不满足前提条件"""
    exit_code = 2

    def __init__(self, message: str, value: Optional[float] = None):
        super().__init__(message)
        self.value = value


class BreakdownError(LabError):
    """自定义异常，用于表示数值解爆破或出现非有限值"""
    exit_code = 3

    def __init__(self, message: str, time: float, last_valid_time: Optional[float] = None):
        super().__init__(message)
        self.time = time
        self.last_valid_time = last_valid_time


class SpanError(LabError, ValueError):
    """自定义异常，用于表示函数不在当前截断的加权基张成空间中"""
    exit_code = 3

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class VerdictError(LabError):
    """自定义异常，用于表示验收判定未通过"""
    exit_code = 4


class BoundViolationError(LabError):
    """自定义异常，用于表示特征值界 (1/50, 3/5) 被违反"""
    exit_code = 5
