import os
import sys
import tempfile

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

# 测试期间的日志写到临时目录
os.environ.setdefault("LOG_DIR", tempfile.mkdtemp(prefix="lab-logs-"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def random_odd(rng):
    """截断 n 的随机奇函数，系数按 k^{-2} 衰减"""
    from cogs.spectral_core import OddField

    def make(n: int, scale: float = 1.0):
        a = np.zeros(n + 1)
        k = np.arange(1, n + 1)
        a[1:] = scale * rng.standard_normal(n) / k ** 2
        return OddField(n, a, np.zeros(n + 1))

    return make


@pytest.fixture
def random_field(rng):
    """截断 n 的随机实场（含余弦部分）"""
    from cogs.spectral_core import FourierField

    def make(n: int, scale: float = 1.0):
        k = np.arange(0, n + 1)
        weight = 1.0 / np.maximum(k, 1) ** 2
        a = scale * rng.standard_normal(n + 1) * weight
        b = scale * rng.standard_normal(n + 1) * weight
        return FourierField(n, a, b)

    return make
