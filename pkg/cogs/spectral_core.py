"""
截断 Fourier 表示
支持 Hilbert 变换、求导、去混叠乘积与由涡度恢复速度
"""

import os
from dataclasses import dataclass
from typing import Dict, Iterable, Optional

import numpy as np
from dotenv import load_dotenv
from scipy import fft as sp_fft

load_dotenv()

# 不超过该截断时乘积走直接卷积，否则走补零配点
DIRECT_PRODUCT_MAX = int(os.getenv("DIRECT_PRODUCT_MAX", 64))


@dataclass(frozen=True, eq=False)
class FourierField:
    """
    [-π, π] 上的实周期函数
    f(θ) = b_0 + Σ_k (a_k sin kθ + b_k cos kθ)，k = 1..n_max

    数组按频率下标存储：a[k] 为 sin(kθ) 系数，a[0] 恒为 0；b[k] 为 cos(kθ) 系数
    """
    n_max: int
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        if int(self.n_max) < 0:
            raise ValueError(f"截断频率必须非负: {self.n_max}")
        n = int(self.n_max)
        a = np.array(self.a, dtype=float).reshape(-1)
        b = np.array(self.b, dtype=float).reshape(-1)
        if a.shape != (n + 1,) or b.shape != (n + 1,):
            raise ValueError(f"系数长度必须为 n_max + 1 = {n + 1}，实际为 {a.shape[0]} 与 {b.shape[0]}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("系数中包含非有限值")
        a[0] = 0.0
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, 'n_max', n)
        object.__setattr__(self, 'a', a)
        object.__setattr__(self, 'b', b)

    # ---- 构造 ----

    @classmethod
    def zeros(cls, n_max: int) -> "FourierField":
        return cls(n_max, np.zeros(n_max + 1), np.zeros(n_max + 1))

    @classmethod
    def from_modes(
        cls,
        n_max: int,
        sin: Optional[Dict[int, float]] = None,
        cos: Optional[Dict[int, float]] = None
    ) -> "FourierField":
        """由 {频率: 系数} 字典构造"""
        a = np.zeros(n_max + 1)
        b = np.zeros(n_max + 1)
        for k, value in (sin or {}).items():
            if not 1 <= k <= n_max:
                raise ValueError(f"正弦频率超出范围: {k}")
            a[k] += value
        for k, value in (cos or {}).items():
            if not 0 <= k <= n_max:
                raise ValueError(f"余弦频率超出范围: {k}")
            b[k] += value
        return cls(n_max, a, b)

    @classmethod
    def from_samples(cls, values: np.ndarray, n_max: int) -> "FourierField":
        """由 θ_j = 2πj/M 上的等距采样恢复前 n_max 个模态"""
        values = np.asarray(values, dtype=float)
        m = values.shape[0]
        if 2 * n_max >= m:
            raise ValueError(f"采样点数 {m} 不足以分辨截断频率 {n_max}")
        spectrum = sp_fft.rfft(values)[:n_max + 1] / m
        return _from_complex(spectrum, n_max)

    # ---- 基本运算 ----

    def resized(self, n_max: int) -> "FourierField":
        """补零或截断到新的 n_max"""
        if n_max == self.n_max:
            return self
        a = np.zeros(n_max + 1)
        b = np.zeros(n_max + 1)
        m = min(n_max, self.n_max) + 1
        a[:m] = self.a[:m]
        b[:m] = self.b[:m]
        return FourierField(n_max, a, b)

    def _aligned(self, other: "FourierField"):
        n = max(self.n_max, other.n_max)
        return self.resized(n), other.resized(n)

    def __add__(self, other: "FourierField") -> "FourierField":
        f, g = self._aligned(other)
        return FourierField(f.n_max, f.a + g.a, f.b + g.b)

    def __sub__(self, other: "FourierField") -> "FourierField":
        f, g = self._aligned(other)
        return FourierField(f.n_max, f.a - g.a, f.b - g.b)

    def __neg__(self) -> "FourierField":
        return FourierField(self.n_max, -self.a, -self.b)

    def __mul__(self, scalar: float) -> "FourierField":
        if isinstance(scalar, FourierField):
            return multiply(self, scalar)
        return FourierField(self.n_max, scalar * self.a, scalar * self.b)

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> "FourierField":
        return FourierField(self.n_max, self.a / scalar, self.b / scalar)

    # ---- 性质 ----

    @property
    def mean(self) -> float:
        return float(self.b[0])

    @property
    def is_odd(self) -> bool:
        return not np.any(self.b)

    def max_cos(self) -> float:
        """余弦系数的最大绝对值，用于检测奇对称破缺"""
        return float(np.max(np.abs(self.b)))

    def l2_norm(self) -> float:
        """((1/π)∫ f²)^{1/2} = (2b_0² + Σ(a_k² + b_k²))^{1/2}"""
        return float(np.sqrt(2.0 * self.b[0] ** 2 + np.sum(self.a[1:] ** 2 + self.b[1:] ** 2)))

    def coefficient_norm(self) -> float:
        """(Σ_{k≥1}(a_k² + b_k²))^{1/2}"""
        return float(np.sqrt(np.sum(self.a[1:] ** 2 + self.b[1:] ** 2)))

    def sobolev_seminorm(self, m: int) -> float:
        """‖∂^m f‖ 在系数约定下的值 (Σ k^{2m}(a_k² + b_k²))^{1/2}，m ≥ 1"""
        k = np.arange(self.n_max + 1, dtype=float)
        return float(np.sqrt(np.sum(k ** (2 * m) * (self.a ** 2 + self.b ** 2))))

    def sample(self, m: Optional[int] = None) -> np.ndarray:
        """在 θ_j = 2πj/M 上取值"""
        m = m or 2 * self.n_max + 2
        if 2 * self.n_max >= m:
            raise ValueError(f"采样点数 {m} 不足以分辨截断频率 {self.n_max}")
        spectrum = np.zeros(m // 2 + 1, dtype=complex)
        spectrum[:self.n_max + 1] = _to_complex(self) * m
        return sp_fft.irfft(spectrum, n=m)

    def sup_norm(self, oversample: int = 4) -> float:
        """稠密网格上的最大模"""
        return float(np.max(np.abs(self.sample(oversample * (self.n_max + 1)))))

    # ---- 序列化 ----

    def to_dict(self) -> dict:
        return {
            "n_max": self.n_max,
            "sin": [float(x) for x in self.a[1:]],
            "cos": [float(x) for x in self.b],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FourierField":
        n = int(data["n_max"])
        sin = list(data.get("sin", []))
        cos = list(data.get("cos", []))
        if len(sin) > n or len(cos) > n + 1:
            raise ValueError(f"系数个数超过 n_max = {n}")
        a = np.zeros(n + 1)
        b = np.zeros(n + 1)
        a[1:len(sin) + 1] = sin
        b[:len(cos)] = cos
        return cls(n, a, b)


class OddField(FourierField):
    """奇函数 f(-θ) = -f(θ)，即余弦系数全为零的 FourierField"""

    def __post_init__(self):
        super().__post_init__()
        if np.any(self.b):
            raise ValueError("奇函数不允许出现余弦系数")

    @classmethod
    def from_sine(cls, a: Iterable[float]) -> "OddField":
        """由 a_1..a_n 构造"""
        a = np.concatenate([[0.0], np.asarray(list(a), dtype=float)])
        n = a.shape[0] - 1
        return cls(n, a, np.zeros(n + 1))

    @classmethod
    def zeros(cls, n_max: int) -> "OddField":
        return cls(n_max, np.zeros(n_max + 1), np.zeros(n_max + 1))


def as_odd(f: FourierField, tol: float = 0.0) -> OddField:
    """
    把 FourierField 视为奇函数

    Args:
        f: 输入场
        tol: 允许的余弦系数最大绝对值

    Returns:
        去掉余弦部分的 OddField
    """
    if isinstance(f, OddField):
        return f
    if f.max_cos() > tol:
        raise ValueError(f"输入场不是奇函数，余弦系数最大为 {f.max_cos():.3e}")
    return OddField(f.n_max, f.a, np.zeros(f.n_max + 1))


def _to_complex(f: FourierField) -> np.ndarray:
    """f = Σ_{|k|≤n} ĉ_k e^{ikθ}，返回 ĉ_0..ĉ_n"""
    c = 0.5 * (f.b - 1j * f.a)
    c[0] = f.b[0]
    return c


def _from_complex(c: np.ndarray, n_max: int) -> FourierField:
    c = np.asarray(c)[:n_max + 1]
    a = np.zeros(n_max + 1)
    b = np.zeros(n_max + 1)
    m = c.shape[0]
    a[:m] = -2.0 * c.imag
    b[:m] = 2.0 * c.real
    b[0] = c[0].real if m else 0.0
    return FourierField(n_max, a, b)


def hilbert(f: FourierField) -> FourierField:
    """
    周期 Hilbert 变换，Fourier 乘子 -i·sgn(k)

    sin kθ ↦ -cos kθ，cos kθ ↦ sin kθ，常数 ↦ 0
    """
    a = f.b.copy()
    b = -f.a
    b[0] = 0.0
    return FourierField(f.n_max, a, b)


def differentiate(f: FourierField) -> FourierField:
    """逐项求导"""
    k = np.arange(f.n_max + 1, dtype=float)
    return FourierField(f.n_max, -k * f.b, k * f.a)


def antiderivative(g: FourierField) -> FourierField:
    """
    零均值场的周期原函数，常数项取使原函数在 θ = 0 处为零

    Args:
        g: 均值为零的场

    Returns:
        满足 v' = g、v(0) = 0 的场
    """
    if abs(g.b[0]) > 1e-12 * max(1.0, g.coefficient_norm()):
        raise ValueError(f"原函数要求均值为零，实际均值为 {g.b[0]:.3e}")
    k = np.arange(1, g.n_max + 1, dtype=float)
    a = np.zeros(g.n_max + 1)
    b = np.zeros(g.n_max + 1)
    a[1:] = g.b[1:] / k
    b[1:] = -g.a[1:] / k
    b[0] = -np.sum(b[1:])
    return FourierField(g.n_max, a, b)


def velocity_from_vorticity(omega: FourierField) -> FourierField:
    """由 ∂_θ u = Hω 且 u(0) = 0 恢复速度；奇涡度给出奇速度"""
    v = antiderivative(hilbert(omega))
    if isinstance(omega, OddField):
        return as_odd(v, tol=1e-12 * max(1.0, v.coefficient_norm()))
    return v


def _product_direct(f: FourierField, g: FourierField, n_out: int) -> FourierField:
    n = f.n_max
    cf = _to_complex(f)
    cg = _to_complex(g)
    # 双边系数，下标 j 对应频率 j - n
    full_f = np.concatenate([np.conj(cf[:0:-1]), cf])
    full_g = np.concatenate([np.conj(cg[:0:-1]), cg])
    conv = np.convolve(full_f, full_g)
    # conv 下标 j 对应频率 j - 2n
    top = min(n_out, 2 * n)
    return _from_complex(conv[2 * n:2 * n + top + 1], n_out)


def _product_collocation(f: FourierField, g: FourierField, n_out: int) -> FourierField:
    n = f.n_max
    # 乘积最高频率 2n，频率 m 折叠到 M - m；M > 2n + n_out 时 n_out 以下无混叠
    m = sp_fft.next_fast_len(max(2 * n + n_out + 1, 2 * n_out + 2), real=True)
    product = f.sample(m) * g.sample(m)
    spectrum = sp_fft.rfft(product) / m
    top = min(n_out, 2 * n)
    return _from_complex(spectrum[:top + 1], n_out)


def multiply(
    f: FourierField,
    g: FourierField,
    n_out: Optional[int] = None,
    method: str = "auto"
) -> FourierField:
    """
    去混叠乘积，结果等于系数精确卷积截断到 n_out

    Args:
        f, g: 因子，截断不同时补零到较大者
        n_out: 输出截断，默认为公共截断 n_max；取 2·n_max 时结果精确
        method: "auto"、"direct"（直接卷积）或 "collocation"（补零配点）

    Returns:
        乘积场
    """
    f, g = f._aligned(g)
    n_out = f.n_max if n_out is None else int(n_out)
    if method == "auto":
        method = "direct" if f.n_max <= DIRECT_PRODUCT_MAX else "collocation"
    if method == "direct":
        return _product_direct(f, g, n_out)
    elif method == "collocation":
        return _product_collocation(f, g, n_out)
    else:
        raise ValueError(f"不支持的乘积方法: {method}")


def evaluate(f: FourierField, thetas: Iterable[float]) -> np.ndarray:
    """逐点合成截断级数"""
    thetas = np.asarray(list(thetas) if not isinstance(thetas, np.ndarray) else thetas, dtype=float)
    k = np.arange(f.n_max + 1, dtype=float)
    phase = np.outer(thetas, k)
    return np.sin(phase) @ f.a + np.cos(phase) @ f.b


def divide_by_sine(f: FourierField) -> FourierField:
    """
    奇函数除以 sin θ 的精确余弦级数

    利用 sin jθ / sin θ = Σ_{m ≡ j-1 (mod 2), 0 ≤ m < j} ε_m cos mθ，ε_0 = 1，ε_m = 2

    Args:
        f: 奇函数

    Returns:
        截断为 max(n_max - 1, 0) 的偶函数
    """
    f = as_odd(f)
    n = f.n_max
    # tail[j] = Σ_{i ≥ j, i ≡ j (mod 2)} a_i
    tail = np.zeros(n + 2)
    for parity in (0, 1):
        idx = np.arange(parity, n + 1, 2)
        tail[idx] = np.cumsum(f.a[idx][::-1])[::-1]
    n_out = max(n - 1, 0)
    b = 2.0 * tail[1:n_out + 2]
    b[0] *= 0.5
    return FourierField(n_out, np.zeros(n_out + 1), b)


def sine_mode(k: int, n_max: Optional[int] = None, amplitude: float = 1.0) -> OddField:
    """单模奇函数 amplitude·sin(kθ)"""
    n = k if n_max is None else n_max
    a = np.zeros(n + 1)
    a[k] = amplitude
    return OddField(n, a, np.zeros(n + 1))


def cosine_mode(k: int, n_max: Optional[int] = None, amplitude: float = 1.0) -> FourierField:
    """单模偶函数 amplitude·cos(kθ)"""
    n = k if n_max is None else n_max
    b = np.zeros(n + 1)
    b[k] = amplitude
    return FourierField(n, np.zeros(n + 1), b)
