"""
加权 Hilbert 空间 ℋ_κ
权重 ρ_2 = 1/(4π sin²θ)，正交基 e_{κ,l} = sin((l+κ)θ)/(l+κ) - sin(lθ)/l
"""

import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Tuple, Union

import numpy as np
from dotenv import load_dotenv

from cogs.errors import SpanError
from cogs.spectral_core import FourierField, OddField, as_odd, divide_by_sine

load_dotenv()

BASIS_TOL = float(os.getenv("BASIS_TOL", 1e-8))

Number = Union[int, Fraction]


@dataclass(frozen=True, eq=False)
class BasisCoefficients:
    """
    加权基下的展开系数

    c[l - 1] 为 e_{κ,l} 的系数，l = 1..K
    """
    kappa: int
    c: np.ndarray

    def __post_init__(self):
        if self.kappa < 1:
            raise ValueError(f"κ 必须为正整数: {self.kappa}")
        c = np.array(self.c, dtype=float).reshape(-1)
        c.setflags(write=False)
        object.__setattr__(self, 'c', c)

    @property
    def K(self) -> int:
        return int(self.c.shape[0])

    def norm(self) -> float:
        """‖·‖_{ℋ_κ} = (Σ c_k²)^{1/2}"""
        return float(np.linalg.norm(self.c))

    def resized(self, K: int) -> "BasisCoefficients":
        c = np.zeros(K)
        m = min(K, self.K)
        c[:m] = self.c[:m]
        return BasisCoefficients(self.kappa, c)

    def to_dict(self) -> dict:
        return {"kappa": self.kappa, "c": [float(x) for x in self.c]}

    @classmethod
    def from_dict(cls, data: dict) -> "BasisCoefficients":
        return cls(int(data.get("kappa", 2)), np.asarray(data["c"], dtype=float))

    @classmethod
    def unit(cls, l: int, K: int, kappa: int = 2) -> "BasisCoefficients":
        if not 1 <= l <= K:
            raise ValueError(f"基下标超出范围: l = {l}, K = {K}")
        c = np.zeros(K)
        c[l - 1] = 1.0
        return cls(kappa, c)


def basis_function(kappa: int, l: int, n_max: Optional[int] = None) -> OddField:
    """
    e_{κ,l} = sin((l+κ)θ)/(l+κ) - sin(lθ)/l

    Args:
        kappa: 激发态阶数 κ ≥ 1
        l: 基下标 l ≥ 1
        n_max: 截断，默认 l + κ

    Returns:
        两模态奇函数
    """
    if kappa < 1 or l < 1:
        raise ValueError(f"无效的基下标: κ = {kappa}, l = {l}")
    n = l + kappa if n_max is None else n_max
    if n < l + kappa:
        raise ValueError(f"截断 {n} 小于基函数最高频率 {l + kappa}")
    a = np.zeros(n + 1)
    a[l] = -1.0 / l
    a[l + kappa] = 1.0 / (l + kappa)
    return OddField(n, a, np.zeros(n + 1))


def _recurrence(a: np.ndarray, kappa: int) -> np.ndarray:
    """c_j = c_{j-κ} - j·a_j，c_{≤0} = 0；返回 c_1..c_N"""
    n = a.shape[0] - 1
    j = np.arange(n + 1, dtype=float)
    increments = -j * a
    c = np.zeros(n + 1)
    for r in range(1, kappa + 1):
        idx = np.arange(r, n + 1, kappa)
        c[idx] = np.cumsum(increments[idx])
    return c[1:]


def to_basis(
    f: FourierField,
    kappa: int = 2,
    tol: Optional[float] = None,
    strict: bool = True
) -> Tuple[BasisCoefficients, float]:
    """
    奇函数在 e_{κ,l} 下的展开

    递推 c_j = c_{j-κ} - j·a_j；截断 N 下的残差为最后 κ 个递推值之和，
    f 属于张成空间当且仅当残差为零

    Args:
        f: 奇函数
        kappa: κ
        tol: 相对残差容差，默认 BASIS_TOL
        strict: 残差超出容差时是否抛出 SpanError

    Returns:
        (K = N - κ 个系数, 残差)
    """
    f = as_odd(f)
    tol = BASIS_TOL if tol is None else tol
    n = f.n_max
    if n <= kappa:
        raise ValueError(f"截断 {n} 过小，至少需要 κ + 1 = {kappa + 1}")
    c = _recurrence(f.a, kappa)
    coeffs = BasisCoefficients(kappa, c[:n - kappa])
    residual = float(np.sum(np.abs(c[n - kappa:])))
    if strict and residual > tol * max(coeffs.norm(), 1.0):
        raise SpanError(f"函数不在截断 {n} 的加权基张成空间中，残差 {residual:.3e}", residual)
    return coeffs, residual


def from_basis(coeffs: BasisCoefficients, n_max: Optional[int] = None) -> OddField:
    """Σ c_l e_{κ,l}，默认截断 K + κ"""
    kappa = coeffs.kappa
    n = coeffs.K + kappa if n_max is None else n_max
    if n < coeffs.K + kappa:
        raise ValueError(f"截断 {n} 小于 K + κ = {coeffs.K + kappa}")
    l = np.arange(1, coeffs.K + 1, dtype=float)
    a = np.zeros(n + 1)
    a[1:coeffs.K + 1] -= coeffs.c / l
    a[1 + kappa:coeffs.K + 1 + kappa] += coeffs.c / (l + kappa)
    return OddField(n, a, np.zeros(n + 1))


def h2_inner(f: FourierField, g: FourierField, tol: Optional[float] = None) -> float:
    """⟨f, g⟩_{ℋ_2} = ∫ρ_2 f'g' dθ，经 Parseval 由基系数计算"""
    cf, _ = to_basis(f, tol=tol)
    cg, _ = to_basis(g, tol=tol)
    K = max(cf.K, cg.K)
    return float(np.dot(cf.resized(K).c, cg.resized(K).c))


def h2_norm(f: FourierField, tol: Optional[float] = None) -> float:
    coeffs, _ = to_basis(f, tol=tol)
    return coeffs.norm()


def to_u_field(f: FourierField, tol: Optional[float] = None) -> FourierField:
    """
    加权导数变换 u = -√π ρ_2^{1/2} ∂_θ f = Σ c_k sin((k+1)θ)

    第 k+1 个正弦系数即第 k 个基系数
    """
    coeffs, _ = to_basis(f, tol=tol)
    return u_from_coefficients(coeffs)


def u_from_coefficients(coeffs: BasisCoefficients) -> OddField:
    a = np.zeros(coeffs.K + 2)
    a[2:] = coeffs.c
    return OddField(coeffs.K + 1, a, np.zeros(coeffs.K + 2))


def coefficients_from_u(u: FourierField, kappa: int = 2) -> BasisCoefficients:
    """u 的第 k+1 个正弦系数即 c_k"""
    u = as_odd(u)
    return BasisCoefficients(kappa, u.a[2:].copy())


def from_u_field(u: FourierField) -> OddField:
    """加权导数变换的逆"""
    return from_basis(coefficients_from_u(u))


# ---- 三对角系数 ----

def d_minus(k: int) -> Fraction:
    """d⁻_{2,k} = (k+2)²(k-2)/(4k²)"""
    k = int(k)
    if k < 1:
        raise ValueError(f"下标必须为正整数: {k}")
    return Fraction((k + 2) ** 2 * (k - 2), 4 * k * k)


def d_plus(k: int) -> Fraction:
    """d⁺_{2,k} = (k-2)²(k+2)/(4k²)"""
    k = int(k)
    if k < 1:
        raise ValueError(f"下标必须为正整数: {k}")
    return Fraction((k - 2) ** 2 * (k + 2), 4 * k * k)


def d_kappa(kappa: int, l: int) -> Fraction:
    """d_{κ,l} = (l-κ)²(l+κ)/(2κl²)"""
    kappa, l = int(kappa), int(l)
    if kappa < 1 or l < 1:
        raise ValueError(f"无效的下标: κ = {kappa}, l = {l}")
    return Fraction((l - kappa) ** 2 * (l + kappa), 2 * kappa * l * l)


def d_plus_table(k: np.ndarray) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    return (k - 2) ** 2 * (k + 2) / (4 * k * k)


def d_minus_table(k: np.ndarray) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    return (k + 2) ** 2 * (k - 2) / (4 * k * k)


def d_kappa_table(kappa: int, l: np.ndarray) -> np.ndarray:
    l = np.asarray(l, dtype=float)
    return (l - kappa) ** 2 * (l + kappa) / (2 * kappa * l * l)


def kappa_diagonal_closed_form(kappa: int, l: int) -> Fraction:
    """d_{κ,l} - d_{κ,l+κ} = -1/2 + κ²(-l² + κl + κ²)/(2l²(l+κ)²)"""
    return Fraction(-1, 2) + Fraction(kappa ** 2 * (-l * l + kappa * l + kappa ** 2),
                                      2 * l * l * (l + kappa) ** 2)


class TridiagonalOperator:
    """
    L_κ 在 e_{κ,l} 下的带状表示

    按列存储每个基元的像：
    L e_l = upper[l]·e_{l+κ} + diag[l]·e_l + lower[l]·e_{l-κ}
    其中 upper[l] = -d_{l+κ}，diag[l] = d_l - d_{l+κ}，lower[l] = d_l（l ≤ κ 时为 0）
    """

    def __init__(self, kappa: int, lower: np.ndarray, diag: np.ndarray, upper: np.ndarray):
        if not len(lower) == len(diag) == len(upper):
            raise ValueError("lower、diag、upper 长度必须一致")
        self.kappa = kappa
        self._lower = np.asarray(lower, dtype=float)
        self._diag = np.asarray(diag, dtype=float)
        self._upper = np.asarray(upper, dtype=float)

    @property
    def K(self) -> int:
        return len(self._diag)

    @property
    def lower(self) -> np.ndarray:
        return self._lower

    @property
    def diag(self) -> np.ndarray:
        return self._diag

    @property
    def upper(self) -> np.ndarray:
        return self._upper

    def __len__(self) -> int:
        return self.K

    def __mul__(self, vector: np.ndarray) -> np.ndarray:
        """
        作用于系数向量：
        (Lc)_j = upper[j-κ]·c_{j-κ} + diag[j]·c_j + lower[j+κ]·c_{j+κ}
        """
        vector = np.asarray(vector, dtype=float)
        if len(vector) != self.K:
            raise ValueError(f"向量长度 ({len(vector)}) 与算子维数 ({self.K}) 不一致")
        s = self.kappa
        out = self._diag * vector
        out[s:] += self._upper[:-s] * vector[:-s]
        out[:-s] += self._lower[s:] * vector[s:]
        return out

    def matvec(self, coeffs: BasisCoefficients) -> BasisCoefficients:
        return BasisCoefficients(self.kappa, self * coeffs.c)

    def column(self, l: int) -> np.ndarray:
        """L e_l 的系数，只保留截断 K 以内的部分"""
        return self * BasisCoefficients.unit(l, self.K, self.kappa).c

    def to_dense(self) -> np.ndarray:
        s = self.kappa
        m = np.diag(self._diag)
        m += np.diag(self._upper[:-s], -s)
        m += np.diag(self._lower[s:], s)
        return m


def tridiagonal_L(sign: str = "+", kappa: int = 2, K: int = 32) -> TridiagonalOperator:
    """
    L^± 在加权基下的三对角表示

    Args:
        sign: "+" 或 "-"（"-" 只对 κ = 2 定义）
        kappa: κ，κ ≥ 3 时只是形式上的表示
        K: 截断

    Returns:
        TridiagonalOperator
    """
    if K < kappa + 2:
        raise ValueError(f"截断 K = {K} 过小，至少需要 κ + 2 = {kappa + 2}")
    l = np.arange(1, K + 1, dtype=float)
    if sign == "+":
        d = (lambda x: d_plus_table(x)) if kappa == 2 else (lambda x: d_kappa_table(kappa, x))
    elif sign == "-":
        if kappa != 2:
            raise ValueError(f"L⁻ 只在 κ = 2 时有三对角表示，收到 κ = {kappa}")
        d = d_minus_table
    else:
        raise ValueError(f"不支持的符号: {sign}")
    d_here = d(l)
    d_next = d(l + kappa)
    lower = np.where(l > kappa, d_here, 0.0)
    return TridiagonalOperator(kappa, lower, d_here - d_next, -d_next)


def hardy_ratio(f: FourierField, oversample: int = 64) -> float:
    """
    ‖f/sin θ‖_∞ / ‖f'/sin θ‖_{L²}

    f/sin θ 用精确余弦级数在稠密网格上取最大值，f'/sin θ = -2u，
    故分母为 2√π‖c‖
    """
    coeffs, _ = to_basis(f)
    denominator = 2.0 * np.sqrt(np.pi) * coeffs.norm()
    if denominator == 0.0:
        raise ValueError("零函数的 Hardy 比值没有定义")
    quotient = divide_by_sine(f)
    # 采样点数取 4 的倍数，网格包含 θ = π/2
    m = 4 * oversample * (quotient.n_max + 1)
    return float(np.max(np.abs(quotient.sample(m)))) / denominator
