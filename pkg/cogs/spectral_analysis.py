"""
L⁺ 二次型的谱分析

A_k = [[a_k, ε_k], [ε_k, a_{k+2}]]，a_k = (d_k - d_{k+2})²，
ε_k = d_k d_{k+2} + d_{k+2} d_{k+4} - 2 d_{k+2}²，其中 d = d⁺_{2,·}
"""

import os
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np

from cogs.errors import BoundViolationError, ConfigError
from cogs.logger import get_file_logger
from cogs.perturbation import op_Q
from cogs.weighted_basis import (
    BasisCoefficients,
    basis_function,
    d_minus,
    d_plus,
    d_plus_table,
    to_basis,
)

logger = get_file_logger('SpectralAnalysis', 'spectral.log')

LOWER_BOUND = Fraction(1, 50)
UPPER_BOUND = Fraction(3, 5)
TAIL_LIMIT = 0.25


def _check_index(k: int):
    if int(k) < 1:
        raise ValueError(f"下标必须为正整数: {k}")


def a_plus(k: int) -> Fraction:
    """a_k⁺ = (d⁺_k - d⁺_{k+2})²"""
    _check_index(k)
    return (d_plus(k) - d_plus(k + 2)) ** 2


def eps_plus(k: int) -> Fraction:
    """ε_k⁺ 的有理闭式 (-2k³ + 32k + 32)/((k+2)⁴(k+4))"""
    _check_index(k)
    k = int(k)
    return Fraction(-2 * k ** 3 + 32 * k + 32, (k + 2) ** 4 * (k + 4))


def eps_plus_definitional(k: int) -> Fraction:
    """ε_k⁺ = d_k d_{k+2} + d_{k+2} d_{k+4} - 2 d_{k+2}²"""
    _check_index(k)
    return d_plus(k) * d_plus(k + 2) + d_plus(k + 2) * d_plus(k + 4) - 2 * d_plus(k + 2) ** 2


def a_plus_table(k: np.ndarray) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    return (d_plus_table(k) - d_plus_table(k + 2)) ** 2


def eps_plus_table(k: np.ndarray) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    return (-2 * k ** 3 + 32 * k + 32) / ((k + 2) ** 4 * (k + 4))


def eigen_table(k: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """A_k 的两个特征值，λ¹ ≤ λ²"""
    a_k = a_plus_table(k)
    a_k2 = a_plus_table(np.asarray(k) + 2)
    eps = eps_plus_table(k)
    root = np.sqrt((a_k - a_k2) ** 2 + 4 * eps ** 2)
    return (a_k + a_k2 - root) / 2, (a_k + a_k2 + root) / 2


def eigen_Ak(k: int) -> Tuple[float, float]:
    """
    A_k 的闭式特征值

    Args:
        k: 下标 k ≥ 1

    Returns:
        (λ_k¹, λ_k²)
    """
    _check_index(k)
    lam1, lam2 = eigen_table(np.array([k]))
    return float(lam1[0]), float(lam2[0])


@dataclass(frozen=True)
class QuadFormMatrix:
    """对称 2×2 矩阵 A_k"""
    k: int
    a_k: float
    a_k2: float
    eps_k: float

    @classmethod
    def at(cls, k: int) -> "QuadFormMatrix":
        return cls(int(k), float(a_plus(k)), float(a_plus(k + 2)), float(eps_plus(k)))

    def matrix(self) -> np.ndarray:
        return np.array([[self.a_k, self.eps_k], [self.eps_k, self.a_k2]])

    def eigenvalues(self) -> Tuple[float, float]:
        return eigen_Ak(self.k)

    def form(self, x: float, y: float) -> float:
        """(x, y) A_k (x, y)ᵀ"""
        return self.a_k * x * x + 2 * self.eps_k * x * y + self.a_k2 * y * y

    def is_positive_definite(self) -> bool:
        return self.a_k + self.a_k2 > 0 and self.a_k * self.a_k2 - self.eps_k ** 2 > 0


@dataclass(frozen=True)
class SpectralBounds:
    """λ_inf、λ_sup 及其在 k ≤ k_range 上的取值位置"""
    lambda_inf: float
    lambda_sup: float
    k_range: int
    tail_limit: float
    tail_threshold: int
    argmin_k: int
    argmax_k: int

    @property
    def within_bounds(self) -> bool:
        return float(LOWER_BOUND) < self.lambda_inf <= self.lambda_sup < float(UPPER_BOUND)

    def to_dict(self) -> dict:
        return {
            "lambda_inf": self.lambda_inf,
            "lambda_sup": self.lambda_sup,
            "k_range": self.k_range,
            "tail_limit": self.tail_limit,
            "tail_threshold": self.tail_threshold,
            "argmin_k": self.argmin_k,
            "argmax_k": self.argmax_k,
            "verdict": "pass" if self.within_bounds else "fail",
        }


def lambda_bounds(k_max: int, strict: bool = True) -> SpectralBounds:
    """
    {a_k, λ_k¹, λ_k²} 在 k ≤ k_max 上的下确界与上确界，并计入尾部极限 1/4

    Args:
        k_max: 截断，k_max ≥ 4
        strict: 越出 (1/50, 3/5) 时抛出 BoundViolationError

    Returns:
        SpectralBounds；tail_threshold 之后与 1/4 的偏差单调递减
    """
    if k_max < 4:
        raise ValueError(f"k_max 至少为 4，收到 {k_max}")
    k = np.arange(1, k_max + 1, dtype=float)
    a_k = a_plus_table(k)
    lam1, lam2 = eigen_table(k)
    lows = np.minimum(np.minimum(a_k, lam1), lam2)
    highs = np.maximum(np.maximum(a_k, lam1), lam2)
    lambda_inf = float(min(lows.min(), TAIL_LIMIT))
    lambda_sup = float(max(highs.max(), TAIL_LIMIT))

    deviation = np.maximum(np.abs(lows - TAIL_LIMIT), np.abs(highs - TAIL_LIMIT))
    increases = np.nonzero(np.diff(deviation) > 0)[0]
    tail_threshold = int(increases[-1]) + 2 if increases.size else 1

    bounds = SpectralBounds(lambda_inf, lambda_sup, int(k_max), TAIL_LIMIT, tail_threshold,
                            int(np.argmin(lows)) + 1, int(np.argmax(highs)) + 1)
    logger.info(f"谱界: k_max = {k_max}, λ_inf = {lambda_inf:.12g}, λ_sup = {lambda_sup:.12g}, "
                f"尾部单调起点 k = {tail_threshold}")
    if tail_threshold > k_max // 2:
        logger.warning(f"尾部单调起点 {tail_threshold} 超过 k_max 的一半，k_max 可能不足")
    if strict and not bounds.within_bounds:
        raise BoundViolationError(f"特征值界被违反: λ_inf = {lambda_inf:.6g}, λ_sup = {lambda_sup:.6g}")
    return bounds


def lplus_energy_derivative(c: BasisCoefficients) -> float:
    """⟨L⁺η, η⟩_{ℋ₂} = Σ (d⁺_k - d⁺_{k+2}) c_k²"""
    if c.kappa != 2:
        raise ValueError(f"只对 κ = 2 定义，收到 κ = {c.kappa}")
    k = np.arange(1, c.K + 1, dtype=float)
    diag = d_plus_table(k) - d_plus_table(k + 2)
    return float(np.dot(diag, c.c * c.c))


def energy_quadratic_form(c: np.ndarray) -> float:
    """4(Σ a_k c_k² + Σ ε_k c_k c_{k+2})，即截断线性流上的 d²/dt² ‖c‖²"""
    c = np.asarray(c, dtype=float)
    k = np.arange(1, len(c) + 1, dtype=float)
    cross = np.dot(eps_plus_table(k[:-2]), c[:-2] * c[2:]) if len(c) > 2 else 0.0
    return float(4.0 * (np.dot(a_plus_table(k), c * c) + cross))


@dataclass(frozen=True)
class PartialSums:
    """部分和分解 S_n = 2Q_n + R_{n-1} + R_n"""
    n: int
    s_n: float
    q_n: float
    q_blocks: List[float]
    r_terms: Tuple[float, float]
    mass: float

    def remainder(self) -> float:
        return self.s_n - sum(self.r_terms)

    def within(self, lambda_inf: float, lambda_sup: float, slack: float = 1e-12) -> bool:
        """2λ_inf Σc_k² ≤ S_n - R ≤ 2λ_sup Σc_k²"""
        value = self.remainder()
        scale = slack * max(abs(value), self.mass, 1e-300)
        return 2 * lambda_inf * self.mass - scale <= value <= 2 * lambda_sup * self.mass + scale


def partial_sum_diagnostics(c: np.ndarray, c_dot: np.ndarray, n: Optional[int] = None) -> PartialSums:
    """
    S_n = Σ_{k≤n} d/dt[(d_k - d_{k+2}) c_k²] 及其分解

    Args:
        c: 系数 c_1..c_K
        c_dot: 与三对角方程一致的时间导数
        n: 部分和上限，默认 K

    Returns:
        PartialSums，其中 q_blocks[k-1] 为 (c_k, c_{k+2}) A_k (c_k, c_{k+2})ᵀ
    """
    c = np.asarray(c, dtype=float)
    c_dot = np.asarray(c_dot, dtype=float)
    if c.shape != c_dot.shape:
        raise ValueError("c 与 c_dot 长度不一致")
    K = len(c)
    n = K if n is None else int(n)
    if not 1 <= n <= K:
        raise ValueError(f"部分和上限超出范围: n = {n}, K = {K}")
    padded = np.zeros(n + 2)
    m = min(K, n + 2)
    padded[:m] = c[:m]

    k = np.arange(1, n + 1, dtype=float)
    diag = d_plus_table(k) - d_plus_table(k + 2)
    s_n = float(np.sum(2.0 * diag * c[:n] * c_dot[:n]))

    a_k = a_plus_table(k)
    eps = eps_plus_table(k)
    head, shifted = padded[:n], padded[2:n + 2]
    cross = eps[:n - 2] * head[:n - 2] * shifted[:n - 2] if n > 2 else np.zeros(0)
    q_n = float(np.dot(a_k, head * head) + np.sum(cross))
    q_blocks = list(a_k * head ** 2 + 2 * eps * head * shifted + a_plus_table(k + 2) * shifted ** 2)

    def r_term(j: int) -> float:
        if j < 1:
            return 0.0
        return float(2.0 * diag[j - 1] * d_plus_table(j + 2) * padded[j - 1] * padded[j + 1])

    return PartialSums(n, s_n, q_n, q_blocks, (r_term(n - 1), r_term(n)), float(np.dot(head, head)))


def q_operator_matrix(K: int) -> Tuple[np.ndarray, float]:
    """
    ⟨Q e_{2,j}, e_{2,i}⟩_{ℋ₂}，i, j = 1..K

    Q e_{2,1} = (4/3) sin θ 不在 ℋ₂ 中，矩阵由截断递推得到，返回最大残差供报告

    Returns:
        (K×K 矩阵, 最大展开残差)
    """
    if K < 1:
        raise ValueError(f"截断必须为正: {K}")
    n = K + 2
    G = np.zeros((K, K))
    residual = 0.0
    for j in range(1, K + 1):
        image = op_Q(basis_function(2, j, n), n)
        coeffs, res = to_basis(image, strict=False)
        G[:, j - 1] = coeffs.resized(K).c
        residual = max(residual, res)
    if residual > 0:
        logger.info(f"Q 算子矩阵 K = {K}: 像超出张成空间，最大残差 {residual:.3e}")
    return G, residual


def q_operator_norm(K: int, tol: float = 1e-10, max_iter: int = 100000) -> float:
    """GᵀG 上的幂迭代求最大奇异值"""
    G, _ = q_operator_matrix(K)
    gram = G.T @ G
    v = np.ones(K) / np.sqrt(K)
    sigma2 = 0.0
    for _ in range(max_iter):
        w = gram @ v
        norm_w = float(np.linalg.norm(w))
        if norm_w == 0.0:
            return 0.0
        v = w / norm_w
        if abs(norm_w - sigma2) <= tol * norm_w:
            sigma2 = norm_w
            break
        sigma2 = norm_w
    else:
        logger.warning(f"Q 算子范数幂迭代未在 {max_iter} 步内收敛")
    return float(np.sqrt(sigma2))


def q_decay_rate(q: float, c_q: float) -> float:
    """δ = 1 - 4 C_Q q"""
    return 1.0 - 4.0 * c_q * q


def spectrum_rows(k_max: int) -> List[list]:
    """k, d⁺, d⁻, a_k, ε_k, λ_k¹, λ_k²，前四个数值由有理数精确舍入"""
    rows = []
    lam1, lam2 = eigen_table(np.arange(1, k_max + 1))
    for k in range(1, k_max + 1):
        rows.append([k, float(d_plus(k)), float(d_minus(k)), float(a_plus(k)), float(eps_plus(k)),
                     float(lam1[k - 1]), float(lam2[k - 1])])
    return rows


SPECTRUM_HEADER = ["k", "d_plus", "d_minus", "a_k", "eps_k", "lambda1_k", "lambda2_k"]


async def setup(cli):
    """注册 spectrum 子命令"""
    from cogs.output import write_json, write_table
    from cogs.run_config import OUTPUT_DIR

    def configure(parser):
        parser.add_argument("--kmax", type=int, default=100, help="表格的最大下标，至少为 4")
        parser.add_argument("--out", help="输出目录")

    def handle(args) -> int:
        k_max = args.kmax
        if k_max < 4:
            raise ConfigError(f"k_max 至少为 4，收到 {k_max}")
        out_dir = args.out or os.path.join(OUTPUT_DIR, "spectrum")
        write_table(os.path.join(out_dir, "spectrum.csv"), SPECTRUM_HEADER, spectrum_rows(k_max))
        bounds = lambda_bounds(k_max, strict=False)
        summary = bounds.to_dict()
        write_json(os.path.join(out_dir, "summary.json"), summary)
        print(f"📊 lambda_inf={bounds.lambda_inf!r} lambda_sup={bounds.lambda_sup!r} "
              f"tail_limit={bounds.tail_limit!r} verdict={summary['verdict']}")
        if not bounds.within_bounds:
            raise BoundViolationError(f"特征值界 (1/50, 3/5) 被违反: {summary}")
        print(f"✅ 谱表已写入 {out_dir}")
        return 0

    cli.add_command("spectrum", "输出三对角系数与二次型特征值表", configure, handle)
