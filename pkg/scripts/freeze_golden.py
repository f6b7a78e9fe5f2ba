"""
金标准谱表生成脚本
重新生成 tests/golden/spectrum_k64.csv，系数修改后需要人工核对再提交
"""

import os
import sys
from pathlib import Path

# 添加项目根目录到系统路径
sys.path.insert(0, str(Path(__file__).parent.parent))

from dotenv import load_dotenv
from cogs.output import write_table
from cogs.spectral_analysis import SPECTRUM_HEADER, lambda_bounds, spectrum_rows

# 加载环境变量
load_dotenv()

GOLDEN_K_MAX = int(os.getenv("GOLDEN_K_MAX", 64))


def freeze_golden() -> bool:
    """写出金标准表并检查特征值界"""
    print("🚀 开始生成金标准谱表...")
    print("=" * 50)
    path = Path(__file__).parent.parent / "tests" / "golden" / f"spectrum_k{GOLDEN_K_MAX}.csv"
    try:
        write_table(str(path), SPECTRUM_HEADER, spectrum_rows(GOLDEN_K_MAX))
    except OSError as e:
        print(f"❌ 写入失败: {e}")
        return False
    bounds = lambda_bounds(GOLDEN_K_MAX, strict=False)
    print(f"📊 λ_inf = {bounds.lambda_inf!r}, λ_sup = {bounds.lambda_sup!r}")
    if not bounds.within_bounds:
        print("⚠️ 警告：特征值界 (1/50, 3/5) 被违反，请勿提交该表")
        return False
    print(f"✅ 金标准表已写入 {path}")
    return True


if __name__ == "__main__":
    sys.exit(0 if freeze_golden() else 1)
