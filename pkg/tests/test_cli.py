import csv
import json
import math
import os

import pytest

from lab import main

GOLDEN = os.path.join(os.path.dirname(__file__), "golden", "spectrum_k64.csv")


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    return rows[0], [[float(x) for x in row] for row in rows[1:]]


def test_no_command():
    assert main([]) == 2


def test_spectrum_rejects_small_range(tmp_path):
    assert main(["spectrum", "--kmax", "2", "--out", str(tmp_path)]) == 2


def test_spectrum_matches_golden(tmp_path):
    assert main(["spectrum", "--kmax", "64", "--out", str(tmp_path)]) == 0
    header, rows = _read_csv(tmp_path / "spectrum.csv")
    golden_header, golden_rows = _read_csv(GOLDEN)
    assert header == golden_header
    assert len(rows) == len(golden_rows) == 64
    for row, expected in zip(rows, golden_rows):
        for got, want in zip(row, expected):
            assert math.isclose(got, want, rel_tol=1e-12, abs_tol=1e-15)
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["verdict"] == "pass"


def test_simulate_rejects_unknown_config_key(tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"nmax": 32}), encoding="utf-8")
    assert main(["simulate", "--config", str(config), "--out", str(tmp_path)]) == 2


def test_simulate_rejects_unknown_preset(tmp_path):
    assert main(["simulate", "--preset", "nope", "--nmax", "8", "--out", str(tmp_path)]) == 2


def test_simulate_excited_steady(tmp_path):
    code = main(["simulate", "--preset", "excited-steady", "--nmax", "8", "--tend", "0.05",
                 "--dt", "0.01", "--out", str(tmp_path)])
    assert code == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["n_max"] == 8
    assert (tmp_path / "trace.csv").read_text().startswith("time,")


def test_envelope_rejects_inadmissible_data(tmp_path):
    assert main(["envelope", "--lp0", "-5", "--out", str(tmp_path)]) == 2


def test_envelope_writes_table(tmp_path):
    assert main(["envelope", "--tend", "1", "--out", str(tmp_path)]) == 0
    header, rows = _read_csv(tmp_path / "envelope.csv")
    assert header == ["time", "envelope_e1", "envelope_e2"]
    assert all(lo <= hi * (1 + 1e-12) for _, lo, hi in rows)


def test_verify_operators(tmp_path):
    assert main(["verify", "operators", "--nmax", "12", "--out", str(tmp_path)]) == 0
    verdict = json.loads((tmp_path / "verdict.json").read_text())
    assert verdict["verdict"] is True
    assert verdict["suites"]["operators"]["passed"] is True


@pytest.mark.parametrize("argv", [["linearize", "--kappa", "3"], ["sweep", "--dt", "0"]])
def test_invalid_settings_exit_with_config_code(tmp_path, argv):
    assert main(argv + ["--out", str(tmp_path)]) == 2


def test_simulate_is_deterministic_for_seed(tmp_path):
    """同一种子两次运行的轨迹逐字节相同（清单含创建时间，不比较）"""
    outputs = []
    for name in ("first", "second"):
        out = tmp_path / name
        code = main(["simulate", "--preset", "excited-perturbed", "--seed", "7", "--nmax", "16",
                     "--tend", "0.1", "--dt", "0.01", "--out", str(out)])
        assert code == 0
        outputs.append((out / "trace.csv").read_bytes())
    assert outputs[0] == outputs[1]


def test_broken_cog_does_not_stop_loading(monkeypatch, capsys):
    """单个 cog 导入失败时打印错误并继续加载其余 cog"""
    import importlib

    import lab

    real_import = importlib.import_module

    def flaky_import(name, *args, **kwargs):
        if name == "cogs.sweep":
            raise ImportError("模拟的导入失败")
        return real_import(name, *args, **kwargs)

    monkeypatch.setattr(lab.importlib, "import_module", flaky_import)
    cli = lab.build_cli()
    output = capsys.readouterr().out
    assert "❌ 加载 cog sweep.py 时发生错误" in output
    assert "✅ 已成功加载 cog: experiments.py" in output
    assert "sweep" not in cli.handlers
    assert "verify" in cli.handlers
