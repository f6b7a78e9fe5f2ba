import asyncio

from cogs.sweep import bootstrap_threshold, estimate_horizon_constants


def test_bootstrap_threshold(tmp_path):
    result = asyncio.run(bootstrap_threshold([1e-3], [0, 1], K=10, t_end=1.0, dt=0.05, margin=2.0,
                                             decay_rate=0.375, jobs=2, out_dir=str(tmp_path)))
    assert result.threshold == 1e-3
    assert result.table == {1e-3: [True, True]}
    assert (tmp_path / "amp0.001_seed0.csv").exists()
    assert result.to_dict()["table"] == {"0.001": [True, True]}


def test_bootstrap_without_output():
    result = asyncio.run(bootstrap_threshold([2e-3, 1e-3], [3], K=8, t_end=0.5, dt=0.05, margin=2.0,
                                             decay_rate=0.375, jobs=1))
    assert result.threshold == 2e-3


def test_horizon_constants(tmp_path):
    fit = asyncio.run(estimate_horizon_constants([0, 1], amplitude=1e-3, K=10, t_end=0.5, dt=0.05, m=2,
                                                 jobs=2, out_dir=str(tmp_path)))
    assert fit.c1 > 0 and fit.c2 > 0
    assert fit.samples > 0
    assert set(fit.horizons) == {0, 1}
    assert all(t > 0 for t in fit.horizons.values())
    assert (tmp_path / "horizon_seed1.csv").exists()


def test_uses_running_loop(monkeypatch):
    """协程内只从正在运行的事件循环取 executor"""
    def no_implicit_loop():
        raise RuntimeError("不应隐式获取事件循环")

    monkeypatch.setattr(asyncio, "get_event_loop", no_implicit_loop)
    result = asyncio.run(bootstrap_threshold([1e-3], [0], K=8, t_end=0.2, dt=0.05, margin=2.0,
                                             decay_rate=0.375, jobs=1))
    assert result.threshold == 1e-3
    fit = asyncio.run(estimate_horizon_constants([0], amplitude=1e-3, K=8, t_end=0.3, dt=0.05, m=2, jobs=1))
    assert fit.samples > 0
