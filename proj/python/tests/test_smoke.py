import json
import math

import numpy as np
import pytest

import fpacoh


def test_environments_listed():
    names = fpacoh.environment_names()
    assert "random_branin" in names
    env = fpacoh.make_environment("random_branin")
    assert env.dim == 2
    with pytest.raises(fpacoh.ConfigError):
        fpacoh.make_environment("nope")


def test_branin_task_sampling_is_deterministic():
    env = fpacoh.make_environment("random_branin")
    a = env.sample_task(3)
    b = env.sample_task(3)
    x = a.sample_uniform(5, seed=1)
    assert np.array_equal(a.evaluate_batch(x), b.evaluate_batch(x))
    assert a.optimum_value >= a.evaluate_batch(x).max()


def test_kl_against_closed_form():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(3, 3))
    b = rng.normal(size=(3, 3))
    sp = a @ a.T + np.eye(3)
    sq = b @ b.T + np.eye(3)
    mp = rng.normal(size=3)
    mq = rng.normal(size=3)
    sq_inv = np.linalg.inv(sq)
    d = mq - mp
    expect = 0.5 * (
        np.trace(sq_inv @ sp) + d @ sq_inv @ d - 3 + np.linalg.slogdet(sq)[1] - np.linalg.slogdet(sp)[1]
    )
    assert fpacoh.kl_mvn(mp, sp, mq, sq) == pytest.approx(expect, rel=1e-10)
    assert fpacoh.kl_mvn(mp, sp, mp, sp) == pytest.approx(0.0, abs=1e-10)


def test_kl_coefficient():
    assert fpacoh.kl_coefficient(1.0, 4, 10) == pytest.approx(0.525)


def test_calibration_point_mass():
    r = fpacoh.calibration_error(np.zeros(40), np.ones(40), np.zeros(40))
    levels = np.arange(1, 21) / 21
    freq = (levels >= 0.5).astype(float)
    assert r["error"] == pytest.approx(math.sqrt(np.mean((freq - levels) ** 2)))


def test_meta_train_and_bo_loop():
    env = fpacoh.make_environment("mixture_1d")
    data = fpacoh.collect_meta_data(env, 4, 6, seed=0)
    assert len(data) == 4 and data[0][0].shape == (6, 1)
    config = fpacoh.MetaTrainConfig()
    config.iterations = 50
    model = fpacoh.make_surrogate("fpacoh", data, env, config, seed=1)
    task = env.sample_task(9, split="meta_test")
    trace = fpacoh.bo_run(task, model, 5, seed=2)
    regret = trace["simple_regret"]
    assert len(regret) == 5
    assert all(b <= a for a, b in zip(regret, regret[1:]))
    mean, var = model.predict(np.linspace(-10, 10, 7).reshape(-1, 1))
    assert mean.shape == (7,) and np.all(var >= 0)


def test_run_experiment_and_aggregate(tmp_path):
    config = fpacoh.default_config()
    config.update({"name": "py", "env": "mixture_1d", "learner": "vanilla", "T": 4, "test_tasks": 2,
                   "seeds": [0, 1], "output_dir": str(tmp_path)})
    manifest = fpacoh.run_experiment(config)
    assert manifest["ok"]
    assert fpacoh.aggregate([str(tmp_path / "py")], str(tmp_path / "summary")) == 2
    summary = json.loads((tmp_path / "summary" / "summary.json").read_text())
    assert summary["seed_directories"] == 2
