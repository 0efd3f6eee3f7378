from dataclasses import replace

import pytest

from ancer.errors import ConfigError, StageError
from ancer.experiment import (ExperimentConfig, load_experiment_config, parse_experiment_config,
                              run_experiment)

SMALL = dict(train_count=200, test_count=6, epochs=30, iterations=5, samples_per_iter=20,
             eval_samples=50, n0=20, n=500, radii="0,0.5,1", hist_bins=4)

EXPECTED = {"fixed.csv", "fixed.thetas.csv", "isotropic.csv", "isotropic.thetas.csv", "ancer.csv",
            "ancer.thetas.csv", "curves.csv", "superset.csv", "factors.csv", "factor_hist.csv",
            "witnesses.csv", "summary.txt", "config.txt", "model.txt", "test.csv"}


def small(tmp_path, name="run", **kw):
    return ExperimentConfig(out_dir=str(tmp_path / name), **{**SMALL, **kw})


def test_small_run_writes_everything(tmp_path):
    res = run_experiment(small(tmp_path))
    names = {p.name for p in res.out_dir.iterdir()}
    assert EXPECTED <= names
    assert set(res.reports) == {"fixed", "isotropic", "ancer"}
    assert all(len(r) == 6 for r in res.reports.values())
    assert res.summary["rows"] == "6"
    for name in ("fixed", "isotropic", "ancer"):
        assert f"{name}.acr" in res.summary
    # the saved config reloads to the same experiment
    back = load_experiment_config(res.out_dir / "config.txt")
    assert back.fingerprint() == small(tmp_path).fingerprint()


def test_rerun_is_byte_identical(tmp_path):
    a = run_experiment(small(tmp_path, "a"))
    b = run_experiment(small(tmp_path, "b"))
    for p in a.out_dir.iterdir():
        if p.name != "config.txt":
            assert p.read_bytes() == (b.out_dir / p.name).read_bytes(), p.name


def test_saved_model_reproduces_reports(tmp_path):
    a = run_experiment(small(tmp_path, "a"))
    b = run_experiment(small(tmp_path, "b", model_path=str(a.out_dir / "model.txt"), train=False))
    for name in ("fixed.csv", "isotropic.csv", "ancer.csv", "ancer.thetas.csv"):
        assert (a.out_dir / name).read_bytes() == (b.out_dir / name).read_bytes(), name


def test_missing_model_without_training(tmp_path):
    with pytest.raises(ConfigError):
        run_experiment(small(tmp_path, train=False, model_path=str(tmp_path / "none.txt")))


def test_stage_tagged_failure(tmp_path):
    with pytest.raises(StageError) as info:
        run_experiment(small(tmp_path, test_path=str(tmp_path / "missing.csv")))
    assert info.value.stage == "data"
    (tmp_path / "three.csv").write_text("0.1,0.2,0.3,0\n")
    with pytest.raises(StageError) as info:
        run_experiment(small(tmp_path, test_path=str(tmp_path / "three.csv")))
    assert info.value.stage == "model"


def test_config_validation_and_fingerprint(tmp_path):
    cfg = parse_experiment_config("test_count = 10\nkappa = 0.5\nlearning_rate = 0.02\n")
    assert cfg.test_count == 10 and cfg.optimizer().kappa == 0.5
    assert cfg.fingerprint() == replace(cfg, out_dir="x", workers=3).fingerprint()
    assert cfg.fingerprint() != replace(cfg, cert_seed=1).fingerprint()
    for text in ("kind = laplace\n", "radii = 1,0.5\n", "arch = 2,x\n", "n = 0\n", "bogus = 1\n"):
        with pytest.raises(ConfigError):
            parse_experiment_config(text)
