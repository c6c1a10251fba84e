import csv
import json

import numpy as np
import pytest

from dcot.config import RunConfig, parse_config, to_text
from dcot.errors import ConfigError, EmptySweep, NumericalError
from dcot.evalmetrics import METRIC_COLUMNS
from dcot.model import load_checkpoint
from dcot.runner import RunError, dump_schedules, run_experiment, sweep_noise
from dcot.synthdata import generate_dataset, split_indices

SMALL = {
    "dataset.n_items": 160, "dataset.latent_dim": 4, "dataset.view_dims": (8, 6, 6),
    "dataset.noise_ratio": 0.25, "batch_size": 32, "epochs": 3, "eval_every": 2, "out_dim": 5,
}


def small_cfg(tmp_path, **kw):
    return RunConfig().with_overrides(**{**SMALL, "out_dir": str(tmp_path / "run"), **kw})


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_epochs_zero_rejected():
    with pytest.raises(ConfigError):
        RunConfig(epochs=0)
    with pytest.raises(ConfigError):
        RunConfig(batch_size=1)


def test_outputs_written(tmp_path):
    cfg = small_cfg(tmp_path)
    rep = run_experiment(cfg)
    out = tmp_path / "run"
    metrics = read_csv(out / "metrics.csv")
    assert tuple(metrics[0]) == METRIC_COLUMNS
    assert [int(r["epoch"]) for r in metrics] == [2, 3]
    conf = read_csv(out / "confidence.csv")
    train_idx, _ = split_indices(160, 0.2, seed=cfg.dataset.seed)
    assert [int(r["pair_index"]) for r in conf] == list(train_idx)
    assert all(0.0 <= float(r["weight"]) <= 1.0 for r in conf)
    assert len(read_csv(out / "schedule.csv")) == 101
    assert (out / "config.txt").read_text() == to_text(cfg) == rep.config_text
    assert parse_config(rep.config_text) == cfg
    report = json.loads((out / "report.json").read_text())
    assert len(report["epochs"]) == 3 and "loss_st" in report["epochs"][0]
    assert load_checkpoint(out / "checkpoint.bin") == rep.model


def test_identical_config_byte_identical(tmp_path):
    a = small_cfg(tmp_path, out_dir=str(tmp_path / "a"))
    b = small_cfg(tmp_path, out_dir=str(tmp_path / "b"))
    run_experiment(a)
    run_experiment(b)
    for name in ("metrics.csv", "confidence.csv", "schedule.csv", "checkpoint.bin"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_run_seed_changes_model(tmp_path):
    r0 = run_experiment(small_cfg(tmp_path), write=False)
    r1 = run_experiment(small_cfg(tmp_path, run_seed=1), write=False)
    assert r0.model != r1.model


@pytest.mark.parametrize("mode, unused", [("single_view_m", "lingual"), ("single_view_l", "modal")])
def test_single_view_never_touches_other_cost(tmp_path, mode, unused):
    rep = run_experiment(small_cfg(tmp_path, mode=mode), write=False)
    assert rep.cost_evaluations[unused] == 0
    other = ({"modal", "lingual"} - {unused}).pop()
    assert rep.cost_evaluations[other] > 0


def test_dcot_uses_both_views_and_baseline_none(tmp_path):
    dcot = run_experiment(small_cfg(tmp_path, epochs=10), write=False)
    assert dcot.cost_evaluations["modal"] > 0 and dcot.cost_evaluations["lingual"] > 0
    base = run_experiment(small_cfg(tmp_path, mode="baseline_unweighted"), write=False)
    assert base.cost_evaluations == {"modal": 0, "lingual": 0}


def test_eval_split_clean_and_disjoint():
    spec = RunConfig().with_overrides(**SMALL).dataset
    ds = generate_dataset(spec)
    train, test = split_indices(len(ds), 0.2, seed=spec.seed)
    assert not set(train) & set(test)
    assert len(train) + len(test) == len(ds)
    clean = ds.clean_target()
    np.testing.assert_array_equal(clean, generate_dataset(
        RunConfig().with_overrides(**{**SMALL, "dataset.noise_ratio": 0.0}).dataset).t_feat)


def test_numerical_failure_names_position(tmp_path):
    cfg = small_cfg(tmp_path, **{"sinkhorn.reg": 1e6, "sinkhorn.min_kernel": 5e-324})
    with pytest.raises(RunError) as info:
        run_experiment(cfg, write=False)
    assert isinstance(info.value.cause, NumericalError)
    assert "epoch 0, batch 0" in str(info.value)


def test_sweep_row_counts(tmp_path):
    cfg = small_cfg(tmp_path, epochs=1, out_dir=str(tmp_path / "sw"))
    rows = sweep_noise(cfg, [0.0])
    assert [(r["noise_ratio"], r["mode"]) for r in rows] == [(0.0, "dcot"), (0.0, "baseline_unweighted")]
    rows = sweep_noise(cfg, [0, 0.2, 0.4, 0.6], jobs=2)
    assert len(rows) == 8
    assert len(read_csv(tmp_path / "sw" / "sweep.csv")) == 8
    with pytest.raises(EmptySweep):
        sweep_noise(cfg, [])


def test_dump_schedules_examples(tmp_path):
    cfg = RunConfig().with_overrides(**{"curriculum.sigma_fixed": 0.5})
    paths = dump_schedules(cfg, tmp_path, variants=("plain", "reverse"))
    dyn, plain, rev = (read_csv(p) for p in paths)
    assert len(dyn) == 101
    assert all(float(r["sigma"]) == 1.0 for r in dyn if float(r["t"]) > 0.1)
    assert all(float(r["sigma"]) == 0.5 for r in plain)
    for a, b in zip(dyn, rev):
        assert float(a["sigma"]) + float(b["sigma"]) == pytest.approx(1.0, abs=1e-9)
