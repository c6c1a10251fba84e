"""Experiment orchestration: the confidence-weighted training loop, sweeps and output files."""
import csv
import hashlib
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from ._backend import BACKEND
from .confidence import estimate_confidence
from .config import RunConfig, to_text
from .curriculum import CurriculumSchedule, schedule_table
from .errors import DCOTError, EmptySweep, SingleClass
from .evalmetrics import METRIC_COLUMNS, retrieval_metrics, separation_auc
from .model import apply_gradients, encode, init_bundle, save_checkpoint
from .objective import embed_batch, total_loss
from .synthdata import batches, generate_dataset, split_indices

log = logging.getLogger(__name__)

EVAL_SIMILARITY = "plain cosine similarity in the common space"
SCHEDULE_COLUMNS = ("t", "sigma", "G")
CONFIDENCE_COLUMNS = ("pair_index", "raw", "weight", "is_noisy")
SWEEP_MODES = ("dcot", "baseline_unweighted")


class RunError(DCOTError):
    """A module error raised inside the training loop, tagged with its position."""

    def __init__(self, epoch, batch, cause):
        super().__init__(f"epoch {epoch}, batch {batch}: {type(cause).__name__}: {cause}")
        self.epoch, self.batch, self.cause = epoch, batch, cause


@dataclass
class RunReport:
    config_text: str
    run_id: str
    epochs: list = field(default_factory=list)
    evals: list = field(default_factory=list)
    confidence: dict = field(default_factory=dict)
    cost_evaluations: dict = field(default_factory=dict)
    wall_clock: float = 0.0
    model: object = field(default=None, repr=False)
    final_weights: object = field(default=None, repr=False)

    @property
    def final_sum_r(self):
        return self.evals[-1]["sumr"]

    def to_json(self):
        return {
            "run_id": self.run_id,
            "package_version": __version__,
            "kernel_backend": BACKEND,
            "config": self.config_text,
            "eval_similarity": EVAL_SIMILARITY,
            "epochs": self.epochs,
            "evals": self.evals,
            "confidence": self.confidence,
            "cost_evaluations": self.cost_evaluations,
            "wall_clock_seconds": self.wall_clock,
        }


def run_id_for(cfg):
    """Short hash of the configuration, ignoring where the outputs are written."""
    return hashlib.sha1(to_text(replace(cfg, out_dir="")).encode()).hexdigest()[:12]


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".10g")
    return str(x)


def write_csv(path, columns, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])


def _estimate(cfg, batch, t, counters):
    sigma_override = {"single_view_m": 1.0, "single_view_l": 0.0}.get(cfg.mode)
    conf = estimate_confidence(batch, t, cfg.curriculum, cfg.sinkhorn, cfg.distance,
                               cfg.confidence_policy, sigma_override)
    for view in conf.views_used:
        counters[view] += 1
    return conf


def confidence_over(cfg, model, ds, indices, t=1.0, counters=None):
    """Confidence for every item of ``indices`` with a frozen model.

    Items are chunked in the given order into near-equal batches of at most
    ``batch_size``. Baseline runs use the configured dual-view estimate here,
    as a diagnostic only.
    """
    counters = counters if counters is not None else {"modal": 0, "lingual": 0}
    est_cfg = replace(cfg, mode="dcot") if cfg.mode == "baseline_unweighted" else cfg
    n_chunks = -(-len(indices) // cfg.batch_size)
    raw, weight = [], []
    for chunk in np.array_split(np.asarray(indices), n_chunks):
        batch, _ = embed_batch(model, ds.v_feat[chunk], ds.s_feat[chunk], ds.t_feat[chunk], chunk)
        conf = _estimate(est_cfg, batch, t, counters)
        raw.append(conf.raw)
        weight.append(conf.weights)
    return np.concatenate(raw), np.concatenate(weight)


def _safe_auc(w, mask):
    try:
        return separation_auc(w, mask)
    except SingleClass:
        return float("nan")


def evaluate(model, ds, test_idx):
    """Retrieval on the held-out items with their uncorrupted target rows."""
    t_clean = ds.clean_target()[test_idx]
    return retrieval_metrics(encode(model.text, t_clean), encode(model.visual, ds.v_feat[test_idx]))


def run_experiment(cfg, dataset=None, write=True):
    """Train the encoders under ``cfg.mode`` and return a RunReport.

    Every mini-batch: embed, estimate pair confidence (mode-dependent), take one
    gradient step on the combined objective. Progress ``t`` is
    ``global_step / total_steps``.
    """
    if not isinstance(cfg, RunConfig):
        raise TypeError("cfg must be a RunConfig")
    start = time.perf_counter()
    ds = dataset if dataset is not None else generate_dataset(cfg.dataset)
    train_idx, test_idx = split_indices(len(ds), cfg.test_fraction, seed=cfg.dataset.seed)
    model = init_bundle(cfg.dataset.view_dims, cfg.out_dim, cfg.encoder_kind,
                        seed=cfg.run_seed, share_text=cfg.share_text)
    report = RunReport(to_text(cfg), run_id_for(cfg))
    counters = {"modal": 0, "lingual": 0}
    steps_per_epoch = len(batches(train_idx, cfg.batch_size, cfg.run_seed, 0))
    total_steps = cfg.epochs * steps_per_epoch
    step = 0
    for epoch in range(cfg.epochs):
        sums = {"total": 0.0, "vt": 0.0, "st": 0.0, "vs": 0.0, "st_raw": 0.0}
        seen_idx, seen_w = [], []
        for b, idx in enumerate(batches(train_idx, cfg.batch_size, cfg.run_seed, epoch)):
            t = step / total_steps
            try:
                fwd = embed_batch(model, ds.v_feat[idx], ds.s_feat[idx], ds.t_feat[idx], idx)
                if cfg.mode == "baseline_unweighted":
                    w = np.ones(len(idx))
                else:
                    w = _estimate(cfg, fwd[0], t, counters).weights
                rep, grads = total_loss(model, None, None, None, w, t, cfg.lingual,
                                        cfg.loss, forward=fwd)
                if not np.isfinite(rep.total):
                    raise FloatingPointError("non-finite loss")
                model = replace(model, **{name: apply_gradients(getattr(model, name), g, cfg.lr)
                                          for name, g in grads.items()})
            except (DCOTError, FloatingPointError) as exc:
                raise RunError(epoch, b, exc) from exc
            sums["total"] += rep.total
            sums["vt"] += rep.vt_weighted
            sums["st"] += rep.st_weighted
            sums["vs"] += rep.vs
            sums["st_raw"] += rep.st_weighted / rep.lingual_weight if rep.lingual_weight else 0.0
            seen_idx.append(idx)
            seen_w.append(w)
            step += 1
        n_items = sum(len(i) for i in seen_idx)
        seen_idx = np.concatenate(seen_idx)
        seen_w = np.concatenate(seen_w)
        summary = {"epoch": epoch + 1, "t_end": step / total_steps}
        summary.update({f"loss_{k}": v / n_items for k, v in sums.items()})
        report.epochs.append(summary)
        if (epoch + 1) % cfg.eval_every == 0 or epoch + 1 == cfg.epochs:
            m = evaluate(model, ds, test_idx)
            row = {"run_id": report.run_id, "noise_ratio": cfg.dataset.noise_ratio,
                   "epoch": epoch + 1, **m.as_row(),
                   "auc": _safe_auc(seen_w, ds.noisy_mask[seen_idx])}
            report.evals.append(row)
            log.info("epoch %d sumR %.2f auc %.3f", epoch + 1, row["sumr"], row["auc"])

    raw, weight = confidence_over(cfg, model, ds, train_idx, t=1.0)
    mask = ds.noisy_mask[train_idx]
    report.final_weights = (train_idx, raw, weight, mask)
    report.confidence = {
        "auc": _safe_auc(weight, mask),
        "mean_clean": float(weight[~mask].mean()) if np.any(~mask) else float("nan"),
        "mean_noisy": float(weight[mask].mean()) if np.any(mask) else float("nan"),
    }
    report.cost_evaluations = counters
    report.model = model
    report.wall_clock = time.perf_counter() - start
    if write:
        write_outputs(cfg, report)
    return report


def confidence_rows(train_idx, raw, weight, mask):
    order = np.argsort(train_idx, kind="stable")
    return [{"pair_index": int(train_idx[i]), "raw": raw[i], "weight": weight[i],
             "is_noisy": int(mask[i])} for i in order]


def write_outputs(cfg, report, out_dir=None):
    out = out_dir or cfg.out_dir
    os.makedirs(out, exist_ok=True)
    write_csv(os.path.join(out, "metrics.csv"), METRIC_COLUMNS, report.evals)
    write_csv(os.path.join(out, "schedule.csv"), SCHEDULE_COLUMNS, schedule_rows(cfg))
    write_csv(os.path.join(out, "confidence.csv"), CONFIDENCE_COLUMNS,
              confidence_rows(*report.final_weights))
    with open(os.path.join(out, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(report.to_json(), fh, indent=2, sort_keys=True)
    with open(os.path.join(out, "config.txt"), "w", encoding="utf-8") as fh:
        fh.write(report.config_text)
    save_checkpoint(report.model, os.path.join(out, "checkpoint.bin"))


def schedule_rows(cfg, variant=None, sigma_fixed=None):
    sched = cfg.curriculum
    if variant is not None:
        sched = replace(sched, variant=variant)
    if sigma_fixed is not None:
        sched = replace(sched, sigma_fixed=sigma_fixed)
    return [{"t": t, "sigma": s, "G": g} for t, s, g in schedule_table(sched, cfg.lingual)]


def dump_schedules(cfg, out_dir=None, variants=None):
    """Write ``schedule.csv`` for the configured schedule, plus one file per extra variant."""
    out = out_dir or cfg.out_dir
    os.makedirs(out, exist_ok=True)
    paths = [os.path.join(out, "schedule.csv")]
    write_csv(paths[0], SCHEDULE_COLUMNS, schedule_rows(cfg))
    for variant in variants or ():
        path = os.path.join(out, f"schedule_{variant}.csv")
        write_csv(path, SCHEDULE_COLUMNS, schedule_rows(cfg, variant))
        paths.append(path)
    return paths


SWEEP_COLUMNS = ("noise_ratio", "mode") + METRIC_COLUMNS[3:]


def _sweep_one(cfg):
    rep = run_experiment(cfg)
    return {"noise_ratio": cfg.dataset.noise_ratio, "mode": cfg.mode,
            **{k: rep.evals[-1][k] for k in METRIC_COLUMNS[3:-1]},
            "auc": rep.confidence["auc"]}


def sweep_noise(cfg, ratios, modes=SWEEP_MODES, jobs=1, out_dir=None):
    """One run per (ratio, mode); returns the rows and writes ``sweep.csv``."""
    ratios = list(ratios)
    if not ratios:
        raise EmptySweep("no noise ratios given")
    out = out_dir or cfg.out_dir
    cfgs = []
    for ratio in ratios:
        for mode in modes:
            sub = os.path.join(out, f"noise{ratio:g}_{mode}")
            cfgs.append(cfg.with_overrides(**{"dataset.noise_ratio": float(ratio),
                                              "mode": mode, "out_dir": sub}))
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            rows = list(pool.map(_sweep_one, cfgs))
    else:
        rows = [_sweep_one(c) for c in cfgs]
    os.makedirs(out, exist_ok=True)
    write_csv(os.path.join(out, "sweep.csv"), SWEEP_COLUMNS, rows)
    return rows
