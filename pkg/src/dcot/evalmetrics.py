"""Retrieval metrics (R@K, sumR, median rank) and confidence diagnostics."""
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import IndexOutOfRange, OutOfRange, SingleClass

KS = (1, 5, 10)
METRIC_COLUMNS = ("run_id", "noise_ratio", "epoch", "r1_t2v", "r5_t2v", "r10_t2v",
                  "r1_v2t", "r5_v2t", "r10_v2t", "sumr", "medr", "auc")


@dataclass
class RetrievalMetrics:
    t2v: dict
    v2t: dict
    med_r: float

    @property
    def sum_r(self):
        return sum_recall(self)

    def as_row(self):
        return {
            "r1_t2v": self.t2v[1], "r5_t2v": self.t2v[5], "r10_t2v": self.t2v[10],
            "r1_v2t": self.v2t[1], "r5_v2t": self.v2t[5], "r10_v2t": self.v2t[10],
            "sumr": self.sum_r, "medr": self.med_r,
        }


def ranks(sim, ground_truth):
    """1-based rank of each query's true item; ties go to the smaller gallery index."""
    sim = np.asarray(sim, dtype=np.float64)
    gt = np.asarray(ground_truth, dtype=np.int64)
    Q, G = sim.shape
    if gt.shape != (Q,):
        raise IndexOutOfRange("ground truth length does not match the query count")
    if np.any(gt < 0) or np.any(gt >= G):
        raise IndexOutOfRange(f"ground truth index outside [0, {G})")
    true = sim[np.arange(Q), gt][:, None]
    cols = np.arange(G)[None, :]
    ahead = (sim > true) | ((sim == true) & (cols < gt[:, None]))
    return ahead.sum(axis=1) + 1


def recall_at_k(sim, ground_truth, ks=KS):
    """Percentage of queries whose true item ranks within K, for each K."""
    r = ranks(sim, ground_truth)
    return {k: 100.0 * float(np.mean(r <= k)) for k in ks}


def retrieval_metrics(text_emb, visual_emb):
    """Both retrieval directions over aligned test rows, scored by cosine similarity.

    The median rank reported is the text-to-visual one.
    """
    t = text_emb / np.linalg.norm(text_emb, axis=1, keepdims=True)
    v = visual_emb / np.linalg.norm(visual_emb, axis=1, keepdims=True)
    sim = t @ v.T
    gt = np.arange(sim.shape[0])
    r_t2v = ranks(sim, gt)
    return RetrievalMetrics(
        t2v={k: 100.0 * float(np.mean(r_t2v <= k)) for k in KS},
        v2t=recall_at_k(sim.T, gt),
        med_r=float(np.median(r_t2v)),
    )


def sum_recall(metrics):
    return float(sum(metrics.t2v.values()) + sum(metrics.v2t.values()))


def confidence_histogram(w, bins=10):
    """Counts over equal-width bins on [0, 1]; 1.0 falls in the last bin."""
    w = np.asarray(getattr(w, "weights", w), dtype=np.float64)
    if bins < 1:
        raise OutOfRange("bins must be >= 1")
    if np.any(w < 0) or np.any(w > 1):
        raise OutOfRange("confidence weights must lie in [0, 1]")
    idx = np.minimum((w * bins).astype(np.int64), bins - 1)
    return np.bincount(idx, minlength=bins)


def separation_auc(w, noisy_mask):
    """ROC-AUC of the weights as a clean-vs-noisy score (clean is positive; ties count 0.5)."""
    w = np.asarray(getattr(w, "weights", w), dtype=np.float64)
    noisy = np.asarray(noisy_mask, dtype=bool)
    if w.shape != noisy.shape:
        raise IndexOutOfRange("weights and mask differ in length")
    pos, neg = w[~noisy], w[noisy]
    if pos.size == 0 or neg.size == 0:
        raise SingleClass("separation AUC needs both clean and noisy items")
    # Mann-Whitney U on midranks
    r = rankdata(np.concatenate([pos, neg]))
    u = r[:pos.size].sum() - pos.size * (pos.size + 1) / 2.0
    return float(u / (pos.size * neg.size))
