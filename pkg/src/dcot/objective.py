"""Hardest-negative triplet ranking losses and the confidence-weighted training objective.

Gradients are analytic. The hardest-negative selection is treated as fixed and
a hinge exactly at zero is inactive (subgradient 0).
"""
from dataclasses import dataclass, field

import numpy as np

from .curriculum import lingual_weight
from .errors import BatchTooSmall, ConfigError, DimMismatch
from .model import TripletEmbeddingBatch, encode_with_cache, encoder_backward
from .numerics import as_matrix, row_norms, _check_nonzero


@dataclass(frozen=True)
class LossConfig:
    margin: float = 0.2
    lam: float = 0.5
    similarity: str = "cosine"

    def __post_init__(self):
        if not self.margin > 0:
            raise ConfigError(f"margin must be positive, got {self.margin}")
        if not self.lam >= 0:
            raise ConfigError(f"lambda must be non-negative, got {self.lam}")
        if self.similarity != "cosine":
            raise ConfigError("only cosine similarity is supported")


@dataclass
class TripletResult:
    per_pair: np.ndarray
    total: float
    grad_a: np.ndarray
    grad_b: np.ndarray
    neg_for_a: np.ndarray  # hardest B index for each A_i
    neg_for_b: np.ndarray  # hardest A index for each B_i


@dataclass
class LossReport:
    total: float
    vt_weighted: float
    st_weighted: float
    vs: float
    per_pair_vt: np.ndarray
    lingual_weight: float
    hardest_negative_indices: dict = field(default_factory=dict)


def _normalize(X):
    n = row_norms(X)
    _check_nonzero(n)
    return X / n[:, None], n


def triplet_loss(A, B, margin, weights=None):
    """Bidirectional hardest-negative hinge loss between aligned rows of A and B.

    Pair i costs ``max(0, r + s(A_i, B_j) - s(A_i, B_i)) + max(0, r + s(B_i, A_k) - s(B_i, A_i))``
    with j, k the most similar non-matching rows (smallest index on ties).
    ``weights`` scales each pair's contribution to the total and the gradients.
    """
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    if A.shape != B.shape:
        raise DimMismatch(f"triplet inputs differ in shape: {A.shape} vs {B.shape}")
    M = A.shape[0]
    if M < 2:
        raise BatchTooSmall(f"need at least 2 pairs for a hardest negative, got {M}")
    w = np.ones(M) if weights is None else np.asarray(weights, dtype=np.float64)
    if w.shape != (M,):
        raise DimMismatch("weights length does not match the batch")

    An, na = _normalize(A)
    Bn, nb = _normalize(B)
    S = An @ Bn.T
    pos = np.diag(S).copy()
    masked = S.copy()
    np.fill_diagonal(masked, -np.inf)
    j = np.argmax(masked, axis=1)
    k = np.argmax(masked, axis=0)
    rows = np.arange(M)
    h1 = margin + S[rows, j] - pos
    h2 = margin + S[k, rows] - pos
    per_pair = np.maximum(h1, 0.0) + np.maximum(h2, 0.0)

    a1 = w * (h1 > 0)
    a2 = w * (h2 > 0)
    dS = np.zeros((M, M))
    np.add.at(dS, (rows, j), a1)
    np.add.at(dS, (k, rows), a2)
    dS[rows, rows] -= a1 + a2
    dAn = dS @ Bn
    dBn = dS.T @ An
    dA = (dAn - An * np.einsum("ij,ij->i", An, dAn)[:, None]) / na[:, None]
    dB = (dBn - Bn * np.einsum("ij,ij->i", Bn, dBn)[:, None]) / nb[:, None]
    return TripletResult(per_pair, float(np.dot(w, per_pair)), dA, dB, j, k)


def pairwise_losses(batch, margin):
    """Triplet losses for the (V,S), (V,T) and (S,T) pairings of an embedded batch."""
    return {
        "vs": triplet_loss(batch.v_emb, batch.s_emb, margin),
        "vt": triplet_loss(batch.v_emb, batch.t_emb, margin),
        "st": triplet_loss(batch.s_emb, batch.t_emb, margin),
    }


def weighted_vt_loss(per_pair_vt, w):
    per_pair_vt = np.asarray(per_pair_vt, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if per_pair_vt.shape != w.shape:
        raise DimMismatch("confidence and loss vectors differ in length")
    if not (np.all(np.isfinite(w)) and np.all(w >= 0)):
        raise ConfigError("confidence weights must be finite and non-negative")
    return float(np.dot(w, per_pair_vt))


def embed_batch(model, v_feat, s_feat, t_feat, indices=None):
    """Forward all three views; returns the batch and the caches for backprop."""
    v, cv = encode_with_cache(model.visual, v_feat)
    s, cs = encode_with_cache(model.source_encoder, s_feat)
    t, ct = encode_with_cache(model.text, t_feat)
    return TripletEmbeddingBatch(v, s, t, indices), (cv, cs, ct)


def total_loss(model, v_feat, s_feat, t_feat, w, t, lingual, cfg, g=None, forward=None):
    """Weighted V-T loss + G(t) * S-T loss + lambda * V-S loss, with parameter gradients.

    ``w`` is held constant (no gradient). ``g`` overrides G(t) when given.
    ``forward`` reuses the output of ``embed_batch`` for the same inputs.
    Returns ``(LossReport, grads)`` where ``grads`` maps encoder name to ``(dW, db)``.
    """
    if forward is None:
        forward = embed_batch(model, v_feat, s_feat, t_feat)
    batch, (cv, cs, ct) = forward
    M = len(batch)
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (M,):
        raise DimMismatch("confidence length does not match the batch")
    G = lingual_weight(t, lingual) if g is None else float(g)

    vt = triplet_loss(batch.v_emb, batch.t_emb, cfg.margin, weights=w)
    st = triplet_loss(batch.s_emb, batch.t_emb, cfg.margin)
    vs = triplet_loss(batch.v_emb, batch.s_emb, cfg.margin)

    vt_w = weighted_vt_loss(vt.per_pair, w)
    total = vt_w + G * st.total + cfg.lam * vs.total

    dv = vt.grad_a + cfg.lam * vs.grad_a
    ds = G * st.grad_a + cfg.lam * vs.grad_b
    dt = vt.grad_b + G * st.grad_b

    grads = {"visual": encoder_backward(model.visual, cv, dv)}
    gt = encoder_backward(model.text, ct, dt)
    gs = encoder_backward(model.source_encoder, cs, ds)
    if model.share_text:
        grads["text"] = (gt[0] + gs[0], gt[1] + gs[1])
    else:
        grads["text"] = gt
        grads["source"] = gs

    report = LossReport(
        total=float(total),
        vt_weighted=vt_w,
        st_weighted=float(G * st.total),
        vs=vs.total,
        per_pair_vt=vt.per_pair,
        lingual_weight=G,
        hardest_negative_indices={
            "vt": (vt.neg_for_a, vt.neg_for_b),
            "st": (st.neg_for_a, st.neg_for_b),
            "vs": (vs.neg_for_a, vs.neg_for_b),
        },
    )
    return report, grads
