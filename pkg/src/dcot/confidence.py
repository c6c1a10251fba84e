"""Per-batch confidence of each (visual, target) pair from the diagonal of an
entropic transport plan over the dual-view mixed cost."""
from dataclasses import dataclass

import numpy as np

from .curriculum import mix_costs, sigma
from .errors import ConfigError, OutOfRange
from .numerics import distance_matrix
from .transport import SinkhornConfig, TransportProblem, sinkhorn_plan

POLICIES = ("raw", "scale_by_M")


@dataclass
class ConfidenceVector:
    raw: np.ndarray
    weights: np.ndarray
    policy: str = "scale_by_M"
    sigma: float = float("nan")
    views_used: tuple = ()
    sinkhorn_iterations: int = 0
    converged: bool = True

    def __len__(self):
        return self.raw.shape[0]


def normalize_confidence(raw, policy="scale_by_M"):
    """``raw`` leaves diag(P) at its 1/M scale; ``scale_by_M`` maps it onto [0, 1]."""
    raw = np.asarray(raw, dtype=np.float64)
    if policy not in POLICIES:
        raise ConfigError(f"unknown confidence policy {policy!r}")
    M = raw.shape[0]
    if np.any(raw < 0) or np.any(raw > 1.0 / M + 1e-9):
        raise OutOfRange(f"raw confidence outside [0, 1/M] for M={M}")
    if policy == "raw":
        return raw.copy()
    return raw * M


def estimate_confidence(batch, t, schedule, sinkhorn=None, dist="cosine",
                        policy="scale_by_M", sigma_override=None):
    """Confidence for every pair in an embedded batch at training progress ``t``.

    Mixes the cross-modal cost dist(V, T) and the cross-lingual cost dist(S, T)
    with sigma(t), solves uniform-marginal entropic OT and reads the plan's
    diagonal. A view whose mixing weight is zero is never evaluated.
    ``dist`` is a kind name or a ``(modal_kind, lingual_kind)`` pair.
    """
    sinkhorn = sinkhorn or SinkhornConfig()
    modal_kind, lingual_kind = (dist, dist) if isinstance(dist, str) else dist
    s = sigma(t, schedule) if sigma_override is None else float(sigma_override)

    used = []
    E_m = E_l = None
    if s > 0.0:
        E_m = distance_matrix(modal_kind, batch.v_emb, batch.t_emb)
        used.append("modal")
    if s < 1.0:
        E_l = distance_matrix(lingual_kind, batch.s_emb, batch.t_emb)
        used.append("lingual")
    if E_l is None:
        E = E_m
    elif E_m is None:
        E = E_l
    else:
        E = mix_costs(E_m, E_l, s)

    plan = sinkhorn_plan(TransportProblem.uniform(E, sinkhorn.reg), sinkhorn)
    raw = np.clip(np.diag(plan.plan).copy(), 0.0, 1.0 / len(batch))
    return ConfidenceVector(raw, normalize_confidence(raw, policy), policy, s,
                            tuple(used), plan.iterations, plan.converged)
