"""Entropic optimal transport with Sinkhorn scaling, plus a brute-force exact oracle."""
import itertools
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .errors import ConfigError, DimMismatch, NonFiniteIterate, TooLarge

MARGINAL_ATOL = 1e-12
ORACLE_MAX_SIZE = 8


@dataclass(frozen=True)
class SinkhornConfig:
    reg: float = 20.0
    max_iter: int = 100
    tol: float = 1e-8
    min_kernel: float = 1e-300

    def __post_init__(self):
        if not self.reg > 0:
            raise ConfigError(f"reg must be positive, got {self.reg}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be >= 1, got {self.max_iter}")
        if not self.tol > 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if not self.min_kernel > 0:
            raise ConfigError("min_kernel must be positive")


@dataclass
class TransportProblem:
    cost: np.ndarray
    a: np.ndarray = None
    b: np.ndarray = None
    reg: float = 20.0

    def __post_init__(self):
        self.cost = np.ascontiguousarray(self.cost, dtype=np.float64)
        if self.cost.ndim != 2:
            raise DimMismatch("cost must be a matrix")
        n, m = self.cost.shape
        self.a = np.full(n, 1.0 / n) if self.a is None else np.asarray(self.a, dtype=np.float64)
        self.b = np.full(m, 1.0 / m) if self.b is None else np.asarray(self.b, dtype=np.float64)
        if self.a.shape != (n,) or self.b.shape != (m,):
            raise DimMismatch("marginal lengths do not match the cost shape")
        for name, p in (("a", self.a), ("b", self.b)):
            if np.any(p < 0) or abs(p.sum() - 1.0) > MARGINAL_ATOL:
                raise ConfigError(f"marginal {name} is not a probability vector")
        if not np.all(np.isfinite(self.cost)):
            raise ConfigError("cost has non-finite entries")

    @classmethod
    def uniform(cls, cost, reg=20.0):
        return cls(cost, reg=reg)


@dataclass
class TransportPlan:
    plan: np.ndarray
    u: np.ndarray = field(repr=False, default=None)
    v: np.ndarray = field(repr=False, default=None)
    iterations: int = 0
    converged: bool = True
    objective: float = float("nan")


def gibbs_kernel(cost, reg, min_kernel=1e-300):
    """``exp(-reg * cost)`` floored at ``min_kernel`` so no row or column vanishes."""
    K = np.exp(-reg * np.asarray(cost, dtype=np.float64))
    return np.maximum(K, min_kernel)


def sinkhorn_plan(problem, cfg=None):
    """Solve the entropic problem by alternating ``u = a / Kv``, ``v = b / K^T u``.

    The returned plan is ``diag(u) K diag(v)``. Iteration stops once both
    marginal residuals (inf-norm) fall to ``cfg.tol`` or after ``cfg.max_iter``
    rounds; ``converged`` says which. Raises NonFiniteIterate if a scaling
    vector under- or overflows.
    """
    cfg = cfg or SinkhornConfig(reg=problem.reg)
    K = gibbs_kernel(problem.cost, cfg.reg, cfg.min_kernel)
    u, v, iters, converged, status = kernels.sinkhorn_scaling(
        K, problem.a, problem.b, cfg.max_iter, cfg.tol)
    if status:
        raise NonFiniteIterate(
            f"scaling vectors left (0, inf) at iteration {status}; reg={cfg.reg} too large "
            f"for cost range [{problem.cost.min():.3g}, {problem.cost.max():.3g}]")
    P = u[:, None] * K * v[None, :]
    return TransportPlan(P, u, v, int(iters), bool(converged),
                         float(np.sum(P * problem.cost)))


def exact_uniform_ot(cost):
    """Exact uniform-marginal OT by enumerating all permutations (test oracle).

    With uniform marginals an optimal vertex is ``(1/M) * permutation``.
    Ties go to the lexicographically smallest permutation.
    """
    cost = np.asarray(cost, dtype=np.float64)
    M = cost.shape[0]
    if cost.shape != (M, M):
        raise DimMismatch("exact oracle needs a square cost")
    if M > ORACLE_MAX_SIZE:
        raise TooLarge(f"M={M} exceeds {ORACLE_MAX_SIZE} for factorial enumeration")
    rows = np.arange(M)
    best, best_perm = np.inf, None
    for perm in itertools.permutations(range(M)):
        total = cost[rows, perm].sum()
        if total < best:
            best, best_perm = total, perm
    P = np.zeros((M, M))
    P[rows, best_perm] = 1.0 / M
    return TransportPlan(P, iterations=0, converged=True, objective=float(best / M))


def marginal_residual(plan, problem):
    P = plan.plan if isinstance(plan, TransportPlan) else np.asarray(plan)
    return (float(np.max(np.abs(P.sum(axis=1) - problem.a))),
            float(np.max(np.abs(P.sum(axis=0) - problem.b))))
