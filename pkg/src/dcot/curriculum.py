"""Training-time schedules: the dual-view mixing weight sigma(t), its curve h(z),
and the cross-lingual loss weight G(t).

Time ``t`` is normalized training progress, ``step / total_steps`` in [0, 1].
"""
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimMismatch, OutOfRange

VARIANTS = ("dynamic", "plain", "reverse")
INTERPRETATIONS = ("literal", "rescaled")

# named (tau, gamma) presets
PRESETS = {
    "multi30k": (0.1, 0.2),
    "mscoco": (0.065, 0.6),
    "vatex": (0.065, 0.1),
}


def _check_unit(name, x):
    if not 0.0 <= x <= 1.0:
        raise OutOfRange(f"{name}={x} is outside [0, 1]")


@dataclass(frozen=True)
class CurriculumSchedule:
    tau: float = 0.1
    gamma: float = 0.2
    variant: str = "dynamic"
    sigma_fixed: float = 0.5
    interpretation: str = "literal"

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ConfigError(f"tau must lie in (0, 1), got {self.tau}")
        if not self.gamma > 0:
            raise ConfigError(f"gamma must be positive, got {self.gamma}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.interpretation not in INTERPRETATIONS:
            raise ConfigError(f"interpretation must be one of {INTERPRETATIONS}")
        if not 0.0 <= self.sigma_fixed <= 1.0:
            raise ConfigError(f"sigma_fixed must lie in [0, 1], got {self.sigma_fixed}")

    @classmethod
    def preset(cls, name, **kw):
        tau, gamma = PRESETS[name]
        return cls(tau=tau, gamma=gamma, **kw)


@dataclass(frozen=True)
class LingualWeightSchedule:
    k: float = 1.0
    epsilon: float = 10.0
    tau: float = 0.1

    def __post_init__(self):
        if not self.k >= 0:
            raise ConfigError(f"k must be non-negative, got {self.k}")
        if not 0.0 < self.tau < 1.0:
            raise ConfigError(f"tau must lie in (0, 1), got {self.tau}")


@dataclass(frozen=True)
class TrainingClock:
    step: int
    total_steps: int

    def __post_init__(self):
        if self.total_steps < 1 or not 0 <= self.step <= self.total_steps:
            raise ConfigError(f"invalid clock {self.step}/{self.total_steps}")

    @property
    def t(self):
        return self.step / self.total_steps


def h(z, gamma):
    """``gamma * z / (2 - z)`` on [0, 1]."""
    _check_unit("z", z)
    return gamma * z / (2.0 - z)


def _dynamic(t, sched):
    if t > sched.tau:
        return 1.0
    z = t * sched.tau if sched.interpretation == "literal" else t / sched.tau
    return h(z, sched.gamma)


def sigma(t, sched):
    """Weight of the cross-modal cost at progress ``t``, clamped into [0, 1]."""
    _check_unit("t", t)
    if sched.variant == "plain":
        val = sched.sigma_fixed
    elif sched.variant == "reverse":
        val = 1.0 - min(max(_dynamic(t, sched), 0.0), 1.0)
    else:
        val = _dynamic(t, sched)
    return min(max(val, 0.0), 1.0)


def mix_costs(E_m, E_l, sigma_val):
    """``sigma * E_m + (1 - sigma) * E_l``."""
    E_m = np.asarray(E_m, dtype=np.float64)
    E_l = np.asarray(E_l, dtype=np.float64)
    if E_m.shape != E_l.shape:
        raise DimMismatch(f"cost shapes differ: {E_m.shape} vs {E_l.shape}")
    _check_unit("sigma", sigma_val)
    if sigma_val == 1.0:
        return E_m.copy()
    if sigma_val == 0.0:
        return E_l.copy()
    return sigma_val * E_m + (1.0 - sigma_val) * E_l


def lingual_weight(t, sched):
    """``1 / (1 + k * exp(epsilon * t - 1 / tau))``."""
    _check_unit("t", t)
    return 1.0 / (1.0 + sched.k * math.exp(sched.epsilon * t - 1.0 / sched.tau))


def schedule_table(sched, lingual, n=101):
    """Rows ``(t, sigma(t), G(t))`` on an even grid over [0, 1]."""
    rows = []
    for i in range(n):
        t = i / (n - 1)
        rows.append((t, sigma(t, sched), lingual_weight(t, lingual)))
    return rows
