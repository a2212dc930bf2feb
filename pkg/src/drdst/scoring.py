"""Per-epoch trust updates and network-stability scores."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .core import ScoringParams, StabilityIndicators

ROLES = ("root", "father", "child")


@dataclass
class EpochNodeStats:
    """What one node did during an epoch, as seen by the cloud server."""

    ok_txs: int = 0
    failed_txs: int = 0
    # actual block-generation seconds per role (root / father / child)
    role_times: dict[str, float] = field(default_factory=lambda: {r: 0.0 for r in ROLES})
    # network-wide required seconds per role
    role_required: dict[str, float] = field(default_factory=lambda: {r: 1.0 for r in ROLES})

    def validate(self) -> None:
        if self.ok_txs < 0 or self.failed_txs < 0:
            raise ValueError("tx counts must be >= 0")
        if any(t < 0 for t in self.role_times.values()):
            raise ValueError("role times must be >= 0")
        if any(t <= 0 for t in self.role_required.values()):
            raise ValueError("required role times must be > 0")


@dataclass
class PopulationComputeStats:
    """Min/max of log(compute capacity) over the whole population."""

    log_min: float
    log_max: float

    @classmethod
    def from_capacities(cls, capacities) -> "PopulationComputeStats":
        logs = [math.log(c) for c in capacities]
        return cls(log_min=min(logs), log_max=max(logs))


def theta(actual: float, required: float) -> float:
    """Stall penalty time: zero when on time, otherwise the full actual time."""
    if required <= 0:
        raise ValueError("required time must be > 0")
    return 0.0 if actual <= required else actual


def trust_delta(stats: EpochNodeStats, params: ScoringParams) -> float:
    """Per-epoch trust increment: reward net successful txs, punish stalls."""
    stats.validate()
    penalty = sum(theta(stats.role_times[r], stats.role_required[r]) / stats.role_required[r]
                  for r in ROLES)
    return params.alpha * (stats.ok_txs - stats.failed_txs) - params.beta * penalty


def apply_trust(current: float, delta: float) -> float:
    """Accumulate a trust increment, clamped to the [0, 10] range."""
    return min(10.0, max(0.0, current + delta))


def f_online(t_online: float, t_zero: float) -> float:
    """Sigmoid uptime score centered on the population-average online time."""
    x = t_online - t_zero
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    # avoid overflow for very negative x
    e = math.exp(x)
    return e / (1.0 + e)


def f_compute(c: float, pop: PopulationComputeStats) -> float:
    """Min-max normalized log compute score; 1.0 when all capacities are equal."""
    if c <= 0:
        raise ValueError("compute capacity must be > 0")
    if pop.log_min > pop.log_max:
        raise ValueError("population log_min must be <= log_max")
    if pop.log_max == pop.log_min:
        return 1.0
    v = (math.log(c) - pop.log_min) / (pop.log_max - pop.log_min)
    return min(1.0, max(0.0, v))


def f_failure(eta: float, gamma: float) -> float:
    """Exponential decay of the score as failure probability grows."""
    return math.exp(-eta * gamma)


def stability_score(ind: StabilityIndicators, params: ScoringParams,
                    pop: PopulationComputeStats) -> float:
    """Weighted combination of the three indicator scores, in [0, 1]."""
    w1, w2, w3 = params.weights
    return (w1 * f_online(ind.online_time, params.t_zero)
            + w2 * f_compute(ind.compute_capacity, pop)
            + w3 * f_failure(ind.failure_prob, params.gamma))
