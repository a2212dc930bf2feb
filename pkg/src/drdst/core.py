"""Shared domain types, seeded randomness, geometry and configuration schema."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np


class ConfigError(ValueError):
    """A configuration violated one of its invariants; message names the field."""


def euclidean_distance(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Planar distance in meters between two positions."""
    return math.hypot(a[0] - b[0], a[1] - b[1])


class RngHub:
    """Deterministic random streams keyed by subsystem name.

    Each named substream is seeded from (seed, sha256(name)), so the draw
    count of one subsystem never perturbs another and the streams are
    reproducible across platforms.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._streams: dict[str, np.random.Generator] = {}

    def stream(self, name: str) -> np.random.Generator:
        if name not in self._streams:
            digest = hashlib.sha256(name.encode("utf-8")).digest()
            key = int.from_bytes(digest[:8], "little")
            ss = np.random.SeedSequence([self.seed & 0xFFFFFFFFFFFFFFFF, key])
            self._streams[name] = np.random.Generator(np.random.PCG64(ss))
        return self._streams[name]


def seeded_rng(seed: int) -> RngHub:
    """Root of all randomness for a run; identical seeds give identical streams."""
    return RngHub(seed)


@dataclass
class StabilityIndicators:
    """Raw per-node inputs to the stability score."""

    online_time: float = 0.0       # seconds of continuous uptime
    compute_capacity: float = 1.0  # abstract compute units, > 0
    failure_prob: float = 0.0      # in [0, 1]

    def validate(self) -> None:
        if self.compute_capacity <= 0:
            raise ConfigError("compute_capacity must be > 0")
        if not 0.0 <= self.failure_prob <= 1.0:
            raise ConfigError("failure_prob must lie in [0, 1]")


@dataclass
class ScoringParams:
    """Coefficients of the trust update and the stability score."""

    alpha: float = 0.01            # trust reward coefficient
    beta: float = 0.5              # trust reduction coefficient
    weights: tuple[float, float, float] = (0.4, 0.35, 0.25)
    t_zero: float = 30.0           # average online time, seconds
    gamma: float = 5.0             # failure-score decay rate

    def validate(self) -> None:
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise ConfigError("weights must sum to 1")
        if any(w <= 0 for w in self.weights):
            raise ConfigError("weights must all be > 0")
        if self.alpha < 0 or self.beta < 0 or self.gamma < 0:
            raise ConfigError("alpha, beta, gamma must be >= 0")


@dataclass
class RsuNode:
    """A roadside unit: identity, position, trust, stability, fault flags."""

    id: int
    position: tuple[float, float]
    trust: float = 5.0
    indicators: StabilityIndicators = field(default_factory=StabilityIndicators)
    stability: float = 0.5
    is_byzantine: bool = False
    is_offline: bool = False

    def validate(self) -> None:
        if not 0.0 <= self.trust <= 10.0:
            raise ConfigError("trust must lie in [0, 10]")
        if not 0.0 <= self.stability <= 1.0:
            raise ConfigError("stability must lie in [0, 1]")
        self.indicators.validate()


@dataclass
class Thresholds:
    mu: float = 2.0                    # acceptable shard node-count gap
    lambda_: float = 1.0               # acceptable shard trust gap
    stability_gap: float = 0.15        # acceptable shard stability gap
    malicious_trust_cutoff: float = 2.0

    def validate(self) -> None:
        if self.mu < 0:
            raise ConfigError("thresholds.mu must be >= 0")
        if self.lambda_ < 0:
            raise ConfigError("thresholds.lambda must be >= 0")
        if self.stability_gap < 0:
            raise ConfigError("thresholds.stability_gap must be >= 0")


@dataclass
class GsaSettings:
    population_size: int = 50
    generations: int = 60
    mutation_factor: float = 0.5
    crossover_prob: float = 0.9

    def validate(self) -> None:
        if self.population_size < 4:
            raise ConfigError("gsa.population_size must be >= 4")
        if self.generations < 1:
            raise ConfigError("gsa.generations must be >= 1")
        if not 0.0 < self.mutation_factor <= 1.0:
            raise ConfigError("gsa.mutation_factor must lie in (0, 1]")
        if not 0.0 < self.crossover_prob <= 1.0:
            raise ConfigError("gsa.crossover_prob must lie in (0, 1]")


@dataclass
class LinkSettings:
    bandwidth_mbps_range: tuple[float, float] = (10.0, 30.0)
    propagation_speed_mps: float = 2.0e8
    event_header_bits: int = 2048
    tx_bits: int = 2048

    def validate(self) -> None:
        lo, hi = self.bandwidth_mbps_range
        if not (0 < lo <= hi):
            raise ConfigError("link.bandwidth_mbps_range must be a nonempty positive range")
        if self.propagation_speed_mps <= 0:
            raise ConfigError("link.propagation_speed_mps must be > 0")
        if self.event_header_bits < 0 or self.tx_bits <= 0:
            raise ConfigError("link.event_header_bits/tx_bits must be positive")


ABLATIONS = ("none", "no_dag", "no_smlbt", "no_sharding")


@dataclass
class SimConfig:
    """Full description of one simulation run."""

    area_km2: float = 100.0
    rsu_count: int = 100
    vehicle_count: int = 1000
    vehicle_speed_kmh: float = 60.0
    request_rate_tps: float = 3000.0
    shard_count: int = 8
    byzantine_rate: float = 0.02
    offline_rate: float = 0.02
    fanout: int = 8
    max_txs_per_event: int = 1024
    epoch_seconds: float = 10.0
    duration_s: float = 60.0
    rng_seed: int = 0
    thresholds: Thresholds = field(default_factory=Thresholds)
    gsa: GsaSettings = field(default_factory=GsaSettings)
    link: LinkSettings = field(default_factory=LinkSettings)
    scoring: ScoringParams = field(default_factory=ScoringParams)
    ablation: str = "none"
    # environment and timing-model knobs
    grid_placement: bool = False
    compute_lognorm_mu: float = 1.0
    compute_lognorm_sigma: float = 0.5
    event_interval_s: float = 0.05
    validation_rate_tps: float = 2000.0
    required_role_time_s: float = 0.05
    normalized_fitness: bool = False
    cross_link_target: str = "root"
    gossip_fanout: int = 8
    drain_seconds: float = 30.0
    reshard_margin: float = 0.5

    def validate(self) -> None:
        if self.area_km2 <= 0:
            raise ConfigError("area_km2 must be > 0")
        if self.shard_count < 2:
            raise ConfigError("shard_count must be >= 2")
        if self.rsu_count < 3 * self.shard_count:
            raise ConfigError("rsu_count must be >= 3 * shard_count")
        if self.vehicle_count < 0:
            raise ConfigError("vehicle_count must be >= 0")
        if self.vehicle_speed_kmh < 0:
            raise ConfigError("vehicle_speed_kmh must be >= 0")
        if self.request_rate_tps < 0:
            raise ConfigError("request_rate_tps must be >= 0")
        for name in ("byzantine_rate", "offline_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if self.fanout < 1:
            raise ConfigError("fanout must be >= 1")
        if self.max_txs_per_event < 1:
            raise ConfigError("max_txs_per_event must be >= 1")
        if self.epoch_seconds <= 0:
            raise ConfigError("epoch_seconds must be > 0")
        if self.duration_s <= 0:
            raise ConfigError("duration_s must be > 0")
        if self.ablation not in ABLATIONS:
            raise ConfigError(f"ablation must be one of {ABLATIONS}")
        if self.cross_link_target not in ("root", "random_member"):
            raise ConfigError("cross_link_target must be 'root' or 'random_member'")
        if self.event_interval_s <= 0:
            raise ConfigError("event_interval_s must be > 0")
        if self.validation_rate_tps <= 0:
            raise ConfigError("validation_rate_tps must be > 0")
        if self.gossip_fanout < 1:
            raise ConfigError("gossip_fanout must be >= 1")
        if self.reshard_margin < 0:
            raise ConfigError("reshard_margin must be >= 0")
        self.thresholds.validate()
        self.gsa.validate()
        self.link.validate()
        self.scoring.validate()

    @property
    def area_side_m(self) -> float:
        return math.sqrt(self.area_km2) * 1000.0


_JSON_KEY_ALIASES = {"lambda": "lambda_"}
_FIELD_KEY_ALIASES = {"lambda_": "lambda"}


def _from_mapping(cls, data: dict, path: str):
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        name = _JSON_KEY_ALIASES.get(key, key)
        if name not in known:
            raise ConfigError(f"unknown key '{path}{key}'")
        f = known[name]
        if f.name in ("thresholds", "gsa", "link", "scoring"):
            if not isinstance(value, dict):
                raise ConfigError(f"'{path}{key}' must be an object")
            sub_cls = {"thresholds": Thresholds, "gsa": GsaSettings,
                       "link": LinkSettings, "scoring": ScoringParams}[f.name]
            value = _from_mapping(sub_cls, value, f"{path}{key}.")
        elif isinstance(value, list):
            value = tuple(value)
        kwargs[name] = value
    return cls(**kwargs)


def config_from_dict(data: dict) -> SimConfig:
    cfg = _from_mapping(SimConfig, data, "")
    cfg.validate()
    return cfg


def load_config(path: str) -> SimConfig:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    return config_from_dict(data)


def config_to_dict(cfg: SimConfig) -> dict:
    def conv(obj):
        if isinstance(obj, (Thresholds, GsaSettings, LinkSettings, ScoringParams)):
            return {_FIELD_KEY_ALIASES.get(f.name, f.name): conv(getattr(obj, f.name))
                    for f in fields(obj)}
        if isinstance(obj, tuple):
            return list(obj)
        return obj

    return {_FIELD_KEY_ALIASES.get(f.name, f.name): conv(getattr(cfg, f.name))
            for f in fields(cfg)}


def place_rsus(cfg: SimConfig, rng: np.random.Generator) -> list[RsuNode]:
    """Create the RSU population: positions, compute capacities, failure odds.

    Placement is uniform over the square research area unless grid_placement
    is set, in which case RSUs sit on a regular grid.
    """
    side = cfg.area_side_m
    n = cfg.rsu_count
    if cfg.grid_placement:
        cols = math.ceil(math.sqrt(n))
        xs = [(i % cols + 0.5) * side / cols for i in range(n)]
        ys = [(i // cols + 0.5) * side / cols for i in range(n)]
        positions = np.column_stack([xs, ys])
    else:
        positions = rng.uniform(0.0, side, size=(n, 2))
    capacities = rng.lognormal(cfg.compute_lognorm_mu, cfg.compute_lognorm_sigma, size=n)
    # per-node failure odds scaled so the population mean equals offline_rate
    raw = rng.uniform(0.2, 1.8, size=n)
    fail = np.clip(raw * cfg.offline_rate, 0.0, 1.0)
    nodes = []
    for i in range(n):
        ind = StabilityIndicators(online_time=0.0,
                                  compute_capacity=float(capacities[i]),
                                  failure_prob=float(fail[i]))
        nodes.append(RsuNode(id=i, position=(float(positions[i, 0]), float(positions[i, 1])),
                             trust=5.0, indicators=ind, stability=0.5))
    return nodes
