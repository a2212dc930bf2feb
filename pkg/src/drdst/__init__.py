"""DRDST: trust-aware dynamic sharding, broadcast trees and DAG consensus for
roadside-unit networks, with a deterministic desk-scale simulator."""

from .core import (ConfigError, RsuNode, ScoringParams, SimConfig,
                   StabilityIndicators, euclidean_distance, load_config,
                   seeded_rng)

__all__ = [
    "ConfigError", "RsuNode", "ScoringParams", "SimConfig",
    "StabilityIndicators", "euclidean_distance", "load_config", "seeded_rng",
]

__version__ = "0.1.0"
