import numpy as np
import pytest

from drdst.core import RsuNode, StabilityIndicators


def make_scored_nodes(p: int, rng: np.random.Generator,
                      side: float = 1000.0) -> list[RsuNode]:
    """Random node population with trust/stability already assigned."""
    nodes = []
    for i in range(p):
        nd = RsuNode(i, (float(rng.uniform(0, side)), float(rng.uniform(0, side))),
                     indicators=StabilityIndicators(
                         online_time=float(rng.uniform(0, 60)),
                         compute_capacity=float(rng.lognormal(1.0, 0.5)),
                         failure_prob=float(rng.uniform(0, 0.2))))
        nd.trust = float(rng.uniform(0.0, 10.0))
        nd.stability = float(rng.uniform(0.0, 1.0))
        nodes.append(nd)
    return nodes


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
