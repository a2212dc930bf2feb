"""Shard-quality metrics and the stability-weighted evolutionary shard search.

The gene-level inner loops live in a compiled extension when available;
set DRDST_PURE_PYTHON=1 to force the numpy fallback. Both implementations
consume identical pre-drawn uniforms, so results match bit-for-bit on the
gene selections.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass

import numpy as np

from ..core import RsuNode, Thresholds

if os.environ.get("DRDST_PURE_PYTHON"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

KERNEL_IMPL = _impl.IMPL

PENALTY = 1000.0
MALICIOUS_RATIO_LIMIT = 1.0 / 3.0


class ShardingError(ValueError):
    pass


@dataclass
class ShardAssignment:
    """Total mapping node index -> shard index; the genome of the search."""

    genes: np.ndarray  # int64, values in {0..q-1}
    q: int

    def __post_init__(self):
        self.genes = np.asarray(self.genes, dtype=np.int64)
        if self.genes.ndim != 1:
            raise ShardingError("genes must be a 1-d array")
        if len(self.genes) and (self.genes.min() < 0 or self.genes.max() >= self.q):
            raise ShardingError("shard index out of range")

    @property
    def p(self) -> int:
        return len(self.genes)

    def members(self, shard: int) -> np.ndarray:
        return np.flatnonzero(self.genes == shard)

    def copy(self) -> "ShardAssignment":
        return ShardAssignment(self.genes.copy(), self.q)


@dataclass
class ShardMetrics:
    count_gap: float
    trust_gap: float
    stability_gap: float
    max_malicious_ratio: float
    shard_trusts: np.ndarray
    shard_stabilities: np.ndarray
    shard_counts: np.ndarray


@dataclass
class GsaParams:
    population_size: int = 50
    generations: int = 100
    mutation_factor: float = 0.5
    crossover_prob: float = 0.9
    s_max: float = 1.0
    reset_prob: float = 0.1

    def validate(self) -> None:
        if self.population_size < 4:
            raise ShardingError("population_size must be >= 4")
        if self.generations < 1:
            raise ShardingError("generations must be >= 1")
        if self.s_max <= 0:
            raise ShardingError("s_max must be > 0")
        if not 0.0 <= self.reset_prob <= 1.0:
            raise ShardingError("reset_prob must lie in [0, 1]")


def _node_arrays(nodes: list[RsuNode], cutoff: float):
    trust = np.array([n.trust for n in nodes], dtype=np.float64)
    stab = np.array([n.stability for n in nodes], dtype=np.float64)
    malicious = (trust < cutoff).astype(np.uint8)
    return trust, stab, malicious


def shard_metrics(assign: ShardAssignment, nodes: list[RsuNode],
                  cutoff: float) -> ShardMetrics:
    """Per-shard mean trust/stability, max-min gaps and worst malicious ratio."""
    trust, stab, malicious = _node_arrays(nodes, cutoff)
    terms = _impl.fitness_terms(assign.genes, trust, stab, malicious, assign.q)
    if terms is None:
        raise ShardingError("assignment leaves a shard empty; repair it first")
    cg, tg, sg, mal, tmean, smean, counts = terms
    return ShardMetrics(cg, tg, sg, mal, np.asarray(tmean), np.asarray(smean),
                        np.asarray(counts))


def _fitness_from_terms(terms, thresholds: Thresholds, p: int,
                        normalized: bool) -> float:
    cg, tg, sg, mal = terms[0], terms[1], terms[2], terms[3]
    psi = 0.0
    if (tg > thresholds.lambda_ or cg > thresholds.mu
            or mal > MALICIOUS_RATIO_LIMIT or sg > thresholds.stability_gap):
        psi = PENALTY
    if normalized:
        cg = cg / p
    return tg + cg + sg + mal + psi


def fitness(assign: ShardAssignment, nodes: list[RsuNode], thresholds: Thresholds,
            normalized: bool = False) -> float:
    """Penalized sum of inter-shard gaps plus the worst malicious ratio (lower is better)."""
    trust, stab, malicious = _node_arrays(nodes, thresholds.malicious_trust_cutoff)
    terms = _impl.fitness_terms(assign.genes, trust, stab, malicious, assign.q)
    if terms is None:
        raise ShardingError("assignment leaves a shard empty; repair it first")
    return _fitness_from_terms(terms, thresholds, assign.p, normalized)


def mutate(pa: ShardAssignment, pb: ShardAssignment, params: GsaParams,
           stab: np.ndarray, rng: np.random.Generator) -> ShardAssignment:
    """Stability-damped gene donation from pb into pa."""
    if pa.p != pb.p:
        raise ShardingError("genome lengths differ")
    draws = rng.random(pa.p)
    genes = _impl.gene_mix(pa.genes, pb.genes, draws, params.mutation_factor,
                           stab, stab, params.s_max)
    return ShardAssignment(np.asarray(genes), pa.q)


def crossover(m: ShardAssignment, pc: ShardAssignment, params: GsaParams,
              stab: np.ndarray, rng: np.random.Generator) -> ShardAssignment:
    """Stability-damped gene donation from the mutated individual into pc."""
    if m.p != pc.p:
        raise ShardingError("genome lengths differ")
    draws = rng.random(m.p)
    genes = _impl.gene_mix(pc.genes, m.genes, draws, params.crossover_prob,
                           stab, stab, params.s_max)
    return ShardAssignment(np.asarray(genes), m.q)


def repair(assign: ShardAssignment, stab: np.ndarray) -> ShardAssignment:
    """Fill any empty shard with the highest-stability node of the largest shard."""
    genes = assign.genes
    counts = np.bincount(genes, minlength=assign.q)
    while (counts == 0).any():
        empty = int(np.flatnonzero(counts == 0)[0])
        largest = int(counts.argmax())
        members = np.flatnonzero(genes == largest)
        donor = int(members[np.argmax(stab[members])])
        genes[donor] = empty
        counts[largest] -= 1
        counts[empty] += 1
    return assign


def _random_assignment(p: int, q: int, stab: np.ndarray,
                       rng: np.random.Generator) -> ShardAssignment:
    genes = rng.integers(0, q, size=p, dtype=np.int64)
    return repair(ShardAssignment(genes, q), stab)


def _evolve(nodes: list[RsuNode], q: int, params: GsaParams, thresholds: Thresholds,
            rng: np.random.Generator, stability_weighted: bool,
            warm_start: ShardAssignment | None = None,
            normalized: bool = False):
    params.validate()
    p = len(nodes)
    if p < q:
        raise ShardingError(f"cannot split {p} nodes into {q} shards")
    trust, stab, malicious = _node_arrays(nodes, thresholds.malicious_trust_cutoff)
    if stability_weighted:
        eff_stab = stab
    else:
        # plain GA: acceptance probability is MF/CP with no damping
        eff_stab = np.zeros(p, dtype=np.float64)

    def fit_of(genes: np.ndarray) -> float:
        terms = _impl.fitness_terms(genes, trust, stab, malicious, q)
        assert terms is not None
        return _fitness_from_terms(terms, thresholds, p, normalized)

    n = params.population_size
    pop = [_random_assignment(p, q, stab, rng) for _ in range(n)]
    if warm_start is not None and warm_start.p == p and warm_start.q == q:
        pop[0] = repair(warm_start.copy(), stab)
    fits = [fit_of(ind.genes) for ind in pop]
    best_idx = int(np.argmin(fits))
    best = pop[best_idx].copy()
    best_fit = fits[best_idx]
    history = []
    for _ in range(params.generations):
        for u in range(n):
            others = [i for i in range(n) if i != u]
            a, b, c = rng.choice(others, size=3, replace=False)
            m = mutate(pop[a], pop[b], params, eff_stab, rng)
            t = crossover(m, pop[c], params, eff_stab, rng)
            if params.reset_prob > 0.0:
                # gene values absent from the population can only enter
                # through random resets; without them the search is not ergodic
                fresh = rng.integers(0, q, size=p, dtype=np.int64)
                draws = rng.random(p)
                t = ShardAssignment(np.asarray(_impl.gene_mix(
                    t.genes, fresh, draws, params.reset_prob,
                    eff_stab, eff_stab, params.s_max)), q)
            t = repair(t, stab)
            ft = fit_of(t.genes)
            if ft < fits[u]:
                pop[u] = t
                fits[u] = ft
                if ft < best_fit:
                    best_fit = ft
                    best = t.copy()
        # random immigrant: keep the donor pool diverse after convergence
        worst = int(np.argmax(fits))
        imm = _random_assignment(p, q, stab, rng)
        fi = fit_of(imm.genes)
        pop[worst] = imm
        fits[worst] = fi
        if fi < best_fit:
            best_fit = fi
            best = imm.copy()
        history.append(best_fit)
    return best, best_fit, history


def gsa_run(nodes: list[RsuNode], q: int, params: GsaParams, thresholds: Thresholds,
            rng: np.random.Generator, warm_start: ShardAssignment | None = None,
            normalized: bool = False):
    """Stability-weighted evolutionary search; returns (best, fitness, trace)."""
    return _evolve(nodes, q, params, thresholds, rng, True, warm_start, normalized)


def ga_baseline_run(nodes: list[RsuNode], q: int, params: GsaParams,
                    thresholds: Thresholds, rng: np.random.Generator,
                    normalized: bool = False):
    """Plain-probability baseline: same loop without the stability damping."""
    return _evolve(nodes, q, params, thresholds, rng, False, None, normalized)


def brute_force_optimal(nodes: list[RsuNode], q: int, thresholds: Thresholds,
                        normalized: bool = False, limit: int = 10 ** 6):
    """Exhaustive oracle over all total assignments with no empty shard."""
    p = len(nodes)
    if q ** p > limit:
        raise ShardingError(f"instance too large: {q}^{p} > {limit}")
    trust, stab, malicious = _node_arrays(nodes, thresholds.malicious_trust_cutoff)
    best_genes = None
    best_fit = float("inf")
    for combo in itertools.product(range(q), repeat=p):
        genes = np.array(combo, dtype=np.int64)
        terms = _impl.fitness_terms(genes, trust, stab, malicious, q)
        if terms is None:
            continue
        f = _fitness_from_terms(terms, thresholds, p, normalized)
        # product() yields genomes in lexicographic order, so strict < keeps
        # the lexicographically smallest minimizer
        if f < best_fit:
            best_fit = f
            best_genes = genes
    if best_genes is None:
        raise ShardingError("no assignment with all shards nonempty")
    return ShardAssignment(best_genes, q), best_fit
