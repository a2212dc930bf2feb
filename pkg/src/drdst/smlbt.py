"""Per-shard minimum-max-latency broadcast trees with bounded fan-out.

Latencies combine a transmission term (packet size over link rate) and a
propagation term (distance over signal speed). Tree construction is a
try-all-roots greedy heuristic; an exact enumeration oracle covers small
instances for testing.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np


class TreeError(ValueError):
    pass


def link_latency(bits: float, rate_mbps: float, dist_m: float, v_mps: float) -> float:
    """Seconds to push `bits` over one link: transmission plus propagation."""
    if rate_mbps <= 0:
        raise ValueError("link rate must be > 0")
    if v_mps <= 0:
        raise ValueError("propagation speed must be > 0")
    if dist_m < 0:
        raise ValueError("distance must be >= 0")
    return (bits / 1e6) / rate_mbps + dist_m / v_mps


@dataclass
class LatencyGraph:
    """Dense pairwise latency matrix over global node ids."""

    latency: np.ndarray  # seconds, zero diagonal

    def __post_init__(self):
        self.latency = np.asarray(self.latency, dtype=np.float64)
        if self.latency.ndim != 2 or self.latency.shape[0] != self.latency.shape[1]:
            raise TreeError("latency must be a square matrix")
        if (np.diag(self.latency) != 0).any():
            raise TreeError("self-link latency must be zero")
        if not np.isfinite(self.latency).all() or (self.latency < 0).any():
            raise TreeError("latencies must be finite and nonnegative")

    @property
    def n(self) -> int:
        return self.latency.shape[0]

    @classmethod
    def from_positions(cls, positions: np.ndarray, rates_mbps: np.ndarray,
                       bits: float, v_mps: float) -> "LatencyGraph":
        pos = np.asarray(positions, dtype=np.float64)
        d = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=2)
        lat = (bits / 1e6) / np.asarray(rates_mbps, dtype=np.float64) + d / v_mps
        np.fill_diagonal(lat, 0.0)
        return cls(lat)


@dataclass
class BroadcastTree:
    """Rooted spanning tree over one shard plus cross-shard fan-out links."""

    root: int
    members: list[int]
    parent: dict[int, int]            # non-root member -> parent id
    cum_latency: dict[int, float]     # root-to-node seconds
    edge_latency: dict[int, float]    # non-root member -> latency to parent
    cross_links: list[tuple[int, int]] = field(default_factory=list)

    @property
    def children(self) -> dict[int, list[int]]:
        ch: dict[int, list[int]] = {m: [] for m in self.members}
        for c, p in self.parent.items():
            ch[p].append(c)
        return ch

    @property
    def max_depth_latency(self) -> float:
        return max(self.cum_latency.values())

    def check(self, fanout: int) -> None:
        n = len(self.members)
        if len(self.parent) != n - 1:
            raise TreeError("tree must have exactly n-1 edges")
        ch = self.children
        if any(len(c) > fanout for c in ch.values()):
            raise TreeError("fan-out bound violated")
        seen = {self.root}
        frontier = [self.root]
        while frontier:
            nxt = []
            for node in frontier:
                for c in ch[node]:
                    if c in seen:
                        raise TreeError("cycle detected")
                    expect = self.cum_latency[node] + self.edge_latency[c]
                    if abs(self.cum_latency[c] - expect) > 1e-12:
                        raise TreeError("cumulative latency inconsistent")
                    seen.add(c)
                    nxt.append(c)
            frontier = nxt
        if seen != set(self.members):
            raise TreeError("tree does not span the shard")


def _greedy_from_root(root_idx: int, ids: np.ndarray, lat: np.ndarray,
                      fanout: int) -> tuple[np.ndarray, np.ndarray]:
    """Grow a tree from one root; returns (parent_idx, cum) in local indices."""
    n = len(ids)
    parent = np.full(n, -1, dtype=np.int64)
    cum = np.full(n, np.inf)
    childcnt = np.zeros(n, dtype=np.int64)
    attached = np.zeros(n, dtype=bool)
    attached[root_idx] = True
    cum[root_idx] = 0.0
    for _ in range(n - 1):
        a = np.flatnonzero(attached & (childcnt < fanout))
        u = np.flatnonzero(~attached)
        # resulting root-to-node latency for every (attach point, member) pair
        cand = cum[a][:, None] + lat[np.ix_(a, u)]
        best_a = cand.argmin(axis=0)
        best_val = cand[best_a, np.arange(len(u))]
        pick = int(best_val.argmin())  # ties: lowest id wins (u is id-sorted)
        m = u[pick]
        ap = a[best_a[pick]]
        parent[m] = ap
        cum[m] = best_val[pick]
        childcnt[ap] += 1
        attached[m] = True
    return parent, cum


def build_tree(members: list[int], g: LatencyGraph, fanout: int,
               stability: dict[int, float] | None = None) -> BroadcastTree:
    """Try-all-roots greedy minimizing the max root-to-member latency."""
    if not members:
        raise TreeError("shard must be nonempty")
    ids = np.array(sorted(members), dtype=np.int64)
    n = len(ids)
    if n == 1:
        node = int(ids[0])
        return BroadcastTree(node, [node], {}, {node: 0.0}, {})
    lat = g.latency[np.ix_(ids, ids)]
    best = None
    for r in range(n):
        parent, cum = _greedy_from_root(r, ids, lat, fanout)
        value = float(cum.max())
        stab = stability.get(int(ids[r]), 0.0) if stability else 0.0
        key = (value, -stab, int(ids[r]))
        if best is None or key < best[0]:
            best = (key, r, parent, cum)
    _, r, parent, cum = best
    root = int(ids[r])
    pmap = {int(ids[i]): int(ids[parent[i]]) for i in range(n) if i != r}
    emap = {int(ids[i]): float(lat[parent[i], i]) for i in range(n) if i != r}
    cmap = {int(ids[i]): float(cum[i]) for i in range(n)}
    tree = BroadcastTree(root, [int(x) for x in ids], pmap, cmap, emap)
    tree.check(fanout)
    return tree


def _prufer_to_edges(seq: tuple[int, ...], n: int) -> list[tuple[int, int]]:
    degree = [1] * n
    for x in seq:
        degree[x] += 1
    edges = []
    seq_list = list(seq)
    leaves = sorted(i for i in range(n) if degree[i] == 1)
    import heapq
    heapq.heapify(leaves)
    for x in seq_list:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, x))
        degree[x] -= 1
        if degree[x] == 1:
            heapq.heappush(leaves, x)
    u = heapq.heappop(leaves)
    v = heapq.heappop(leaves)
    edges.append((u, v))
    return edges


def brute_force_tree(members: list[int], g: LatencyGraph,
                     fanout: int) -> tuple[BroadcastTree, float]:
    """Exact minimizer over all labeled spanning trees and all roots (n <= 6)."""
    ids = sorted(members)
    n = len(ids)
    if n > 6:
        raise TreeError("brute-force oracle limited to n <= 6")
    if n == 1:
        node = int(ids[0])
        return BroadcastTree(node, [node], {}, {node: 0.0}, {}), 0.0
    lat = g.latency[np.ix_(ids, ids)]
    best = None
    seqs = itertools.product(range(n), repeat=n - 2) if n > 2 else [()]
    for seq in seqs:
        edges = _prufer_to_edges(tuple(seq), n)
        adj: list[list[int]] = [[] for _ in range(n)]
        for u, v in edges:
            adj[u].append(v)
            adj[v].append(u)
        for r in range(n):
            # orient from r, check fan-out, compute depth latencies
            parent = [-1] * n
            cum = [0.0] * n
            order = [r]
            seen = [False] * n
            seen[r] = True
            ok = True
            qi = 0
            while qi < len(order):
                node = order[qi]
                qi += 1
                kids = [x for x in adj[node] if not seen[x]]
                if len(kids) > fanout:
                    ok = False
                    break
                for k in kids:
                    seen[k] = True
                    parent[k] = node
                    cum[k] = cum[node] + lat[node, k]
                    order.append(k)
            if not ok:
                continue
            value = max(cum)
            if best is None or value < best[0]:
                pmap = {int(ids[i]): int(ids[parent[i]]) for i in range(n) if i != r}
                emap = {int(ids[i]): float(lat[parent[i], i]) for i in range(n) if i != r}
                cmap = {int(ids[i]): float(cum[i]) for i in range(n)}
                tree = BroadcastTree(int(ids[r]), [int(x) for x in ids], pmap, cmap, emap)
                best = (value, tree)
    assert best is not None
    return best[1], float(best[0])


def broadcast_latency(tree: BroadcastTree, initiator: int) -> float:
    """Max tree-path latency from the initiator to any member (parallel branches)."""
    if initiator not in tree.cum_latency:
        raise TreeError(f"initiator {initiator} not in tree")
    adj: dict[int, list[tuple[int, float]]] = {m: [] for m in tree.members}
    for c, p in tree.parent.items():
        w = tree.edge_latency[c]
        adj[c].append((p, w))
        adj[p].append((c, w))
    dist = {initiator: 0.0}
    frontier = [initiator]
    while frontier:
        nxt = []
        for node in frontier:
            for other, w in adj[node]:
                if other not in dist:
                    dist[other] = dist[node] + w
                    nxt.append(other)
        frontier = nxt
    return max(dist.values())


def network_broadcast_bound(trees: list[BroadcastTree]) -> float:
    """Worst per-shard max depth latency: the quantity the tree builder minimizes."""
    return max(t.max_depth_latency for t in trees)


def cross_shard_links(trees: list[BroadcastTree], fanout: int, g: LatencyGraph,
                      target: str = "root",
                      rng: np.random.Generator | None = None) -> list[BroadcastTree]:
    """Give each shard root up to `fanout` bidirectional links to other shards."""
    if len(trees) < 2:
        raise TreeError("cross links require at least 2 shards")
    for t in trees:
        t.cross_links = []
    for i, t in enumerate(trees):
        cands = []
        for j, other in enumerate(trees):
            if j == i:
                continue
            if target == "root" or rng is None:
                dst = other.root
            else:
                dst = int(rng.choice(other.members))
            cands.append((float(g.latency[t.root, dst]), j, dst))
        cands.sort()
        for _, _, dst in cands[:fanout]:
            t.cross_links.append((t.root, dst))
    return trees
