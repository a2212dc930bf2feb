"""DAG consensus over self-parent/other-parent event graphs.

Commit is strong seeing by more than two thirds of the shard's members whose
validation vote is YES; committed events propagate to other shards through
the broadcast-tree root links. Also contains the exhaustive view-split
safety checker for pairs of conflicting cross-shard transactions.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import statistics
from dataclasses import dataclass, field
from typing import Optional


class DagError(ValueError):
    pass


@dataclass(frozen=True)
class Transaction:
    id: int
    vehicle: int
    origin_rsu: int
    origin_shard: int
    submit_time: float
    kind: str = "normal"  # "normal" | "cross_shard"
    conflict_key: Optional[str] = None


def conflicts(a: Transaction, b: Transaction) -> bool:
    return (a.conflict_key is not None and a.conflict_key == b.conflict_key
            and a.id != b.id)


def event_digest(creator: int, self_parent: Optional[str], other_parent: Optional[str],
                 timestamp: float, txs: tuple[Transaction, ...]) -> str:
    payload = json.dumps(
        [creator, self_parent, other_parent, timestamp, [t.id for t in txs]],
        separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Event:
    hash: str
    creator: int
    self_parent: Optional[str]
    other_parent: Optional[str]
    timestamp: float
    txs: tuple[Transaction, ...]
    signature_valid: bool = True


# per-member adversary policies
POLICIES = ("honest", "silent", "equivocate", "vote_no", "delay")


class DagView:
    """One shard's view of the DAG: events, ancestry, forks, commits."""

    def __init__(self, members: list[int], f: int, max_txs_per_event: int = 1024,
                 policies: Optional[dict[int, str]] = None):
        if len(members) < 3 * f + 1:
            raise DagError("membership must satisfy u >= 3f + 1")
        self.members = list(members)
        self.u = len(members)
        self.f = f
        self.max_txs_per_event = max_txs_per_event
        self.policies = dict(policies or {})
        for m in self.members:
            self.policies.setdefault(m, "honest")
        self.events: dict[str, Event] = {}
        self._order: list[str] = []
        self._idx: dict[str, int] = {}
        self._anc: dict[str, int] = {}          # ancestor bitmask over insertion index
        self.latest: dict[int, str] = {}
        self.equivocators: set[int] = set()
        self._by_link: dict[tuple[int, Optional[str]], str] = {}
        self._buffer: list[Event] = []
        self.committed: dict[str, float] = {}   # event hash -> commit time
        self.commit_order: list[str] = []
        self.commit_median_ts: dict[str, float] = {}
        self.committed_txs: dict[int, tuple[str, float]] = {}  # tx id -> (event, T_con)
        self._committed_keys: dict[str, int] = {}              # conflict key -> tx id
        self.cross_out: list[str] = []          # committed events queued for other shards

    # -- construction ------------------------------------------------------

    def create_event(self, creator: int, other_parent: Optional[str],
                     txs: list[Transaction], now: float) -> list[Event]:
        """Chain one or more events (splitting at the per-event tx cap)."""
        if creator not in self.policies:
            raise DagError(f"unknown creator {creator}")
        out = []
        chunks = [tuple(txs[i:i + self.max_txs_per_event])
                  for i in range(0, len(txs), self.max_txs_per_event)] or [()]
        for chunk in chunks:
            sp = self.latest.get(creator)
            h = event_digest(creator, sp, other_parent, now, chunk)
            ev = Event(h, creator, sp, other_parent, now, chunk)
            status = self.insert_event(ev)
            if status not in ("accepted", "fork_detected"):
                raise DagError(f"could not insert own event: {status}")
            out.append(ev)
            other_parent = None
        return out

    def insert_event(self, event: Event) -> str:
        status = self._insert(event)
        if status == "accepted":
            self._drain_buffer()
        return status

    def _insert(self, event: Event) -> str:
        if event.hash in self.events:
            return "duplicate"
        for parent in (event.self_parent, event.other_parent):
            if parent is not None and parent not in self.events:
                self._buffer.append(event)
                return "missing_parent"
        fork = False
        link = (event.creator, event.self_parent)
        if link in self._by_link:
            self.equivocators.add(event.creator)
            fork = True
        else:
            self._by_link[link] = event.hash
        idx = len(self._order)
        self.events[event.hash] = event
        self._order.append(event.hash)
        self._idx[event.hash] = idx
        mask = 1 << idx
        for parent in (event.self_parent, event.other_parent):
            if parent is not None:
                mask |= self._anc[parent]
        self._anc[event.hash] = mask
        # latest per creator follows the self-parent chain
        prev = self.latest.get(event.creator)
        if event.self_parent == prev or prev is None:
            self.latest[event.creator] = event.hash
        return "fork_detected" if fork else "accepted"

    def _drain_buffer(self) -> None:
        progress = True
        while progress and self._buffer:
            progress = False
            still = []
            for ev in self._buffer:
                if all(p is None or p in self.events
                       for p in (ev.self_parent, ev.other_parent)):
                    self._insert(ev)
                    progress = True
                else:
                    still.append(ev)
            self._buffer = still

    # -- queries -----------------------------------------------------------

    def sees(self, x: str, y: str) -> bool:
        """y is an ancestor of x (reflexively) and y's creator has not forked."""
        if x not in self.events or y not in self.events:
            raise DagError("unknown event")
        if self.events[y].creator in self.equivocators:
            return False
        return bool(self._anc[x] >> self._idx[y] & 1)

    def strongly_sees(self, x: str, y: str) -> bool:
        """x reaches y through intermediaries by more than 2u/3 distinct creators."""
        creators = set()
        mask_x = self._anc[x]
        if self.events[y].creator in self.equivocators:
            return False
        bit_y = self._idx[y]
        for h, i in self._idx.items():
            if mask_x >> i & 1 and self._anc[h] >> bit_y & 1:
                c = self.events[h].creator
                if c not in self.equivocators:
                    creators.add(c)
        return len(creators) * 3 > 2 * self.u

    def _vote(self, member: int, event: Event) -> bool:
        policy = self.policies.get(member, "honest")
        if policy in ("silent", "equivocate"):
            return False
        if policy == "vote_no":
            return False
        if not event.signature_valid:
            return False
        for tx in event.txs:
            if tx.conflict_key is not None:
                owner = self._committed_keys.get(tx.conflict_key)
                if owner is not None and owner != tx.id:
                    return False
        return True

    def commit_pass(self, now: float) -> list[Event]:
        """Commit every event strongly seen by >2u/3 YES-voting members' latest events."""
        newly = []
        for h in self._order:
            if h in self.committed:
                continue
            ev = self.events[h]
            yes = []
            for m in self.members:
                latest = self.latest.get(m)
                if latest is None:
                    continue
                if m in self.equivocators:
                    continue
                if not self._vote(m, ev):
                    continue
                if self.strongly_sees(latest, h):
                    yes.append(m)
            if len(yes) * 3 > 2 * self.u:
                self.committed[h] = now
                self.commit_order.append(h)
                self.commit_median_ts[h] = self._median_seen_ts(h, yes)
                for tx in ev.txs:
                    if tx.id in self.committed_txs:
                        continue
                    if tx.conflict_key is not None:
                        owner = self._committed_keys.get(tx.conflict_key)
                        if owner is not None and owner != tx.id:
                            continue
                        self._committed_keys[tx.conflict_key] = tx.id
                    self.committed_txs[tx.id] = (h, now)
                self.cross_out.append(h)
                newly.append(ev)
        return newly

    def _median_seen_ts(self, h: str, voters: list[int]) -> float:
        ts = []
        bit = self._idx[h]
        for m in voters:
            first = None
            for other in self._order:
                ev = self.events[other]
                if ev.creator == m and self._anc[other] >> bit & 1:
                    first = ev.timestamp
                    break
            if first is not None:
                ts.append(first)
        if not ts:
            return self.events[h].timestamp
        return float(statistics.median(ts))


def sees(view: DagView, x: str, y: str) -> bool:
    return view.sees(x, y)


def strongly_sees(view: DagView, x: str, y: str) -> bool:
    return view.strongly_sees(x, y)


@dataclass(frozen=True)
class CommittedRecord:
    event: Event
    epoch: int
    median_ts: float


def global_order(records: list[CommittedRecord]) -> list[Transaction]:
    """Deterministic total order over committed events; each tx appears once."""
    ordered = sorted(records, key=lambda r: (r.epoch, r.median_ts, r.event.hash))
    seen: set[int] = set()
    out = []
    for rec in ordered:
        for tx in rec.event.txs:
            if tx.id not in seen:
                seen.add(tx.id)
                out.append(tx)
    return out


def records_from_view(view: DagView, epoch: int = 0) -> list[CommittedRecord]:
    return [CommittedRecord(view.events[h], epoch, view.commit_median_ts[h])
            for h in view.commit_order]


def view_split_check(q: int, u: int, f: int, limit: int = 10 ** 6) -> bool:
    """Exhaustively enumerate adversary support schedules for two conflicting txs.

    Honest members anchor to whichever conflicting transaction reaches them
    first (or neither), so each supports at most one; Byzantine members may
    support any subset. Safe iff no schedule gives both transactions strong
    visibility |U| > 2qf + q.
    """
    if u < 3 * f + 1:
        raise DagError("membership must satisfy u >= 3f + 1")
    honest = q * (u - f)
    byz = q * f
    space = 3 ** honest * 4 ** byz
    if space > limit:
        raise DagError(f"schedule space {space} exceeds limit {limit}")
    threshold = 2 * q * f + q
    for hs in itertools.product((0, 1, 2), repeat=honest):
        # honest choice: 0 = neither delivered, 1 = tx1 first, 2 = tx2 first
        h1 = sum(1 for x in hs if x == 1)
        h2 = sum(1 for x in hs if x == 2)
        for bs in itertools.product((0, 1, 2, 3), repeat=byz):
            # byzantine choice: 0 none, 1 tx1, 2 tx2, 3 both
            u1 = h1 + sum(1 for x in bs if x in (1, 3))
            u2 = h2 + sum(1 for x in bs if x in (2, 3))
            if u1 > threshold and u2 > threshold:
                return False
    return True
