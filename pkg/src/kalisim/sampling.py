"""Reproducible randomness and the region ledger.

The ledger is the bookkeeping that makes perfect simulation exact: each
space-time region of the dominating Poisson processes is realized exactly
once, and every later request over the same region replays the stored points
bit for bit.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_left, bisect_right, insort
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import LedgerError


class RandomStream:
    """Splittable seeded random stream.

    A stream is identified by ``(seed, path)``; identical identities replay
    identical draw sequences, and distinct paths yield streams that are
    independent by construction (children are keyed into the seed material,
    not derived from the parent's consumed state).
    """

    __slots__ = ("seed", "path", "_gen")

    def __init__(self, seed: int, path: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.path = tuple(int(p) for p in path)
        self._gen = None  # constructed on first draw; many streams never draw

    def child(self, *indices: int) -> "RandomStream":
        return RandomStream(self.seed, self.path + tuple(indices))

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            self._gen = np.random.Generator(
                np.random.Philox(np.random.SeedSequence(self.seed, spawn_key=self.path))
            )
        return self._gen

    def uniform(self) -> float:
        return float(self.generator.random())

    def exponential(self, rate: float) -> float:
        if rate <= 0:
            raise ValueError(f"exponential rate must be positive, got {rate}")
        return float(self.generator.exponential(1.0 / rate))

    def poisson(self, mean: float) -> int:
        return int(self.generator.poisson(mean))

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, path={self.path})"


def sample_exponential(rng: RandomStream, rate: float) -> float:
    """One draw with mean 1/rate."""
    return rng.exponential(rate)


def sample_poisson_region(
    rng: RandomStream, rate: float, region: Sequence[tuple[float, float]]
) -> list[float]:
    """Homogeneous Poisson points of the given rate on a disjoint interval union.

    Counts per interval are Poisson(rate * length); given the counts, points
    are i.i.d. uniform in their interval. The output is globally sorted.
    """
    if rate <= 0:
        raise ValueError(f"poisson rate must be positive, got {rate}")
    ivs = sorted(region)
    for (a, b), (c, _) in zip(ivs, ivs[1:]):
        if b > c:
            raise ValueError("region intervals must be disjoint")
    total = sum(b - a for a, b in ivs)
    if not math.isfinite(total):
        raise ValueError("region must have finite total length")
    out: list[float] = []
    for a, b in ivs:
        n = rng.poisson(rate * (b - a))
        if n:
            out.extend(float(u) for u in rng.generator.uniform(a, b, size=n))
    out.sort()
    return out


@dataclass
class PointRecord:
    """One realized point of a dominating process, with its attached marks.

    ``mark`` is the uniform thinning mark drawn at creation time;
    ``neighborhood`` is the descriptor drawn at first expansion; ``decision``
    is set exactly once by the forward pass.
    """

    node: int
    time: float
    mark: float
    neighborhood: object = None
    decision: Optional[bool] = None
    generation: Optional[int] = None

    def __repr__(self):
        state = "undecided" if self.decision is None else ("accepted" if self.decision else "rejected")
        return f"PointRecord(node={self.node}, t={self.time:.6g}, {state})"


@dataclass
class _NodeLedger:
    starts: list[float] = field(default_factory=list)
    ends: list[float] = field(default_factory=list)
    times: list[float] = field(default_factory=list)
    rate: Optional[float] = None


class RegionLedger:
    """Per-node record of realized intervals of the dominating Poisson processes.

    Coverage intervals are half-open, kept disjoint and merged when abutting;
    endpoints are compared exactly (no epsilon merging). Realized points carry
    their marks and are shared by every simulation step of one run. Exact time
    collisions (a measure-zero event realized by floating point) are resolved
    by resampling inside the same interval.
    """

    def __init__(self):
        self._nodes: dict[int, _NodeLedger] = {}
        self._records: dict[tuple[int, float], PointRecord] = {}
        self._times_used: set[float] = set()
        self._request_count = 0

    # -- inspection ----------------------------------------------------------

    def coverage(self, node: int) -> list[tuple[float, float]]:
        led = self._nodes.get(node)
        return list(zip(led.starts, led.ends)) if led else []

    def points_in(self, node: int, a: float, b: float) -> list[PointRecord]:
        """Records of the node's realized points in [a, b)."""
        led = self._nodes.get(node)
        if led is None:
            return []
        lo = bisect_left(led.times, a)
        hi = bisect_left(led.times, b)
        return [self._records[(node, t)] for t in led.times[lo:hi]]

    def record(self, node: int, t: float) -> Optional[PointRecord]:
        return self._records.get((node, t))

    def rate_of(self, node: int) -> Optional[float]:
        led = self._nodes.get(node)
        return led.rate if led else None

    def n_points(self) -> int:
        return len(self._records)

    # -- internal helpers ------------------------------------------------------

    def _node(self, node: int) -> _NodeLedger:
        led = self._nodes.get(node)
        if led is None:
            led = self._nodes[node] = _NodeLedger()
        return led

    def _check_rate(self, node: int, rate: float) -> None:
        if rate <= 0:
            raise LedgerError(f"dominating rate must be positive, got {rate} for node {node}")
        led = self._node(node)
        if led.rate is None:
            led.rate = rate
        elif led.rate != rate:
            raise LedgerError(
                f"node {node} was realized at rate {led.rate} but is now requested at {rate};"
                " dominating bounds must be constant within a run"
            )

    def _uncovered(self, node: int, a: float, b: float) -> list[tuple[float, float]]:
        """Portions of [a, b) not yet covered."""
        led = self._nodes.get(node)
        if led is None or not led.starts:
            return [(a, b)]
        out = []
        pos = a
        k = bisect_right(led.starts, pos) - 1
        if k >= 0 and led.ends[k] > pos:
            pos = min(led.ends[k], b)
        k += 1
        while pos < b and k < len(led.starts) and led.starts[k] < b:
            if led.starts[k] > pos:
                out.append((pos, led.starts[k]))
            pos = min(led.ends[k], b)
            k += 1
        if pos < b:
            out.append((pos, b))
        return out

    def _cover(self, node: int, a: float, b: float) -> None:
        """Add [a, b) to the coverage, merging overlaps and adjacency."""
        led = self._node(node)
        lo = bisect_left(led.ends, a)
        hi = bisect_right(led.starts, b)
        if lo < hi:
            a = min(a, led.starts[lo])
            b = max(b, led.ends[hi - 1])
            del led.starts[lo:hi]
            del led.ends[lo:hi]
        led.starts.insert(lo, a)
        led.ends.insert(lo, b)

    def _store_point(self, node: int, t: float, mark: float) -> PointRecord:
        rec = PointRecord(node=node, time=t, mark=mark)
        self._records[(node, t)] = rec
        self._times_used.add(t)
        insort(self._node(node).times, t)
        return rec

    # -- mutation ----------------------------------------------------------------

    def realize_new(
        self,
        node: int,
        region: Iterable[tuple[float, float]],
        rate: float,
        rng: RandomStream,
    ) -> tuple[list[PointRecord], list[PointRecord]]:
        """Realize the dominating process on the not-yet-visited part of ``region``.

        Returns ``(new, old)``: fresh points simulated on ``region`` minus the
        already-realized intervals, and previously realized points falling
        inside the requested region (flagged old by membership in the second
        list). The ledger's coverage is extended by the full request either
        way, so re-requesting any region is idempotent.
        """
        self._check_rate(node, rate)
        pieces = sorted((float(a), float(b)) for a, b in region)
        for (a, b), (c, _) in zip(pieces, pieces[1:]):
            if b > c:
                raise LedgerError("requested region must be a disjoint interval union")
        old: list[PointRecord] = []
        fresh: list[PointRecord] = []
        stream = rng.child(self._request_count)
        self._request_count += 1
        for a, b in pieces:
            if not (a < b) or not (math.isfinite(a) and math.isfinite(b)):
                raise LedgerError(f"invalid region piece [{a}, {b})")
            old.extend(self.points_in(node, a, b))
            for ua, ub in self._uncovered(node, a, b):
                for t in sample_poisson_region(stream, rate, [(ua, ub)]):
                    while t in self._times_used:
                        t = ua + (ub - ua) * stream.uniform()
                    fresh.append(self._store_point(node, t, mark=stream.uniform()))
            self._cover(node, a, b)
        fresh.sort(key=lambda r: r.time)
        old.sort(key=lambda r: r.time)
        return fresh, old

    def register_empty(self, node: int, a: float, b: float) -> None:
        """Mark [a, b) as realized with no points beyond a possible one at ``a``.

        Used for the segments walked through by proposal steps: the stretch
        after the previous proposal point (which sits exactly at ``a``) is
        empty by definition of the exponential step.
        """
        if a >= b:
            return
        if self._uncovered(node, a, b) != [(a, b)]:
            raise LedgerError(f"register_empty would overlap realized coverage on node {node}: [{a}, {b})")
        inside = self.points_in(node, a, b)
        if any(rec.time != a for rec in inside):
            raise LedgerError(f"register_empty over stored points on node {node}: [{a}, {b})")
        self._cover(node, a, b)

    def add_proposal_point(self, node: int, t: float, mark: float) -> PointRecord:
        """Store a proposal point learned from an exponential step."""
        if (node, t) in self._records:
            raise LedgerError(f"point ({node}, {t}) already realized")
        return self._store_point(node, t, mark)

    def advance(
        self, node: int, cursor: float, limit: float, rate: float, rng: RandomStream
    ) -> Optional[PointRecord]:
        """Next point of the dominating process strictly after ``cursor``.

        Walks forward through realized coverage (replaying stored points) and
        extends the realization with exponential steps in the gaps, registering
        every traversed stretch as visited. An exponential step overshooting a
        gap certifies the gap empty; one overshooting ``limit`` certifies
        emptiness up to ``limit`` and returns ``None``.
        """
        self._check_rate(node, rate)
        led = self._node(node)
        pos = cursor
        while pos < limit:
            k = bisect_right(led.starts, pos) - 1
            if k >= 0 and pos < led.ends[k]:
                # inside realized coverage: replay stored points
                end = led.ends[k]
                lo = bisect_right(led.times, pos)
                if lo < len(led.times) and led.times[lo] < min(end, limit):
                    return self._records[(node, led.times[lo])]
                pos = end
                continue
            gap_end = led.starts[k + 1] if k + 1 < len(led.starts) else math.inf
            cand = pos + rng.exponential(rate)
            while cand in self._times_used:
                cand = pos + rng.exponential(rate)
            if cand < min(gap_end, limit):
                self.register_empty(node, pos, cand)
                return self.add_proposal_point(node, cand, mark=rng.uniform())
            if gap_end <= limit:
                # gap exhausted without a point: [pos, gap_end) is empty
                self.register_empty(node, pos, gap_end)
                pos = gap_end
            else:
                self.register_empty(node, pos, limit)
                return None
        return None

    # -- serialization -------------------------------------------------------------

    def to_json(self) -> dict:
        out = {}
        for node, led in sorted(self._nodes.items()):
            out[str(node)] = {
                "rate": led.rate,
                "intervals": [[a, b] for a, b in zip(led.starts, led.ends)],
                "points": [
                    {
                        "time": t,
                        "decision": self._records[(node, t)].decision,
                        "generation": self._records[(node, t)].generation,
                    }
                    for t in led.times
                ],
            }
        return out

    def dump(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2)
