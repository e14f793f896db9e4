"""Perfect simulation: backward clan construction, forward acceptance sweep.

The stationary sample of one node on a finite window is produced root by
root: propose the next dominating-process point by an exponential step, build
the clan of every realized point that can influence its decision by walking
backward through randomly drawn neighborhoods, then decide all undecided
points forward in time order. One region ledger spans the whole run, so no
space-time region is ever simulated twice and overlapping clans share their
realizations exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .core import Configuration, NodeId, _merge_pieces
from .errors import BudgetExhausted, KalisimError, LedgerError, NonMonotoneModelError, NonSummableError
from .sampling import PointRecord, RandomStream, RegionLedger


@dataclass(frozen=True)
class BackwardBudget:
    """Caps on the backward construction.

    Subcritical families terminate almost surely, so the caps only guard
    misconfigured (supercritical) models; exhaustion raises, never truncates
    silently.
    """

    max_generations: int = 10_000
    max_points: int = 1_000_000

    def __post_init__(self):
        if self.max_generations < 1 or self.max_points < 1:
            raise ValueError("budget caps must be positive")


DEFAULT_BUDGET = BackwardBudget()


@dataclass
class PerfectRunStats:
    """Per-run accounting of the backward/forward machinery."""

    roots: int = 0
    accepted: int = 0
    clan_sizes: list[int] = field(default_factory=list)
    lookbacks: list[float] = field(default_factory=list)

    def to_json(self) -> dict:
        hist: dict[int, int] = {}
        for s in self.clan_sizes:
            hist[s] = hist.get(s, 0) + 1
        return {
            "roots": self.roots,
            "accepted": self.accepted,
            "clan_size_histogram": {str(k): v for k, v in sorted(hist.items())},
            "mean_clan_size": (sum(self.clan_sizes) / len(self.clan_sizes)) if self.clan_sizes else None,
            "max_lookback": max(self.lookbacks, default=0.0),
            "mean_lookback": (sum(self.lookbacks) / len(self.lookbacks)) if self.lookbacks else None,
        }


@dataclass(frozen=True)
class ClanPoint:
    """View of one clan member."""

    record: PointRecord
    generation: int

    @property
    def node(self) -> NodeId:
        return self.record.node

    @property
    def time(self) -> float:
        return self.record.time

    @property
    def neighborhood(self):
        return self.record.neighborhood

    @property
    def decision(self) -> Optional[bool]:
        return self.record.decision


@dataclass
class AncestorGraph:
    """Clan of ancestors of one root proposal.

    ``generations[n]`` holds the points newly simulated while expanding
    generation n-1 (the root is generation 0); ``pending`` additionally
    contains previously realized but still undecided points the clan
    rediscovered, in increasing time order, ending with the root.
    """

    root: tuple[NodeId, float]
    root_record: PointRecord
    generations: dict[int, tuple[PointRecord, ...]] = field(default_factory=dict)
    pending: list[PointRecord] = field(default_factory=list)
    support: dict[NodeId, tuple[tuple[float, float], ...]] = field(default_factory=dict)
    n_stop: Optional[int] = None
    terminated: bool = False
    new_point_count: int = 0

    def clan_size(self) -> int:
        """Total points including the ancestor."""
        return 1 + self.new_point_count

    def clan_points(self) -> list[ClanPoint]:
        out = []
        for gen, recs in sorted(self.generations.items()):
            out.extend(ClanPoint(r, gen) for r in recs)
        return out

    @property
    def lookback(self) -> float:
        """How far into the past the backward steps looked (0 if nowhere)."""
        starts = [iv[0][0] for iv in self.support.values() if iv]
        if not starts:
            return 0.0
        return self.root[1] - min(starts)


def _children(ledger: RegionLedger, model, rec: PointRecord) -> list[PointRecord]:
    """Realized points inside an expanded record's neighborhood (no simulation)."""
    nb = model.expand(rec.node, rec.neighborhood)
    out = []
    for j, a, b in nb.shifted_pieces(rec.time):
        out.extend(ledger.points_in(j, a, b))
    return out


def backward_clan(
    model,
    i: NodeId,
    t: float,
    ledger: RegionLedger,
    rng: RandomStream,
    budget: BackwardBudget = DEFAULT_BUDGET,
    root_record: Optional[PointRecord] = None,
) -> AncestorGraph:
    """Build the clan of ancestors of the proposal (i, t).

    Every point to expand draws its neighborhood (once, stored on the record),
    the dominating Poisson process is realized on the never-visited part of
    the shifted neighborhood at the node's global bound, and freshly simulated
    points form the next generation. Construction stops at the first empty
    generation. Previously realized undecided points rediscovered along the
    way are traversed without simulation and queued for the forward pass.
    """
    root = root_record if root_record is not None else ledger.record(i, t)
    if root is None:
        root = ledger.add_proposal_point(i, t, mark=rng.uniform())
    if root.generation is None:
        root.generation = 0

    graph = AncestorGraph(root=(i, t), root_record=root)
    graph.generations[0] = (root,)

    seen: set[int] = {id(root)}
    pending: list[PointRecord] = [] if root.decision is not None else [root]
    support: dict[NodeId, list[tuple[float, float]]] = {}
    old_stack: list[PointRecord] = []

    def expand(rec: PointRecord) -> tuple[list[PointRecord], list[PointRecord]]:
        if rec.neighborhood is None:
            rec.neighborhood = model.sample_neighborhood(rec.node, rng)
        nb = model.expand(rec.node, rec.neighborhood)
        new: list[PointRecord] = []
        old: list[PointRecord] = []
        for j in nb.nodes():
            gam = model.global_bound(j)
            if gam is None:
                raise NonSummableError(
                    f"{type(model).__name__} has no global bound for node {j}; "
                    "backward simulation needs the bounded regime"
                )
            region = [(a + rec.time, b + rec.time) for a, b in nb.intervals(j)]
            fresh, found = ledger.realize_new(j, region, gam, rng)
            new.extend(fresh)
            old.extend(found)
            support.setdefault(j, []).extend(region)
        return new, old

    def traverse_old(rec: PointRecord) -> None:
        # already-realized, still-undecided point: its neighborhood was fully
        # realized when it was first expanded, so only a read is needed
        if rec.neighborhood is None:
            raise LedgerError(
                f"undecided point {rec!r} was never expanded; the ledger carries state"
                " from an aborted run"
            )
        pending.append(rec)
        for child in _children(ledger, model, rec):
            if child.decision is None and id(child) not in seen:
                seen.add(id(child))
                old_stack.append(child)

    frontier = [root]
    gen = 0
    while frontier:
        if gen + 1 > budget.max_generations:
            graph.n_stop = None
            _finish_support(graph, support)
            raise BudgetExhausted(
                f"backward construction exceeded {budget.max_generations} generations"
                " (supercritical weights or too small a budget)",
                graph=graph,
            )
        next_frontier: list[PointRecord] = []
        for rec in sorted(frontier, key=lambda r: (r.time, r.node)):
            new, old = expand(rec)
            for child in new:
                child.generation = gen + 1
                seen.add(id(child))
                next_frontier.append(child)
                pending.append(child)
                graph.new_point_count += 1
                if graph.new_point_count > budget.max_points:
                    graph.generations[gen + 1] = tuple(next_frontier)
                    _finish_support(graph, support)
                    raise BudgetExhausted(
                        f"backward construction exceeded {budget.max_points} points",
                        graph=graph,
                    )
            for found in old:
                if found.decision is None and id(found) not in seen:
                    seen.add(id(found))
                    old_stack.append(found)
        while old_stack:
            traverse_old(old_stack.pop())
        gen += 1
        graph.generations[gen] = tuple(next_frontier)
        frontier = next_frontier

    graph.n_stop = gen
    graph.terminated = True
    _finish_support(graph, support)
    graph.pending = sorted(pending, key=lambda r: (r.time, r.node))
    return graph


def _finish_support(graph: AncestorGraph, support: dict[NodeId, list[tuple[float, float]]]) -> None:
    graph.support = {j: _merge_pieces(iv) for j, iv in support.items()}


def forward_accept(graph: AncestorGraph, model, ledger: RegionLedger) -> AncestorGraph:
    """Decide every pending point of the clan in increasing time order.

    A point is accepted with probability phi_v(x)/Gamma, where v is its drawn
    neighborhood and x the already-accepted points inside v (children are
    strictly earlier in time, so they are always decided first); the uniform
    mark attached to the point at creation carries the decision. The root,
    being latest, is decided last.
    """
    if not graph.terminated:
        raise KalisimError("cannot run the forward pass on a non-terminated clan")
    for rec in graph.pending:
        if rec.decision is not None:
            continue
        nb = model.expand(rec.node, rec.neighborhood)
        pts: dict[NodeId, tuple[float, ...]] = {}
        for j, a, b in nb.shifted_pieces(rec.time):
            kept = []
            for child in ledger.points_in(j, a, b):
                if child.decision is None:
                    raise KalisimError(
                        f"undecided dependency {child!r} while deciding {rec!r};"
                        " forward order violated"
                    )
                if child.decision:
                    kept.append(child.time - rec.time)
            if kept:
                prev = pts.get(j, ())
                pts[j] = tuple(sorted(prev + tuple(kept)))
        x = Configuration._unsafe(pts, window=None)
        gam = model.global_bound(rec.node)
        value = model.component_value(rec.node, rec.neighborhood, x)
        prob = value / gam
        if prob > 1.0 + 1e-9:
            raise NonMonotoneModelError(
                f"component value {value:g} exceeds the dominating bound {gam:g}"
                f" for {rec!r}; the model's declared bounds are wrong"
            )
        rec.decision = rec.mark < prob
    return graph


def _node_sweep(
    model,
    node: NodeId,
    start: float,
    limit: float,
    ledger: RegionLedger,
    draws: RandomStream,
    budget: BackwardBudget,
    out: list[float],
    stats: Optional[PerfectRunStats] = None,
) -> None:
    gam = model.global_bound(node)
    if gam is None:
        raise NonSummableError(
            f"{type(model).__name__} has no global bound for node {node}; "
            "perfect simulation needs the bounded regime"
        )
    cursor = start
    while True:
        rec = ledger.advance(node, cursor, limit, gam, draws)
        if rec is None:
            return
        cursor = rec.time
        if rec.decision is None:
            graph = backward_clan(model, node, rec.time, ledger, draws, budget, root_record=rec)
            forward_accept(graph, model, ledger)
            if stats is not None:
                stats.clan_sizes.append(graph.clan_size())
                stats.lookbacks.append(graph.lookback)
        if stats is not None:
            stats.roots += 1
        if rec.decision:
            if stats is not None:
                stats.accepted += 1
            out.append(rec.time)


def perfect_sample(
    model,
    i: NodeId,
    t_max: float,
    rng: RandomStream,
    budget: BackwardBudget = DEFAULT_BUDGET,
    ledger: Optional[RegionLedger] = None,
    stats: Optional[PerfectRunStats] = None,
) -> Configuration:
    """Stationary sample of node ``i`` on [0, t_max].

    Iterates: propose the next dominating point by an exponential step at the
    node's global bound, run the backward and forward procedures, emit the
    root if accepted; one ledger is shared across all iterations.
    """
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    led = ledger if ledger is not None else RegionLedger()
    draws = rng.child(0)
    out: list[float] = []
    _node_sweep(model, i, 0.0, t_max, led, draws, budget, out, stats=stats)
    return Configuration({i: out} if out else {}, window=(0.0, t_max), validate=False)


def perfect_sample_window(
    model,
    targets: Iterable[tuple[NodeId, Sequence[float]]],
    rng: RandomStream,
    budget: BackwardBudget = DEFAULT_BUDGET,
) -> Configuration:
    """Stationary sample on a finite union of per-node windows.

    Sweeps every requested (node, [a, b)) in sorted order, sharing one ledger
    so overlapping clans are simulated only on new parts; a single-entry
    request replays exactly the draws of :func:`perfect_sample`.
    """
    normalized: dict[NodeId, list[tuple[float, float]]] = {}
    for node, interval in targets:
        a, b = float(interval[0]), float(interval[1])
        if not a < b:
            raise ValueError(f"empty window [{a}, {b}) for node {node}")
        normalized.setdefault(int(node), []).append((a, b))
    merged = {j: _merge_pieces(iv) for j, iv in normalized.items()}

    ledger = RegionLedger()
    draws = rng.child(0)
    collected: dict[NodeId, list[float]] = {}
    for node in sorted(merged):
        for a, b in merged[node]:
            out: list[float] = []
            _node_sweep(model, node, a, b, ledger, draws, budget, out)
            collected.setdefault(node, []).extend(out)
    points = {j: tuple(sorted(ts)) for j, ts in collected.items() if ts}
    return Configuration._unsafe(points, window=None)
