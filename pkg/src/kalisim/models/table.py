"""Explicit finite decomposition tables; the workhorse for bounded toy models."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence

from ..core import Configuration, Neighborhood, NodeId, NoGuard, SubspaceGuard, TableND
from ..sampling import RandomStream
from ..weights import FiniteWeights
from .base import KalikowModel, require_window_covers


@dataclass(frozen=True)
class TableEntry:
    """One row of an explicit decomposition: weight, neighborhood, bound, summand.

    ``value`` is either a constant (a neighborhood-free summand) or a callable
    of the configuration restricted to the neighborhood.
    """

    weight: float
    neighborhood: Neighborhood
    bound: float
    value: float | Callable[[Configuration], float] = 0.0

    def evaluate(self, x: Configuration) -> float:
        if callable(self.value):
            return float(self.value(x))
        return float(self.value)


class TableModel(KalikowModel):
    """Model given by explicit per-node tables of (weight, neighborhood, bound, summand).

    The per-node dominating bound defaults to the sum of row bounds; it can be
    declared larger. Weights must sum to one per node, and every summand is the
    caller's assertion to stay below its row bound (acceptance probabilities
    are still checked at simulation time).
    """

    def __init__(
        self,
        entries: Mapping[NodeId, Sequence[TableEntry]],
        guard: Optional[SubspaceGuard] = None,
        bounds: Optional[Mapping[NodeId, float]] = None,
    ):
        self._entries = {int(i): tuple(rows) for i, rows in entries.items()}
        self._weights = {
            i: FiniteWeights([(TableND(i, k), row.weight) for k, row in enumerate(rows)])
            for i, rows in self._entries.items()
        }
        self._guard = guard if guard is not None else NoGuard()
        self._bounds = {}
        for i, rows in self._entries.items():
            declared = None if bounds is None else bounds.get(i)
            row_sum = sum(r.bound for r in rows)
            self._bounds[i] = float(declared) if declared is not None else row_sum

    @classmethod
    def constant_rate(cls, rate: float, bound: Optional[float] = None, node: NodeId = 0) -> "TableModel":
        """Single node, constant intensity: lambda(empty) = 1 with summand ``rate``."""
        b = float(bound) if bound is not None else float(rate)
        entry = TableEntry(weight=1.0, neighborhood=Neighborhood.empty(), bound=b, value=float(rate))
        return cls({node: [entry]})

    # -- structure ---------------------------------------------------------------

    def node_set(self):
        return tuple(sorted(self._entries))

    def guard(self):
        return self._guard

    def _row(self, i: NodeId, desc) -> TableEntry:
        if not isinstance(desc, TableND) or desc.node != i:
            raise KeyError(f"descriptor {desc!r} does not belong to node {i}'s table")
        return self._entries[i][desc.index]

    # -- decomposition -------------------------------------------------------------

    def intensity(self, i: NodeId, x: Configuration) -> float:
        self._guard.require(x)
        total = 0.0
        for row in self._entries[i]:
            require_window_covers(x, row.neighborhood)
            total += row.evaluate(x.restrict(row.neighborhood))
        return total

    def delta(self, i: NodeId, desc, x: Configuration) -> float:
        row = self._row(i, desc)
        require_window_covers(x, row.neighborhood)
        return row.evaluate(x.restrict(row.neighborhood))

    def pmf(self, i: NodeId, desc) -> float:
        try:
            return self._row(i, desc).weight
        except KeyError:
            return 0.0

    def expand(self, i: NodeId, desc) -> Neighborhood:
        return self._row(i, desc).neighborhood

    def sample_neighborhood(self, i: NodeId, rng: RandomStream):
        return self._weights[i].sample(rng)

    def enumerate_descriptors(self, i: NodeId, x: Optional[Configuration] = None):
        return iter(TableND(i, k) for k in range(len(self._entries[i])))

    # -- bounds ------------------------------------------------------------------------

    def global_bound(self, i: NodeId) -> Optional[float]:
        return self._bounds.get(i)

    def descriptor_bound(self, i: NodeId, desc) -> Optional[float]:
        return self._row(i, desc).bound

    def bound_tail(self, i: NodeId, n: int) -> Optional[float]:
        return sum(r.bound for r in self._entries[i][n:])

    def weight_tail(self, i: NodeId, n: int) -> float:
        return self._weights[i].tail_after(n)

    def local_bound(self, i: NodeId, x: Configuration, t: float = 0.0) -> float:
        # row bounds are sups over all configurations, so they stay valid at
        # every future shift; zero-weight rows carry no component (0/0 = 0)
        best = 0.0
        for row in self._entries[i]:
            if row.weight > 0.0:
                best = max(best, row.bound / row.weight)
        return best

    # -- branching --------------------------------------------------------------------

    def offspring_row(self, i: NodeId, tol: float = 1e-8):
        row: dict[NodeId, float] = {}
        for entry in self._entries[i]:
            if entry.weight == 0.0:
                continue
            for j, a, b in entry.neighborhood.pieces():
                row[j] = row.get(j, 0.0) + entry.weight * self._require_bound(j) * (b - a)
        return row, 0.0

    def offspring_tail(self, i: NodeId, n: int) -> float:
        total = 0.0
        for entry in self._entries[i][n:]:
            if entry.weight:
                total += entry.weight * sum(
                    self._require_bound(j) * (b - a) for j, a, b in entry.neighborhood.pieces()
                )
        return total
