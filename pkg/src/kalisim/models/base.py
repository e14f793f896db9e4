"""Model interface: the contract every decomposable intensity family satisfies."""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from typing import Iterator, Optional

from ..core import (
    Configuration,
    DecompositionTable,
    Neighborhood,
    NodeId,
    SubspaceGuard,
    TableRow,
    neighborhood_measure,
    shift_to_origin,
)
from ..errors import CoverageError, NonSummableError
from ..sampling import RandomStream


class KalikowModel(ABC):
    """A model family exposing its intensity decomposition.

    The decomposition writes the generic intensity of node ``i`` as
    ``sum_v lambda_i(v) * phi_v`` over a countable family of finite past
    neighborhoods, with ``phi_v(x) = delta(i, v, x) / pmf(i, v)`` (0/0 = 0)
    cylindrical on ``v``. Models in the bounded regime additionally expose
    per-neighborhood bounds whose total dominates the intensity; those are the
    models the perfect simulator accepts.
    """

    # -- structure -----------------------------------------------------------

    @abstractmethod
    def node_set(self) -> Optional[tuple[NodeId, ...]]:
        """Explicit nodes for finite models, None for lattice models."""

    @abstractmethod
    def guard(self) -> SubspaceGuard:
        """Subspace the decomposition is valid on."""

    # -- decomposition -------------------------------------------------------

    @abstractmethod
    def intensity(self, i: NodeId, x: Configuration) -> float:
        """Exact generic intensity phi_i(x) from the model's closed form."""

    @abstractmethod
    def delta(self, i: NodeId, desc, x: Configuration) -> float:
        """Nonnegative summand delta_v(x), cylindrical on the expanded neighborhood."""

    @abstractmethod
    def pmf(self, i: NodeId, desc) -> float:
        """Weight lambda_i(v) of a descriptor."""

    @abstractmethod
    def expand(self, i: NodeId, desc) -> Neighborhood:
        """Concrete neighborhood a descriptor denotes for node ``i``."""

    @abstractmethod
    def sample_neighborhood(self, i: NodeId, rng: RandomStream):
        """Draw a descriptor distributed per lambda_i."""

    @abstractmethod
    def enumerate_descriptors(self, i: NodeId, x: Optional[Configuration] = None) -> Iterator:
        """Canonical enumeration of the family (restricted to descriptors that can
        be nonzero on ``x`` when a configuration is given)."""

    def component_value(self, i: NodeId, desc, x: Configuration) -> float:
        """phi_v(x) = delta / lambda with the 0/0 = 0 convention."""
        lam = self.pmf(i, desc)
        if lam == 0.0:
            return 0.0
        return self.delta(i, desc, x) / lam

    # -- bounded regime --------------------------------------------------------

    def global_bound(self, i: NodeId) -> Optional[float]:
        """Deterministic bound dominating phi_i and every phi_v, or None."""
        return None

    def descriptor_bound(self, i: NodeId, desc) -> Optional[float]:
        """Per-neighborhood bound Gamma_v >= sup_x delta_v(x), or None."""
        return None

    def bound_tail(self, i: NodeId, n: int) -> Optional[float]:
        """sum of Gamma_v beyond the first n enumerated descriptors, or None."""
        return None

    def weight_tail(self, i: NodeId, n: int) -> float:
        """Weight mass beyond the first n enumerated descriptors (exact: the
        weights are a probability, so the tail is 1 minus the listed mass)."""
        acc = 0.0
        for count, desc in enumerate(self.enumerate_descriptors(i)):
            if count >= n:
                break
            acc += self.pmf(i, desc)
        return max(0.0, 1.0 - acc)

    def decomposition_table(self, i: NodeId, rows: int) -> DecompositionTable:
        """Finite table view of the first ``rows`` descriptors plus tail masses."""
        listed = []
        for count, desc in enumerate(self.enumerate_descriptors(i)):
            if count >= rows:
                break
            listed.append(TableRow(desc, self.pmf(i, desc), self.descriptor_bound(i, desc)))
        n = len(listed)
        bt = self.bound_tail(i, n)
        total = self.global_bound(i)
        return DecompositionTable(
            node=i,
            rows=tuple(listed),
            weight_tail=self.weight_tail(i, n),
            bound_tail=bt,
            total_bound=total,
        )

    # -- forward simulation -------------------------------------------------------

    @abstractmethod
    def local_bound(self, i: NodeId, x: Configuration, t: float = 0.0) -> float:
        """Finite bound dominating every component value of node ``i`` at the
        configuration shifted to ``t``, valid until the next accepted point."""

    # -- branching analysis ----------------------------------------------------------

    def offspring_row(self, i: NodeId, tol: float = 1e-8) -> tuple[dict[NodeId, float], float]:
        """Mean offspring counts per child type: M_ij = sum_v lambda_i(v) Gamma^j mu(p_j(v)).

        Returns the row (over every node the family touches) and a rigorous
        bound on the truncated remainder (< tol unless the family is finite).
        """
        raise NotImplementedError

    def offspring_tail(self, i: NodeId, n: int) -> float:
        """Rigorous bound on sum_v lambda(v) P(v) beyond the first n descriptors."""
        raise NotImplementedError

    def offspring_total(self, i: NodeId, tol: float = 1e-8, max_terms: int = 2_000) -> tuple[float, float]:
        """sum_v lambda_i(v) P(v): the mean number of backward children of type-i points.

        Generic route: enumerate descriptors, expand each to its neighborhood
        and integrate the product measure directly; stop once the model's
        closed-form tail bound drops below ``tol``. This is deliberately a
        different code path from ``offspring_row``. Heavy-tailed lazy families
        (power-law level weights) stop at ``max_terms`` instead and report the
        remaining tail bound alongside the partial sum.
        """
        gammas = _GammaLookup(self)
        total = 0.0
        count = 0
        for desc in self.enumerate_descriptors(i):
            if self.offspring_tail(i, count) < tol or count >= max_terms:
                break
            lam = self.pmf(i, desc)
            if lam > 0.0:
                total += lam * neighborhood_measure(self.expand(i, desc), gammas)
            count += 1
        return total, self.offspring_tail(i, count)

    # -- helpers shared by concrete families -------------------------------------------

    def _require_bound(self, i: NodeId) -> float:
        g = self.global_bound(i)
        if g is None:
            raise NonSummableError(
                f"{type(self).__name__} exposes no global bound for node {i}; "
                "this operation needs the bounded decomposition regime"
            )
        return g

    @staticmethod
    def _shift(x: Configuration, t: float) -> Configuration:
        # inclusive shift: a point exactly at t stays, at age zero, because a
        # bound computed right after an acceptance must still dominate the
        # accepted point's future contributions
        pts = {}
        for j, ts in x.items():
            kept = tuple(s - t for s in ts if s <= t)
            if kept:
                pts[j] = kept
        return Configuration._unsafe(pts, window=None)


class _GammaLookup:
    """Mapping view of per-node global bounds, erroring on missing ones."""

    def __init__(self, model: KalikowModel):
        self._model = model

    def __contains__(self, j) -> bool:
        return self._model.global_bound(j) is not None

    def __getitem__(self, j) -> float:
        g = self._model.global_bound(j)
        if g is None:
            raise KeyError(j)
        return g


def require_window_covers(x: Configuration, v: Neighborhood) -> None:
    if not x.covers(v):
        raise CoverageError(f"configuration window {x.window} does not cover {v!r}")


def require_window_for_supports(x: Configuration, supports: list[float]) -> None:
    """Window must reach back to every kernel's support (or be complete)."""
    if x.window is None:
        return
    lo, hi = x.window
    if hi < 0.0:
        raise CoverageError(f"window {x.window} does not reach time 0")
    need = max(supports, default=0.0)
    if need > 0.0 and lo > -need:
        raise CoverageError(
            f"window {x.window} is insufficient: kernels depend on the past back to -{need:g}"
        )


def drive_in_window(
    x: Configuration, sources: dict[NodeId, object], lo: float, hi: float = 0.0
) -> float:
    """sum_j sum_{s in x_j, lo <= s < hi} h_j(-s) for a kernel map {j: h_j}."""
    total = 0.0
    for j, ker in sources.items():
        for s in x.points_in(j, lo, hi):
            total += ker(-s)
    return total
