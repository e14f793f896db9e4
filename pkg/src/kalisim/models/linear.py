"""Linear Hawkes processes over atomic (single-node time bin) neighborhoods."""

from __future__ import annotations

from bisect import bisect_left
from typing import Mapping, Optional

from ..core import EMPTY_ND, AtomND, Configuration, EmptyND, Neighborhood, NodeId, SummableIntensityGuard
from ..errors import ExplosionGuardError
from ..kernels import Kernel
from ..sampling import RandomStream
from ..weights import AtomicWeights, default_atomic_weights
from .base import KalikowModel, require_window_covers, require_window_for_supports


class LinearHawkesModel(KalikowModel):
    """intensity_i(x) = mu_i + sum_j integral h_ij(-s) dx_j(s).

    The neighborhood family is atomic: the empty set plus single-node bins
    w_{j,n} = {j} x [-n*eps, -(n-1)*eps). The summand of the empty set is the
    spontaneous rate; the summand of w_{j,n} integrates the kernel over the
    bin. Intensities are unbounded in general, so the model has no global
    bounds unless they are declared by the caller (a bounded-regime assertion
    used for backward simulation and branching analysis).
    """

    def __init__(
        self,
        mu: Mapping[NodeId, float],
        kernels: Mapping[tuple[NodeId, NodeId], Kernel],
        eps: float,
        weights: Optional[Mapping[NodeId, AtomicWeights]] = None,
        declared_bounds: Optional[Mapping[NodeId, float]] = None,
    ):
        if eps <= 0:
            raise ValueError("bin width eps must be positive")
        self.mu = {int(i): float(v) for i, v in mu.items()}
        if any(v < 0 for v in self.mu.values()):
            raise ValueError("spontaneous rates must be nonnegative")
        self.eps = float(eps)
        self.kernels = {(int(i), int(j)): k for (i, j), k in kernels.items()}
        for i, j in self.kernels:
            if i not in self.mu or j not in self.mu:
                raise ValueError(f"kernel ({i},{j}) references an unknown node")
        self._nodes = tuple(sorted(self.mu))
        self._incoming = {
            i: {j: self.kernels.get((i, j)) for j in self._nodes if (i, j) in self.kernels}
            for i in self._nodes
        }
        if weights is None:
            weights = {i: default_atomic_weights(self._incoming[i], self.eps) for i in self._nodes}
        self.weights = dict(weights)
        for i in self._nodes:
            fam = self.weights[i]
            for j, ker in self._incoming[i].items():
                nmax = fam.trunc.get(j) if j in fam.shares else None
                if nmax is not None and nmax * self.eps < ker.support_end:
                    raise ValueError(
                        f"atom family of node {i} truncates node {j} at bin {nmax} but the kernel"
                        f" reaches back to {ker.support_end:g}; the decomposition would be lossy"
                    )
        self._declared = dict(declared_bounds) if declared_bounds else {}
        self._guard = SummableIntensityGuard()
        self._expand_cache: dict[tuple[int, int], Neighborhood] = {}

    # -- structure ----------------------------------------------------------

    def node_set(self):
        return self._nodes

    def guard(self):
        return self._guard

    def expand(self, i: NodeId, desc) -> Neighborhood:
        if isinstance(desc, EmptyND):
            return Neighborhood.empty()
        if isinstance(desc, AtomND):
            key = (desc.j, desc.n)
            nb = self._expand_cache.get(key)
            if nb is None:
                nb = Neighborhood([(desc.j, -desc.n * self.eps, -(desc.n - 1) * self.eps)])
                self._expand_cache[key] = nb
            return nb
        raise KeyError(f"descriptor {desc!r} is not atomic")

    # -- decomposition ---------------------------------------------------------

    def intensity(self, i: NodeId, x: Configuration) -> float:
        require_window_for_supports(x, [k.support_end for k in self._incoming[i].values()])
        total = self.mu[i]
        for j, ker in self._incoming[i].items():
            for s in x.points(j):
                if s < 0.0:
                    total += ker(-s)
        return total

    def delta(self, i: NodeId, desc, x: Configuration) -> float:
        if isinstance(desc, EmptyND):
            return self.mu[i]
        if not isinstance(desc, AtomND):
            raise KeyError(f"descriptor {desc!r} is not atomic")
        require_window_covers(x, self.expand(i, desc))
        ker = self._incoming[i].get(desc.j)
        if ker is None:
            return 0.0
        a, b = -desc.n * self.eps, -(desc.n - 1) * self.eps
        return sum(ker(-s) for s in x.points_in(desc.j, a, b))

    def pmf(self, i: NodeId, desc) -> float:
        return self.weights[i].pmf(desc)

    def sample_neighborhood(self, i: NodeId, rng: RandomStream):
        return self.weights[i].sample(rng)

    def enumerate_descriptors(self, i: NodeId, x: Optional[Configuration] = None):
        yield EMPTY_ND
        fam = self.weights[i]
        nmax = fam.max_level()
        n = 1
        while nmax is None or n <= nmax:
            for desc in fam.enumerate_level(n):
                yield desc
            n += 1

    # -- bounded regime ---------------------------------------------------------

    def global_bound(self, i: NodeId) -> Optional[float]:
        return self._declared.get(i)

    # -- forward simulation -------------------------------------------------------

    def local_bound(self, i: NodeId, x: Configuration, t: float = 0.0) -> float:
        """sup over neighborhoods and future shifts of the component values.

        A past point of age a can contribute to bin n at some future time iff
        a < n*eps, and its kernel value there is at most h(max(a, (n-1)*eps)),
        the kernel being nonincreasing. Beyond the bin currently holding the
        oldest point these per-bin bounds decay geometrically provided the bin
        weights decay slower than the kernel; otherwise no finite bound exists.
        """
        x = self._shift(x, t)
        fam = self.weights[i]
        if self.mu[i] > 0.0 and fam.p_empty == 0.0:
            raise ExplosionGuardError(
                f"node {i} has positive spontaneous rate but zero weight on the empty set"
            )
        best = self.mu[i] / fam.p_empty if self.mu[i] > 0.0 else 0.0
        for j, ker in self._incoming[i].items():
            pts = x.points(j)
            if not pts or ker.is_zero():
                continue
            share = (1.0 - fam.p_empty) * fam.shares.get(j, 0.0)
            if share == 0.0:
                raise ExplosionGuardError(
                    f"node {i}: kernel from node {j} is active but its atoms carry no weight"
                )
            ages = [-s for s in reversed(pts) if s <= 0.0]
            hvals = [ker(a) for a in ages]
            prefix = [0.0]
            for h in hvals:
                prefix.append(prefix[-1] + h)
            max_age = ages[-1] if ages else 0.0
            n_edge = int(max_age / self.eps) + 2
            nmax = fam.trunc[j]
            n_stop = n_edge if nmax is None else min(n_edge, nmax)
            if nmax is None:
                ratio = ker.decay_per(self.eps) / fam.ratios[j]
                if ratio >= 1.0:
                    raise ExplosionGuardError(
                        f"node {i}: bin weights from node {j} decay at least as fast as the kernel"
                        " across bins; components admit no finite bound at future shifts"
                    )
            for n in range(1, n_stop + 1):
                lo_edge = (n - 1) * self.eps
                k_lo = bisect_left(ages, lo_edge)
                k_hi = bisect_left(ages, n * self.eps)
                bound_n = (prefix[k_hi] - prefix[k_lo]) + k_lo * ker(lo_edge)
                if bound_n > 0.0:
                    lam = share * fam._bin_pmf(j, n)
                    best = max(best, bound_n / lam)
        return best

    # -- branching ------------------------------------------------------------------

    def offspring_row(self, i: NodeId, tol: float = 1e-8):
        fam = self.weights[i]
        row: dict[NodeId, float] = {}
        for j in fam.nodes:
            mass = (1.0 - fam.p_empty) * fam.shares[j]
            if mass > 0.0:
                row[j] = self._require_bound(j) * self.eps * mass
        return row, 0.0

    def offspring_tail(self, i: NodeId, n: int) -> float:
        fam = self.weights[i]
        if not fam.nodes:
            return 0.0
        if n == 0:
            level = 0
        else:
            level = (n - 1) // len(fam.nodes)
        return sum(
            self._require_bound(j) * self.eps * (1.0 - fam.p_empty) * fam.shares[j] * fam._bin_tail(j, level)
            for j in fam.nodes
        )
