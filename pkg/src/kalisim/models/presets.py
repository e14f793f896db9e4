"""Named model presets; chiefly the integer-lattice age model.

The lattice preset is the fully worked infinite-network example: nodes are
the integers, psi(u) = 1 + u (psi(0) = 1, Lipschitz constant 1), interaction
kernels h_ij(t) = beta_ij exp(-t/delta) with beta_ii = 1 and
beta_ij = 1 / (2 |j-i|^g) for j != i, nested node sets growing symmetrically,
and per-level bounds Gamma_k = C_g k^{-p} for a weight exponent p in (3, g].
"""

from __future__ import annotations

import math

from .. import series
from ..core import NodeId
from ..kernels import AffineRate, ExponentialKernel
from .age import AgeHawkesModel, PowerGammaLadder


def lattice_gamma_bar(gamma: float, k: int) -> float:
    """Closed form of the Lipschitz envelope bar-Gamma_k on the lattice.

    bar-Gamma_1 = 1 and, for k >= 2,
    bar-Gamma_k = 2/(k-1)^gamma + e^{-(k-1)} (1 + sum_{m=1}^{k-2} m^{-gamma}).
    """
    if k < 1:
        raise ValueError("level index must be >= 1")
    if k == 1:
        return 1.0
    return 2.0 / (k - 1) ** gamma + math.exp(-(k - 1)) * (
        1.0 + series.harmonic_partial(gamma, k - 2)
    )

def lattice_c_gamma(gamma: float) -> float:
    """Smallest constant with C k^{-gamma} >= bar-Gamma_k for every level.

    k^gamma bar-Gamma_k = 2 (k/(k-1))^gamma + k^gamma e^{-(k-1)} (1 + ...);
    both pieces are decreasing once k exceeds max(gamma, a few), and their
    value there is far below the k=2 term 2^gamma (2 + 1/e), so the supremum
    is attained on a short explicit prefix.
    """
    if gamma <= 3.0:
        raise ValueError("lattice preset needs gamma > 3")
    k_star = max(50, math.ceil(3.0 * gamma))
    return max(k**gamma * lattice_gamma_bar(gamma, k) for k in range(1, k_star + 1))


class LatticeAgeModel(AgeHawkesModel):
    """Translation-invariant age model on the integers (see module docstring)."""

    def __init__(self, gamma: float, p: float, delta: float):
        if gamma <= 3.0:
            raise ValueError("lattice preset needs gamma > 3")
        if not 3.0 < p <= gamma:
            raise ValueError("weight exponent must satisfy 3 < p <= gamma")
        self.gamma_exponent = float(gamma)
        self.p = float(p)
        self.c_gamma = lattice_c_gamma(gamma)
        ladder = PowerGammaLadder(self.c_gamma, p)
        rate = AffineRate(1.0, 1.0)
        inv_delta = 1.0 / float(delta)

        def kernel(i: NodeId, j: NodeId) -> ExponentialKernel:
            beta = 1.0 if j == i else 0.5 / abs(j - i) ** gamma
            return ExponentialKernel(alpha=beta, beta=inv_delta)

        def omega(i: NodeId, k: int):
            if k == 1:
                return (i,)
            return tuple(range(i - k + 1, i + k))

        super().__init__(
            kernel=kernel,
            omega=omega,
            ladder=lambda i: ladder,
            psi=lambda i: rate,
            refractory=float(delta),
            nodes=None,
        )
        self._power_ladder = ladder

    # -- translation-invariant branching reductions ---------------------------

    def translation_invariant(self) -> bool:
        return True

    def invariant_offspring_mean(self) -> float:
        """Mean backward children per point: C_gamma * delta * f(p)."""
        return self.c_gamma * self.refractory * series.offspring_f(self.p)

    def entry_level(self, i: NodeId, j: NodeId) -> int:
        return abs(j - i) + 1

    def offspring_row(self, i: NodeId, tol: float = 1e-8):
        lad = self._power_ladder
        row: dict[NodeId, float] = {i: self.refractory * lad.weighted_tail(0)}
        d = 1
        while True:
            # remaining mass over distances > d, bounded via
            # sum_{e>d} sum_{k>e} k Gamma_k <= sum_{k>d+1} k^2 Gamma_k
            rem = 2.0 * self.refractory * lad.square_weighted_tail(d + 1)
            if rem < tol:
                return row, rem
            m = self.refractory * lad.weighted_tail(d)
            row[i - d] = m
            row[i + d] = m
            d += 1
            if d > 1_000_000:
                raise RuntimeError("offspring row did not converge")

    def offspring_tail(self, i: NodeId, n: int) -> float:
        lad = self._power_ladder
        return self.refractory * (2.0 * lad.square_weighted_tail(n) - lad.weighted_tail(n))


def lattice_preset(gamma: float, p: float, delta: float) -> LatticeAgeModel:
    return LatticeAgeModel(gamma, p, delta)
