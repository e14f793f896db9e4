"""Direct thinning simulators used as independent cross-checks.

These are classical single-node Ogata-style thinning loops written against
raw parameters. They deliberately share no code with the decomposition-based
simulators (no neighborhoods, no weights, no ledger), so distributional
agreement between the two routes is an end-to-end check of the machinery.
"""

from __future__ import annotations

import math

from .sampling import RandomStream


def ogata_linear_hawkes(
    mu: float, alpha: float, beta: float, t_max: float, rng: RandomStream
) -> list[float]:
    """Single-node linear Hawkes with kernel alpha*exp(-beta t), empty past before 0.

    Classic thinning: between events the intensity decays, so its value just
    after the last event dominates until the next acceptance.
    """
    events: list[float] = []
    t = 0.0
    s = 0.0  # sum of exp(-beta (t - t_i)) over past events
    while True:
        bound = mu + alpha * s
        if bound <= 0.0:
            return events
        w = rng.exponential(bound)
        decay = math.exp(-beta * w)
        t_new = t + w
        if t_new > t_max:
            return events
        s *= decay
        t = t_new
        lam = mu + alpha * s
        if rng.uniform() < lam / bound:
            events.append(t)
            s += 1.0


def ogata_age_hawkes(
    psi0: float,
    slope: float,
    alpha: float,
    beta: float,
    refractory: float,
    t_max: float,
    rng: RandomStream,
) -> list[float]:
    """Single-node age-dependent Hawkes, rate (psi0 + slope*drive) gated by the
    hard refractory period, kernel alpha*exp(-beta t), empty past before 0.

    The indicator only lowers the intensity and the drive decays between
    events, so psi evaluated at the current drive dominates ahead.
    """
    if refractory <= 0:
        raise ValueError("refractory must be positive")
    events: list[float] = []
    t = 0.0
    s = 0.0
    last = -math.inf
    while True:
        bound = psi0 + slope * alpha * s
        if bound <= 0.0:
            return events
        w = rng.exponential(bound)
        t_new = t + w
        if t_new > t_max:
            return events
        s *= math.exp(-beta * w)
        t = t_new
        lam = (psi0 + slope * alpha * s) if (t - last) > refractory else 0.0
        if lam > 0.0 and rng.uniform() < lam / bound:
            events.append(t)
            s += 1.0
            last = t
