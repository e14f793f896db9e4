"""Forward simulation from empty past on a finite network.

Adaptive thinning driven by the decomposition: per-node bounds dominating
every component value are recomputed at each step (after acceptances and
rejections alike), the next proposal arrives at the total bound rate and is
assigned a node proportionally to the bounds, a neighborhood is drawn from
the node's weights, and the proposal is accepted with component value over
bound. Valid for unbounded intensities (linear or exponential Hawkes) because
the bounds adapt to the realized past.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import ActivityCap, Configuration, NodeId, SubspaceGuard
from .errors import ExplosionGuardError, NonMonotoneModelError
from .sampling import RandomStream

TIME_REACHED = "time-reached"
STEP_BUDGET = "step-budget"
GUARD_EXIT = "guard-exit"

# backstop against finite-time explosion even when no guard is requested
EXPLOSION_CAP = 1_000_000


@dataclass(frozen=True)
class ForwardRun:
    """Outcome of one forward simulation."""

    accepted: Configuration
    stop_reason: str
    tau: float
    proposals: int
    t_max: float
    n_max: int
    guard_name: str

    def count(self, node: Optional[NodeId] = None) -> int:
        if node is None:
            return self.accepted.n_points()
        return len(self.accepted.points(node))


def forward_simulate(
    model,
    nodes: Sequence[NodeId],
    t_max: float,
    n_max: int,
    guard: Optional[SubspaceGuard],
    rng: RandomStream,
) -> ForwardRun:
    """Simulate the process on ``nodes`` over [0, t_max] starting from empty past.

    ``n_max`` caps the number of accepted points; the run stops at t_max, at
    the budget, or when accepting a point would leave the guard subspace
    (that point is not included, so the output always satisfies the guard).
    The model must keep every component value below its local bound in the
    absence of new points; a violation detected at proposal time invalidates
    the run with a hard error.
    """
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    node_list = tuple(sorted(int(n) for n in nodes))
    if not node_list:
        raise ValueError("need at least one node")
    known = model.node_set()
    if known is None:
        raise ValueError("forward simulation runs on finite networks only")
    if not set(node_list) <= set(known):
        raise ValueError(f"nodes {set(node_list) - set(known)} are unknown to the model")

    guards: list[SubspaceGuard] = [ActivityCap(t_max, EXPLOSION_CAP)]
    if guard is not None:
        guards.insert(0, guard)
    guard_name = guards[0].name

    times: dict[NodeId, list[float]] = {j: [] for j in node_list}
    t = 0.0
    n_accepted = 0
    proposals = 0

    def rooted_at(at: float, keep_boundary: bool) -> Configuration:
        # bounds must cover the just-accepted point at age zero, so the
        # boundary point is kept when recomputing them
        pts = {}
        for j, ts in times.items():
            if ts:
                shifted = tuple(s - at for s in ts if keep_boundary or s < at)
                if shifted:
                    pts[j] = shifted
        return Configuration._unsafe(pts, window=None if keep_boundary else (-math.inf, 0.0))

    def snapshot(window_hi: float) -> Configuration:
        pts = {j: tuple(ts) for j, ts in times.items() if ts}
        return Configuration._unsafe(pts, window=(-math.inf, window_hi))

    def finish(reason: str, tau: float) -> ForwardRun:
        hi = tau if reason != STEP_BUDGET else float(np.nextafter(tau, math.inf))
        return ForwardRun(
            accepted=snapshot(hi),
            stop_reason=reason,
            tau=tau,
            proposals=proposals,
            t_max=t_max,
            n_max=n_max,
            guard_name=guard_name,
        )

    while True:
        if n_accepted >= n_max:
            return finish(STEP_BUDGET, t)
        try:
            bounds = [model.local_bound(j, rooted_at(t, keep_boundary=True)) for j in node_list]
        except ExplosionGuardError:
            return finish(GUARD_EXIT, t)
        total = sum(bounds)
        if total <= 0.0:
            return finish(TIME_REACHED, t_max)

        t_cand = t + rng.exponential(total)
        if t_cand > t_max:
            return finish(TIME_REACHED, t_max)
        proposals += 1

        u = rng.uniform() * total
        acc = 0.0
        pick, pick_bound = next(
            (j, bd) for j, bd in zip(reversed(node_list), reversed(bounds)) if bd > 0.0
        )
        for j, bd in zip(node_list, bounds):
            acc += bd
            if u < acc:
                pick, pick_bound = j, bd
                break

        desc = model.sample_neighborhood(pick, rng)
        value = model.component_value(pick, desc, rooted_at(t_cand, keep_boundary=False))
        if value > pick_bound * (1.0 + 1e-9):
            raise NonMonotoneModelError(
                f"component value {value:g} exceeds the bound {pick_bound:g} of node {pick}"
                f" at t={t_cand:g}; the model violates the monotone-bound assumption"
            )
        t = t_cand
        if rng.uniform() < value / pick_bound:
            times[pick].append(t_cand)
            candidate = snapshot(float(np.nextafter(t_cand, math.inf)))
            if not all(g.check(candidate) for g in guards):
                times[pick].pop()
                return finish(GUARD_EXIT, t_cand)
            n_accepted += 1
