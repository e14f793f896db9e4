import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kalisim import (
    ActivityCap,
    Configuration,
    CoverageError,
    GuardViolation,
    Neighborhood,
    NoGuard,
    RefractoryGap,
    agrees_on,
    evaluate_decomposition,
    neighborhood_measure,
    shift_to_origin,
)
from kalisim.models import LinearHawkesModel, lattice_preset


class TestNeighborhood:
    def test_empty(self):
        v = Neighborhood.empty()
        assert v.is_empty()
        assert list(v.pieces()) == []

    def test_rejects_future_pieces(self):
        with pytest.raises(ValueError):
            Neighborhood([(0, -1.0, 0.5)])
        with pytest.raises(ValueError):
            Neighborhood([(0, -1.0, -1.0)])

    def test_normalizes_same_node_pieces(self):
        v = Neighborhood([(0, -1.0, -0.5), (0, -0.7, -0.2), (1, -1.0, -0.9)])
        assert v.intervals(0) == ((-1.0, -0.2),)
        assert v.intervals(1) == ((-1.0, -0.9),)

    def test_equality_ignores_piece_order(self):
        a = Neighborhood([(0, -1.0, -0.5), (1, -2.0, -1.0)])
        b = Neighborhood([(1, -2.0, -1.0), (0, -1.0, -0.5)])
        assert a == b and hash(a) == hash(b)

    def test_contains_half_open(self):
        v = Neighborhood([(3, -1.0, -0.5)])
        assert v.contains(3, -1.0)
        assert not v.contains(3, -0.5)


class TestNeighborhoodMeasure:
    def test_empty_is_zero(self):
        assert neighborhood_measure(Neighborhood.empty(), {}) == 0.0

    def test_single_piece(self):
        v = Neighborhood([(3, -1.0, -0.5)])
        assert neighborhood_measure(v, {3: 2.0}) == pytest.approx(1.0)

    def test_union(self):
        v = Neighborhood([(1, -2.0, -1.0), (2, -1.0, -1e-9)])
        got = neighborhood_measure(v, {1: 1.0, 2: 3.0})
        assert got == pytest.approx(1.0 + 3.0 * (1.0 - 1e-9))

    def test_missing_node_named(self):
        v = Neighborhood([(7, -1.0, -0.5)])
        with pytest.raises(KeyError, match="7"):
            neighborhood_measure(v, {1: 1.0})

    @given(
        st.lists(
            st.tuples(
                st.integers(0, 3),
                st.floats(-50.0, -1e-3, allow_nan=False),
                st.floats(0.01, 10.0),
            ),
            min_size=1,
            max_size=8,
        )
    )
    @settings(max_examples=60, deadline=None)
    def test_additive_over_disjoint_nodes(self, raw):
        # place every piece on its own node id offset so pieces never merge
        pieces = [(1000 + k, a, a + min(w, -a / 2)) for k, (j, a, w) in enumerate(raw)]
        gamma = {j: 1.0 + (j % 5) for j, _, _ in pieces}
        whole = neighborhood_measure(Neighborhood(pieces), gamma)
        parts = sum(neighborhood_measure(Neighborhood([p]), gamma) for p in pieces)
        assert whole == pytest.approx(parts, rel=1e-12)


class TestConfiguration:
    def test_sorts_and_counts(self):
        x = Configuration([(0, -1.0), (0, -3.0), (1, -2.0)])
        assert x.points(0) == (-3.0, -1.0)
        assert x.n_points() == 3
        assert x.count_in(0, -3.0, -1.0) == 1  # half-open: -1.0 excluded

    def test_rejects_same_node_duplicates(self):
        with pytest.raises(ValueError, match="increasing"):
            Configuration({0: [-1.0, -1.0]})

    def test_rejects_cross_node_collisions(self):
        with pytest.raises(ValueError, match="collision"):
            Configuration({0: [-1.0], 1: [-1.0]})

    def test_rejects_points_outside_window(self):
        with pytest.raises(ValueError, match="window"):
            Configuration({0: [-5.0]}, window=(-2.0, 0.0))

    def test_infinite_left_window(self):
        x = Configuration({0: [-5.0]}, window=(-math.inf, 0.0))
        assert x.points(0) == (-5.0,)

    def test_restrict(self):
        x = Configuration({0: [-3.0, -0.4], 1: [-0.2]})
        v = Neighborhood([(0, -0.5, -1e-12), (1, -1.0, -0.5)])
        r = x.restrict(v)
        assert r.points(0) == (-0.4,)
        assert r.points(1) == ()


class TestAgreesOn:
    def test_reflexive(self):
        x = Configuration({1: [-0.3]})
        v = Neighborhood([(1, -0.5, -1e-12)])
        assert agrees_on(x, x, v)

    def test_point_inside_only_one(self):
        x = Configuration({1: [-0.3]})
        y = Configuration.empty()
        v = Neighborhood([(1, -0.5, -1e-12)])
        assert not agrees_on(x, y, v)

    def test_point_outside_is_invisible(self):
        x = Configuration({1: [-0.7]})
        y = Configuration.empty()
        v = Neighborhood([(1, -0.5, -1e-12)])
        assert agrees_on(x, y, v)

    def test_uncovered_window_rejected(self):
        x = Configuration({1: [-0.3]}, window=(-0.4, 0.0))
        v = Neighborhood([(1, -0.5, -1e-12)])
        with pytest.raises(CoverageError):
            agrees_on(x, Configuration.empty(), v)


class TestShiftToOrigin:
    def test_empty(self):
        assert shift_to_origin(Configuration.empty(), 3.0).is_empty()

    def test_shift_and_strict_cutoff(self):
        x = Configuration({1: [2.0, 5.0]}, window=(0.0, 6.0))
        s = shift_to_origin(x, 5.0)
        assert s.points(1) == (-3.0,)
        assert s.window == (-5.0, 0.0)

    def test_identity_shift(self):
        x = Configuration({2: [-1.0]})
        assert shift_to_origin(x, 0.0).points(2) == (-1.0,)


class TestGuards:
    def test_refractory(self):
        g = RefractoryGap(0.5)
        assert g.check(Configuration({0: [-2.0, -1.0]}))
        assert not g.check(Configuration({0: [-1.5, -1.0]}))  # gap == delta fails
        assert g.check(Configuration({0: [-1.51, -1.0]}))
        with pytest.raises(GuardViolation, match="refractory"):
            g.require(Configuration({0: [-1.2, -1.0]}))

    def test_activity_cap(self):
        g = ActivityCap(10.0, 2)
        assert g.check(Configuration({0: [1.0, 2.0]}))
        assert not g.check(Configuration({0: [1.0, 2.0, 3.0]}))
        # points before 0 do not count against the cap
        assert g.check(Configuration({0: [-1.0, 1.0, 2.0]}))

    def test_no_guard(self):
        assert NoGuard().check(Configuration({0: [-1.0]}))


class TestEvaluateDecomposition:
    def make_linear(self, mu=0.5):
        return LinearHawkesModel(mu={0: mu}, kernels={}, eps=0.5)

    def test_zero_terms(self):
        m = self.make_linear()
        assert evaluate_decomposition(m, 0, Configuration.empty(), 0) == 0.0

    def test_empty_past_recovers_mu(self):
        m = self.make_linear(0.5)
        for n in (1, 2, 5):
            got = evaluate_decomposition(m, 0, Configuration.empty(), n)
            assert got == pytest.approx(0.5)

    def test_monotone_in_truncation(self):
        from kalisim import AtomicWeights, ExponentialKernel

        m = LinearHawkesModel(
            mu={0: 0.3},
            kernels={(0, 0): ExponentialKernel(1.0, 1.0)},
            eps=0.5,
            weights={0: AtomicWeights(0.5, {0: 1.0}, {0: 0.7})},
        )
        x = Configuration({0: [-1.7, -0.8, -0.1]})
        vals = [evaluate_decomposition(m, 0, x, n) for n in range(0, 25)]
        assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))
        assert vals[-1] == pytest.approx(m.intensity(0, x), rel=1e-6)

    def test_lattice_empty_past(self):
        m = lattice_preset(4.0, 4.0, 0.5)
        x = Configuration.empty()
        for n in (1, 3, 10):
            part = evaluate_decomposition(m, 0, x, n)
            assert abs(part - 1.0) <= m.bound_tail(0, n) + 1e-12
        assert evaluate_decomposition(m, 0, x, 1) == pytest.approx(1.0)

    def test_guard_violation_identified(self):
        m = lattice_preset(4.0, 4.0, 0.5)
        bad = Configuration({0: [-0.6, -0.3]})  # gap 0.3 <= delta 0.5
        with pytest.raises(GuardViolation, match="refractory"):
            evaluate_decomposition(m, 0, bad, 3)


class TestDecompositionTable:
    def test_weights_sum_to_one_with_tail(self):
        from kalisim import AtomicWeights, ExponentialKernel

        m = LinearHawkesModel(
            mu={0: 0.3},
            kernels={(0, 0): ExponentialKernel(1.0, 1.0)},
            eps=0.5,
            weights={0: AtomicWeights(0.5, {0: 1.0}, {0: 0.7})},
        )
        table = m.decomposition_table(0, 12)
        assert table.weight_sum() == pytest.approx(1.0, abs=1e-12)
        assert len(table.rows) == 12

    def test_age_table_carries_bounds(self):
        m = lattice_preset(4.0, 4.0, 0.25)
        table = m.decomposition_table(0, 6)
        assert table.total_bound == pytest.approx(m.global_bound(0))
        listed = sum(r.bound for r in table.rows)
        assert listed + table.bound_tail == pytest.approx(table.total_bound, rel=1e-12)
        assert table.weight_sum() == pytest.approx(1.0, abs=1e-12)
