import math

import numpy as np
import pytest

from kalisim import (
    AffineRate,
    Configuration,
    ExponentialKernel,
    GuardViolation,
    NestedND,
    RandomStream,
    evaluate_decomposition,
    lattice_preset,
)
from kalisim.models import AgeHawkesModel, lattice_c_gamma, lattice_gamma_bar
from kalisim import series


def finite_model(psi0=0.5, slope=0.5, alpha=0.8, beta=2.0, delta=0.5):
    return AgeHawkesModel.finite(
        psi=AffineRate(psi0, slope),
        kernels={(0, 0): ExponentialKernel(alpha, beta)},
        refractory=delta,
        nodes=[0],
    )


def random_refractory_config(rng, delta=0.5, horizon=8.0, node=0):
    ts = []
    t = -rng.uniform(0, 1)
    while t > -horizon:
        ts.append(t)
        t -= delta + rng.uniform(0.05, 1.5)
    return Configuration({node: sorted(ts)})


class TestGammaBar:
    def test_lattice_values(self):
        assert lattice_gamma_bar(4.0, 1) == 1.0
        assert lattice_gamma_bar(4.0, 2) == pytest.approx(2.0 + math.exp(-1.0))
        assert lattice_gamma_bar(4.0, 3) == pytest.approx(0.125 + 2.0 * math.exp(-2.0))

    def test_model_matches_closed_form(self):
        m = lattice_preset(4.0, 4.0, 1.0)
        for k in range(1, 12):
            assert m.gamma_bar(0, k) == pytest.approx(lattice_gamma_bar(4.0, k), rel=1e-12)

    def test_c_gamma_dominates_envelope(self):
        for g in (3.5, 4.0, 5.0):
            c = lattice_c_gamma(g)
            for k in range(1, 400):
                assert c * k**-g >= lattice_gamma_bar(g, k) - 1e-12

    def test_finite_model_head(self):
        m = finite_model()
        assert m.gamma_bar(0, 1) == 0.5  # psi(0)
        # k >= 2: L * h((k-1) delta), no new nodes on a single-node network
        for k in (2, 3, 5):
            assert m.gamma_bar(0, k) == pytest.approx(0.5 * 0.8 * math.exp(-2.0 * 0.5 * (k - 1)))

    def test_gamma_bar_total_bound(self):
        # sum_k bar-Gamma_k <= psi(0) + 2L [sum_j h(0) + delta^{-1} sum_j |h|_1]
        g = 4.0
        total = sum(lattice_gamma_bar(g, k) for k in range(1, 2000))
        kernel_mass = 1.0 + series.zeta(g)  # sum_j beta_ij on the lattice
        bound = 1.0 + 2.0 * (kernel_mass + kernel_mass)  # delta = 1, |h|_1 = beta*delta
        assert total <= bound


class TestDeltaAndIntensity:
    def test_refractory_kills_intensity(self):
        m = finite_model(delta=0.5)
        x = Configuration({0: [-0.25]})
        assert m.intensity(0, x) == 0.0
        assert m.delta(0, NestedND(1), x) == 0.0

    def test_level_one_is_psi0(self):
        m = lattice_preset(4.0, 4.0, 1.0)
        assert m.delta(0, NestedND(1), Configuration.empty()) == 1.0

    def test_nonnegative_and_bounded_by_gamma_bar(self):
        m = finite_model()
        rng = np.random.default_rng(3)
        for _ in range(40):
            x = random_refractory_config(rng)
            for k in range(1, 10):
                d = m.delta(0, NestedND(k), x)
                assert d >= 0.0
                assert d <= m.gamma_bar(0, k) + 1e-12

    def test_telescoping_is_exact(self):
        m = finite_model()
        psi = AffineRate(0.5, 0.5)
        rng = np.random.default_rng(4)
        for _ in range(30):
            x = random_refractory_config(rng)
            alive = x.count_in(0, -0.5, 0.0) == 0
            for n in (1, 2, 4, 8):
                partial = sum(m.delta(0, NestedND(k), x) for k in range(1, n + 1))
                drive = sum(0.8 * math.exp(2.0 * s) for s in x.points_in(0, -n * 0.5, 0.0))
                expect = psi(drive) if alive else 0.0
                assert partial == pytest.approx(expect, abs=1e-12)

    def test_kalikow_identity_within_tail(self):
        m = finite_model()
        rng = np.random.default_rng(5)
        for _ in range(25):
            x = random_refractory_config(rng)
            target = m.intensity(0, x)
            for n in (1, 3, 8):
                part = evaluate_decomposition(m, 0, x, n)
                assert abs(target - part) <= m.bound_tail(0, n) + 1e-12

    def test_guard_violation(self):
        m = finite_model(delta=0.5)
        bad = Configuration({0: [-0.8, -0.5]})
        with pytest.raises(GuardViolation):
            evaluate_decomposition(m, 0, bad, 3)


class TestWeights:
    def test_level_weights_normalize(self):
        m = finite_model()
        head = sum(m.pmf(0, NestedND(k)) for k in range(1, 60))
        assert head + m.weight_tail(0, 59) == pytest.approx(1.0, abs=1e-12)
        assert head == pytest.approx(1.0, abs=1e-9)

    def test_lattice_power_law_sampler(self):
        m = lattice_preset(4.0, 4.0, 0.01)
        rng = RandomStream(6)
        p1 = 1.0 / series.zeta(4.0)
        n = 100_000
        hits = sum(1 for _ in range(n) if m.sample_neighborhood(0, rng).k == 1)
        assert abs(hits / n - p1) < 3 * math.sqrt(p1 * (1 - p1) / n)

    def test_component_value_zero_over_zero(self):
        m = finite_model()
        # deep levels of an all-step-kernel model can carry zero weight; here
        # weights are positive everywhere, so just check the ratio identity
        x = Configuration({0: [-1.2]})
        k = 3
        lam = m.pmf(0, NestedND(k))
        assert m.component_value(0, NestedND(k), x) == pytest.approx(
            m.delta(0, NestedND(k), x) / lam
        )


class TestBoundsAndExpansion:
    def test_global_bound_closed_form(self):
        m = finite_model()
        expect = 0.5 + 0.4 * math.exp(-1.0) / (1.0 - math.exp(-1.0))
        assert m.global_bound(0) == pytest.approx(expect, rel=1e-12)

    def test_lattice_bound(self):
        m = lattice_preset(4.0, 4.0, 0.005)
        assert m.global_bound(0) == pytest.approx(lattice_c_gamma(4.0) * series.zeta(4.0))

    def test_local_bound_is_global(self):
        m = finite_model()
        assert m.local_bound(0, Configuration({0: [-0.7]})) == m.global_bound(0)

    def test_expansion_geometry(self):
        m = lattice_preset(4.0, 4.0, 0.25)
        nb = m.expand(5, NestedND(3))
        assert nb.nodes() == (3, 4, 5, 6, 7)
        assert nb.intervals(5) == ((-0.75, 0.0),)

    def test_components_below_global_bound_on_refractory_configs(self):
        m = finite_model()
        gamma = m.global_bound(0)
        rng = np.random.default_rng(8)
        for _ in range(30):
            x = random_refractory_config(rng)
            for k in range(1, 12):
                assert m.component_value(0, NestedND(k), x) <= gamma + 1e-9


class TestLatticeOffspring:
    def test_row_symmetry_and_total(self):
        m = lattice_preset(4.0, 4.0, 0.005)
        row, rem = m.offspring_row(0, tol=1e-10)
        assert rem < 1e-10
        for d in (1, 2, 5):
            assert row[d] == pytest.approx(row[-d])
        total = sum(row.values()) + rem
        assert total == pytest.approx(m.invariant_offspring_mean(), rel=1e-6)
