import math

import numpy as np
import pytest

from conelab import (
    FiniteConfiguration,
    IntensitySpec,
    PositionWindow,
    TruncationTooLoose,
    lp_series_expectation,
    sample_batch,
    sample_poisson,
    sigma_mass,
)
from conelab.dsl import evaluate, parse_function
from conelab.streams import RandomStream, batch_plan

from conftest import BOGOLIUBOV_CF, E_MASS, LAMBDA_MASS


class TestBatchPlan:
    def test_partition(self):
        plan = batch_plan(2500)
        assert sum(count for _, count in plan) == 2500
        assert [b for b, _ in plan] == list(range(len(plan)))

    def test_plan_independent_of_anything_else(self):
        assert batch_plan(100) == [(0, 100)]


class TestSamplePoisson:
    def test_zero_volume_window(self, law, marks):
        spec = IntensitySpec(law, marks, PositionWindow(2.0, 2.0))
        rng = RandomStream(1, 0)
        for _ in range(50):
            assert len(sample_poisson(spec, rng)) == 0

    def test_draws_inside_window(self, sigma):
        rng = RandomStream(2, 0)
        for _ in range(500):
            gamma = sample_poisson(sigma, rng)
            for p in gamma.points:
                assert sigma.window.contains(p.position)
                assert sigma.marks.contains(p.velocity)

    def test_draws_pinpointed(self, sigma):
        rng = RandomStream(3, 0)
        for _ in range(200):
            gamma = sample_poisson(sigma, rng)
            positions = [p.position for p in gamma.points]
            assert len(set(positions)) == len(positions)

    def test_count_moments(self, sigma):
        n = 20_000
        batch = sample_batch(sigma, n, seed=77)
        counts = np.array([len(g) for g in batch.configs])
        mean = counts.mean()
        var = counts.var(ddof=1)
        mass = sigma_mass(sigma)
        se_mean = math.sqrt(mass / n)
        se_var = math.sqrt((mass + 2 * mass**2) / n)
        assert abs(mean - mass) <= 3 * se_mean
        assert abs(var - mass) <= 3 * se_var


class TestDeterminism:
    def test_bitwise_identical_batches(self, sigma):
        a = sample_batch(sigma, 300, seed=5)
        b = sample_batch(sigma, 300, seed=5)
        assert a == b

    def test_different_seeds_differ(self, sigma):
        a = sample_batch(sigma, 50, seed=5)
        b = sample_batch(sigma, 50, seed=6)
        assert a.configs != b.configs

    def test_stream_index_isolation(self, sigma):
        a = sample_batch(sigma, 50, seed=5, stream_index=0)
        b = sample_batch(sigma, 50, seed=5, stream_index=1)
        assert a.configs != b.configs


class TestLpSeries:
    def test_empty_indicator_exact(self, sigma):
        res = lp_series_expectation(
            lambda xi: 1.0 if len(xi) == 0 else 0.0,
            sigma,
            n_max=10,
            mc_per_order=50,
            rng=RandomStream(4, 0),
        )
        assert res.value == 1.0

    def test_constant_one(self, sigma):
        res = lp_series_expectation(
            lambda xi: 1.0,
            sigma,
            n_max=30,
            mc_per_order=10,
            rng=RandomStream(5, 0),
            g_bound=1.0,
        )
        assert res.value == pytest.approx(E_MASS, rel=1e-10)
        assert res.truncation_bound < 1e-20

    def test_coherent_state_exponential(self, sigma):
        phi = parse_function("0.2*ind(v:[0.5,2];x:[0,1])")
        G = lambda xi: math.prod(
            evaluate(phi, p.velocity, p.position) for p in xi.points
        )
        res = lp_series_expectation(
            G, sigma, n_max=30, mc_per_order=200, rng=RandomStream(6, 0), g_bound=1.0
        )
        assert res.value == pytest.approx(BOGOLIUBOV_CF, abs=3 * res.std_error + 1e-9)

    def test_truncation_too_loose(self, sigma):
        with pytest.raises(TruncationTooLoose):
            lp_series_expectation(
                lambda xi: 1.0,
                sigma,
                n_max=1,
                mc_per_order=10,
                rng=RandomStream(7, 0),
                g_bound=1.0,
                tolerance=1e-6,
            )

    def test_consistency_with_poisson_sampling(self, sigma):
        # mean of G under the Poisson measure times e^mass equals the
        # Lebesgue-Poisson integral of G
        phi = parse_function("0.2*ind(v:[0.5,2];x:[0,1])")
        G = lambda xi: math.prod(
            evaluate(phi, p.velocity, p.position) for p in xi.points
        )
        lp = lp_series_expectation(
            G, sigma, n_max=30, mc_per_order=400, rng=RandomStream(8, 0), g_bound=1.0
        )
        batch = sample_batch(sigma, 20_000, seed=9)
        values = [G(g) for g in batch.configs]
        mean = float(np.mean(values))
        se = float(np.std(values, ddof=1) / math.sqrt(len(values)))
        scale = math.exp(sigma_mass(sigma))
        tolerance = 3 * (se * scale + lp.std_error) + lp.truncation_bound
        assert abs(mean * scale - lp.value) <= tolerance
