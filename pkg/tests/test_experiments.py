import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraclos import make_domain
from fraclos.experiments import (
    InsufficientDataError,
    NoMatchingPairsError,
    SweepConfig,
    SweepRow,
    fit_stretched_exponential,
    gateway_estimate,
    run_sweep,
    run_trial,
    scaled_density,
    scaling_check,
    stretched_exponential_rows,
    sweep_grid,
    wilson_interval,
)


class TestWilson:
    def test_zero_successes(self):
        for T in (10, 100, 2000):
            lo, hi = wilson_interval(0, T)
            assert lo == 0.0
            z2 = 1.959963984540054**2
            assert hi == pytest.approx(z2 / (T + z2), rel=1e-12)

    def test_all_successes(self):
        lo, hi = wilson_interval(50, 50)
        assert hi == 1.0 and lo == pytest.approx(50 / (50 + 1.959963984540054**2), rel=1e-12)

    def test_known_value(self):
        # 8 of 20 at 95 percent, textbook value
        lo, hi = wilson_interval(8, 20)
        assert (lo, hi) == pytest.approx((0.2188, 0.6134), abs=5e-5)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            wilson_interval(0, 0)

    @settings(max_examples=500, deadline=None)
    @given(st.integers(1, 5000), st.data(), st.floats(0.5, 0.999))
    def test_contains_estimate(self, T, data, conf):
        s = data.draw(st.integers(0, T))
        lo, hi = wilson_interval(s, T, conf)
        assert 0 <= lo <= s / T <= hi <= 1

    @pytest.mark.parametrize("p,T", [(0.05, 400), (0.1, 1000), (0.8, 200), (0.3, 2000)])
    def test_coverage(self, p, T):
        rng = np.random.default_rng(99)
        draws = rng.binomial(T, p, size=10_000)
        hits = 0
        for s in draws.tolist():
            lo, hi = wilson_interval(s, T)
            hits += lo <= p <= hi
        assert abs(hits / 10_000 - 0.95) <= 0.015

    @pytest.mark.parametrize("p,T", [(0.8, 60), (0.5, 50), (0.3, 100)])
    def test_coverage_matches_exact_sum(self, p, T):
        """Simulated coverage equals the binomial-pmf coverage sum (small T oscillates around 95%)."""
        stats = pytest.importorskip("scipy.stats")
        exact = sum(
            stats.binom.pmf(s, T, p) for s in range(T + 1)
            if wilson_interval(s, T)[0] <= p <= wilson_interval(s, T)[1]
        )
        draws = np.random.default_rng(5).binomial(T, p, size=10_000)
        sim = np.mean([wilson_interval(s, T)[0] <= p <= wilson_interval(s, T)[1] for s in draws.tolist()])
        assert abs(sim - exact) < 4 * math.sqrt(exact * (1 - exact) / 10_000)


class TestFit:
    def test_noiseless_round_trip(self):
        rows = stretched_exponential_rows(0.3, 0.8, [1, 2, 4, 8, 16])
        # p_hat is set to the exact law
        fit = fit_stretched_exponential(rows)
        assert fit.beta_hat == pytest.approx(0.8, abs=1e-6)
        assert fit.a_hat == pytest.approx(0.3, abs=1e-6)
        assert fit.rows_used == 5
        assert fit.beta_se < 1e-9

    def test_rho_min_filters(self):
        rows = stretched_exponential_rows(0.3, 0.8, [1, 2, 4, 8, 16])
        fit = fit_stretched_exponential(rows, rho_min=3)
        assert fit.rows_used == 3 and fit.rhos == (4.0, 8.0, 16.0)
        with pytest.raises(InsufficientDataError):
            fit_stretched_exponential(rows, rho_min=5)

    def test_only_degenerate_rows(self):
        rows = [SweepRow(2, 0.7, r, 10, s, s / 10, 0, 1, 0, 0, 0) for r, s in [(1, 0), (2, 10), (3, 0), (4, 10)]]
        with pytest.raises(InsufficientDataError):
            fit_stretched_exponential(rows)

    def test_isolated_estimator(self):
        rows = [SweepRow(2, 0.7, r, 10, 0, 0.0, 0, 0.3, 0, 0.5 * r**0.75, 0) for r in (10, 20, 40, 80)]
        fit = fit_stretched_exponential(rows, estimator="isolated")
        assert fit.beta_hat == pytest.approx(0.75, abs=1e-12)
        assert fit.a_hat == pytest.approx(0.5, abs=1e-12)
        with pytest.raises(ValueError):
            fit_stretched_exponential(rows, estimator="nope")

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0.05, 2.0), st.floats(0.3, 1.0))
    def test_round_trip_property(self, a, beta):
        rhos = [2.0**k for k in range(5)]
        # interior success counts so every row is used
        rows = [SweepRow(2, 0.5, r, 10, 5, math.exp(-a * r**beta), 0, 1, 0, 0, 0) for r in rhos]
        fit = fit_stretched_exponential(rows)
        assert fit.beta_hat == pytest.approx(beta, abs=1e-6)
        assert fit.a_hat == pytest.approx(a, rel=1e-6)


class TestScaling:
    def test_exact_law_identity(self):
        d = make_domain(2, 0.7)
        a = 0.4
        beta = d.D / 2
        rhos = sweep_grid(d, [1.0, 2.0, 5.0])
        rows = stretched_exponential_rows(a, beta, rhos, family=2, theta=0.7)
        pairs = scaling_check(rows, d)
        assert len(pairs) == 3
        for pr in pairs:
            assert pr.lhs == pytest.approx(pr.rhs, rel=1e-12)

    def test_exact_law_f3(self):
        d = make_domain(3, 0.5)
        rhos = sweep_grid(d, [3.0])
        rows = stretched_exponential_rows(0.2, d.D / 2, rhos, family=3, theta=0.5)
        (pr,) = scaling_check(rows, d)
        assert pr.lhs == pytest.approx(pr.rhs, rel=1e-12)

    def test_scaled_density(self):
        d = make_domain(2, 0.7)
        assert scaled_density(d, 40.0) == pytest.approx(40 * 4 * math.cos(0.7) ** 2, rel=1e-12)
        assert scaled_density(d, 40.0) == pytest.approx(93.6, abs=0.05)

    def test_no_pairs(self):
        d = make_domain(2, 0.7)
        rows = stretched_exponential_rows(0.4, 0.8, [20, 40, 80, 160], family=2, theta=0.7)
        with pytest.raises(NoMatchingPairsError):
            scaling_check(rows, d)


class TestGateway:
    def test_values(self):
        assert gateway_estimate(100, 1.25) == pytest.approx(316.23, abs=0.01)
        assert gateway_estimate(100, 2) == 10_000
        assert gateway_estimate(1, 1.63) == 1

    def test_rejects(self):
        with pytest.raises(ValueError):
            gateway_estimate(0.5, 1.5)
        with pytest.raises(ValueError):
            gateway_estimate(10, 2.5)


class TestSweep:
    def test_config_validation(self):
        with pytest.raises(ValueError):
            SweepConfig(2, [0.7], [2.0, 1.0])
        with pytest.raises(ValueError):
            SweepConfig(2, [0.7], [1.0], trials=0)
        with pytest.raises(ValueError):
            SweepConfig(2, [], [1.0])
        assert SweepConfig(2, [0.7], [1, 2]).rhos == (1.0, 2.0)

    def test_single_trial_near_square(self):
        d = make_domain(2, 0.01)
        (row,) = run_sweep(SweepConfig(2, [0.01], [200.0], trials=1))
        assert row.successes in (0, 1) and row.p_hat in (0.0, 1.0)
        lam = 200 * d.V
        assert abs(row.mean_n - lam) < 5 * math.sqrt(lam)

    def test_row_invariants(self):
        rows = run_sweep(SweepConfig(3, [0.3, 0.5], [0.5, 1.0, 3.0], trials=30))
        assert [(r.theta, r.rho) for r in rows] == [(t, p) for t in (0.3, 0.5) for p in (0.5, 1.0, 3.0)]
        for r in rows:
            assert 0 <= r.successes <= r.trials
            assert r.ci_low <= r.p_hat <= r.ci_high
            assert r.p_hat == r.successes / r.trials

    def test_reproducible_across_threads(self):
        cfg = SweepConfig(2, [0.4, 0.7], [1.0, 4.0, 10.0], trials=40, seed=77)
        serial = run_sweep(cfg, threads=1)
        assert run_sweep(cfg, threads=4) == serial
        assert run_sweep(cfg, threads=3) == serial
        other = run_sweep(SweepConfig(2, [0.4, 0.7], [1.0, 4.0, 10.0], trials=40, seed=78))
        assert other != serial

    def test_progress_callback(self):
        seen = []
        run_sweep(SweepConfig(2, [0.7], [1.0, 2.0], trials=3), progress=seen.append)
        assert [r.rho for r in seen] == [1.0, 2.0]

    def test_trial_zero_density(self):
        out = run_trial(make_domain(2, 0.7), 0.0, seed=1)
        assert out.connected and out.n_nodes == 0
