"""Leapfrog integration, transition kernels, warmup adaptation and the multi-chain runner."""

import math

import numpy as np
import pytest

from conftest import BrokenModel, GaussianModel
from hierpool.errors import ConfigurationError, DomainError, EvaluationError, SamplingError
from hierpool.models import Model1
from hierpool.sampler import (DualAveraging, RunningVariance, SamplerConfig, adapt_warmup, chain_rng,
                              find_reasonable_step_size, hmc_step, leapfrog, phase_state, run, rw_metropolis_step,
                              warmup_windows)


def standard_normal(q):
    return -0.5 * float(q @ q), -q


def quartic(q):
    return -0.5 * float(q @ q) - 0.1 * float(np.sum(q ** 4)), -q - 0.4 * q ** 3


def flow(oracle, step_size, n_steps):
    """Leapfrog as a map of the stacked (position, momentum) vector"""

    def apply(x):
        half = x.size // 2
        end = leapfrog(phase_state(oracle, x[:half], x[half:]), oracle, step_size, n_steps)
        return np.concatenate([end.position, end.momentum])

    return apply


class TestLeapfrog:

    def test_free_particle(self):
        free = lambda q: (0.0, np.zeros_like(q))
        start = phase_state(free, np.zeros(2), np.array([1.0, 2.0]))
        end = leapfrog(start, free, 0.1, 10)
        np.testing.assert_allclose(end.position, [1.0, 2.0])
        np.testing.assert_allclose(end.momentum, [1.0, 2.0])

        end = leapfrog(start, free, 0.1, 10, inv_metric=np.array([2.0, 1.0]))
        np.testing.assert_allclose(end.position, [2.0, 2.0])

    def test_reversible(self):
        start = phase_state(quartic, np.array([0.5, -1.0]), np.array([1.2, 0.3]))
        forward = leapfrog(start, quartic, 0.1, 25)
        flipped = phase_state(quartic, forward.position, -forward.momentum)
        back = leapfrog(flipped, quartic, 0.1, 25)
        np.testing.assert_allclose(back.position, start.position, atol=1e-10)
        np.testing.assert_allclose(-back.momentum, start.momentum, atol=1e-10)

    def test_volume_preserving(self):
        apply = flow(quartic, 0.2, 10)
        x = np.array([0.4, -0.3, 0.8, 1.1])
        h = 1e-5
        jacobian = np.empty((4, 4))
        for j in range(4):
            step = np.zeros(4)
            step[j] = h
            jacobian[:, j] = (apply(x + step) - apply(x - step)) / (2.0 * h)
        assert np.linalg.det(jacobian) == pytest.approx(1.0, abs=1e-6)

    def test_energy_error_second_order(self):
        start = phase_state(standard_normal, np.array([1.0]), np.array([0.0]))

        def energy_error(step_size):
            end = leapfrog(start, standard_normal, step_size, int(round(1.0 / step_size)))
            return abs(end.energy - start.energy)

        ratio = energy_error(0.02) / energy_error(0.01)
        assert 3.5 < ratio < 4.5

    def test_stops_at_non_finite(self):
        def wall(q):
            return (-math.inf if q[0] > 1.0 else -0.5 * float(q @ q)), -q

        start = phase_state(wall, np.zeros(1), np.array([10.0]))
        end = leapfrog(start, wall, 0.5, 10)
        assert not end.is_finite
        np.testing.assert_allclose(end.position, [5.0])

    def test_rejects_bad_step(self):
        start = phase_state(standard_normal, np.zeros(1), np.zeros(1))
        with pytest.raises(DomainError):
            leapfrog(start, standard_normal, 0.0, 1)


class TestHmcStep:

    def test_zero_steps_is_identity(self):
        rng = np.random.default_rng(42)
        position, stats = hmc_step(np.array([0.3, -0.2]), standard_normal, 0.5, 10, None, rng, n_steps=0)
        np.testing.assert_array_equal(position, [0.3, -0.2])
        assert stats.accepted
        assert stats.energy_error == 0.0

    def test_stiff_target_diverges(self):
        def stiff(q):
            return -0.5 * float(q @ q) * 1e6, -q * 1e6

        rng = np.random.default_rng(42)
        current = np.zeros(1)
        position, stats = hmc_step(current, stiff, 1.0, 10, None, rng, n_steps=5)
        assert stats.divergent
        assert not stats.accepted
        np.testing.assert_array_equal(position, current)

    def test_large_energy_drop_accepted(self):
        """Starting far out on a stiff step, one leapfrog step sheds most of the energy"""
        rng = np.random.default_rng(42)
        position, stats = hmc_step(np.array([1000.0]), standard_normal, 1.9, 10, None, rng, n_steps=1)
        assert stats.energy_error < -1e4
        assert stats.accept_prob == 1.0
        assert stats.accepted and not stats.divergent
        assert position[0] == pytest.approx(-805.0, abs=10.0)

    def test_non_finite_start(self):
        rng = np.random.default_rng(42)
        with pytest.raises(EvaluationError):
            hmc_step(np.zeros(1), lambda q: (-math.inf, np.zeros(1)), 0.1, 5, None, rng)

    def test_preserves_stationary_distribution(self):
        rng = np.random.default_rng(42)
        draws = rng.standard_normal(5000)
        moved = np.array([hmc_step(np.array([x]), standard_normal, 0.3, 5, None, rng)[0][0] for x in draws])
        assert np.mean(moved) == pytest.approx(0.0, abs=0.06)
        assert np.var(moved) == pytest.approx(1.0, abs=0.08)
        assert not np.array_equal(moved, draws)


class TestRandomWalk:

    def test_uphill_always_accepted(self):
        rng = np.random.default_rng(42)
        position = np.zeros(1)
        for _ in range(200):
            position, stats = rw_metropolis_step(position, lambda q: float(q[0]), 0.5, rng)
            if stats.energy_error <= 0:
                assert stats.accepted

    def test_preserves_stationary_distribution(self):
        rng = np.random.default_rng(42)
        draws = rng.standard_normal(20000)
        oracle = lambda q: -0.5 * float(q @ q)
        moved = np.array([rw_metropolis_step(np.array([x]), oracle, 2.4, rng)[0][0] for x in draws])
        assert np.mean(moved) == pytest.approx(0.0, abs=0.03)
        assert np.var(moved) == pytest.approx(1.0, abs=0.05)

    def test_chain_targets_normal(self):
        rng = np.random.default_rng(42)
        oracle = lambda q: -0.5 * float(q @ q)
        position, values = np.zeros(1), []
        for _ in range(20000):
            position, _ = rw_metropolis_step(position, oracle, 2.4, rng)
            values.append(position[0])
        assert np.mean(values) == pytest.approx(0.0, abs=0.1)
        assert np.var(values) == pytest.approx(1.0, abs=0.15)

    def test_huge_uphill_move(self):
        rng = np.random.default_rng(42)
        position, stats = rw_metropolis_step(np.zeros(1), lambda q: 0.0, 1.0, rng, current_log_density=-1e6)
        assert stats.accepted
        assert stats.accept_prob == 1.0
        assert position[0] != 0.0

    def test_balanced_flux_on_grid_target(self):
        """Transitions between cells of a piecewise-constant target balance in both directions"""
        weights = np.array([1.0, 2.0, 4.0, 2.0, 1.0])

        def oracle(q):
            cell = math.floor(q[0])
            return math.log(weights[cell]) if 0 <= cell < weights.size else -math.inf

        rng = np.random.default_rng(42)
        position, cells = np.array([2.5]), []
        for _ in range(100000):
            position, _ = rw_metropolis_step(position, oracle, 1.0, rng)
            cells.append(math.floor(position[0]))
        cells = np.array(cells)

        np.testing.assert_allclose(np.bincount(cells, minlength=5) / cells.size, weights / weights.sum(), atol=0.02)
        flux = np.zeros((5, 5))
        np.add.at(flux, (cells[:-1], cells[1:]), 1.0)
        for a in range(5):
            for b in range(a + 1, 5):
                assert abs(flux[a, b] - flux[b, a]) <= 4.0 * math.sqrt(flux[a, b] + flux[b, a]) + 1.0, (a, b)

    def test_non_finite_start(self):
        with pytest.raises(EvaluationError):
            rw_metropolis_step(np.zeros(1), lambda q: -math.inf, 1.0, np.random.default_rng(42))


class TestAdaptation:

    def test_windows(self):
        assert warmup_windows(1000) == [(75, 100), (100, 150), (150, 250), (250, 450), (450, 950)]
        assert warmup_windows(100) == [(15, 90)]
        assert warmup_windows(10) == []

    def test_windows_cover_slow_phase(self):
        for warmup in (150, 200, 500, 2000):
            windows = warmup_windows(warmup)
            assert all(end == start for (_, end), (start, _) in zip(windows, windows[1:]))
            assert windows[-1][1] <= warmup

    def test_dual_averaging_direction(self):
        growing = DualAveraging.start(1.0, 0.8)
        shrinking = DualAveraging.start(1.0, 0.8)
        for _ in range(50):
            growing.update(1.0)
            shrinking.update(0.0)
        assert growing.final_step_size > 1.0
        assert shrinking.final_step_size < 1.0

    def test_running_variance(self):
        rng = np.random.default_rng(42)
        x = rng.normal(size=(300, 3)) * [1.0, 2.0, 0.1]
        accumulator = RunningVariance(3)
        for row in x:
            accumulator.update(row)
        np.testing.assert_allclose(accumulator.variance(), np.var(x, axis=0, ddof=1), rtol=1e-10)
        n = 300
        np.testing.assert_allclose(accumulator.regularized_variance(),
                                   n / (n + 5.0) * np.var(x, axis=0, ddof=1) + 1e-3 * 5.0 / (n + 5.0), rtol=1e-10)

    def test_reasonable_step_size(self, gaussian_model):
        rng = np.random.default_rng(42)
        step = find_reasonable_step_size(gaussian_model, np.zeros(3), np.ones(3), rng)
        assert 0.01 < step < 10.0

    def test_adapted_acceptance_and_metric(self):
        sd = np.array([1.0, 2.0, 0.5, 3.0, 1.0])
        model = GaussianModel(np.zeros(5), sd)
        config = SamplerConfig(chains=1, warmup=500, iterations=1000, target_accept=0.8, max_steps=16)
        rng = chain_rng(1, 0)
        warm = adapt_warmup(model, config, rng)
        ratio = warm.inv_metric / sd ** 2
        assert np.all((ratio > 0.4) & (ratio < 2.5))

        position, accept = warm.position, []
        for _ in range(400):
            position, stats = hmc_step(position, model, warm.step_size, 16, warm.inv_metric, rng)
            accept.append(stats.accept_prob)
        assert 0.6 < np.mean(accept) < 0.97

    def test_short_warmup_rejected(self, gaussian_model):
        config = SamplerConfig(chains=1, warmup=50, iterations=100)
        with pytest.raises(ConfigurationError):
            adapt_warmup(gaussian_model, config, chain_rng(1, 0))


class TestConfig:

    @pytest.mark.parametrize('kwargs', [
        {'warmup': 2000, 'iterations': 2000},
        {'chains': 0},
        {'method': 'nuts'},
        {'target_accept': 1.0},
        {'step_size': -0.1},
        {'jitter': 1.0},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigurationError):
            SamplerConfig(**kwargs)

    def test_draws_per_chain(self):
        assert SamplerConfig(warmup=10, iterations=25).draws_per_chain == 15


class TestRun:

    def test_deterministic(self, gaussian_model):
        config = SamplerConfig(chains=2, warmup=100, iterations=200, target_accept=0.8, max_steps=8)
        first = run(gaussian_model, config)
        second = run(gaussian_model, SamplerConfig(chains=2, warmup=100, iterations=200, target_accept=0.8,
                                                   max_steps=8, max_workers=1))
        np.testing.assert_array_equal(first.draws, second.draws)
        assert first.draws.shape == (2, 100, 3)
        assert not np.array_equal(first.draws[0], first.draws[1])

    def test_seed_changes_draws(self, gaussian_model):
        config = dict(chains=1, warmup=100, iterations=150, target_accept=0.8, max_steps=8)
        first = run(gaussian_model, SamplerConfig(seed=1, **config))
        second = run(gaussian_model, SamplerConfig(seed=2, **config))
        assert not np.array_equal(first.draws, second.draws)

    def test_single_draw(self, gaussian_model):
        fit = run(gaussian_model, SamplerConfig(chains=1, warmup=100, iterations=101, max_steps=8))
        assert fit.draws.shape == (1, 1, 3)
        assert fit.parameter_names == gaussian_model.parameter_names

    def test_burn_in_without_adaptation(self, gaussian_model):
        fit = run(gaussian_model, SamplerConfig(chains=2, warmup=0, iterations=50, step_size=0.5, max_steps=8))
        assert fit.draws.shape == (2, 50, 3)
        np.testing.assert_array_equal(fit.inv_metric, np.ones((2, 3)))

    def test_failure_carries_chain(self):
        with pytest.raises(SamplingError) as excinfo:
            run(BrokenModel([0.0], [1.0]), SamplerConfig(chains=2, warmup=100, iterations=200))
        assert excinfo.value.chain == 0

    def test_statistics(self, gaussian_model):
        fit = run(gaussian_model, SamplerConfig(chains=2, warmup=200, iterations=400, target_accept=0.8,
                                                max_steps=16))
        assert fit.divergent.shape == (2, 200)
        assert fit.divergences_per_chain().shape == (2,)
        assert 0.0 < fit.acceptance_rate <= 1.0
        assert fit.step_size.shape == (2,)
        with pytest.raises(KeyError):
            fit.parameter('missing')

    def test_random_walk(self, gaussian_model):
        fit = run(gaussian_model, SamplerConfig(chains=2, warmup=500, iterations=3000, method='rwm'))
        assert fit.method == 'rwm'
        np.testing.assert_allclose(fit.draws.reshape(-1, 3).mean(axis=0), gaussian_model.mean, atol=0.35)
        assert 0.1 < fit.acceptance_rate < 0.5

    @pytest.mark.parametrize('parametrization', ['auto', 'noncentered'])
    def test_site_order_only_relabels(self, reference_sites, parametrization):
        config = SamplerConfig(chains=2, warmup=200, iterations=400, seed=5)
        forward = run(Model1(reference_sites, parametrization=parametrization), config)
        shuffled = [reference_sites[i] for i in (3, 0, 5, 2, 4, 1)]
        backward = run(Model1(shuffled, parametrization=parametrization), config)
        assert backward.parameter_names != forward.parameter_names
        for name in forward.parameter_names:
            np.testing.assert_array_equal(backward.parameter(name), forward.parameter(name), err_msg=name)

    @pytest.mark.slow
    def test_conjugate_posterior(self, reference_sites):
        """With sigma held fixed, tau has a closed-form Gaussian posterior"""
        sigma = 0.3
        model = Model1(reference_sites, fixed_sigma=sigma)
        fit = run(model, SamplerConfig(seed=7, target_accept=0.9))

        tau_hat = np.array([s.tau_hat for s in reference_sites])
        variance = sigma ** 2 + np.array([s.sigma_hat for s in reference_sites]) ** 2
        precision = 1.0 / 5.0 + np.sum(1.0 / variance)
        mean = np.sum(tau_hat / variance) / precision

        tau = fit.parameter('tau')
        assert np.mean(tau) == pytest.approx(mean, abs=0.02)
        assert np.std(tau) == pytest.approx(1.0 / math.sqrt(precision), rel=0.08)
        assert fit.total_divergences == 0
