import itertools
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy import integrate, stats

from highdim_smc._utils import spawn_generators
from highdim_smc.exceptions import ArgumentError, EstimationError, ImproperlyConfigured
from highdim_smc.filtering import (
    BoundedToySSM,
    DiscreteToySSM,
    FilterEstimate,
    GaussianProductSSM,
    GeneralSSM,
    LinearGaussianSSM,
    MarginalTemperingPath,
    MixturePredictiveTarget,
    ObservationRecord,
    TrajectoryLikelihoodTerm,
    TrajectoryTarget,
    TrajectoryTemperingPath,
    abc_error_metric,
    abc_filter,
    abc_indicator,
    abc_monte_carlo_std,
    annealed_trajectory_filter,
    batch_filter_moments,
    datapoint_tempering_targets,
    default_marginal_kernel,
    degenerate_fraction,
    idealized_predictive_estimate,
    kalman_filter,
    marginal_algorithm_step,
    marginal_filter,
    marginal_predictive_rel_error,
    predictive_factor_moments,
    predictive_log_truth,
    read_observations,
    simulate_ssm,
    ssm_trajectory_log_prior,
    trajectory_ess_sigma2,
    write_observations,
)
from highdim_smc.kernels import KernelSpec
from highdim_smc.model import AnnealingSchedule, BayesianLinearModel
from highdim_smc.model.targets import KernelTarget
from highdim_smc.smc import ResamplingPolicy, run_sampler


class TestLinearGaussianSSM:
    def test_zero_noise_is_deterministic(self, rng):
        model = LinearGaussianSSM(2, obs_variance=0.0, state_variance=0.0, initial_state=[1.0, 2.0])
        states, observations = simulate_ssm(model, 4, rng)
        assert_array_equal(states, np.tile([1.0, 2.0], (4, 1)))
        assert_array_equal(observations, np.full(4, 3.0))

    def test_increment_variance(self, rng):
        states, _ = simulate_ssm(LinearGaussianSSM(1), 20_000, rng)
        assert np.diff(states[:, 0]).var() == pytest.approx(1.0, rel=0.05)

    def test_invalid(self, rng):
        with pytest.raises(ArgumentError):
            LinearGaussianSSM(0)
        with pytest.raises(ArgumentError):
            LinearGaussianSSM(2, obs_variance=-1.0)
        with pytest.raises(ArgumentError):
            simulate_ssm(LinearGaussianSSM(1), -1, rng)


class TestKalmanFilter:
    def test_one_step_hand_values(self):
        result = kalman_filter(LinearGaussianSSM(1), [1.0])
        assert_allclose(result.means, [[0.5]])
        assert_allclose(result.covariances, [[[0.5]]])
        assert result.log_predictive[0] == pytest.approx(stats.norm.logpdf(1.0, scale=math.sqrt(2.0)))
        assert_allclose(result.predicted_means[1], [0.5])
        assert_allclose(result.predicted_covariances[1], [[1.5]])

    def test_agrees_with_batch_conditioning(self, rng):
        model = LinearGaussianSSM(3, obs_variance=0.7, state_variance=0.4, initial_state=[0.1, -0.2, 0.3])
        _, observations = simulate_ssm(model, 6, rng)
        result = kalman_filter(model, observations)
        mean, covariance = batch_filter_moments(model, observations)
        assert_allclose(result.means[-1], mean, atol=1e-8)
        assert_allclose(result.covariances[-1], covariance, atol=1e-8)

    def test_log_predictive_sums_to_marginal_likelihood(self, rng):
        model = LinearGaussianSSM(2, obs_variance=0.5, state_variance=1.5)
        _, observations = simulate_ssm(model, 5, rng)
        times = np.arange(1, 6)
        covariance = 2 * 1.5 * np.minimum.outer(times, times) + 0.5 * np.eye(5)
        expected = stats.multivariate_normal(mean=np.zeros(5), cov=covariance).logpdf(observations)
        assert kalman_filter(model, observations).log_predictive.sum() == pytest.approx(expected, rel=1e-10)

    def test_no_observations(self):
        result = kalman_filter(LinearGaussianSSM(2), [])
        assert result.means.shape == (0, 2)
        assert result.predicted_means.shape == (1, 2)


class TestToyModels:
    def test_discrete_model_validation(self):
        with pytest.raises(ArgumentError):
            DiscreteToySSM([[0.5, 0.4], [0.5, 0.5]], [[0.0, 0.0]])
        with pytest.raises(ArgumentError):
            DiscreteToySSM([[1.0]], [[0.0, 0.0]])

    def test_discrete_simulation(self, rng):
        model = DiscreteToySSM([[0.7, 0.3], [0.2, 0.8]], np.log([[0.9, 0.2], [0.1, 0.8]]), dimension=3)
        states, observations = simulate_ssm(model, 50, rng)
        assert set(np.unique(states)) <= {0.0, 1.0}
        assert set(np.unique(observations)) <= {0.0, 1.0}

    def test_bounded_model_transitions(self, rng):
        model = BoundedToySSM(amplitude=0.8, dimension=3)
        draws = model.transition_sample(np.full((2_000, 3), 0.25), rng)
        assert model.support.contains(draws)
        low, high = model.likelihood_bounds(0.3)
        assert low <= model.log_likelihood(0.3, draws).min() and model.log_likelihood(0.3, draws).max() <= high

    def test_bounded_model_validation(self):
        with pytest.raises(ArgumentError):
            BoundedToySSM(amplitude=1.0)
        with pytest.raises(ArgumentError):
            BoundedToySSM(precision=0.0)

    @pytest.mark.parametrize(
        "model", [BoundedToySSM(amplitude=0.6, precision=4.0), GaussianProductSSM(state_variance=0.5, obs_sd=0.8)]
    )
    def test_predictive_factor_against_quadrature(self, model):
        previous = np.array([0.1, 0.6])
        closed = model.log_predictive_factor(0.3, previous)
        generic = GeneralSSM.log_predictive_factor(model, 0.3, previous)
        assert_allclose(closed, generic, rtol=1e-7)


class TestGaussianProductSSM:
    @pytest.fixture
    def model(self):
        return GaussianProductSSM(state_variance=0.5, obs_sd=0.8, dimension=2, initial_state=0.2)

    def test_tempered_moments_match_kalman(self, model):
        observations = [0.4, -0.3, 1.1]
        means, variances = model.tempered_filter_moments(observations, 1.0)
        result = kalman_filter(model.coordinate_model(), observations)
        assert_allclose(means, result.means[:, 0], atol=1e-12)
        assert_allclose(variances, result.covariances[:, 0, 0], atol=1e-12)

    def test_zero_temperature_ignores_last_datum(self, model):
        means, variances = model.tempered_filter_moments([0.4, 5.0], 0.0)
        first_means, first_variances = model.tempered_filter_moments([0.4], 1.0)
        assert means[-1] == pytest.approx(first_means[0])
        assert variances[-1] == pytest.approx(first_variances[0] + 0.5)

    def test_likelihood_variance_by_simulation(self, model, rng):
        observations = [0.4, -0.3]
        means, variances = model.tempered_filter_moments(observations, 0.6)
        draws = means[-1] + math.sqrt(variances[-1]) * rng.standard_normal(400_000)
        simulated = model.log_likelihood(observations[-1], draws).var()
        assert model.tempered_likelihood_variance(observations, 0.6) == pytest.approx(simulated, rel=0.02)

    def test_backward_sampling_marginals(self, model, rng):
        draws = model.sample_tempered_trajectories([0.4, 5.0], 0.0, 100_000, rng)
        means, variances = model.tempered_filter_moments([0.4], 1.0)
        assert draws.shape == (100_000, 2, 2)
        assert_allclose(draws[:, 0, :].mean(axis=0), means[0], atol=0.01)
        assert_allclose(draws[:, 0, :].var(axis=0), variances[0], rtol=0.02)
        assert_allclose(draws[:, 1, :].var(axis=0), variances[0] + 0.5, rtol=0.02)


class TestAbcFilter:
    def test_indicator(self):
        assert abc_indicator(3.0, 7.5, 5.0)
        assert not abc_indicator(3.0, 8.0, 5.0)
        assert_array_equal(abc_indicator(0.0, [-1.0, 2.0], 1.5), [True, False])

    def test_infinite_tolerance_keeps_uniform_weights(self, rng):
        model = LinearGaussianSSM(2)
        _, observations = simulate_ssm(model, 5, rng)
        estimate = abc_filter(model, observations, np.inf, 50, rng)
        assert not estimate.degenerate
        assert_allclose(estimate.ess, 50.0)
        assert_allclose(estimate.log_predictive, 0.0, atol=1e-12)
        assert estimate.horizon == 5

    def test_tiny_tolerance_degenerates(self, rng):
        model = LinearGaussianSSM(2)
        _, observations = simulate_ssm(model, 5, rng)
        estimate = abc_filter(model, observations, 1e-12, 20, rng)
        assert estimate.degenerate
        assert estimate.degenerate_time == 1
        assert np.all(np.isnan(estimate.means))

    def test_resampling(self, rng):
        model = LinearGaussianSSM(2)
        _, observations = simulate_ssm(model, 20, rng)
        estimate = abc_filter(model, observations, 2.0, 500, rng, resample=True)
        assert not estimate.degenerate
        assert estimate.resample_count > 0
        assert np.all(estimate.ess >= 1.0)

    @pytest.mark.parametrize("epsilon, particle_count", [(0.0, 10), (1.0, 0)])
    def test_invalid(self, epsilon, particle_count, rng):
        with pytest.raises(ArgumentError):
            abc_filter(LinearGaussianSSM(1), [0.0], epsilon, particle_count, rng)

    def test_monte_carlo_error_shrinks_with_particles(self):
        model = LinearGaussianSSM(4)
        _, observations = simulate_ssm(model, 10, np.random.default_rng(3))
        spreads = []
        for particle_count in (250, 1_000, 4_000):
            estimates = [
                abc_filter(model, observations, 5.0, particle_count, rng, resample=True)
                for rng in spawn_generators((3, particle_count), 30)
            ]
            spreads.append(np.mean([abc_monte_carlo_std(estimates, k) for k in range(1, 11)]))
        assert spreads[2] < spreads[1] < spreads[0]
        assert spreads[2] < 0.5 * spreads[0]

    def test_degeneracy_fades_with_particles(self):
        model = LinearGaussianSSM(2)
        _, observations = simulate_ssm(model, 10, np.random.default_rng(5))
        fractions = []
        for particle_count in (10, 100, 1_000):
            estimates = [
                abc_filter(model, observations, 0.2, particle_count, rng, resample=True)
                for rng in spawn_generators((5, particle_count), 40)
            ]
            fractions.append(degenerate_fraction(estimates))
        assert fractions[0] > 0.5
        assert fractions[0] >= fractions[1] >= fractions[2]
        assert fractions[2] < 0.1


class TestAbcErrorMetric:
    def estimate(self, value, degenerate=False):
        estimate = FilterEstimate.empty(2, 1)
        estimate.means[:] = value
        estimate.degenerate = degenerate
        return estimate

    def test_symmetric_errors(self):
        truth = np.array([[0.0], [1.0]])
        estimates = [self.estimate(1.3), self.estimate(0.7), self.estimate(100.0, degenerate=True)]
        assert abc_error_metric(estimates, truth, 2) == pytest.approx(0.3)
        assert abc_error_metric(estimates, truth[:, 0], 2, power=1) == pytest.approx(0.3)

    def test_needs_two_runs(self):
        with pytest.raises(EstimationError):
            abc_error_metric([self.estimate(1.0), self.estimate(1.0, degenerate=True)], np.ones((2, 1)), 1)

    def test_monte_carlo_std(self):
        assert abc_monte_carlo_std([self.estimate(1.0), self.estimate(3.0)], 1) == pytest.approx(math.sqrt(2.0))

    def test_degenerate_fraction(self):
        assert math.isnan(degenerate_fraction([]))
        assert degenerate_fraction([self.estimate(0.0), self.estimate(0.0, degenerate=True)]) == 0.5


class TestDatapointTemperingTargets:
    terms = [lambda x: x[:, 0], lambda x: 2 * x[:, 0], lambda x: x[:, 1]]
    x = np.array([[1.0, 2.0], [3.0, -1.0]])

    def base(self, x):
        return -x[:, 0] ** 2

    def test_end_points(self):
        start = datapoint_tempering_targets(self.terms, 2, 0, 4, self.base)
        end = datapoint_tempering_targets(self.terms, 2, 4, 4, self.base)
        assert_allclose(start(self.x), [0.0, -6.0])
        assert_allclose(end(self.x), [2.0, 0.0])

    def test_hand_value(self):
        assert_allclose(datapoint_tempering_targets(self.terms, 2, 2, 4, self.base)(self.x), [1.0, -3.0])
        assert_allclose(datapoint_tempering_targets(self.terms, 1, 1, 4)(self.x), [0.25, 0.75])

    @pytest.mark.parametrize("n, k, steps", [(0, 0, 4), (4, 0, 4), (1, 5, 4), (1, 0, 0)])
    def test_invalid(self, n, k, steps):
        with pytest.raises(ArgumentError):
            datapoint_tempering_targets(self.terms, n, k, steps)

    def test_schedule_length(self):
        with pytest.raises(ArgumentError):
            datapoint_tempering_targets(self.terms, 1, 0, 4, schedule=AnnealingSchedule.linear(3, phi0=0.0))

    def test_linear_model_bridge(self, rng):
        model, _ = BayesianLinearModel.simulate(5, 3, rng)
        log_density = datapoint_tempering_targets(model.potentials(), 3, 2, 4, model.log_prior)
        beta = rng.standard_normal((6, 3))
        difference = log_density(beta) - model.datapoint_target(3, 0.5).log_density(beta)
        assert_allclose(difference, difference[0], atol=1e-10)


class TestTrajectoryTerms:
    def test_likelihood_term(self, rng):
        model = GaussianProductSSM(obs_sd=0.5, dimension=3)
        x = rng.standard_normal((4, 2, 3))
        term = TrajectoryLikelihoodTerm(model, 0.7, 2)
        assert_allclose(term(x), np.sum(-0.5 * (0.7 - x[:, 1, :]) ** 2 / 0.25, axis=-1))

    def test_log_prior(self, rng):
        model = GaussianProductSSM(state_variance=0.5, dimension=2, initial_state=0.3)
        x = rng.standard_normal((4, 3, 2))
        previous = np.concatenate([np.full((4, 1, 2), 0.3), x[:, :-1, :]], axis=1)
        expected = stats.norm.logpdf(x, loc=previous, scale=math.sqrt(0.5)).sum(axis=(1, 2))
        assert_allclose(ssm_trajectory_log_prior(model)(x), expected)


class TestTrajectoryTarget:
    def test_block_ratio_matches_full_difference(self, rng):
        model = GaussianProductSSM(state_variance=0.5, obs_sd=0.8, dimension=2)
        target = TrajectoryTarget(model, [0.4, -0.3, 1.1], 1, AnnealingSchedule.linear(2, phi0=0.0))
        assert target.temperature == 0.5
        x = rng.standard_normal((5, 3, 2))
        for t in range(3):
            proposal = rng.standard_normal((5, 2))
            fast = target.block_log_ratio(x, (t,), proposal, None)
            generic = KernelTarget.block_log_ratio(target, x, (t,), proposal, None)
            assert fast.shape == (5, 2)
            assert_allclose(fast.sum(axis=1), generic, atol=1e-10)

    def test_exact_sampling_support(self):
        schedule = AnnealingSchedule.linear(2, phi0=0.0)
        assert TrajectoryTarget(GaussianProductSSM(), [0.1], 0, schedule).supports_exact_sampling
        assert not TrajectoryTarget(BoundedToySSM(), [0.1], 0, schedule).supports_exact_sampling


class TestTrajectoryTemperingPath:
    def test_first_datum_starts_from_prior(self, rng):
        path = TrajectoryTemperingPath(GaussianProductSSM(dimension=3), [0.2], 4)
        positions = path.initial_positions(7, rng)
        assert positions.shape == (7, 1, 3)
        assert path.extend(positions, rng).shape == (7, 2, 3)
        assert path.temperature(4) == 1.0

    def test_later_datum_needs_exact_sampler(self, rng):
        path = TrajectoryTemperingPath(BoundedToySSM(dimension=2), [0.2, 0.4], 2)
        assert path.temperature(0) == 1.0
        with pytest.raises(ImproperlyConfigured):
            path.initial_positions(5, rng)

    def test_invalid(self):
        with pytest.raises(ArgumentError):
            TrajectoryTemperingPath(GaussianProductSSM(), [0.2], 0)
        with pytest.raises(ArgumentError):
            TrajectoryTemperingPath(GaussianProductSSM(), [], 2)


class TestAnnealedTrajectoryFilter:
    def test_single_datum_is_one_sampler_run(self):
        model = GaussianProductSSM(state_variance=0.5, obs_sd=0.8, dimension=3)
        kernel = KernelSpec.rwm_within_gibbs(0.5)
        estimate = annealed_trajectory_filter(model, [0.7], kernel, 40, np.random.default_rng(9), steps_per_datum=5)
        report = run_sampler(
            TrajectoryTemperingPath(model, [0.7], 5),
            None,
            kernel,
            ResamplingPolicy.never(),
            40,
            np.random.default_rng(9),
        )
        ensemble = estimate.extra["ensemble"]
        assert_array_equal(ensemble.log_weights, report.ensemble.log_weights)
        assert_array_equal(ensemble.positions, report.ensemble.positions)
        assert estimate.log_predictive[0] == pytest.approx(report.log_nc_estimate, abs=1e-12)
        assert estimate.ess[0] == pytest.approx(report.terminal_ess)

    def test_exact_kernel_tracks_filter_means(self, rng):
        model = GaussianProductSSM(state_variance=0.5, obs_sd=0.8, dimension=2)
        _, observations = simulate_ssm(model, 3, rng)
        estimate = annealed_trajectory_filter(model, observations, KernelSpec.exact(), 2_000, rng)
        for k in range(1, 4):
            means, _ = model.tempered_filter_moments(observations[:k], 1.0)
            assert_allclose(estimate.means[k - 1], means[-1], atol=0.12)
        assert estimate.extra["acceptance_rates"].shape == (3, 2)
        assert np.all((estimate.ess >= 1.0) & (estimate.ess <= 2_000.0))

    def test_needs_observations(self, rng):
        with pytest.raises(ArgumentError):
            annealed_trajectory_filter(GaussianProductSSM(), [], KernelSpec.exact(), 10, rng)


class TestTrajectoryEssSigma2:
    def test_single_datum_integral(self):
        model = GaussianProductSSM(state_variance=0.5, obs_sd=0.8, dimension=4)
        expected, _ = integrate.quad(lambda s: model.tempered_likelihood_variance([0.9], s), 0.0, 1.0)
        assert trajectory_ess_sigma2(model, [0.9]) == pytest.approx(expected, rel=1e-6)

    def test_adds_over_data(self):
        model = GaussianProductSSM(dimension=4)
        total = trajectory_ess_sigma2(model, [0.9, -0.4])
        first = trajectory_ess_sigma2(model, [0.9])
        assert total > first > 0.0

    def test_needs_analytic_variance(self):
        with pytest.raises(ImproperlyConfigured):
            trajectory_ess_sigma2(BoundedToySSM(), [0.3])


class TestMarginalPredictiveError:
    def discrete_model(self):
        return DiscreteToySSM([[0.7, 0.3], [0.2, 0.8]], np.log([[0.9, 0.2], [0.1, 0.8]]))

    def test_against_enumeration(self):
        model = self.discrete_model()
        probabilities = np.array([0.4, 0.6])
        factor = model.transition_matrix @ np.exp(model.log_likelihood_table[0])
        mean = probabilities @ factor
        d, particle_count = 2, 3
        second_moment = 0.0
        for states in itertools.product(range(2), repeat=d):
            weight = np.prod(probabilities[list(states)])
            second_moment += weight * (np.prod(factor[list(states)]) / mean**d - 1.0) ** 2
        value = marginal_predictive_rel_error(model, 0, model.marginal(probabilities), d, particle_count)
        assert value == pytest.approx(second_moment / particle_count, rel=1e-10)

    def test_moments_of_discrete_marginal(self):
        model = self.discrete_model()
        mean, variance = predictive_factor_moments(model, 0, model.marginal([0.4, 0.6]))
        assert mean == pytest.approx(0.4 * 0.69 + 0.6 * 0.34)
        assert variance == pytest.approx(0.4 * 0.6 * 0.35**2)

    def test_constant_factor_has_no_error(self, rng):
        model = BoundedToySSM(amplitude=0.0, precision=3.0)
        marginal = stats.uniform()
        assert marginal_predictive_rel_error(model, 0.4, marginal, 8, 10) == pytest.approx(0.0, abs=1e-12)
        estimate = idealized_predictive_estimate(model, 0.4, marginal, 8, 10, rng)
        assert estimate == pytest.approx(predictive_log_truth(model, 0.4, marginal, 8), rel=1e-10)

    def test_error_grows_with_dimension(self):
        model = BoundedToySSM(amplitude=0.9, precision=10.0)
        errors = [marginal_predictive_rel_error(model, 0.5, stats.uniform(), d, 10) for d in (2, 4, 8)]
        assert 0.0 < errors[0] < errors[1] < errors[2]

    def test_log_error_slope(self):
        # factor variance over squared mean is about 0.27 at precision 100
        model = BoundedToySSM(amplitude=0.9, precision=100.0)
        dimensions = (2, 4, 8, 16)
        errors = [marginal_predictive_rel_error(model, 0.5, stats.uniform(), d, 10) for d in dimensions]
        fit = stats.linregress(dimensions, np.log(errors))
        assert fit.slope > 0.0
        assert fit.pvalue / 2.0 < 0.01

    def test_invalid(self):
        with pytest.raises(ArgumentError):
            marginal_predictive_rel_error(BoundedToySSM(), 0.5, stats.uniform(), 0, 10)


class TestMarginalAlgorithm:
    @pytest.fixture
    def model(self):
        return BoundedToySSM(amplitude=0.5, precision=10.0, dimension=2)

    def test_mixture_density(self, model):
        centres = np.array([[0.2, 0.5], [0.7, 0.1]])
        x = np.array([[0.4, 0.3]])
        mixture = sum(np.prod(1.0 + 0.5 * np.cos(2 * np.pi * (x[0] - c))) for c in centres)
        target = MixturePredictiveTarget(model, 0.6, centres, 0.0)
        assert target.log_density(x)[0] == pytest.approx(math.log(mixture))
        tempered = MixturePredictiveTarget(model, 0.6, centres, 0.5)
        likelihood = -0.5 * 10.0 * np.sum((0.6 - x[0]) ** 2)
        assert tempered.log_density(x)[0] == pytest.approx(math.log(mixture) + 0.5 * likelihood)

    def test_path_validation(self, model, rng):
        centres = np.full((4, 2), 0.5)
        with pytest.raises(ArgumentError):
            MarginalTemperingPath(model, 0.5, centres, AnnealingSchedule.linear(4, phi0=0.5))
        path = MarginalTemperingPath(model, 0.5, centres, AnnealingSchedule.linear(4, phi0=0.0))
        with pytest.raises(ArgumentError):
            path.initial_positions(3, rng)
        assert path.initial_positions(4, rng).shape == (4, 2)

    def test_step(self, model, rng):
        previous = rng.random((50, 2))
        step = marginal_algorithm_step(
            model, previous, 0.5, AnnealingSchedule.linear(4, phi0=0.0), default_marginal_kernel(model), 50, rng
        )
        assert step.positions.shape == (50, 2)
        assert model.support.contains(step.positions)
        assert math.isfinite(step.log_predictive)
        assert all(any(np.array_equal(c, p) for p in previous) for c in step.centres)

    def test_mixture_components_follow_previous_weights(self, model, rng):
        previous = rng.random((5, 2))
        log_weights = np.array([-np.inf, 0.0, -np.inf, -np.inf, -np.inf])
        step = marginal_algorithm_step(
            model,
            previous,
            0.5,
            AnnealingSchedule.linear(3, phi0=0.0),
            default_marginal_kernel(model),
            20,
            rng,
            previous_log_weights=log_weights,
        )
        assert_array_equal(step.centres, np.tile(previous[1], (20, 1)))

    def test_empty_previous_particles(self, model, rng):
        with pytest.raises(ArgumentError):
            marginal_algorithm_step(
                model, np.empty((0, 2)), 0.5, AnnealingSchedule.linear(3, phi0=0.0), KernelSpec.rwm(0.1), 5, rng
            )

    def test_filter(self, model, rng):
        estimate = marginal_filter(model, [0.4, 0.6], default_marginal_kernel(model), 30, rng)
        assert np.all(np.isfinite(estimate.means))
        assert np.all(np.isfinite(estimate.log_predictive))
        assert np.all((estimate.ess >= 1.0) & (estimate.ess <= 30.0))


class TestObservationRecords:
    def test_round_trip(self, tmp_path, rng):
        record = ObservationRecord(rng.standard_normal(5), seed=42)
        path = tmp_path / "y.csv"
        write_observations(path, record)
        loaded = read_observations(path)
        assert loaded.seed == 42
        assert_array_equal(loaded.observations, record.observations)
        assert path.read_bytes().startswith(b"# seed = 42\r\ntime,y\r\n")

    def test_bad_header(self, tmp_path):
        path = tmp_path / "y.csv"
        path.write_text("t,value\n1,0.5\n")
        with pytest.raises(ArgumentError):
            read_observations(path)

    def test_time_gap(self, tmp_path):
        path = tmp_path / "y.csv"
        path.write_text("time,y\n1,0.5\n3,0.1\n")
        with pytest.raises(ArgumentError):
            read_observations(path)
