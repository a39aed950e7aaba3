import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from highdim_smc._utils import log_mean_exp, normalized_weights, spawn_generators
from highdim_smc.exceptions import ArgumentError, DegeneracyError, ImproperlyConfigured, PropagationError
from highdim_smc.kernels import BaseKernelBackend, KernelSpec
from highdim_smc.model import AnnealingSchedule, BayesianLinearModel, GaussianPotential, ProductTarget
from highdim_smc.smc import (
    AnnealedProductPath,
    AnnealedQuadraticPath,
    DatapointTemperingPath,
    Ensemble,
    ResamplingPolicy,
    SMCSampler,
    annealing_path,
    ess,
    final_resample_estimate,
    log_ess,
    multinomial_resample,
    norm_const_log_estimate,
    run_sampler,
    weight_update,
)
from highdim_smc.theory import VariancePath, final_resample_mse_bound, gaussian_log_nc_ratio, sigma2_exact_kernel


class ShiftBackend(BaseKernelBackend):
    """
    Moves every particle by +1, whatever the target.
    """

    def apply(self, target, positions, rng):
        return positions + 1.0, 1.0


class TestNumerics:
    def test_log_mean_exp(self):
        assert log_mean_exp(np.log([1.0, 2.0, 3.0])) == pytest.approx(math.log(2.0))
        assert log_mean_exp([0.0, -np.inf]) == pytest.approx(math.log(0.5))

    def test_log_mean_exp_large_values(self):
        assert log_mean_exp([1000.0, 1000.0]) == pytest.approx(1000.0)

    def test_normalized_weights(self):
        assert_allclose(normalized_weights(np.log([1.0, 3.0])), [0.25, 0.75])
        assert_allclose(normalized_weights([-1e4, -1e4]), [0.5, 0.5])

    def test_normalized_weights_degenerate(self):
        with pytest.raises(DegeneracyError):
            normalized_weights([-np.inf, -np.inf])

    def test_spawned_generators_depend_on_index_only(self):
        first = [g.random() for g in spawn_generators(7, 3)]
        second = [g.random() for g in spawn_generators(7, 5)]
        assert first == second[:3]


class TestEss:
    def test_hand_value(self):
        assert ess(np.log([1.0, 2.0, 3.0])) == pytest.approx(18.0 / 7.0)

    def test_equal_weights(self):
        assert ess(np.full(10, -3.0)) == pytest.approx(10.0)

    def test_single_survivor(self):
        assert ess([0.0, -np.inf, -np.inf]) == pytest.approx(1.0)

    def test_shift_invariance(self):
        lw = np.log([1.0, 2.0, 3.0])
        assert log_ess(lw + 500.0) == pytest.approx(log_ess(lw))

    @pytest.mark.parametrize("log_weights", [[-np.inf, -np.inf], [0.0, np.nan], []])
    def test_not_computable(self, log_weights):
        with pytest.raises(DegeneracyError):
            ess(log_weights)


class TestEnsemble:
    def test_shape_validation(self):
        with pytest.raises(ArgumentError):
            Ensemble(np.zeros(3))
        with pytest.raises(ArgumentError):
            Ensemble(np.zeros((3, 2)), np.zeros(2))

    def test_non_finite_increment(self):
        ensemble = Ensemble(np.zeros((3, 1)))
        with pytest.raises(PropagationError) as info:
            ensemble.add_log_increment([0.0, np.nan, 1.0])
        assert info.value.particle_index == 1

    def test_resampling_point_mass(self, rng):
        ensemble = Ensemble(np.array([[1.0], [2.0], [3.0]]), [-np.inf, 0.0, -np.inf])
        multinomial_resample(ensemble, rng, step=4)
        assert_array_equal(ensemble.positions[:, 0], [2.0, 2.0, 2.0])
        assert_array_equal(ensemble.log_weights, np.zeros(3))
        assert ensemble.resample_events == [(4, 1.0)]
        assert ensemble.block_log_means == [pytest.approx(math.log(1.0 / 3.0))]

    def test_resampling_all_zero_weights(self, rng):
        ensemble = Ensemble(np.zeros((2, 1)), [-np.inf, -np.inf])
        with pytest.raises(DegeneracyError):
            multinomial_resample(ensemble, rng)

    def test_close_block_bookkeeping(self):
        ensemble = Ensemble(np.zeros((2, 1)), np.log([1.0, 3.0]))
        ensemble.close_block(3)
        ensemble.close_block(5)
        assert ensemble.block_bounds == [(0, 3), (3, 5)]
        assert ensemble.block_log_means[0] == pytest.approx(math.log(2.0))

    def test_copy_is_independent(self):
        ensemble = Ensemble(np.zeros((2, 1)))
        other = ensemble.copy()
        other.add_log_increment([1.0, 1.0])
        assert_array_equal(ensemble.log_weights, [0.0, 0.0])


class TestWeightUpdate:
    def test_increment(self):
        ensemble = Ensemble(np.array([[1.0, 1.0], [0.0, 2.0]]))
        weight_update(ensemble, 0.5, 0.75, ProductTarget(GaussianPotential(), 2))
        assert_allclose(ensemble.log_weights, [-0.25, -0.5])

    def test_temperatures_must_increase(self):
        with pytest.raises(ArgumentError):
            weight_update(Ensemble(np.zeros((1, 1))), 0.5, 0.5, ProductTarget(GaussianPotential(), 1))

    def test_weights_use_pre_move_positions(self, rng):
        path = AnnealedProductPath(ProductTarget(GaussianPotential(), 1), AnnealingSchedule.linear(2, phi0=0.5))
        sampler = SMCSampler(path, KernelSpec.exact(), ResamplingPolicy.never(), 3)
        sampler.backend = ShiftBackend(KernelSpec.exact())
        ensemble = Ensemble(np.array([[0.0], [1.0], [2.0]]))

        sampler.step(ensemble, 1, rng)

        # 0.25 * (-x**2 / 2) at the positions 0, 1, 2 before the shift
        assert_allclose(ensemble.log_weights, [0.0, -0.125, -0.5])
        assert_array_equal(ensemble.positions[:, 0], [1.0, 2.0, 3.0])
        assert ensemble.step == 1


class TestResamplingPolicy:
    def test_never(self):
        policy = ResamplingPolicy.never()
        assert not policy.should_resample(3, 1.0, 100, 10)
        assert not policy.should_resample(10, 1.0, 100, 10)

    def test_ess_threshold(self):
        policy = ResamplingPolicy.ess_threshold(fraction=0.5)
        assert policy.should_resample(3, 49.0, 100, 10)
        assert not policy.should_resample(3, 50.0, 100, 10)

    def test_ess_threshold_plus_final(self):
        policy = ResamplingPolicy.ess_threshold(final=True)
        assert policy.should_resample(10, 99.0, 100, 10)
        assert not policy.should_resample(9, 99.0, 100, 10)

    def test_deterministic(self):
        policy = ResamplingPolicy.deterministic([2, 5])
        assert [n for n in range(1, 11) if policy.should_resample(n, 100.0, 100, 10)] == [2, 5]

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"kind": "sometimes"},
            {"kind": "deterministic_times", "times": (3, 2)},
            {"kind": "deterministic_times", "times": (0,)},
            {"kind": "never", "times": (2,)},
            {"kind": "ess_threshold", "threshold": 0.5},
            {"kind": "ess_threshold", "threshold_fraction": 1.5},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ArgumentError):
            ResamplingPolicy(**kwargs)

    def test_validate_for_sampler(self):
        with pytest.raises(ArgumentError):
            ResamplingPolicy.deterministic([10]).validate_for(10, 100)
        with pytest.raises(ArgumentError):
            ResamplingPolicy.ess_threshold(threshold=200).validate_for(10, 100)


class TestPaths:
    def test_annealing_path_dispatch(self, rng):
        schedule = AnnealingSchedule.linear(4, phi0=0.5)
        model, _ = BayesianLinearModel.simulate(5, 2, rng)
        assert isinstance(annealing_path(ProductTarget(GaussianPotential(), 2), schedule), AnnealedProductPath)
        assert isinstance(annealing_path(model.posterior_target(), schedule), AnnealedQuadraticPath)
        with pytest.raises(ImproperlyConfigured):
            annealing_path(object(), schedule)

    def test_quadratic_path_needs_positive_phi0(self, rng):
        model, _ = BayesianLinearModel.simulate(5, 2, rng)
        with pytest.raises(ArgumentError):
            AnnealedQuadraticPath(model.posterior_target(), AnnealingSchedule.linear(4, phi0=0.0))

    def test_datapoint_path_locate(self, rng):
        model, _ = BayesianLinearModel.simulate(3, 2, rng)
        path = DatapointTemperingPath(model, 4)
        assert path.steps == 12
        assert path.locate(1) == (1, 1)
        assert path.locate(4) == (1, 4)
        assert path.locate(5) == (2, 1)
        assert path.temperature(8) == pytest.approx(2.0)

    def test_datapoint_increments_add_up_to_likelihood(self, rng):
        model, _ = BayesianLinearModel.simulate(3, 2, rng)
        path = DatapointTemperingPath(model, 4)
        beta = rng.standard_normal((6, 2))
        total = sum(path.log_increment(beta, n) for n in range(1, path.steps + 1))
        assert_allclose(total, model.log_likelihood(beta))


class TestSampler:
    def test_particle_count_positive(self):
        path = AnnealedProductPath(ProductTarget(GaussianPotential(), 2), AnnealingSchedule.linear(2, phi0=0.5))
        with pytest.raises(ArgumentError):
            SMCSampler(path, KernelSpec.exact(), ResamplingPolicy.never(), 0)

    def test_single_block_without_resampling(self, rng):
        report = run_sampler(
            ProductTarget(GaussianPotential(), 5),
            AnnealingSchedule.linear(5, phi0=0.5),
            KernelSpec.exact(),
            ResamplingPolicy.never(),
            50,
            rng,
        )
        assert report.block_count == 1
        assert report.block_bounds == [(0, 5)]
        assert report.log_nc_estimate == pytest.approx(log_mean_exp(report.ensemble.log_weights))
        assert report.ess_trace.shape == (5,)
        assert report.terminal_ess == report.ess_trace[-1]
        assert_allclose(report.temperatures, AnnealingSchedule.linear(5, phi0=0.5).values())

    def test_blocks_partition_the_path(self, rng):
        report = run_sampler(
            ProductTarget(GaussianPotential(), 20),
            AnnealingSchedule.linear(20, phi0=0.05),
            KernelSpec.rwm_for_initial_temperature(0.05),
            ResamplingPolicy.ess_threshold(final=True),
            40,
            rng,
        )
        bounds = report.block_bounds
        assert bounds[0][0] == 0 and bounds[-1][1] == 20
        assert all(a[1] == b[0] for a, b in zip(bounds, bounds[1:]))
        assert [end for _, end in bounds[:-1]] == report.resample_steps
        assert report.final_resampled
        # the final resampling leaves an empty last block
        assert bounds[-1] == (20, 20) and report.block_log_means[-1] == pytest.approx(0.0)
        assert report.log_nc_estimate == pytest.approx(sum(report.block_log_means))

    def test_deterministic_resampling_steps(self, rng):
        report = run_sampler(
            ProductTarget(GaussianPotential(), 10),
            AnnealingSchedule.linear(10, phi0=0.5),
            KernelSpec.exact(),
            ResamplingPolicy.deterministic([3, 7]),
            20,
            rng,
        )
        assert report.resample_steps == [3, 7]
        assert report.block_bounds == [(0, 3), (3, 7), (7, 10)]
        assert norm_const_log_estimate(report) == pytest.approx(sum(report.block_log_means))

    def test_snapshots(self, rng):
        report = run_sampler(
            ProductTarget(GaussianPotential(), 4),
            AnnealingSchedule.linear(4, phi0=0.5),
            KernelSpec.exact(),
            ResamplingPolicy.never(),
            10,
            rng,
            snapshot_steps=(0, 2),
        )
        assert sorted(report.snapshots) == [0, 2]
        assert report.snapshots[2].shape == (10, 4)

    def test_seeded_runs_repeat(self):
        def run(seed):
            return run_sampler(
                ProductTarget(GaussianPotential(), 8),
                AnnealingSchedule.linear(8, phi0=0.25),
                KernelSpec.rwm_for_initial_temperature(0.25),
                ResamplingPolicy.ess_threshold(),
                30,
                np.random.default_rng(seed),
            ).log_nc_estimate

        assert run(11) == run(11)
        assert run(11) != run(12)

    def test_short_temperature_range_keeps_weights_even(self, rng):
        # phi0 close to one: the weights barely move
        report = run_sampler(
            ProductTarget(GaussianPotential(), 4),
            AnnealingSchedule.linear(4, phi0=0.999999),
            KernelSpec.exact(),
            ResamplingPolicy.never(),
            25,
            rng,
        )
        assert report.terminal_ess == pytest.approx(25.0, rel=1e-4)

    def test_final_resample_estimate(self, rng):
        report = run_sampler(
            ProductTarget(GaussianPotential(), 6),
            AnnealingSchedule.linear(6, phi0=0.5),
            KernelSpec.exact(),
            ResamplingPolicy.never(),
            2_000,
            rng,
        )
        value = final_resample_estimate(report, lambda x: x**2, 0, rng)
        assert value == pytest.approx(1.0, abs=0.15)


@pytest.mark.slow
class TestNormalizingConstant:
    @pytest.mark.parametrize("policy", [ResamplingPolicy.never(), ResamplingPolicy.ess_threshold()])
    def test_unbiased(self, policy):
        d, phi0, particle_count, replicates = 10, 0.5, 100, 5_000
        target = ProductTarget(GaussianPotential(), d)
        schedule = AnnealingSchedule.linear(d, phi0=phi0)
        log_truth = gaussian_log_nc_ratio(d, phi0)
        ratios = []
        for rng in spawn_generators(5, replicates):
            report = run_sampler(target, schedule, KernelSpec.exact(), policy, particle_count, rng)
            ratios.append(math.exp(report.log_nc_estimate - log_truth))
        standard_error = np.std(ratios, ddof=1) / math.sqrt(replicates)
        # 99% interval around the true constant
        assert abs(np.mean(ratios) - 1.0) < 2.576 * standard_error


@pytest.mark.slow
class TestFinalResampleBound:
    @pytest.mark.parametrize("particle_count", [50, 200])
    def test_mean_square_error_within_bound(self, particle_count):
        d, replicates = 64, 400
        target = ProductTarget(GaussianPotential(), d)
        schedule = AnnealingSchedule.linear(d, phi0=0.5)
        sigma2 = sigma2_exact_kernel(VariancePath.from_schedule(schedule, GaussianPotential()), 0.0, 1.0)
        assert sigma2 == pytest.approx(0.25, rel=1e-6)
        squared_errors = []
        for rng in spawn_generators((6, particle_count), replicates):
            report = run_sampler(target, schedule, KernelSpec.exact(), ResamplingPolicy.never(), particle_count, rng)
            # the target mean of every coordinate is zero and its variance one
            squared_errors.append(final_resample_estimate(report, lambda x: x, 0, rng) ** 2)
        mse = float(np.mean(squared_errors))
        assert mse <= final_resample_mse_bound(1.0, sigma2, particle_count)
        # the resampling step alone costs Var / N
        assert mse > 0.5 / particle_count
