import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from highdim_smc.exceptions import ArgumentError, EvaluationError
from highdim_smc.model import (
    AnnealingSchedule,
    BayesianLinearModel,
    BoundedPotential,
    CallablePotential,
    ConstantPotential,
    GaussianPotential,
    ProductTarget,
    QuadraticLogTarget,
    Support,
    blm_as_sequential_potentials,
    blm_posterior,
    bridge_log_density,
    exponential_nu,
    linear_phi,
    step_index,
)


class TestSupport:
    def test_interval_mask(self):
        support = Support.interval(-1, 2)
        assert_array_equal(support.mask([-1.5, -1.0, 0.0, 2.0, 2.5]), [False, True, True, True, False])
        assert support.is_compact

    def test_full_line(self):
        assert not Support.full_line().is_compact
        assert Support.full_line().contains([-1e300, 1e300])

    def test_empty_interval_rejected(self):
        with pytest.raises(ArgumentError):
            Support.interval(1.0, 1.0)

    def test_check_raises_outside(self):
        with pytest.raises(EvaluationError):
            Support.interval(0, 1).check([0.5, 1.5])


class TestGaussianPotential:
    def test_closed_forms(self):
        potential = GaussianPotential()
        assert_allclose(potential.evaluate([0.0, 2.0]), [0.0, -2.0])
        assert potential.tempered_variance(0.5) == pytest.approx(2.0)
        assert potential.log_normalizer(1.0) == pytest.approx(0.5 * math.log(2.0 * math.pi))

    def test_quadrature_matches_closed_form(self):
        generic = CallablePotential(lambda x: -0.5 * x**2)
        assert generic.log_normalizer(2.0) == pytest.approx(GaussianPotential().log_normalizer(2.0), rel=1e-8)
        assert generic.tempered_variance(2.0) == pytest.approx(0.125, rel=1e-6)

    def test_sampler_variance(self, rng):
        draws = GaussianPotential().sample_tempered(4.0, 200_000, rng)
        assert draws.var() == pytest.approx(0.25, rel=0.02)

    def test_exact_sampling_flag(self):
        assert GaussianPotential().supports_exact_sampling
        assert not CallablePotential(np.sin).supports_exact_sampling

    def test_zero_temperature_rejected(self, rng):
        with pytest.raises(ArgumentError):
            GaussianPotential().sample_tempered(0.0, 3, rng)


class TestBoundedPotential:
    def test_bound_holds_on_support(self):
        potential = BoundedPotential(g_max=2.0, lower=-3.0, upper=3.0)
        grid = np.linspace(-3.0, 3.0, 1001)
        assert np.all(np.abs(potential.evaluate(grid)) <= potential.bound)

    def test_rejection_sampler_stays_inside(self, rng):
        potential = BoundedPotential()
        draws = potential.sample_tempered(1.5, (500, 4), rng)
        assert draws.shape == (500, 4)
        assert potential.support.contains(draws)

    def test_rejection_sampler_mean_of_g(self, rng):
        potential = BoundedPotential()
        first, _ = potential.tempered_moments(1.0)
        draws = potential.sample_tempered(1.0, 100_000, rng)
        assert potential.evaluate(draws).mean() == pytest.approx(first, abs=0.01)

    def test_non_positive_bound_rejected(self):
        with pytest.raises(ArgumentError):
            BoundedPotential(g_max=0.0)


class TestConstantPotential:
    def test_flat_law(self):
        potential = ConstantPotential(value=-0.3, lower=0.0, upper=2.0)
        assert potential.tempered_variance(0.7) == 0.0
        assert potential.log_normalizer(0.5) == pytest.approx(-0.15 + math.log(2.0))


class TestLinearPhi:
    def test_boundaries(self):
        assert linear_phi(0, 10, 0.2) == 0.2
        assert linear_phi(10, 10, 0.2) == 1.0

    def test_interior(self):
        assert linear_phi(5, 10, 0.5) == pytest.approx(0.75)

    @pytest.mark.parametrize("n, d, phi0", [(-1, 5, 0.1), (6, 5, 0.1), (0, 0, 0.1), (0, 5, 1.0), (0, 5, -0.1)])
    def test_invalid_arguments(self, n, d, phi0):
        with pytest.raises(ArgumentError):
            linear_phi(n, d, phi0)


class TestExponentialNu:
    def test_boundaries(self):
        assert exponential_nu(0.0, 0.1, 5.0) == 0.1
        assert exponential_nu(1.0, 0.1, 5.0) == 1.0

    def test_continuous_at_end_points(self):
        assert exponential_nu(1e-12, 0.1, 5.0) == pytest.approx(0.1)
        assert exponential_nu(1.0 - 1e-12, 0.1, 5.0) == pytest.approx(1.0)

    def test_increasing_and_slow_start(self):
        grid = np.linspace(0.0, 1.0, 51)
        values = np.array([exponential_nu(s, 0.1, 5.0) for s in grid])
        assert np.all(np.diff(values) > 0)
        # below the linear interpolation everywhere in the interior
        assert np.all(values[1:-1] < 0.1 + 0.9 * grid[1:-1])

    def test_theta_must_be_positive(self):
        with pytest.raises(ArgumentError):
            exponential_nu(0.5, 0.1, 0.0)


class TestStepIndex:
    def test_inverts_linear_phi(self):
        d, phi0 = 37, 0.3
        assert [step_index(linear_phi(n, d, phi0), d, phi0) for n in range(d + 1)] == list(range(d + 1))

    def test_out_of_range(self):
        with pytest.raises(ArgumentError):
            step_index(0.1, 10, 0.5)


class TestAnnealingSchedule:
    @pytest.mark.parametrize(
        "schedule",
        [
            AnnealingSchedule.linear(20, phi0=0.25),
            AnnealingSchedule.exponential(20, theta=3.0, phi0=0.05),
            AnnealingSchedule.tabulated(20, [0.0, 0.5, 1.0], [0.1, 0.3, 1.0]),
        ],
    )
    def test_boundary_identities(self, schedule):
        values = schedule.values()
        assert len(values) == len(schedule) == 21
        assert values[0] == schedule.phi0 == schedule[0]
        assert values[-1] == 1.0 == schedule[20]
        assert np.all(np.diff(values) > 0)
        assert_allclose(values, [schedule[n] for n in range(21)], rtol=1e-12)

    def test_default_phi0(self):
        assert AnnealingSchedule.linear(8).phi0 == 0.125

    def test_tabulated_slopes_and_breakpoints(self):
        schedule = AnnealingSchedule.tabulated(4, [0.0, 0.5, 1.0], [0.2, 0.4, 1.0])
        assert schedule.breakpoints() == (0.5,)
        assert schedule.derivative(0.25) == pytest.approx(0.4)
        assert schedule.derivative(0.75) == pytest.approx(1.2)
        assert schedule.continuous(0.5) == pytest.approx(0.4)

    def test_exponential_derivative(self):
        schedule = AnnealingSchedule.exponential(10, theta=2.0, phi0=0.1)
        h = 1e-6
        numeric = (schedule.continuous(0.3 + h) - schedule.continuous(0.3 - h)) / (2 * h)
        assert schedule.derivative(0.3) == pytest.approx(numeric, rel=1e-6)

    def test_with_steps_keeps_the_map(self):
        schedule = AnnealingSchedule.exponential(10, theta=2.0, phi0=0.1).with_steps(20)
        assert schedule.steps == 20
        assert schedule[10] == pytest.approx(exponential_nu(0.5, 0.1, 2.0))

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"phi0": 0.5, "steps": 0},
            {"phi0": 1.0, "steps": 5},
            {"phi0": 0.5, "steps": 5, "kind": "cubic"},
            {"phi0": 0.5, "steps": 5, "kind": "exponential"},
            {"phi0": 0.5, "steps": 5, "kind": "tabulated"},
        ],
    )
    def test_invalid_schedules(self, kwargs):
        with pytest.raises(ArgumentError):
            AnnealingSchedule(**kwargs)

    def test_from_name(self):
        assert AnnealingSchedule.from_name("linear", 4, 0.5).kind == "linear"
        with pytest.raises(ArgumentError):
            AnnealingSchedule.from_name("tabulated", 4, 0.5)


class TestTargets:
    def test_bridge_log_density(self):
        target = ProductTarget(GaussianPotential(), 3)
        x = np.array([1.0, 2.0, -1.0])
        assert bridge_log_density(target, 0.5, x) == pytest.approx(0.5 * -3.0)
        assert bridge_log_density(target, 1.0, np.stack([x, 2 * x])).shape == (2,)

    @pytest.mark.parametrize("s", [0.0, 1.5])
    def test_bridge_rejects_temperature(self, s):
        with pytest.raises(ArgumentError):
            bridge_log_density(ProductTarget(GaussianPotential(), 1), s, [0.0])

    def test_bridge_rejects_state_outside_support(self):
        with pytest.raises(EvaluationError):
            bridge_log_density(ProductTarget(BoundedPotential(), 2), 0.5, [0.0, 5.0])

    def test_potential_sum_checks_shape(self):
        with pytest.raises(ArgumentError):
            ProductTarget(GaussianPotential(), 3).potential_sum(np.zeros((2, 4)))

    def test_tempered_target_outside_support(self):
        tempered = ProductTarget(BoundedPotential(), 2).tempered(0.5)
        values = tempered.log_density(np.array([[0.0, 0.0], [0.0, 4.0]]))
        assert values[0] == 0.0
        assert values[1] == -np.inf

    def test_quadratic_from_moments(self, rng):
        mean = np.array([1.0, -2.0])
        covariance = np.array([[2.0, 0.6], [0.6, 1.0]])
        target = QuadraticLogTarget.from_moments(mean, covariance)
        assert_allclose(target.mean, mean)
        draws = target.sample(100_000, rng)
        assert_allclose(draws.mean(axis=0), mean, atol=0.02)
        assert_allclose(np.cov(draws.T), covariance, atol=0.03)

    def test_quadratic_rejects_asymmetric_precision(self):
        with pytest.raises(ArgumentError):
            QuadraticLogTarget([[1.0, 0.5], [0.0, 1.0]], [0.0, 0.0])


class TestBayesianLinearModel:
    @pytest.fixture
    def model(self, rng):
        model, _ = BayesianLinearModel.simulate(8, 3, rng)
        return model

    def test_posterior_against_direct_inverse(self, model):
        posterior = blm_posterior(model.design, model.responses)
        covariance = np.linalg.inv(np.eye(3) + model.design.T @ model.design)
        assert_allclose(posterior.covariance, covariance, rtol=1e-10)
        assert_allclose(posterior.mean, covariance @ model.design.T @ model.responses, rtol=1e-10)

    def test_sequential_terms_sum_to_likelihood(self, model, rng):
        beta = rng.standard_normal((5, 3))
        total = sum(term(beta) for term in blm_as_sequential_potentials(model.design, model.responses))
        assert_allclose(total, model.log_likelihood(beta))

    def test_datapoint_target_end_points(self, model):
        full = model.datapoint_target(model.observation_count, 1.0)
        assert_allclose(full.precision, model.posterior_target().precision)
        assert_allclose(full.shift, model.posterior_target().shift)
        prior = model.datapoint_target(1, 0.0)
        assert_allclose(prior.precision, np.eye(3))
        assert_allclose(prior.shift, np.zeros(3))

    def test_posterior_target_mean(self, model):
        assert_allclose(model.posterior_target().mean, model.posterior().mean, rtol=1e-10)

    def test_annealed_target_is_tempered_posterior(self, model, rng):
        beta = rng.standard_normal((4, 3))
        base = model.posterior_target()
        assert_allclose(model.annealed_target(0.3).log_density(beta), 0.3 * base.log_density(beta))

    @pytest.mark.parametrize("design, responses", [(np.ones((3, 2)), np.ones(2)), ([[np.nan]], [1.0])])
    def test_invalid_data(self, design, responses):
        with pytest.raises(ArgumentError):
            blm_posterior(design, responses)
