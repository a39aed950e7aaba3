import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import logsumexp

from highdim_smc._utils import normalized_weights
from highdim_smc.exceptions import ArgumentError, NumericalError
from highdim_smc.filtering.abc_filter import FilterEstimate
from highdim_smc.kernels import KernelSpec
from highdim_smc.model.schedules import AnnealingSchedule
from highdim_smc.model.targets import KernelTarget
from highdim_smc.smc.paths import TemperingPath
from highdim_smc.smc.resampling import ResamplingPolicy
from highdim_smc.smc.sampler import SMCSampler

logger = logging.getLogger(__name__)


def _mixture_log_density(model, x, centres):
    """
    log sum_l prod_j f(x_j | c_{l,j}) for every row of ``x``.
    """
    with np.errstate(divide="ignore"):
        log_f = model.transition_log_density(x[:, None, :], centres[None, :, :])
    return logsumexp(np.sum(log_f, axis=-1), axis=1)


class MixturePredictiveTarget(KernelTarget):
    """
    exp(s sum_j h(y, x_j)) times the particle mixture sum_l prod_j f(x_j | c_l).

    Only the likelihood factor is tempered. Evaluating the mixture costs O(N d) per particle.

    Args:
        model (GeneralSSM): The state-space model.
        observation (float): y_n.
        centres (numpy.ndarray): ``(M, d)`` resampled particles of the previous filter.
        temperature (float): s in ``[0, 1]``.
    """

    def __init__(self, model, observation, centres, temperature):
        self.model = model
        self.observation = float(observation)
        self.centres = np.asarray(centres, dtype=float)
        self.temperature = float(temperature)

    def likelihood_sum(self, x):
        return np.sum(self.model.log_likelihood(self.observation, x), axis=-1)

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        total = _mixture_log_density(self.model, x, self.centres)
        if self.temperature > 0.0:
            total = total + self.temperature * self.likelihood_sum(x)
        return total


class MarginalTemperingPath(TemperingPath):
    """
    From the particle mixture to the mixture times the full likelihood of y_n, started from exact draws
    x ~ f(. | c_i), one per centre.

    Args:
        model (GeneralSSM): The state-space model.
        observation (float): y_n.
        centres (numpy.ndarray): ``(N, d)`` resampled particles of the previous filter.
        schedule (AnnealingSchedule): phi with ``phi0 = 0``.
    """

    def __init__(self, model, observation, centres, schedule):
        if schedule.phi0 != 0.0:
            raise ArgumentError(f"The predictive path starts at phi0 = 0, got {schedule.phi0}")
        self.model = model
        self.observation = float(observation)
        self.centres = np.asarray(centres, dtype=float)
        self.schedule = schedule
        self.steps = schedule.steps
        self._phis = schedule.values()

    def initial_positions(self, particle_count, rng):
        if particle_count != self.centres.shape[0]:
            raise ArgumentError(f"Expected {self.centres.shape[0]} particles, got {particle_count}")
        return self.model.transition_sample(self.centres, rng)

    def log_increment(self, positions, step):
        return (self._phis[step] - self._phis[step - 1]) * np.sum(
            self.model.log_likelihood(self.observation, positions), axis=-1
        )

    def kernel_target(self, step):
        return MixturePredictiveTarget(self.model, self.observation, self.centres, self._phis[step])

    def temperature(self, step):
        return float(self._phis[step])


@dataclass
class MarginalStep:
    """
    One step of the marginal algorithm.

    Attributes:
        positions (numpy.ndarray): ``(N, d)`` particles approximating the filter at time n.
        log_weights (numpy.ndarray): Their log-weights.
        log_predictive (float): Estimate of log p(y_n | y_{1:n-1}).
        centres (numpy.ndarray): The resampled previous particles defining the mixture.
        report (SamplerReport): The underlying sampler run.
    """

    positions: np.ndarray
    log_weights: np.ndarray
    log_predictive: float
    centres: np.ndarray
    report: object


def marginal_algorithm_step(
    model,
    previous_particles,
    observation,
    schedule,
    kernel,
    particle_count,
    rng,
    previous_log_weights=None,
    policy=None,
):
    """
    Move from the filter at time n - 1 to the filter at time n through the particle mixture.

    The mixture components are drawn from the normalized previous weights, the initial particles from
    f(. | component), and an SMC sampler then tempers the likelihood of ``observation`` in against the mixture.

    Args:
        model (GeneralSSM): The state-space model.
        previous_particles (array_like): ``(M, d)`` particles of the previous filter.
        observation (float): y_n.
        schedule (AnnealingSchedule): phi with ``phi0 = 0``; its length is the number of sampler steps.
        kernel (KernelSpec): Move kernel.
        particle_count (int): Number of particles N.
        rng (numpy.random.Generator): Random source.
        previous_log_weights (array_like, optional): Log-weights of the previous particles, uniform by default.
        policy (ResamplingPolicy, optional): Resampling rule of the sampler, ESS below N/2 by default.

    Returns:
        MarginalStep: New particles and the predictive-likelihood estimate.

    Raises:
        ArgumentError: If there are no previous particles.
        DegeneracyError: If the sampler's weights vanish.
    """
    previous_particles = np.atleast_2d(np.asarray(previous_particles, dtype=float))
    if previous_particles.shape[0] < 1:
        raise ArgumentError("The previous particle set is empty")
    if previous_log_weights is None:
        weights = np.full(previous_particles.shape[0], 1.0 / previous_particles.shape[0])
    else:
        weights = normalized_weights(previous_log_weights)
    policy = policy or ResamplingPolicy.ess_threshold()

    # Mixture components
    ancestors = rng.choice(previous_particles.shape[0], size=particle_count, replace=True, p=weights)
    centres = previous_particles[ancestors]

    path = MarginalTemperingPath(model, observation, centres, schedule)
    report = SMCSampler(path, kernel, policy, particle_count).run(rng)
    return MarginalStep(
        positions=report.ensemble.positions,
        log_weights=report.ensemble.log_weights,
        log_predictive=report.log_nc_estimate,
        centres=centres,
        report=report,
    )


def marginal_filter(model, observations, kernel, particle_count, rng, steps=None, policy=None):
    """
    Run the marginal algorithm over a data record, starting from the fixed initial state.

    Args:
        model (GeneralSSM): The state-space model.
        observations (array_like): y_1..y_n.
        kernel (KernelSpec): Move kernel.
        particle_count (int): Number of particles N.
        rng (numpy.random.Generator): Random source.
        steps (int, optional): Sampler steps per datum, d by default.
        policy (ResamplingPolicy, optional): Resampling rule within each datum.

    Returns:
        FilterEstimate: Weighted filtering means, log predictive estimates and terminal ESS per time.
    """
    observations = np.atleast_1d(np.asarray(observations, dtype=float))
    d = model.dimension
    schedule = AnnealingSchedule.linear(int(steps or d), phi0=0.0)
    estimate = FilterEstimate.empty(observations.size, d)
    particles = np.full((particle_count, d), model.initial_state, dtype=float)
    log_weights = None

    for k, y in enumerate(observations):
        step = marginal_algorithm_step(
            model, particles, y, schedule, kernel, particle_count, rng, previous_log_weights=log_weights, policy=policy
        )
        particles, log_weights = step.positions, step.log_weights
        estimate.means[k] = normalized_weights(log_weights) @ particles
        estimate.log_predictive[k] = step.log_predictive
        estimate.ess[k] = step.report.terminal_ess
        estimate.resample_count += len(step.report.resample_steps)
    return estimate


def _expect(marginal, func, description):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        value = float(marginal.expect(func))
    if caught:
        raise NumericalError(f"Quadrature of {description} did not converge: {caught[0].message}")
    if not math.isfinite(value):
        raise NumericalError(f"Quadrature of {description} returned {value}")
    return value


def predictive_factor_moments(model, observation, previous_marginal):
    """
    ``(m, v)``: mean and variance of F(X') = integral of exp(h(y, x)) f(x | X') dx for X' ~ previous_marginal.

    Args:
        model (GeneralSSM): The state-space model.
        observation (float): y_n.
        previous_marginal: Frozen scipy distribution of one coordinate of the previous filter.

    Raises:
        NumericalError: If a quadrature fails.
    """

    def factor(x):
        # scalar under quadrature, an array of support points for discrete marginals
        value = np.asarray(model.predictive_factor(observation, x), dtype=float)
        return float(value) if value.ndim == 0 else value

    mean = _expect(previous_marginal, factor, "the predictive factor")
    variance = _expect(previous_marginal, lambda x: (factor(x) - mean) ** 2, "the predictive factor variance")
    if mean <= 0.0:
        raise NumericalError(f"Predictive factor mean is not positive: {mean}")
    return mean, variance


def marginal_predictive_rel_error(model, observation, previous_marginal, dimension, particle_count):
    """
    Relative L2 error of the idealized predictive-likelihood estimate,
    (1/N) [pi(F**2)**d / pi(F)**(2d) - 1].

    Args:
        model (GeneralSSM): The state-space model.
        observation (float): y_n.
        previous_marginal: Frozen scipy distribution of one coordinate of the previous filter.
        dimension (int): d.
        particle_count (int): N.

    Returns:
        float: The error, zero when F is constant.
    """
    if dimension < 1 or particle_count < 1:
        raise ArgumentError(f"Dimension and particle count must be positive, got d={dimension}, N={particle_count}")
    mean, variance = predictive_factor_moments(model, observation, previous_marginal)
    return math.expm1(dimension * math.log1p(variance / mean**2)) / particle_count


def predictive_log_truth(model, observation, previous_marginal, dimension):
    """
    log p(y_n | y_{1:n-1}) = d log pi(F) when the previous filter is the product of ``previous_marginal``.
    """
    mean, _ = predictive_factor_moments(model, observation, previous_marginal)
    return dimension * math.log(mean)


def idealized_predictive_estimate(model, observation, previous_marginal, dimension, particle_count, rng):
    """
    The predictive-likelihood estimate when the previous filter and the final mixture target are both
    sampled exactly: the sampler weights are then constant and the estimate is (1/N) sum_l prod_j F(c_{l,j}).

    Args:
        model (GeneralSSM): The state-space model.
        observation (float): y_n.
        previous_marginal: Frozen scipy distribution of one coordinate of the previous filter.
        dimension (int): d.
        particle_count (int): N.
        rng (numpy.random.Generator): Random source.

    Returns:
        float: The log of the estimate.
    """
    centres = np.asarray(previous_marginal.rvs(size=(particle_count, dimension), random_state=rng), dtype=float)
    log_factors = np.sum(model.log_predictive_factor(observation, centres), axis=-1)
    return float(logsumexp(log_factors) - math.log(particle_count))


def default_marginal_kernel(model):
    """
    Random-walk Metropolis scaled to the coordinate support.
    """
    support = model.support
    scale = 0.25 * (support.upper - support.lower) if support.is_compact else 1.0
    return KernelSpec.rwm(scale / math.sqrt(model.dimension))
