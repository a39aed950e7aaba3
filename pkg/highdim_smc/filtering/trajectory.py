import logging

import numpy as np

from highdim_smc.exceptions import ArgumentError, ImproperlyConfigured
from highdim_smc.filtering.abc_filter import FilterEstimate
from highdim_smc.filtering.tempering import (
    datapoint_tempering_targets,
    ssm_trajectory_log_prior,
    ssm_trajectory_potentials,
)
from highdim_smc.model.schedules import AnnealingSchedule
from highdim_smc.model.targets import KernelTarget
from highdim_smc.smc.paths import TemperingPath
from highdim_smc.smc.resampling import ResamplingPolicy
from highdim_smc.smc.sampler import SMCSampler
from highdim_smc.theory.variances import VariancePath, sigma2_exact_kernel

logger = logging.getLogger(__name__)


def _within_datum_schedule(steps_per_datum, schedule):
    schedule = schedule or AnnealingSchedule.linear(steps_per_datum, phi0=0.0)
    if schedule.steps != steps_per_datum:
        raise ArgumentError("Within-datum schedule length must equal steps_per_datum")
    return schedule


class TrajectoryTarget(KernelTarget):
    """
    The tempered smoothing density of x_{1:k} met ``step`` steps into the introduction of datum k.

    Positions have shape ``(N, k, d)``. Coordinates are independent given the data, so each Gibbs block
    (one time index) is accepted element-wise over coordinates.

    Args:
        model (GeneralSSM): The state-space model.
        observations (array_like): y_1..y_k.
        step (int): Within-datum step, ``0..schedule.steps``.
        schedule (AnnealingSchedule): Within-datum phi with ``phi0 = 0``.
    """

    elementwise_blocks = True

    def __init__(self, model, observations, step, schedule):
        self.model = model
        self.observations = np.atleast_1d(np.asarray(observations, dtype=float))
        self.schedule = schedule
        self.step = int(step)
        self.temperature = schedule[self.step]
        self._log_density = datapoint_tempering_targets(
            ssm_trajectory_potentials(model, self.observations),
            self.observations.size,
            self.step,
            schedule.steps,
            base_log_density=ssm_trajectory_log_prior(model),
            schedule=schedule,
        )

    @property
    def horizon(self):
        return self.observations.size

    def log_density(self, x):
        with np.errstate(invalid="ignore"):
            return self._log_density(x)

    @property
    def supports_exact_sampling(self):
        return hasattr(self.model, "sample_tempered_trajectories")

    def sample(self, size, rng):
        if not self.supports_exact_sampling:
            return super().sample(size, rng)
        return self.model.sample_tempered_trajectories(self.observations, self.temperature, int(size), rng)

    def coordinate_blocks(self, event_shape):
        for t in range(event_shape[0]):
            yield (t,)

    def _previous(self, x, t):
        if t == 0:
            return np.full(x[:, 0, :].shape, self.model.initial_state, dtype=float)
        return x[:, t - 1, :]

    def block_log_ratio(self, x, block, proposal, state):
        (t,) = block
        current = x[:, t, :]
        previous = self._previous(x, t)
        weight = self.temperature if t == self.horizon - 1 else 1.0
        model = self.model
        y = self.observations[t]

        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = model.transition_log_density(proposal, previous) - model.transition_log_density(current, previous)
            if weight > 0.0:
                ratio = ratio + weight * (model.log_likelihood(y, proposal) - model.log_likelihood(y, current))
            if t + 1 < self.horizon:
                following = x[:, t + 1, :]
                forward = model.transition_log_density(following, proposal)
                ratio = ratio + forward - model.transition_log_density(following, current)
        return ratio


class TrajectoryTemperingPath(TemperingPath):
    """
    Tempering in the k-th likelihood term of a state-space model over the whole trajectory x_{1:k}.

    Args:
        model (GeneralSSM): The state-space model.
        observations (array_like): y_1..y_k; the last one is the datum being introduced.
        steps_per_datum (int): Number of tempering steps.
        schedule (AnnealingSchedule, optional): Within-datum phi, linear from 0 by default.
    """

    def __init__(self, model, observations, steps_per_datum, schedule=None):
        if steps_per_datum < 1:
            raise ArgumentError(f"Steps per datum must be positive, got {steps_per_datum}")
        self.model = model
        self.observations = np.atleast_1d(np.asarray(observations, dtype=float))
        if self.observations.size < 1:
            raise ArgumentError("At least one observation is needed")
        self.schedule = _within_datum_schedule(int(steps_per_datum), schedule)
        self.steps = self.schedule.steps
        self._phis = self.schedule.values()
        self._term = ssm_trajectory_potentials(model, self.observations)[-1]

    @property
    def horizon(self):
        return self.observations.size

    def extend(self, positions, rng):
        """
        Append x_k ~ f(. | x_{k-1}) to trajectories of length k - 1.
        """
        last = positions[:, -1, :]
        return np.concatenate([positions, self.model.transition_sample(last, rng)[:, None, :]], axis=1)

    def initial_positions(self, particle_count, rng):
        if self.horizon == 1:
            start = np.full((particle_count, self.model.dimension), self.model.initial_state, dtype=float)
            return self.model.transition_sample(start, rng)[:, None, :]
        initial = self.kernel_target(0)
        if not initial.supports_exact_sampling:
            raise ImproperlyConfigured(
                f"{type(self.model).__name__} cannot draw trajectories of length {self.horizon} exactly"
            )
        return initial.sample(particle_count, rng)

    def log_increment(self, positions, step):
        return (self._phis[step] - self._phis[step - 1]) * self._term.evaluate(positions)

    def kernel_target(self, step):
        return TrajectoryTarget(self.model, self.observations, step, self.schedule)

    def temperature(self, step):
        return self.horizon - 1 + float(self._phis[step])


def _log_total_weight(ensemble):
    return float(np.sum(ensemble.block_log_means)) + ensemble.current_block_log_mean()


def annealed_trajectory_filter(
    model, observations, kernel, particle_count, rng, steps_per_datum=None, schedule=None, policy=None
):
    """
    Filter by running an SMC sampler over the whole trajectory between consecutive data.

    Between data k - 1 and k the trajectories are extended by the prior dynamics and the k-th likelihood
    term is tempered in over ``steps_per_datum`` steps with moves invariant for the tempered smoothing
    density. Weights are carried across data unless ``policy`` resamples.

    Args:
        model (GeneralSSM): A model factorizing over coordinates.
        observations (array_like): y_1..y_n.
        kernel (KernelSpec): Trajectory move kernel.
        particle_count (int): Number of particles N.
        rng (numpy.random.Generator): Random source.
        steps_per_datum (int, optional): Tempering steps per datum, d by default.
        schedule (AnnealingSchedule, optional): Within-datum phi, linear from 0 by default.
        policy (ResamplingPolicy, optional): Resampling rule within each datum, never by default.

    Returns:
        FilterEstimate: Filtering means of x_k, log predictive estimates and the terminal ESS per datum;
        ``extra`` holds the final ensemble and the acceptance rates.
    """
    observations = np.atleast_1d(np.asarray(observations, dtype=float))
    n = observations.size
    if n < 1:
        raise ArgumentError("At least one observation is needed")
    steps = int(steps_per_datum or model.dimension)
    schedule = _within_datum_schedule(steps, schedule)
    policy = policy or ResamplingPolicy.never()

    estimate = FilterEstimate.empty(n, model.dimension)
    rates = np.empty((n, steps))
    ensemble = None

    for k in range(1, n + 1):
        path = TrajectoryTemperingPath(model, observations[:k], steps, schedule)
        sampler = SMCSampler(path, kernel, policy, particle_count)
        if ensemble is None:
            ensemble = sampler.initialize(rng)
        else:
            ensemble.positions = path.extend(ensemble.positions, rng)
        before = _log_total_weight(ensemble)

        for j in range(1, steps + 1):
            current_ess, rates[k - 1, j - 1], resampled = sampler.step(ensemble, j, rng)

        estimate.ess[k - 1] = current_ess
        estimate.log_predictive[k - 1] = _log_total_weight(ensemble) - before
        estimate.means[k - 1] = ensemble.normalized_weights() @ ensemble.positions[:, -1, :]
        estimate.resample_count = len(ensemble.resample_events)
        logger.debug(f"Datum {k}/{n}: terminal ESS {current_ess:.3f}")

    estimate.extra["ensemble"] = ensemble
    estimate.extra["acceptance_rates"] = rates
    return estimate


def trajectory_ess_sigma2(model, observations, schedule=None, steps_per_datum=None):
    """
    Limiting log-weight variance of the trajectory filter with exact kernels, summed over the data.

    Each datum contributes the integral of Var(h(y_k, X_k)) phi'(u)**2, the variance taken under the
    tempered smoothing law of one coordinate.

    Args:
        model (GaussianProductSSM): A model providing ``tempered_likelihood_variance``.
        observations (array_like): y_1..y_n.
        schedule (AnnealingSchedule, optional): Within-datum phi, linear from 0 by default.
        steps_per_datum (int, optional): Only used to build the default schedule.

    Returns:
        float: sigma**2 for the limiting ESS law.
    """
    if not hasattr(model, "tempered_likelihood_variance"):
        raise ImproperlyConfigured(f"{type(model).__name__} has no analytic tempered likelihood variance")
    observations = np.atleast_1d(np.asarray(observations, dtype=float))
    schedule = schedule or AnnealingSchedule.linear(int(steps_per_datum or model.dimension), phi0=0.0)
    total = 0.0
    for k in range(1, observations.size + 1):
        seen = observations[:k]
        path = VariancePath(
            phi=schedule.continuous,
            derivative=schedule.derivative,
            variance=lambda s, seen=seen: model.tempered_likelihood_variance(seen, s),
            phi0=schedule.phi0,
            breakpoints=schedule.breakpoints(),
        )
        total += sigma2_exact_kernel(path, 0.0, 1.0)
    return total

