import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from highdim_smc.exceptions import ArgumentError, EstimationError
from highdim_smc.smc.ensemble import ess

logger = logging.getLogger(__name__)


@dataclass
class FilterEstimate:
    """
    Per-time output of a particle filter.

    Attributes:
        means (numpy.ndarray): ``(n, d)`` weighted posterior mean estimates, NaN after a degeneracy.
        log_predictive (numpy.ndarray): ``(n,)`` estimates of log p(y_k | y_{1:k-1}), NaN after a degeneracy.
        ess (numpy.ndarray): ``(n,)`` ESS after each weighting, NaN after a degeneracy.
        degenerate (bool): Whether all weights vanished at some time.
        degenerate_time (int | None): First 1-based time at which they did.
        resample_count (int): Number of resampling events.
        extra (dict): Algorithm-specific traces.
    """

    means: np.ndarray
    log_predictive: np.ndarray
    ess: np.ndarray
    degenerate: bool = False
    degenerate_time: int = None
    resample_count: int = 0
    extra: dict = field(default_factory=dict)

    @classmethod
    def empty(cls, n, d):
        return cls(means=np.full((n, d), np.nan), log_predictive=np.full(n, np.nan), ess=np.full(n, np.nan))

    @property
    def horizon(self):
        return self.means.shape[0]


def abc_indicator(y, pseudo, epsilon):
    """
    The ABC weight 1{|y - u| < epsilon}, element-wise over pseudo-observations.
    """
    return np.abs(y - np.asarray(pseudo, dtype=float)) < epsilon


def abc_filter(model, observations, epsilon, particle_count, rng, resample=False, threshold_fraction=0.5):
    """
    ABC particle filter: propagate by the prior dynamics and weight by whether simulated pseudo-data
    fall within ``epsilon`` of the data.

    By default no resampling takes place; with ``resample`` the ensemble is multinomially resampled
    whenever its ESS drops below ``threshold_fraction * N``. Degeneracy (all weights zero) is recorded
    and ends the run.

    Args:
        model (LinearGaussianSSM | GeneralSSM): Model with ``transition_sample`` and ``observation_sample``.
        observations (array_like): y_1..y_n.
        epsilon (float): Tolerance, positive (``inf`` accepts everything).
        particle_count (int): Number of particles N.
        rng (numpy.random.Generator): Random source.
        resample (bool): Enable ESS-triggered resampling.
        threshold_fraction (float): ESS threshold as a fraction of N.

    Returns:
        FilterEstimate: The per-time estimates and the degeneracy record.
    """
    if not epsilon > 0:
        raise ArgumentError(f"epsilon must be positive, got {epsilon}")
    if particle_count < 1:
        raise ArgumentError(f"Particle count must be positive, got {particle_count}")

    observations = np.atleast_1d(np.asarray(observations, dtype=float))
    n = observations.size
    initial = np.broadcast_to(np.asarray(model.initial_state, dtype=float), (model.dimension,))
    estimate = FilterEstimate.empty(n, model.dimension)
    positions = np.tile(initial, (particle_count, 1))
    log_weights = np.zeros(particle_count)

    for k, y in enumerate(observations):
        positions = model.transition_sample(positions, rng)
        pseudo = model.observation_sample(positions, rng)
        previous_total = logsumexp(log_weights)
        log_weights = np.where(abc_indicator(y, pseudo, epsilon), log_weights, -np.inf)

        if not np.any(np.isfinite(log_weights)):
            estimate.degenerate = True
            estimate.degenerate_time = k + 1
            logger.debug(f"ABC filter degenerated at time {k + 1} with N={particle_count}, epsilon={epsilon}")
            break

        weights = np.exp(log_weights - log_weights.max())
        weights /= weights.sum()
        estimate.means[k] = weights @ positions
        estimate.log_predictive[k] = logsumexp(log_weights) - previous_total
        estimate.ess[k] = ess(log_weights)

        if resample and estimate.ess[k] < threshold_fraction * particle_count:
            ancestors = rng.choice(particle_count, size=particle_count, replace=True, p=weights)
            positions = positions[ancestors]
            log_weights = np.zeros(particle_count)
            estimate.resample_count += 1

    return estimate


def abc_error_metric(estimates, truth, time, power=2, coordinate=0):
    """
    L_p error of the first-moment estimate at one time, over the non-degenerate replicates.

    Args:
        estimates (sequence[FilterEstimate]): Replicate filter outputs.
        truth (array_like): Exact filtering means, ``(n, d)`` or ``(n,)`` for the chosen coordinate.
        time (int): 1-based time index.
        power (float): The exponent p.
        coordinate (int): Coordinate of the state whose mean is compared.

    Returns:
        float: ``(mean_r |m_r - m|**p) ** (1 / p)`` over runs that never degenerated.

    Raises:
        EstimationError: If fewer than two replicates are non-degenerate.
    """
    kept = [e for e in estimates if not e.degenerate]
    if len(kept) < 2:
        raise EstimationError(f"Only {len(kept)} non-degenerate replicates out of {len(estimates)}")
    truth = np.asarray(truth, dtype=float)
    target = truth[time - 1, coordinate] if truth.ndim == 2 else truth[time - 1]
    errors = np.array([e.means[time - 1, coordinate] - target for e in kept])
    return float(np.mean(np.abs(errors) ** power) ** (1.0 / power))


def abc_monte_carlo_std(estimates, time, coordinate=0):
    """
    Standard deviation of the first-moment estimate across non-degenerate replicates.
    """
    kept = [e.means[time - 1, coordinate] for e in estimates if not e.degenerate]
    if len(kept) < 2:
        raise EstimationError(f"Only {len(kept)} non-degenerate replicates out of {len(estimates)}")
    return float(np.std(kept, ddof=1))


def degenerate_fraction(estimates):
    if not estimates:
        return math.nan
    return sum(e.degenerate for e in estimates) / len(estimates)
