import logging

import numpy as np

from highdim_smc.exceptions import ArgumentError
from highdim_smc.model.schedules import AnnealingSchedule

logger = logging.getLogger(__name__)


def _evaluate(term, x):
    evaluate = getattr(term, "evaluate", term)
    return np.asarray(evaluate(x), dtype=float)


def datapoint_tempering_targets(potentials, n, k, steps_per_datum, base_log_density=None, schedule=None):
    """
    The bridging log-density met when datum ``n`` is being introduced, ``k`` steps into its schedule.

    log Pi_{n-1}(x) + phi(k / steps_per_datum) * l_n(x), where log Pi_{n-1} is the base log-density plus
    the first ``n - 1`` terms.

    Args:
        potentials (sequence): Per-datum log-likelihood terms, callables or objects with ``evaluate``.
        n (int): Datum index, ``1..len(potentials)``.
        k (int): Within-datum step, ``0..steps_per_datum``.
        steps_per_datum (int): Tempering steps per datum.
        base_log_density (callable, optional): log-prior; zero when omitted.
        schedule (AnnealingSchedule, optional): Within-datum phi, linear from 0 by default.

    Returns:
        callable: Maps positions to log-densities.

    Raises:
        ArgumentError: If ``n`` or ``k`` is out of range.
    """
    terms = list(potentials)
    if not 1 <= n <= len(terms):
        raise ArgumentError(f"Datum index {n} outside of 1..{len(terms)}")
    if steps_per_datum < 1:
        raise ArgumentError(f"Steps per datum must be positive, got {steps_per_datum}")
    if not 0 <= k <= steps_per_datum:
        raise ArgumentError(f"Within-datum step {k} outside of 0..{steps_per_datum}")
    schedule = schedule or AnnealingSchedule.linear(steps_per_datum, phi0=0.0)
    if schedule.steps != steps_per_datum:
        raise ArgumentError("Within-datum schedule length must equal steps_per_datum")
    weight = schedule[k]
    seen = terms[: n - 1]
    current = terms[n - 1]

    def log_density(x):
        total = np.zeros(np.shape(x)[0]) if base_log_density is None else np.asarray(base_log_density(x), dtype=float)
        for term in seen:
            total = total + _evaluate(term, x)
        # phi(0) = 0 leaves Pi_{n-1} untouched
        if weight > 0.0:
            total = total + weight * _evaluate(current, x)
        return total

    return log_density


class TrajectoryLikelihoodTerm:
    """
    l_k(x_{1:n}) = sum_j h(y_k, x_{k,j}) on trajectory positions of shape ``(N, n, d)``.

    Args:
        model (GeneralSSM): The state-space model.
        observation (float): y_k.
        time (int): 1-based time k.
    """

    def __init__(self, model, observation, time):
        self.model = model
        self.observation = float(observation)
        self.time = int(time)

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        return np.sum(self.model.log_likelihood(self.observation, x[:, self.time - 1, :]), axis=-1)

    def __call__(self, x):
        return self.evaluate(x)


def ssm_trajectory_potentials(model, observations):
    """
    One ``TrajectoryLikelihoodTerm`` per observation.
    """
    observations = np.atleast_1d(np.asarray(observations, dtype=float))
    return [TrajectoryLikelihoodTerm(model, y, k + 1) for k, y in enumerate(observations)]


def ssm_trajectory_log_prior(model):
    """
    The log-density of x_{1:n} under the prior dynamics from the fixed initial state.

    Returns:
        callable: Maps ``(N, n, d)`` positions to ``(N,)`` log-densities.
    """

    def log_prior(x):
        x = np.asarray(x, dtype=float)
        previous = np.concatenate([np.full(x[:, :1, :].shape, model.initial_state, dtype=float), x[:, :-1, :]], axis=1)
        with np.errstate(divide="ignore"):
            return np.sum(model.transition_log_density(x, previous), axis=(1, 2))

    return log_prior
