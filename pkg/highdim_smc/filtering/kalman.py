import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

logger = logging.getLogger(__name__)


@dataclass
class KalmanResult:
    """
    Exact filtering moments of a linear Gaussian model.

    Attributes:
        predicted_means (numpy.ndarray): ``(n + 1, d)`` one-step predictive means; row k is the law of
            X_{k+1} given y_{1:k}.
        predicted_covariances (numpy.ndarray): ``(n + 1, d, d)`` matching covariances.
        filtered_means (numpy.ndarray): ``(n, d)`` means of X_k given y_{1:k}.
        filtered_covariances (numpy.ndarray): ``(n, d, d)`` matching covariances.
        log_predictive (numpy.ndarray): ``(n,)`` values of log p(y_k | y_{1:k-1}).
    """

    predicted_means: np.ndarray
    predicted_covariances: np.ndarray
    filtered_means: np.ndarray
    filtered_covariances: np.ndarray
    log_predictive: np.ndarray

    @property
    def means(self):
        return self.filtered_means

    @property
    def covariances(self):
        return self.filtered_covariances


def kalman_filter(model, observations):
    """
    Predict/update recursion with the Joseph-form covariance update.

    Args:
        model (LinearGaussianSSM): The model.
        observations (array_like): y_1..y_n, possibly empty.

    Returns:
        KalmanResult: Filtering and predictive moments.
    """
    observations = np.atleast_1d(np.asarray(observations, dtype=float))
    n = observations.size
    d = model.dimension
    h = model.observation_matrix
    identity = np.eye(d)
    state_covar = model.state_variance * identity

    predicted_means = np.empty((n + 1, d))
    predicted_covariances = np.empty((n + 1, d, d))
    filtered_means = np.empty((n, d))
    filtered_covariances = np.empty((n, d, d))
    log_predictive = np.empty(n)

    mean = model.initial_state.copy()
    covar = np.zeros((d, d))
    for k in range(n + 1):
        # forecast
        mean = mean.copy()
        covar = covar + state_covar
        predicted_means[k] = mean
        predicted_covariances[k] = covar
        if k == n:
            break

        # analysis
        innovation_var = (h @ covar @ h.T).item() + model.obs_variance
        innovation = observations[k] - (h @ mean).item()
        log_predictive[k] = -0.5 * (math.log(2.0 * math.pi * innovation_var) + innovation**2 / innovation_var)
        gain = (covar @ h.T) / innovation_var
        mean = mean + gain[:, 0] * innovation
        transfer = identity - gain @ h
        covar = transfer @ covar @ transfer.T + model.obs_variance * (gain @ gain.T)
        filtered_means[k] = mean
        filtered_covariances[k] = covar

    return KalmanResult(predicted_means, predicted_covariances, filtered_means, filtered_covariances, log_predictive)


def batch_filter_moments(model, observations):
    """
    Moments of X_n given y_{1:n} from one dense Gaussian conditioning of the joint law.

    The stacked states X_{1:n} are jointly Gaussian with Cov(X_i, X_k) = q min(i, k) I_d and the
    observations are linear in them; this solves the conditioning directly.

    Returns:
        tuple[numpy.ndarray, numpy.ndarray]: Mean ``(d,)`` and covariance ``(d, d)`` of the last state.
    """
    observations = np.atleast_1d(np.asarray(observations, dtype=float))
    n = observations.size
    d = model.dimension
    times = np.arange(1, n + 1)
    state_covar = model.state_variance * np.kron(np.minimum.outer(times, times), np.eye(d))
    state_mean = np.tile(model.initial_state, n)
    design = np.kron(np.eye(n), model.observation_matrix)

    obs_covar = design @ state_covar @ design.T + model.obs_variance * np.eye(n)
    cross = state_covar @ design.T
    factor = linalg.cho_factor(obs_covar, lower=True)
    mean = state_mean + cross @ linalg.cho_solve(factor, observations - design @ state_mean)
    covar = state_covar - cross @ linalg.cho_solve(factor, cross.T)
    return mean[-d:], covar[-d:, -d:]
