import numpy as np
from scipy.special import logsumexp

from highdim_smc.exceptions import DegeneracyError


def log_mean_exp(log_values, axis=None):
    """
    Log of the arithmetic mean of ``exp(log_values)``, computed with log-sum-exp.

    Args:
        log_values (array_like): Values in the log domain. ``-inf`` entries are allowed.
        axis (int, optional): Axis to average over. Defaults to all entries.

    Returns:
        float | numpy.ndarray: ``log(mean(exp(log_values)))``.
    """
    log_values = np.asarray(log_values, dtype=float)
    count = log_values.size if axis is None else log_values.shape[axis]
    return logsumexp(log_values, axis=axis) - np.log(count)


def normalized_weights(log_weights):
    """
    Normalise un-normalised log-weights into probabilities summing to one.

    Args:
        log_weights (array_like): Un-normalised log-weights, one per particle.

    Returns:
        numpy.ndarray: The normalised weights.

    Raises:
        DegeneracyError: If every weight is zero (all log-weights are ``-inf``).
    """
    log_weights = np.asarray(log_weights, dtype=float)
    if log_weights.size == 0 or not np.any(np.isfinite(log_weights)):
        raise DegeneracyError("All particle weights vanished")

    shifted = np.exp(log_weights - np.max(log_weights))
    return shifted / shifted.sum()
