"""
Scalar reference implementations of the coordinate kernels.

The vectorized backends in ``kernel_backends`` apply the same transition to whole ensembles; these
functions define it for one value and are what the backends are tested against.
"""

import math

import numpy as np

from highdim_smc.exceptions import ArgumentError


def metropolis_accept(log_ratio, log_uniform):
    """
    Element-wise Metropolis decision ``log U < log_ratio``; NaN ratios (from -inf - -inf) reject.

    Args:
        log_ratio (array_like): Log acceptance ratios.
        log_uniform (array_like): Logs of independent Uniform(0, 1) draws, same shape.

    Returns:
        numpy.ndarray: Boolean acceptance mask.
    """
    log_ratio = np.asarray(log_ratio, dtype=float)
    return np.where(np.isnan(log_ratio), False, np.asarray(log_uniform) < log_ratio)


def rwm_transition(x, log_target, increment, log_uniform):
    """
    One random-walk Metropolis transition with the randomness supplied explicitly.

    Args:
        x (float): Current value.
        log_target (callable): Scalar log-density of the invariant law.
        increment (float): Proposal increment, ``y = x + increment``.
        log_uniform (float): Log of a Uniform(0, 1) draw.

    Returns:
        float: The proposal if accepted, otherwise ``x``.
    """
    proposal = x + increment
    with np.errstate(invalid="ignore"):
        log_ratio = log_target(proposal) - log_target(x)
    return proposal if bool(metropolis_accept(log_ratio, log_uniform)) else x


def rwm_coordinate_step(x, log_target, proposal_sd, rng):
    """
    Random-walk Metropolis step for one coordinate, y = x + N(0, proposal_sd**2).

    Args:
        x (float): Current value.
        log_target (callable): Scalar log-density at the current inverse temperature, s * g.
        proposal_sd (float): Proposal standard deviation.
        rng (numpy.random.Generator): Random source.

    Returns:
        float: The accepted or retained value.

    Raises:
        ArgumentError: If ``x`` is not finite or ``proposal_sd <= 0``.
    """
    if not math.isfinite(x):
        raise ArgumentError(f"Current state must be finite, got {x}")
    if not proposal_sd > 0:
        raise ArgumentError(f"proposal_sd must be positive, got {proposal_sd}")
    increment = proposal_sd * rng.standard_normal()
    return rwm_transition(x, log_target, increment, math.log(rng.random()))


def rwm_gibbs_sweep(x, log_target, proposal_sd, rng):
    """
    One systematic sweep of random-walk Metropolis within Gibbs.

    Each coordinate in turn gets a univariate proposal and is accepted against the joint log-density,
    which equals the full-conditional ratio.

    Args:
        x (array_like): Current state vector.
        log_target (callable): Joint log-density of a state vector.
        proposal_sd (float): Proposal standard deviation per coordinate.
        rng (numpy.random.Generator): Random source.

    Returns:
        numpy.ndarray: The updated state vector.
    """
    x = np.array(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ArgumentError("Current state must be finite")
    if not proposal_sd > 0:
        raise ArgumentError(f"proposal_sd must be positive, got {proposal_sd}")
    current = log_target(x)
    for j in range(x.size):
        candidate = x.copy()
        candidate[j] += proposal_sd * rng.standard_normal()
        proposed = log_target(candidate)
        with np.errstate(invalid="ignore"):
            log_ratio = proposed - current
        if metropolis_accept(log_ratio, math.log(rng.random())):
            x, current = candidate, proposed
    return x


def exact_coordinate_step(s, sampler, rng):
    """
    Independent draw from pi_s, ignoring the current point.

    Args:
        s (float): Inverse temperature, strictly positive.
        sampler (ScalarPotential): A potential family with ``sample_tempered``.
        rng (numpy.random.Generator): Random source.

    Returns:
        float: A draw from pi_s.
    """
    if not s > 0:
        raise ArgumentError(f"Exact sampling needs s > 0, got {s}")
    return float(sampler.sample_tempered(s, 1, rng)[0])
