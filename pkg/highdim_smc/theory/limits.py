import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import stats

from highdim_smc.exceptions import ArgumentError
from highdim_smc.kernels import KernelSpec
from highdim_smc.smc import ResamplingPolicy, ess, run_sampler

logger = logging.getLogger(__name__)

BLOCK_SUM_TOLERANCE = 1e-10


def _check_particles(particle_count):
    if particle_count < 1:
        raise ArgumentError(f"Particle count must be positive, got {particle_count}")


def nc_limit_no_resampling(sigma2, particle_count):
    """
    Large-d limit of the relative L2 error of the normalizing-constant estimate without resampling.

    Args:
        sigma2 (float): Asymptotic log-weight variance over the whole path.
        particle_count (int): Number of particles N.

    Returns:
        float: ``(exp(sigma2) - 1) / N``.
    """
    if sigma2 < 0:
        raise ArgumentError(f"Variance must be non-negative, got {sigma2}")
    _check_particles(particle_count)
    return math.expm1(sigma2) / particle_count


def nc_limit_with_resampling(block_sigma2s, particle_count, total_sigma2=None):
    """
    Large-d limit of the relative L2 error when resampling at deterministic times.

    The limit exp(-sum s_k) prod_k [exp(2 s_k) / N + (1 - 1/N) exp(s_k)] - 1 is evaluated as
    ``expm1(sum_k log1p(expm1(s_k) / N))``, which is the same product rearranged.

    Args:
        block_sigma2s (sequence[float]): Per-block variances.
        particle_count (int): Number of particles N.
        total_sigma2 (float, optional): Variance of the whole path; when given the blocks must add up to it.

    Returns:
        float: The limiting relative L2 error.

    Raises:
        ArgumentError: On negative variances or a block partition inconsistent with ``total_sigma2``.
    """
    block_sigma2s = [float(v) for v in block_sigma2s]
    if not block_sigma2s or any(v < 0 for v in block_sigma2s):
        raise ArgumentError(f"Block variances must be non-negative, got {block_sigma2s}")
    _check_particles(particle_count)
    if total_sigma2 is not None and abs(math.fsum(block_sigma2s) - total_sigma2) > BLOCK_SUM_TOLERANCE:
        raise ArgumentError(f"Block variances sum to {math.fsum(block_sigma2s)}, not to the path total {total_sigma2}")
    if len(block_sigma2s) == 1:
        return nc_limit_no_resampling(block_sigma2s[0], particle_count)
    return math.expm1(math.fsum(math.log1p(math.expm1(v) / particle_count) for v in block_sigma2s))


class ResamplingBound(NamedTuple):
    value: float
    applicable: bool


def nc_limit_resampling_bound(block_sigma2s, particle_count):
    """
    Upper bound 2 (m + 1) (exp(max_k s_k) - 1) / N on the resampled limit.

    Returns:
        ResamplingBound: The bound and whether ``N > (m + 1)(exp(max_k s_k) - 1)`` holds.
    """
    _check_particles(particle_count)
    blocks = len(block_sigma2s)
    excess = blocks * math.expm1(max(block_sigma2s))
    return ResamplingBound(2.0 * excess / particle_count, particle_count > excess)


def final_resample_mse_bound(test_variance, sigma2, particle_count, slack=1.5):
    """
    Shape of the mean square error bound after resampling at the final time, with an explicit slack.

    Returns:
        float: ``slack * test_variance / N * (1 + exp(sigma2))``.
    """
    _check_particles(particle_count)
    return slack * test_variance / particle_count * (1.0 + math.exp(sigma2))


def ess_limit_sample(particle_count, sigma2, rng, size=None):
    """
    Draw from the limiting law of the ESS, (sum e^Z)**2 / sum e^{2Z} with Z_i i.i.d. N(0, sigma2).

    Args:
        particle_count (int): Number of particles N.
        sigma2 (float): Variance of the log-weights.
        rng (numpy.random.Generator): Random source.
        size (int, optional): Number of independent draws; a single float when omitted.

    Returns:
        float | numpy.ndarray: Draws in ``[1, N]``.
    """
    if sigma2 < 0:
        raise ArgumentError(f"Variance must be non-negative, got {sigma2}")
    _check_particles(particle_count)
    if size is None:
        return ess(math.sqrt(sigma2) * rng.standard_normal(particle_count))
    z = math.sqrt(sigma2) * rng.standard_normal((int(size), particle_count))
    return np.array([ess(row) for row in z])


def gaussian_log_nc_ratio(d, phi0, phi1=1.0):
    """
    log of Z_{phi1}^d / Z_{phi0}^d for g(x) = -x**2 / 2, where Z_s = sqrt(2 pi / s).

    Args:
        d (int): Dimension.
        phi0 (float): Start inverse temperature, positive.
        phi1 (float): End inverse temperature, at least ``phi0``.

    Returns:
        float: ``(d / 2) log(phi0 / phi1)``.
    """
    if not phi0 > 0:
        raise ArgumentError(f"phi0 must be positive, got {phi0}")
    if phi1 < phi0:
        raise ArgumentError(f"End temperature {phi1} is below start temperature {phi0}")
    return 0.5 * d * math.log(phi0 / phi1)


def log_nc_ratio_by_quadrature(potential, d, phi0, phi1=1.0):
    """
    The same ratio for any potential, from its one-dimensional log-normalisers.
    """
    if phi1 < phi0:
        raise ArgumentError(f"End temperature {phi1} is below start temperature {phi0}")
    return d * (potential.log_normalizer(phi1) - potential.log_normalizer(phi0))


@dataclass(frozen=True)
class Sigma2Estimate:
    """
    An empirical variance with a percentile bootstrap confidence interval.
    """

    value: float
    ci_low: float
    ci_high: float
    sample_size: int

    def contains(self, value):
        return self.ci_low <= value <= self.ci_high


def empirical_sigma2(target, kernel, schedule, replicates, rng, confidence_level=0.95, n_resamples=1000):
    """
    Estimate the asymptotic log-weight variance from independent weight trajectories.

    Without resampling the particles of one run are independent, so a single run with ``replicates``
    particles gives ``replicates`` independent final log-weights; their sample variance estimates sigma2.

    Args:
        target (ProductTarget): The product target, with dimension d large.
        kernel (KernelSpec): Move kernel.
        schedule (AnnealingSchedule): Inverse temperatures.
        replicates (int): Number of independent trajectories, at least 2.
        rng (numpy.random.Generator): Random source.
        confidence_level (float): Bootstrap interval level.
        n_resamples (int): Bootstrap resamples.

    Returns:
        Sigma2Estimate: The estimate and its interval.

    Raises:
        ArgumentError: If fewer than two trajectories are asked for or the schedule does not take d steps.
    """
    if replicates < 2:
        raise ArgumentError(f"At least two trajectories are needed, got {replicates}")
    if target.dimension < 64:
        logger.warning(f"Dimension {target.dimension} is small for the log-weight central limit regime")
    if not isinstance(kernel, KernelSpec):
        raise ArgumentError(f"Expected a KernelSpec, got {type(kernel).__name__}")
    if schedule.steps != target.dimension:
        raise ArgumentError(
            f"The log-weight variance limit needs d annealing steps, got {schedule.steps} for d = {target.dimension}"
        )

    report = run_sampler(target, schedule, kernel, ResamplingPolicy.never(), replicates, rng)
    log_weights = report.ensemble.log_weights
    value = float(np.var(log_weights, ddof=1))

    if np.ptp(log_weights) == 0.0:
        return Sigma2Estimate(value, value, value, replicates)

    result = stats.bootstrap(
        (log_weights,),
        lambda sample, axis: np.var(sample, axis=axis, ddof=1),
        confidence_level=confidence_level,
        n_resamples=n_resamples,
        method="percentile",
        random_state=rng,
    )
    low, high = result.confidence_interval
    return Sigma2Estimate(value, min(float(low), value), max(float(high), value), replicates)
