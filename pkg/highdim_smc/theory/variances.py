import logging
import math
import warnings

import numpy as np
from scipy import integrate, optimize

from highdim_smc.exceptions import ArgumentError, NumericalError

logger = logging.getLogger(__name__)

QUAD_EPSREL = 1e-8
QUAD_EPSABS = 1e-12


def gaussian_tempered_variance(s):
    """
    Var(g) under pi_s for g(x) = -x**2 / 2, which is 1 / (2 s**2).
    """
    return 0.5 / s**2


class VariancePath:
    """
    The ingredients of the asymptotic log-weight variance along an annealing path.

    For exact-sampling kernels the variance accumulated over ``[s, t]`` is the integral of
    v(phi(u)) * phi'(u)**2 with v(s) = Var_{pi_s}(g).

    Args:
        phi (callable): The schedule map u -> phi(u) on ``[0, 1]``.
        derivative (callable): phi'(u).
        variance (callable): Per-temperature variance v(s); Gaussian by default.
        phi0 (float): phi(0).
        breakpoints (tuple, optional): Interior u values where phi' jumps.
    """

    def __init__(self, phi, derivative, variance=None, phi0=None, breakpoints=()):
        self.phi = phi
        self.derivative = derivative
        self.variance = variance or gaussian_tempered_variance
        self.phi0 = float(phi(0.0)) if phi0 is None else float(phi0)
        self.breakpoints = tuple(float(b) for b in breakpoints)

    @classmethod
    def linear(cls, phi0, variance=None):
        """
        phi(u) = phi0 + (1 - phi0) u; ``phi0 = 1`` gives the constant path with zero variance.
        """
        if not 0.0 <= phi0 <= 1.0:
            raise ArgumentError(f"phi0 must lie in [0, 1], got {phi0}")
        return cls(
            phi=lambda u: phi0 + (1.0 - phi0) * u,
            derivative=lambda u: 1.0 - phi0,
            variance=variance,
            phi0=phi0,
        )

    @classmethod
    def exponential(cls, phi0, theta, variance=None):
        if theta <= 0:
            raise ArgumentError(f"theta must be positive, got {theta}")
        scale = math.expm1(theta)
        return cls(
            phi=lambda u: (phi0 * math.exp(theta) - 1.0) / scale + (1.0 - phi0) / scale * math.exp(theta * u),
            derivative=lambda u: (1.0 - phi0) * theta / scale * math.exp(theta * u),
            variance=variance,
            phi0=phi0,
        )

    @classmethod
    def from_schedule(cls, schedule, potential=None):
        """
        The path of an ``AnnealingSchedule``; ``potential`` supplies v(s) (Gaussian when omitted).
        """
        variance = potential.tempered_variance if potential is not None else None
        return cls(
            phi=schedule.continuous,
            derivative=schedule.derivative,
            variance=variance,
            phi0=schedule.phi0,
            breakpoints=schedule.breakpoints(),
        )

    def integrand(self, u):
        slope = float(self.derivative(u))
        if slope == 0.0:
            return 0.0
        return float(self.variance(float(self.phi(u)))) * slope**2


def _grid(path, s, t):
    """
    Sub-interval end points: log-spaced towards ``s``, where v(phi(u)) is largest for small phi0, plus breakpoints.
    """
    offsets = (t - s) * np.logspace(-8, 0, 9)
    points = {s, t}
    points.update(s + offsets)
    points.update(b for b in path.breakpoints if s < b < t)
    return np.array(sorted(points))


def sigma2_exact_kernel(path, s, t):
    """
    Asymptotic log-weight variance accumulated between schedule times ``s`` and ``t``.

    Args:
        path (VariancePath): The annealing path.
        s (float): Start time, ``0 <= s``.
        t (float): End time, ``s < t <= 1``.

    Returns:
        float: The integral of v(phi(u)) phi'(u)**2 over ``[s, t]``.

    Raises:
        ArgumentError: If ``s >= t`` or the times are outside ``[0, 1]``.
        NumericalError: If the quadrature does not return a finite value.
    """
    if not s < t:
        raise ArgumentError(f"Start time {s} must be below end time {t}")
    if s < 0.0 or t > 1.0:
        raise ArgumentError(f"Times must lie in [0, 1], got [{s}, {t}]")

    grid = _grid(path, s, t)
    total = 0.0
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        for left, right in zip(grid[:-1], grid[1:]):
            value, _ = integrate.quad(path.integrand, left, right, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200)
            total += value
    for warning in caught:
        logger.warning(f"Quadrature accuracy warning on [{s}, {t}]: {warning.message}")

    if not math.isfinite(total):
        raise NumericalError(f"Variance quadrature on [{s}, {t}] returned {total}")
    return total


def block_sigma2s(path, boundaries):
    """
    Variances of consecutive blocks ``[boundaries[k-1], boundaries[k]]``.

    Args:
        path (VariancePath): The annealing path.
        boundaries (sequence[float]): Strictly increasing schedule times, typically from 0 to 1.

    Returns:
        list[float]: One variance per block.
    """
    boundaries = [float(b) for b in boundaries]
    if len(boundaries) < 2:
        raise ArgumentError("At least two block boundaries are needed")
    return [sigma2_exact_kernel(path, a, b) for a, b in zip(boundaries[:-1], boundaries[1:])]


def variance_split_point(path, fraction=0.5, s=0.0, t=1.0):
    """
    The time u in ``(s, t)`` at which ``fraction`` of the variance over ``[s, t]`` has accumulated.

    Raises:
        ArgumentError: If ``fraction`` is not in ``(0, 1)`` or the path has no variance on ``[s, t]``.
    """
    if not 0.0 < fraction < 1.0:
        raise ArgumentError(f"Fraction must lie in (0, 1), got {fraction}")
    total = sigma2_exact_kernel(path, s, t)
    if total <= 0.0:
        raise ArgumentError(f"The path accumulates no variance on [{s}, {t}]")

    def excess(u):
        return sigma2_exact_kernel(path, s, u) - fraction * total

    return optimize.brentq(excess, s + 1e-12 * (t - s), t, xtol=1e-12)
