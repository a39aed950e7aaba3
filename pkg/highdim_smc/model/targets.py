import logging
from abc import ABC, abstractmethod

import numpy as np
from scipy import linalg

from highdim_smc.exceptions import ArgumentError, EvaluationError

logger = logging.getLogger(__name__)


def _expand_mask(mask, values):
    """
    Broadcast a per-particle (or per-element) mask against block values.
    """
    mask = np.asarray(mask, dtype=bool)
    return mask.reshape(mask.shape + (1,) * (np.ndim(values) - mask.ndim))


class KernelTarget(ABC):
    """
    Abstract base class for the invariant law of a move kernel.

    Positions are arrays of shape ``(N, *event_shape)``. Targets report one log-density per particle,
    optionally factorize over coordinates (product targets), expose the coordinate blocks visited by
    Metropolis-within-Gibbs sweeps, and may provide exact sampling.

    Subclasses that keep per-sweep bookkeeping (for instance a cached gradient of a quadratic form)
    override ``gibbs_state``, ``block_log_ratio`` and ``commit_block`` together.
    """

    is_product = False
    elementwise_blocks = False

    @abstractmethod
    def log_density(self, x):
        """
        Unnormalized log-density of each particle.

        Args:
            x (numpy.ndarray): Positions of shape ``(N, *event_shape)``.

        Returns:
            numpy.ndarray: Array of shape ``(N,)``, ``-inf`` outside the support.
        """
        pass

    def elementwise_log_density(self, x):
        raise NotImplementedError(f"{type(self).__name__} does not factorize over coordinates")

    @property
    def supports_exact_sampling(self):
        return False

    def sample(self, size, rng):
        raise NotImplementedError(f"{type(self).__name__} does not provide exact sampling")

    def coordinate_blocks(self, event_shape):
        """
        Index tuples into the event axes, one per Gibbs update; defaults to single coordinates.
        """
        for index in np.ndindex(*event_shape):
            yield index

    def gibbs_state(self, x):
        return None

    def block_log_ratio(self, x, block, proposal, state):
        """
        Log acceptance ratio of replacing ``x[:, *block]`` by ``proposal``.

        Args:
            x (numpy.ndarray): Current positions, left untouched.
            block (tuple): Index into the event axes.
            proposal (numpy.ndarray): Proposed block values, same shape as ``x[:, *block]``.
            state: Whatever ``gibbs_state`` returned.

        Returns:
            numpy.ndarray: Shape ``(N,)``, or the block shape when ``elementwise_blocks`` is set.
        """
        index = (slice(None),) + tuple(block)
        candidate = x.copy()
        candidate[index] = proposal
        return self.log_density(candidate) - self.log_density(x)

    def commit_block(self, x, block, proposal, accepted, state):
        """
        Write accepted block values into ``x`` in place.
        """
        index = (slice(None),) + tuple(block)
        x[index] = np.where(_expand_mask(accepted, proposal), proposal, x[index])


class ProductTarget:
    """
    The i.i.d. target Pi(x) ∝ exp(sum_j g(x_j)) on E^d.

    Args:
        potential (ScalarPotential): The coordinate log-potential g.
        dimension (int): Number of coordinates d.
    """

    def __init__(self, potential, dimension):
        if dimension < 1:
            raise ArgumentError(f"Dimension must be positive, got {dimension}")
        self.potential = potential
        self.dimension = int(dimension)

    @property
    def support(self):
        return self.potential.support

    def potential_sum(self, x, check=True):
        """
        sum_j g(x_j) over the last axis.

        Args:
            x (array_like): Positions whose last axis has length d.
            check (bool): Raise when a coordinate is outside the support.

        Returns:
            numpy.ndarray | float: One value per leading index.

        Raises:
            EvaluationError: If ``check`` is set and some coordinate is outside the support.
        """
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dimension:
            raise ArgumentError(f"Expected last axis of length {self.dimension}, got shape {x.shape}")
        if check:
            self.support.check(x)
        return np.sum(self.potential.evaluate(x), axis=-1)

    def log_density(self, x):
        return self.potential_sum(x)

    def tempered(self, temperature):
        return TemperedProductTarget(self.potential, self.dimension, temperature)


def bridge_log_density(target, s, x):
    """
    log Gamma_s(x) = s * sum_j g(x_j), the unnormalized bridging density at inverse temperature s.

    Args:
        target (ProductTarget): The product target.
        s (float): Inverse temperature in ``(0, 1]``.
        x (array_like): A state vector of length d, or an ``(N, d)`` array.

    Returns:
        float | numpy.ndarray: The log-density.

    Raises:
        ArgumentError: If ``s`` is outside ``(0, 1]``.
        EvaluationError: If ``x`` lies outside the support.
    """
    if not 0.0 < s <= 1.0:
        raise ArgumentError(f"Inverse temperature must lie in (0, 1], got {s}")
    value = s * target.potential_sum(x)
    return float(value) if np.ndim(value) == 0 else value


class TemperedProductTarget(KernelTarget):
    """
    pi_s^{⊗d}: the invariant law of the product kernels at inverse temperature s.

    Args:
        potential (ScalarPotential): The coordinate log-potential g.
        dimension (int): Number of coordinates d.
        temperature (float): Inverse temperature s.
    """

    is_product = True
    elementwise_blocks = True

    def __init__(self, potential, dimension, temperature):
        self.potential = potential
        self.dimension = int(dimension)
        self.temperature = float(temperature)

    def elementwise_log_density(self, x):
        x = np.asarray(x, dtype=float)
        inside = self.potential.support.mask(x)
        with np.errstate(invalid="ignore"):
            values = self.temperature * self.potential.evaluate(x)
        return np.where(inside, values, -np.inf)

    def log_density(self, x):
        return np.sum(self.elementwise_log_density(x), axis=-1)

    @property
    def supports_exact_sampling(self):
        return self.potential.supports_exact_sampling

    def sample(self, size, rng):
        shape = (size,) if np.isscalar(size) else tuple(size)
        return self.potential.sample_tempered(self.temperature, shape + (self.dimension,), rng)

    def coordinate_blocks(self, event_shape):
        # coordinates are independent, so one block covers them all
        yield ()

    def block_log_ratio(self, x, block, proposal, state):
        index = (slice(None),) + tuple(block)
        return self.elementwise_log_density(proposal) - self.elementwise_log_density(x[index])


class JointLogTarget(KernelTarget):
    """
    A non-product target given by a vectorized log-density function.

    Args:
        log_density_fn (callable): Maps an ``(N, d)`` array to ``(N,)`` log-densities.
        dimension (int): Number of coordinates d.
        sampler (callable, optional): ``sampler(size, rng)`` returning exact draws.
    """

    def __init__(self, log_density_fn, dimension, sampler=None):
        self.log_density_fn = log_density_fn
        self.dimension = int(dimension)
        self.sampler = sampler

    def log_density(self, x):
        return np.asarray(self.log_density_fn(x), dtype=float)

    @property
    def supports_exact_sampling(self):
        return self.sampler is not None

    def sample(self, size, rng):
        if self.sampler is None:
            return super().sample(size, rng)
        return self.sampler(size, rng)


class QuadraticLogTarget(KernelTarget):
    """
    log q(x) = -x'Ax/2 + b'x: a Gaussian N(A^{-1}b, A^{-1}) known through its canonical form.

    Single-coordinate Gibbs updates cost O(d) per particle by caching ``c = xA - b``: moving
    coordinate j by delta changes the log-density by ``-delta c_j - A_jj delta**2 / 2``.

    Args:
        precision (array_like): Symmetric positive definite ``(d, d)`` matrix A.
        shift (array_like): Length-d vector b.
    """

    def __init__(self, precision, shift):
        precision = np.asarray(precision, dtype=float)
        shift = np.asarray(shift, dtype=float)
        if precision.ndim != 2 or precision.shape[0] != precision.shape[1] or precision.shape[0] != shift.size:
            raise ArgumentError(f"Incompatible precision {precision.shape} and shift {shift.shape}")
        if not np.allclose(precision, precision.T, atol=1e-10):
            raise ArgumentError("Precision matrix must be symmetric")
        self.precision = precision
        self.shift = shift
        self.dimension = shift.size
        self._factor = None

    @classmethod
    def from_moments(cls, mean, covariance, temperature=1.0):
        """
        The tempered Gaussian N(mean, covariance)^temperature in canonical form.
        """
        precision = temperature * linalg.inv(np.asarray(covariance, dtype=float))
        precision = 0.5 * (precision + precision.T)
        return cls(precision, precision @ np.asarray(mean, dtype=float))

    def scaled(self, temperature):
        return QuadraticLogTarget(temperature * self.precision, temperature * self.shift)

    @property
    def factor(self):
        if self._factor is None:
            try:
                self._factor = linalg.cholesky(self.precision, lower=True)
            except linalg.LinAlgError as exc:
                raise EvaluationError(f"Precision matrix is not positive definite: {exc}") from exc
        return self._factor

    @property
    def mean(self):
        return linalg.cho_solve((self.factor, True), self.shift)

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        return -0.5 * np.einsum("ni,ij,nj->n", x, self.precision, x) + x @ self.shift

    @property
    def supports_exact_sampling(self):
        return True

    def sample(self, size, rng):
        z = rng.standard_normal((int(size), self.dimension))
        # x = mean + L^{-T} z has covariance (L L')^{-1}
        return self.mean + linalg.solve_triangular(self.factor, z.T, lower=True, trans="T").T

    def gibbs_state(self, x):
        return x @ self.precision - self.shift

    def block_log_ratio(self, x, block, proposal, state):
        (j,) = block
        delta = proposal - x[:, j]
        return -delta * state[:, j] - 0.5 * self.precision[j, j] * delta**2

    def commit_block(self, x, block, proposal, accepted, state):
        (j,) = block
        delta = np.where(accepted, proposal - x[:, j], 0.0)
        x[:, j] += delta
        state += delta[:, None] * self.precision[j][None, :]
