import logging

import numpy as np
from scipy.special import logsumexp

from highdim_smc._utils import log_mean_exp, normalized_weights
from highdim_smc.exceptions import ArgumentError, DegeneracyError, PropagationError

logger = logging.getLogger(__name__)


def log_ess(log_weights):
    """
    log ESS = 2 LSE(lw) - LSE(2 lw).

    Raises:
        DegeneracyError: If no log-weight is finite, or any is NaN.
    """
    log_weights = np.asarray(log_weights, dtype=float)
    if log_weights.size == 0 or np.any(np.isnan(log_weights)) or not np.any(np.isfinite(log_weights)):
        raise DegeneracyError("Effective sample size is not computable: all particle weights vanished")
    return 2.0 * logsumexp(log_weights) - logsumexp(2.0 * log_weights)


def ess(log_weights):
    """
    Effective sample size (sum w)**2 / sum w**2 from un-normalized log-weights.

    Args:
        log_weights (array_like): Length-N log-weights; ``-inf`` entries are zero weights.

    Returns:
        float: The ESS, in ``[1, N]``.

    Raises:
        DegeneracyError: If every weight is zero.
    """
    value = float(np.exp(log_ess(log_weights)))
    return min(max(value, 1.0), float(np.size(log_weights)))


class Ensemble:
    """
    N weighted particles, with the bookkeeping of completed weight blocks.

    A block is the run of steps between two resampling events. Closing a block records the log of
    the mean weight, the block's contribution to the normalizing-constant estimate, and resets every
    log-weight to exactly zero.

    Args:
        positions (array_like): Array of shape ``(N, *event_shape)``.
        log_weights (array_like, optional): Initial log-weights, zeros by default.
    """

    def __init__(self, positions, log_weights=None):
        self.positions = np.array(positions, dtype=float)
        if self.positions.ndim < 2 or self.positions.shape[0] < 1 or self.positions.shape[-1] < 1:
            raise ArgumentError(f"Positions must have shape (N, ..., d) with N, d >= 1, got {self.positions.shape}")
        if log_weights is None:
            self.log_weights = np.zeros(self.particle_count)
        else:
            self.log_weights = np.array(log_weights, dtype=float)
            if self.log_weights.shape != (self.particle_count,):
                raise ArgumentError(f"Expected {self.particle_count} log-weights, got {self.log_weights.shape}")
        self.block_log_means = []
        self.block_bounds = []
        self.resample_events = []
        self.ancestors = None
        self.step = 0
        self._block_start = 0

    @property
    def particle_count(self):
        return self.positions.shape[0]

    @property
    def dimension(self):
        return self.positions.shape[-1]

    @property
    def event_shape(self):
        return self.positions.shape[1:]

    def copy(self):
        other = Ensemble(self.positions, self.log_weights)
        other.block_log_means = list(self.block_log_means)
        other.block_bounds = list(self.block_bounds)
        other.resample_events = list(self.resample_events)
        other.step = self.step
        other._block_start = self._block_start
        return other

    def add_log_increment(self, increment):
        """
        Multiply the weights by ``exp(increment)``.

        Raises:
            PropagationError: If some increment is not finite, naming the first such particle.
        """
        increment = np.asarray(increment, dtype=float)
        bad = ~np.isfinite(increment)
        if np.any(bad):
            index = int(np.argmax(bad))
            raise PropagationError(f"Non-finite log-weight increment {increment[index]}", particle_index=index)
        self.log_weights += increment
        return self.log_weights

    def ess(self):
        return ess(self.log_weights)

    def normalized_weights(self):
        return normalized_weights(self.log_weights)

    def current_block_log_mean(self):
        return float(log_mean_exp(self.log_weights))

    def close_block(self, step):
        """
        Record the current block's log mean weight and start a new block after ``step``.
        """
        self.block_log_means.append(self.current_block_log_mean())
        self.block_bounds.append((self._block_start, step))
        self._block_start = step

    def resample(self, rng, step):
        """
        Multinomial resampling: close the block, draw N offspring, reset log-weights to zero.

        Returns:
            Ensemble: ``self``, for chaining.
        """
        current_ess = self.ess()
        self.close_block(step)
        weights = self.normalized_weights()
        self.ancestors = rng.choice(self.particle_count, size=self.particle_count, replace=True, p=weights)
        self.positions = self.positions[self.ancestors]
        self.log_weights = np.zeros(self.particle_count)
        self.resample_events.append((step, current_ess))
        logger.debug(f"Resampled at step {step} with ESS {current_ess:.3f}")
        return self


def weight_update(ensemble, phi_prev, phi_next, target):
    """
    Incremental importance weights Gamma_next(x) / Gamma_prev(x) at the current (pre-move) positions.

    Args:
        ensemble (Ensemble): Particles before the step's move.
        phi_prev (float): Previous inverse temperature.
        phi_next (float): Next inverse temperature, strictly larger.
        target (ProductTarget): The product target.

    Returns:
        numpy.ndarray: The updated log-weights.

    Raises:
        ArgumentError: If ``phi_next <= phi_prev``.
        PropagationError: If a potential value is not finite.
    """
    if not phi_next > phi_prev:
        raise ArgumentError(f"Inverse temperatures must increase, got {phi_prev} -> {phi_next}")
    with np.errstate(invalid="ignore", over="ignore"):
        increment = (phi_next - phi_prev) * target.potential_sum(ensemble.positions)
    return ensemble.add_log_increment(increment)


def multinomial_resample(ensemble, rng, step=None):
    """
    Resample the ensemble in place with jointly Multinomial(N, normalized weights) offspring counts.

    Args:
        ensemble (Ensemble): The weighted particles.
        rng (numpy.random.Generator): Random source.
        step (int, optional): Step index recorded with the event; defaults to the ensemble's current step.

    Returns:
        Ensemble: The resampled ensemble with all log-weights zero.

    Raises:
        DegeneracyError: If all weights vanished.
    """
    if step is None:
        step = ensemble.step
    return ensemble.resample(rng, step)
