import logging
from abc import ABC, abstractmethod

import numpy as np

from highdim_smc.exceptions import ImproperlyConfigured, PropagationError
from highdim_smc.kernels.kernel_specs import EXACT, RWM, RWM_WITHIN_GIBBS
from highdim_smc.kernels.kernel_steps import metropolis_accept

logger = logging.getLogger(__name__)


def _expand_mask(mask, values):
    return mask.reshape(mask.shape + (1,) * (values.ndim - mask.ndim))


class BaseKernelBackend(ABC):
    """
    Abstract base class for kernel backends.

    A backend applies one SMC step's worth of a move kernel (``spec.sweeps`` applications) to every
    particle of an ensemble at once, leaving the supplied target invariant.

    Args:
        spec (KernelSpec): The kernel description.
    """

    def __init__(self, spec):
        self.spec = spec

    @abstractmethod
    def apply(self, target, positions, rng):
        """
        Apply one kernel application to all particles.

        Args:
            target (KernelTarget): Invariant law of the move.
            positions (numpy.ndarray): Array of shape ``(N, *event_shape)``, not modified.
            rng (numpy.random.Generator): Random source.

        Returns:
            tuple[numpy.ndarray, float]: New positions and the fraction of accepted proposals.
        """
        pass

    def move(self, target, positions, rng):
        """
        Apply the kernel ``spec.sweeps`` times.

        Returns:
            tuple[numpy.ndarray, float]: New positions and the mean acceptance rate over sweeps.

        Raises:
            PropagationError: If a moved particle has a non-finite coordinate.
        """
        rates = []
        for _ in range(self.spec.sweeps):
            positions, rate = self.apply(target, positions, rng)
            rates.append(rate)
        bad = ~np.all(np.isfinite(positions.reshape(positions.shape[0], -1)), axis=1)
        if np.any(bad):
            raise PropagationError("Kernel produced a non-finite state", particle_index=int(np.argmax(bad)))
        return positions, float(np.mean(rates))


class RandomWalkMetropolisBackend(BaseKernelBackend):
    """
    Random-walk Metropolis with Gaussian increments.

    On a product target the kernel is the product of independent coordinate kernels, so acceptance
    is decided per coordinate. On any other target the whole vector is proposed and accepted per particle.
    """

    def apply(self, target, positions, rng):
        increment = self.spec.proposal_sd * rng.standard_normal(positions.shape)
        accept_shape = positions.shape if target.is_product else positions.shape[:1]
        log_uniform = np.log(rng.random(accept_shape))
        return self.transition(target, positions, increment, log_uniform)

    def transition(self, target, positions, increment, log_uniform):
        """
        The RWM transition with its randomness supplied explicitly.

        Args:
            target (KernelTarget): Invariant law.
            positions (numpy.ndarray): Current positions.
            increment (numpy.ndarray): Proposal increments, same shape as ``positions``.
            log_uniform (numpy.ndarray): Log-uniforms, per coordinate for product targets, else per particle.

        Returns:
            tuple[numpy.ndarray, float]: New positions and acceptance rate.
        """
        proposal = positions + increment
        with np.errstate(invalid="ignore"):
            if target.is_product:
                log_ratio = target.elementwise_log_density(proposal) - target.elementwise_log_density(positions)
            else:
                log_ratio = target.log_density(proposal) - target.log_density(positions)
        accepted = metropolis_accept(log_ratio, log_uniform)
        return np.where(_expand_mask(accepted, positions), proposal, positions), float(accepted.mean())


class MetropolisWithinGibbsBackend(BaseKernelBackend):
    """
    Systematic-scan random-walk Metropolis within Gibbs over the target's coordinate blocks.
    """

    def apply(self, target, positions, rng):
        positions = np.array(positions, dtype=float)
        state = target.gibbs_state(positions)
        accepted_count = 0
        proposed_count = 0

        for block in target.coordinate_blocks(positions.shape[1:]):
            index = (slice(None),) + tuple(block)
            current = positions[index]
            proposal = current + self.spec.proposal_sd * rng.standard_normal(current.shape)
            with np.errstate(invalid="ignore"):
                log_ratio = np.asarray(target.block_log_ratio(positions, block, proposal, state))
            accepted = metropolis_accept(log_ratio, np.log(rng.random(log_ratio.shape)))
            target.commit_block(positions, block, proposal, accepted, state)
            accepted_count += int(accepted.sum())
            proposed_count += accepted.size

        return positions, accepted_count / max(proposed_count, 1)


class ExactSamplingBackend(BaseKernelBackend):
    """
    The kernel k_s(x, dx') = pi_s(dx'): every particle is replaced by an independent exact draw.
    """

    def apply(self, target, positions, rng):
        if not target.supports_exact_sampling:
            raise ImproperlyConfigured(f"Target {type(target).__name__} does not support exact sampling")
        draws = np.asarray(target.sample(positions.shape[0], rng), dtype=float)
        return draws.reshape(positions.shape), 1.0


kernel_backends = {
    RWM: RandomWalkMetropolisBackend,
    RWM_WITHIN_GIBBS: MetropolisWithinGibbsBackend,
    EXACT: ExactSamplingBackend,
}


def get_kernel_backend(spec):
    """
    Get the backend instance for a kernel specification.

    Args:
        spec (KernelSpec): The kernel description.

    Returns:
        BaseKernelBackend: The backend instance.

    Raises:
        ImproperlyConfigured: If no backend is registered for ``spec.kind``.
    """
    backend_class = kernel_backends.get(spec.kind)

    if not backend_class:
        raise ImproperlyConfigured(f"Kernel backend '{spec.kind}' not found")

    return backend_class(spec)
