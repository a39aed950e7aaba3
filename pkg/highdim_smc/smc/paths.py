import logging
from abc import ABC, abstractmethod

import numpy as np

from highdim_smc.exceptions import ArgumentError, ImproperlyConfigured
from highdim_smc.model.schedules import AnnealingSchedule
from highdim_smc.model.targets import ProductTarget, QuadraticLogTarget

logger = logging.getLogger(__name__)


class TemperingPath(ABC):
    """
    Abstract base class for a sequence of bridging densities Gamma_0, ..., Gamma_p.

    The sampler asks a path for exact draws from Gamma_0, for the log-ratio
    log Gamma_n(x) - log Gamma_{n-1}(x) at given positions, and for a kernel target invariant for Gamma_n.
    """

    steps = 0

    @abstractmethod
    def initial_positions(self, particle_count, rng):
        """
        Draw the initial particles i.i.d. from Gamma_0.

        Returns:
            numpy.ndarray: Array of shape ``(N, *event_shape)``.
        """
        pass

    @abstractmethod
    def log_increment(self, positions, step):
        """
        log Gamma_step(x) - log Gamma_{step-1}(x) for each particle.

        Returns:
            numpy.ndarray: Array of shape ``(N,)``.
        """
        pass

    @abstractmethod
    def kernel_target(self, step):
        """
        The move target at ``step``, invariant for Gamma_step.
        """
        pass

    def temperature(self, step):
        return float(step) / self.steps

    def temperatures(self):
        return np.array([self.temperature(n) for n in range(self.steps + 1)])


class AnnealedProductPath(TemperingPath):
    """
    Gamma_n = Pi^{phi_n} for an i.i.d. product target, started from exact draws of pi_{phi_0}^{⊗d}.

    Args:
        target (ProductTarget): The product target.
        schedule (AnnealingSchedule): The inverse temperatures.
    """

    def __init__(self, target, schedule):
        self.target = target
        self.schedule = schedule
        self.steps = schedule.steps
        self._phis = schedule.values()

    def initial_positions(self, particle_count, rng):
        initial = self.target.tempered(self._phis[0])
        if not initial.supports_exact_sampling:
            raise ImproperlyConfigured(f"Potential '{self.target.potential.name}' cannot draw the initial particles")
        try:
            return initial.sample(particle_count, rng)
        except ArgumentError as exc:
            raise ImproperlyConfigured(f"Cannot sample the initial bridge at phi0={self._phis[0]}: {exc}") from exc

    def log_increment(self, positions, step):
        return (self._phis[step] - self._phis[step - 1]) * self.target.potential_sum(positions)

    def kernel_target(self, step):
        return self.target.tempered(self._phis[step])

    def temperature(self, step):
        return float(self._phis[step])


class AnnealedQuadraticPath(TemperingPath):
    """
    Gamma_n = q^{phi_n} for a Gaussian q in canonical form, started from exact draws of q^{phi_0}.

    Args:
        base (QuadraticLogTarget): The final target q.
        schedule (AnnealingSchedule): The inverse temperatures; ``phi0`` must be positive.
    """

    def __init__(self, base, schedule):
        if not schedule.phi0 > 0:
            raise ArgumentError("Annealing a Gaussian target needs phi0 > 0")
        self.base = base
        self.schedule = schedule
        self.steps = schedule.steps
        self._phis = schedule.values()

    def initial_positions(self, particle_count, rng):
        return self.base.scaled(self._phis[0]).sample(particle_count, rng)

    def log_increment(self, positions, step):
        return (self._phis[step] - self._phis[step - 1]) * self.base.log_density(positions)

    def kernel_target(self, step):
        return self.base.scaled(self._phis[step])

    def temperature(self, step):
        return float(self._phis[step])


class DatapointTemperingPath(TemperingPath):
    """
    Introduce the data of a Bayesian linear model one at a time, each over ``steps_per_datum`` steps.

    The prior stays in the base measure; within datum n the bridging density is
    prior x prod_{k<n} l_k x l_n^{phi(j / steps_per_datum)} with a linear phi from 0 to 1.

    Args:
        model (BayesianLinearModel): The model.
        steps_per_datum (int): Tempering steps per datum.
        schedule (AnnealingSchedule, optional): Within-datum schedule; linear from 0 by default.
    """

    def __init__(self, model, steps_per_datum, schedule=None):
        if steps_per_datum < 1:
            raise ArgumentError(f"Steps per datum must be positive, got {steps_per_datum}")
        self.model = model
        self.steps_per_datum = int(steps_per_datum)
        self.schedule = schedule or AnnealingSchedule.linear(self.steps_per_datum, phi0=0.0)
        if self.schedule.steps != self.steps_per_datum:
            raise ArgumentError("Within-datum schedule length must equal steps_per_datum")
        self.steps = model.observation_count * self.steps_per_datum
        self._phis = self.schedule.values()
        self._terms = model.potentials()

    def locate(self, step):
        """
        ``(n, j)``: the datum (1-based) and the within-datum step (1-based) of a global step.
        """
        if not 1 <= step <= self.steps:
            raise ArgumentError(f"Step {step} outside of 1..{self.steps}")
        n, j = divmod(step - 1, self.steps_per_datum)
        return n + 1, j + 1

    def initial_positions(self, particle_count, rng):
        return rng.standard_normal((particle_count, self.model.dimension))

    def log_increment(self, positions, step):
        n, j = self.locate(step)
        return (self._phis[j] - self._phis[j - 1]) * self._terms[n - 1].evaluate(positions)

    def kernel_target(self, step):
        n, j = self.locate(step)
        return self.model.datapoint_target(n, self._phis[j])

    def temperature(self, step):
        if step == 0:
            return 0.0
        n, j = self.locate(step)
        return n - 1 + float(self._phis[j])


def annealing_path(target, schedule):
    """
    Build the annealed path for a product target or a Gaussian target in canonical form.

    Raises:
        ImproperlyConfigured: For any other kind of target.
    """
    if isinstance(target, TemperingPath):
        return target
    if isinstance(target, ProductTarget):
        return AnnealedProductPath(target, schedule)
    if isinstance(target, QuadraticLogTarget):
        return AnnealedQuadraticPath(target, schedule)
    raise ImproperlyConfigured(f"No annealing path for target of type {type(target).__name__}")
