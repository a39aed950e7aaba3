import logging
from dataclasses import dataclass, field

import numpy as np

from highdim_smc.exceptions import ArgumentError
from highdim_smc.kernels import get_kernel_backend
from highdim_smc.smc.ensemble import Ensemble
from highdim_smc.smc.paths import annealing_path

logger = logging.getLogger(__name__)


@dataclass
class SamplerReport:
    """
    Everything a finished SMC run reports.

    Attributes:
        ensemble (Ensemble): Final particles, weights and block bookkeeping.
        ess_trace (numpy.ndarray): ESS after the weight update of each step ``1..p``.
        block_log_means (list[float]): Log mean weight of every block, the final one included.
        block_bounds (list[tuple[int, int]]): ``(start, end)`` step indices of every block.
        resample_steps (list[int]): Steps after which the ensemble was resampled.
        acceptance_rates (numpy.ndarray): Kernel acceptance rate of each step.
        temperatures (numpy.ndarray): Path temperatures ``0..p``.
        terminal_ess (float): ESS at step p, before any final resampling.
        final_resampled (bool): Whether the ensemble was resampled after the last step.
        snapshots (dict[int, numpy.ndarray]): Positions at requested steps, taken after any resampling.
    """

    ensemble: Ensemble
    ess_trace: np.ndarray
    block_log_means: list
    block_bounds: list
    resample_steps: list
    acceptance_rates: np.ndarray
    temperatures: np.ndarray
    terminal_ess: float
    final_resampled: bool = False
    snapshots: dict = field(default_factory=dict)

    @property
    def log_nc_estimate(self):
        return norm_const_log_estimate(self)

    @property
    def block_count(self):
        return len(self.block_log_means)

    def acceptance_summary(self):
        rates = self.acceptance_rates
        if rates.size == 0:
            return {"mean": float("nan"), "min": float("nan"), "max": float("nan")}
        return {"mean": float(rates.mean()), "min": float(rates.min()), "max": float(rates.max())}


class SMCSampler:
    """
    The SMC sampler: weight at pre-move positions, move, then resample when the policy says so.

    Args:
        path (TemperingPath): Bridging densities.
        kernel (KernelSpec): Move kernel.
        policy (ResamplingPolicy): Resampling rule.
        particle_count (int): Number of particles N.
        snapshot_steps (iterable[int], optional): Steps whose end-of-step positions are kept.
    """

    def __init__(self, path, kernel, policy, particle_count, snapshot_steps=()):
        if particle_count < 1:
            raise ArgumentError(f"Particle count must be positive, got {particle_count}")
        policy.validate_for(path.steps, particle_count)
        self.path = path
        self.kernel = kernel
        self.policy = policy
        self.particle_count = int(particle_count)
        self.snapshot_steps = frozenset(int(s) for s in snapshot_steps)
        self.backend = get_kernel_backend(kernel)

    def initialize(self, rng):
        return Ensemble(self.path.initial_positions(self.particle_count, rng))

    def step(self, ensemble, n, rng):
        """
        Advance ``ensemble`` in place from step ``n - 1`` to step ``n``.

        Returns:
            tuple[float, float, bool]: ESS after the weight update, acceptance rate, whether it resampled.
        """
        # Weights use the positions before the move
        ensemble.add_log_increment(self.path.log_increment(ensemble.positions, n))

        # Move
        ensemble.positions, rate = self.backend.move(self.path.kernel_target(n), ensemble.positions, rng)
        ensemble.step = n

        current_ess = ensemble.ess()
        resampled = self.policy.should_resample(n, current_ess, self.particle_count, self.path.steps)
        if resampled:
            ensemble.resample(rng, n)
        return current_ess, rate, resampled

    def run(self, rng):
        """
        Run all p steps from fresh initial particles.

        Args:
            rng (numpy.random.Generator): Random source.

        Returns:
            SamplerReport: The run's report.
        """
        steps = self.path.steps
        ensemble = self.initialize(rng)
        ess_trace = np.empty(steps)
        rates = np.empty(steps)
        snapshots = {}
        if 0 in self.snapshot_steps:
            snapshots[0] = ensemble.positions.copy()

        resampled = False
        for n in range(1, steps + 1):
            ess_trace[n - 1], rates[n - 1], resampled = self.step(ensemble, n, rng)
            if n in self.snapshot_steps:
                snapshots[n] = ensemble.positions.copy()

        # Close the last block, empty when the final step resampled
        ensemble.close_block(steps)
        logger.debug(
            f"Finished {steps} steps with {len(ensemble.resample_events)} resampling events, "
            f"terminal ESS {ess_trace[-1]:.3f}"
        )
        return SamplerReport(
            ensemble=ensemble,
            ess_trace=ess_trace,
            block_log_means=list(ensemble.block_log_means),
            block_bounds=list(ensemble.block_bounds),
            resample_steps=[event[0] for event in ensemble.resample_events],
            acceptance_rates=rates,
            temperatures=self.path.temperatures(),
            terminal_ess=float(ess_trace[-1]),
            final_resampled=resampled,
            snapshots=snapshots,
        )


def run_sampler(target, schedule, kernel, policy, particle_count, rng, snapshot_steps=()):
    """
    Run the SMC sampler along the annealed path of ``target``.

    Args:
        target (ProductTarget | QuadraticLogTarget | TemperingPath): What to anneal; a ready-made path is
            used as is and ``schedule`` is then ignored.
        schedule (AnnealingSchedule): Inverse temperatures.
        kernel (KernelSpec): Move kernel.
        policy (ResamplingPolicy): Resampling rule.
        particle_count (int): Number of particles N.
        rng (numpy.random.Generator): Random source.
        snapshot_steps (iterable[int], optional): Steps whose positions are kept.

    Returns:
        SamplerReport: The run's report.

    Raises:
        DegeneracyError: If all weights vanish.
        PropagationError: On non-finite potentials or states.
    """
    sampler = SMCSampler(annealing_path(target, schedule), kernel, policy, particle_count, snapshot_steps)
    return sampler.run(rng)


def norm_const_log_estimate(report):
    """
    log of the normalizing-constant estimate: the sum over blocks of the log mean weights.
    """
    return float(np.sum(report.block_log_means))


def final_resample_estimate(report, test_function, coordinate, rng):
    """
    Resample once at the final time and average a test function over one coordinate.

    When the run already resampled after its last step the particles are used as they are.

    Args:
        report (SamplerReport): A finished run.
        test_function (callable): Vectorized scalar function.
        coordinate (int): Coordinate index j.
        rng (numpy.random.Generator): Random source.

    Returns:
        float: ``(1/N) sum_i test_function(x_j^i)`` over the resampled particles.

    Raises:
        DegeneracyError: If all final weights vanished.
    """
    ensemble = report.ensemble
    if report.final_resampled:
        positions = ensemble.positions
    else:
        positions = ensemble.copy().resample(rng, ensemble.step).positions
    values = np.asarray(test_function(positions[..., coordinate]), dtype=float)
    return float(np.mean(values))
