import logging
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed
from scipy import stats

from highdim_smc._utils import spawn_generators
from highdim_smc.exceptions import DegeneracyError, EstimationError, PropagationError

logger = logging.getLogger(__name__)

MIN_BOOTSTRAP_RESAMPLES = 1000


def _relative_l2(values, axis=-1):
    return np.mean((values - 1.0) ** 2, axis=axis)


def _mean(values, axis=-1):
    return np.mean(values, axis=axis)


@dataclass(frozen=True)
class ReplicateSummary:
    """
    Replicate statistics of one scalar output.

    Attributes:
        values (numpy.ndarray): Per-replicate outputs.
        truth (float | None): Reference value; when set, ``relative_l2`` and the interval refer to
            ``mean((values / truth - 1)**2)``, otherwise the interval is for the mean.
        mean (float): Sample mean.
        variance (float): Unbiased sample variance.
        relative_l2 (float | None): Relative L2 error against ``truth``.
        ci_low (float): Lower end of the percentile bootstrap interval.
        ci_high (float): Upper end.
    """

    values: np.ndarray
    truth: float
    mean: float
    variance: float
    relative_l2: float
    ci_low: float
    ci_high: float

    @classmethod
    def from_values(cls, values, truth=None, rng=None, confidence_level=0.95, n_resamples=MIN_BOOTSTRAP_RESAMPLES):
        """
        Summarize replicate outputs.

        Args:
            values (array_like): Per-replicate outputs, at least two.
            truth (float, optional): Reference value for the relative L2 error.
            rng (numpy.random.Generator, optional): Bootstrap random source.
            confidence_level (float): Interval level.
            n_resamples (int): Bootstrap resamples, at least 1000.

        Returns:
            ReplicateSummary: The summary.

        Raises:
            EstimationError: With fewer than two finite values.
        """
        values = np.asarray(values, dtype=float)
        values = values[np.isfinite(values)]
        if values.size < 2:
            raise EstimationError(f"At least two finite replicate values are needed, got {values.size}")
        n_resamples = max(int(n_resamples), MIN_BOOTSTRAP_RESAMPLES)

        if truth is None:
            sample, statistic = values, _mean
        else:
            sample, statistic = values / truth, _relative_l2
        point = float(statistic(sample))

        if np.ptp(sample) == 0.0:
            low = high = point
        else:
            result = stats.bootstrap(
                (sample,),
                statistic,
                confidence_level=confidence_level,
                n_resamples=n_resamples,
                method="percentile",
                random_state=rng if rng is not None else np.random.default_rng(0),
            )
            low, high = (float(v) for v in result.confidence_interval)

        return cls(
            values=values,
            truth=truth,
            mean=float(values.mean()),
            variance=float(values.var(ddof=1)),
            relative_l2=None if truth is None else point,
            # The percentile interval can miss the point estimate for skewed statistics
            ci_low=min(low, point),
            ci_high=max(high, point),
        )

    @property
    def count(self):
        return self.values.size

    @property
    def standard_error(self):
        return float(np.sqrt(self.variance / self.count))


def _guarded(func, index, rng):
    try:
        return func(index, rng)
    except (DegeneracyError, PropagationError) as exc:
        logger.warning(f"Replicate {index} excluded: {exc}")
        return None


def run_replicates(func, count, seed, jobs=1):
    """
    Run ``func(index, rng)`` for ``count`` replicates on a worker pool.

    Replicate ``r`` always receives the generator spawned for index ``r`` from ``seed``, so results do
    not depend on the worker count or the scheduling order. Replicates whose weights degenerate or whose
    particles leave the finite range return ``None``.

    Args:
        func (callable): The replicate body.
        count (int): Number of replicates.
        seed (int | tuple[int, ...]): Entropy of the master seed sequence.
        jobs (int): joblib worker count; 1 runs in the calling process.

    Returns:
        list: One result per replicate, in index order.
    """
    generators = spawn_generators(seed, count)
    logger.debug(f"Running {count} replicates on {jobs} worker(s)")
    if jobs == 1:
        return [_guarded(func, index, rng) for index, rng in enumerate(generators)]
    return Parallel(n_jobs=jobs)(delayed(_guarded)(func, index, rng) for index, rng in enumerate(generators))


def split_degenerate(results):
    """
    ``(kept, fraction)``: the non-``None`` results and the fraction of ``None`` ones.
    """
    kept = [result for result in results if result is not None]
    fraction = 1.0 - len(kept) / len(results) if results else 0.0
    return kept, fraction
