from dataclasses import dataclass

from highdim_smc.exceptions import ArgumentError

NEVER = "never"
ESS_THRESHOLD = "ess_threshold"
DETERMINISTIC_TIMES = "deterministic_times"
ESS_THRESHOLD_PLUS_FINAL = "ess_threshold_plus_final"
DETERMINISTIC_PLUS_FINAL = "deterministic_plus_final"

policy_kinds = (NEVER, ESS_THRESHOLD, DETERMINISTIC_TIMES, ESS_THRESHOLD_PLUS_FINAL, DETERMINISTIC_PLUS_FINAL)


@dataclass(frozen=True)
class ResamplingPolicy:
    """
    When the sampler resamples.

    Attributes:
        kind (str): One of ``policy_kinds``.
        threshold (float | None): Absolute ESS threshold a; ``None`` means ``threshold_fraction * N``.
        threshold_fraction (float): Fraction of N used when ``threshold`` is not set.
        times (tuple[int, ...]): Strictly increasing interior step indices for the deterministic kinds.
    """

    kind: str = NEVER
    threshold: float = None
    threshold_fraction: float = 0.5
    times: tuple = ()

    def __post_init__(self):
        if self.kind not in policy_kinds:
            raise ArgumentError(f"Unknown resampling policy '{self.kind}', expected one of {policy_kinds}")
        if self.threshold is not None and self.threshold < 1:
            raise ArgumentError(f"ESS threshold must be at least 1, got {self.threshold}")
        if not 0 < self.threshold_fraction <= 1:
            raise ArgumentError(f"ESS threshold fraction must lie in (0, 1], got {self.threshold_fraction}")
        times = tuple(int(t) for t in self.times)
        if any(b <= a for a, b in zip(times, times[1:])) or any(t < 1 for t in times):
            raise ArgumentError(f"Resampling steps must be positive and strictly increasing, got {times}")
        if times and not self.is_deterministic:
            raise ArgumentError(f"Policy '{self.kind}' does not take resampling steps")
        object.__setattr__(self, "times", times)

    @classmethod
    def never(cls):
        return cls(kind=NEVER)

    @classmethod
    def ess_threshold(cls, threshold=None, fraction=0.5, final=False):
        return cls(
            kind=ESS_THRESHOLD_PLUS_FINAL if final else ESS_THRESHOLD,
            threshold=threshold,
            threshold_fraction=fraction,
        )

    @classmethod
    def deterministic(cls, times, final=False):
        return cls(kind=DETERMINISTIC_PLUS_FINAL if final else DETERMINISTIC_TIMES, times=tuple(times))

    @property
    def uses_ess(self):
        return self.kind in (ESS_THRESHOLD, ESS_THRESHOLD_PLUS_FINAL)

    @property
    def is_deterministic(self):
        return self.kind in (DETERMINISTIC_TIMES, DETERMINISTIC_PLUS_FINAL)

    @property
    def resample_at_end(self):
        return self.kind in (ESS_THRESHOLD_PLUS_FINAL, DETERMINISTIC_PLUS_FINAL)

    def ess_threshold_for(self, particle_count):
        return self.threshold if self.threshold is not None else self.threshold_fraction * particle_count

    def validate_for(self, steps, particle_count):
        """
        Check the policy against a sampler with ``steps`` steps and ``particle_count`` particles.

        Raises:
            ArgumentError: If a deterministic time is not an interior step or the threshold exceeds N.
        """
        if self.times and self.times[-1] >= steps:
            raise ArgumentError(f"Deterministic resampling steps must be below {steps}, got {self.times}")
        if self.uses_ess and self.ess_threshold_for(particle_count) > particle_count:
            raise ArgumentError(f"ESS threshold exceeds the particle count {particle_count}")

    def should_resample(self, step, ess_value, particle_count, steps):
        """
        Whether to resample after ``step``, including the final resampling at ``step == steps``.
        """
        if step == steps and self.resample_at_end:
            return True
        if self.uses_ess:
            return ess_value < self.ess_threshold_for(particle_count)
        if self.is_deterministic:
            return step in self.times
        return False
