import math
from dataclasses import dataclass

from highdim_smc.exceptions import ArgumentError

RWM = "rwm"
RWM_WITHIN_GIBBS = "rwm_within_gibbs"
EXACT = "exact"

kernel_kinds = (RWM, RWM_WITHIN_GIBBS, EXACT)


@dataclass(frozen=True)
class KernelSpec:
    """
    Which move kernel to apply at each SMC step, and how often.

    Attributes:
        kind (str): ``rwm``, ``rwm_within_gibbs`` or ``exact``.
        proposal_sd (float | None): Random-walk increment standard deviation, Metropolis kinds only.
        sweeps (int): Kernel applications per SMC step.
    """

    kind: str
    proposal_sd: float = None
    sweeps: int = 1

    def __post_init__(self):
        if self.kind not in kernel_kinds:
            raise ArgumentError(f"Unknown kernel kind '{self.kind}', expected one of {kernel_kinds}")
        if self.kind != EXACT and (self.proposal_sd is None or not self.proposal_sd > 0):
            raise ArgumentError(f"Metropolis kernels need proposal_sd > 0, got {self.proposal_sd}")
        if self.sweeps < 1:
            raise ArgumentError(f"Sweeps per step must be positive, got {self.sweeps}")

    @property
    def is_metropolis(self):
        return self.kind != EXACT

    @classmethod
    def rwm(cls, proposal_sd, sweeps=1):
        return cls(kind=RWM, proposal_sd=float(proposal_sd), sweeps=int(sweeps))

    @classmethod
    def rwm_within_gibbs(cls, proposal_sd=0.25, sweeps=1):
        return cls(kind=RWM_WITHIN_GIBBS, proposal_sd=float(proposal_sd), sweeps=int(sweeps))

    @classmethod
    def exact(cls):
        return cls(kind=EXACT)

    @classmethod
    def rwm_for_initial_temperature(cls, phi0, sweeps=1):
        """
        RWM whose proposal variance is 1/25 of the variance 1/phi0 of the initial Gaussian bridge.
        """
        if not phi0 > 0:
            raise ArgumentError(f"Initial inverse temperature must be positive, got {phi0}")
        return cls.rwm(math.sqrt(1.0 / (25.0 * phi0)), sweeps)

    @classmethod
    def from_name(cls, kind, proposal_sd=None, sweeps=1):
        if kind == EXACT:
            return cls(kind=EXACT, sweeps=int(sweeps))
        return cls(kind=kind, proposal_sd=proposal_sd, sweeps=int(sweeps))
