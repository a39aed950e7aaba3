from .kernel_backends import (  # noqa
    BaseKernelBackend,
    ExactSamplingBackend,
    MetropolisWithinGibbsBackend,
    RandomWalkMetropolisBackend,
    get_kernel_backend,
    kernel_backends,
)
from .kernel_specs import KernelSpec, kernel_kinds  # noqa
from .kernel_steps import (  # noqa
    exact_coordinate_step,
    metropolis_accept,
    rwm_coordinate_step,
    rwm_gibbs_sweep,
    rwm_transition,
)
