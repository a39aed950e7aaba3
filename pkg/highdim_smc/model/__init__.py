from .linear_model import (  # noqa
    BayesianLinearModel,
    DatumLogLikelihood,
    GaussianPosterior,
    blm_as_sequential_potentials,
    blm_posterior,
)
from .potentials import (  # noqa
    BoundedPotential,
    CallablePotential,
    ConstantPotential,
    GaussianPotential,
    ScalarPotential,
    Support,
    potential_classes,
)
from .schedules import AnnealingSchedule, exponential_nu, linear_phi, step_index  # noqa
from .targets import (  # noqa
    JointLogTarget,
    KernelTarget,
    ProductTarget,
    QuadraticLogTarget,
    TemperedProductTarget,
    bridge_log_density,
)
