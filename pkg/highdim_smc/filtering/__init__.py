from .abc_filter import (  # noqa
    FilterEstimate,
    abc_error_metric,
    abc_filter,
    abc_indicator,
    abc_monte_carlo_std,
    degenerate_fraction,
)
from .kalman import KalmanResult, batch_filter_moments, kalman_filter  # noqa
from .marginal import (  # noqa
    MarginalStep,
    MarginalTemperingPath,
    MixturePredictiveTarget,
    default_marginal_kernel,
    idealized_predictive_estimate,
    marginal_algorithm_step,
    marginal_filter,
    marginal_predictive_rel_error,
    predictive_factor_moments,
    predictive_log_truth,
)
from .records import ObservationRecord, read_observations, write_observations  # noqa
from .ssm_models import (  # noqa
    BoundedToySSM,
    DiscreteToySSM,
    GaussianProductSSM,
    GeneralSSM,
    LinearGaussianSSM,
    simulate_ssm,
)
from .tempering import (  # noqa
    TrajectoryLikelihoodTerm,
    datapoint_tempering_targets,
    ssm_trajectory_log_prior,
    ssm_trajectory_potentials,
)
from .trajectory import (  # noqa
    TrajectoryTarget,
    TrajectoryTemperingPath,
    annealed_trajectory_filter,
    trajectory_ess_sigma2,
)
