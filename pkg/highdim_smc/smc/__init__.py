from .ensemble import Ensemble, ess, log_ess, multinomial_resample, weight_update  # noqa
from .paths import (  # noqa
    AnnealedProductPath,
    AnnealedQuadraticPath,
    DatapointTemperingPath,
    TemperingPath,
    annealing_path,
)
from .resampling import ResamplingPolicy, policy_kinds  # noqa
from .sampler import (  # noqa
    SamplerReport,
    SMCSampler,
    final_resample_estimate,
    norm_const_log_estimate,
    run_sampler,
)
