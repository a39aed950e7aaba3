from .limits import (  # noqa
    ResamplingBound,
    Sigma2Estimate,
    empirical_sigma2,
    ess_limit_sample,
    final_resample_mse_bound,
    gaussian_log_nc_ratio,
    log_nc_ratio_by_quadrature,
    nc_limit_no_resampling,
    nc_limit_resampling_bound,
    nc_limit_with_resampling,
)
from .variances import (  # noqa
    VariancePath,
    block_sigma2s,
    gaussian_tempered_variance,
    sigma2_exact_kernel,
    variance_split_point,
)
