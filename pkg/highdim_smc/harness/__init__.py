from .config import ExperimentConfig, experiment_defaults, experiment_names, load_config, parse_config_text  # noqa
from .experiments import (  # noqa
    exp_abc,
    exp_chaos,
    exp_ess_limit,
    exp_marginal_collapse,
    exp_nc_limit,
    exp_table1,
    exp_table2,
    experiments,
    get_experiment,
    run_experiment,
)
from .renderers import CsvEncoder, CsvRenderer, ExperimentResult  # noqa
from .replicates import ReplicateSummary, run_replicates, split_degenerate  # noqa
