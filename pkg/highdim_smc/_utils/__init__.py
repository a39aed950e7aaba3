from .numerics import log_mean_exp, normalized_weights  # noqa
from .random import as_generator, spawn_generators, spawn_seeds  # noqa
