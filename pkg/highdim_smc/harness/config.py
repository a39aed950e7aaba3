import dataclasses
import hashlib
import logging
from dataclasses import dataclass

from highdim_smc.exceptions import ImproperlyConfigured
from highdim_smc.kernels.kernel_specs import kernel_kinds
from highdim_smc.model.schedules import EXPONENTIAL, LINEAR
from highdim_smc.smc.resampling import policy_kinds

logger = logging.getLogger(__name__)

NC_LIMIT = "nc-limit"
TABLE1 = "table1"
TABLE2 = "table2"
ESS_LIMIT = "ess-limit"
CHAOS = "chaos"
ABC = "abc"
MARGINAL_COLLAPSE = "marginal-collapse"

experiment_names = (NC_LIMIT, TABLE1, TABLE2, ESS_LIMIT, CHAOS, ABC, MARGINAL_COLLAPSE)

# Schedules that can be built from a name and a step count
named_schedules = (LINEAR, EXPONENTIAL)

# Fields that do not change the numbers an experiment produces
_UNHASHED_FIELDS = ("seed", "jobs", "out")

experiment_defaults = {
    NC_LIMIT: {
        "dimensions": (128,),
        "particle_count": 100,
        "replicates": 5000,
        "phi0": 0.5,
        "kernel": "exact",
        "resampling": "never",
    },
    TABLE1: {
        "dimensions": (10, 25),
        "particle_count": 2000,
        "replicates": 50,
        "kernel": "rwm",
        "resampling": "ess_threshold",
        "arms": ("linear", "exponential"),
    },
    TABLE2: {
        "dimensions": (50,),
        "observation_count": 50,
        "particle_count": 1000,
        "replicates": 100,
        "schedule": "exponential",
        "kernel": "rwm_within_gibbs",
        "proposal_sd": 0.25,
        "resampling": "ess_threshold_plus_final",
        "step_multipliers": (1, 5, 10),
    },
    ESS_LIMIT: {
        "dimensions": (256,),
        "particle_count": 100,
        "replicates": 2000,
        "phi0": 0.5,
        "kernel": "exact",
        "resampling": "never",
    },
    CHAOS: {
        "dimensions": (16, 64, 256),
        "particle_count": 10,
        "replicates": 500,
        "phi0": 0.1,
        "kernel": "rwm",
        "resampling": "deterministic_times",
        "resample_at": (0.5,),
        "probe_at": 0.75,
    },
    ABC: {
        "dimensions": (10, 40),
        "particle_count": 1000,
        "replicates": 50,
        "resampling": "ess_threshold",
        "horizon": 200,
        "epsilon": 5.0,
    },
    MARGINAL_COLLAPSE: {
        "dimensions": (2, 4, 8, 16),
        "particle_count": 10,
        "replicates": 4000,
        "amplitude": 0.9,
        "precision": 100.0,
        "observation": 0.5,
    },
}


def _to_int(value):
    return int(value)


def _to_float(value):
    return float(value)


def _to_optional_float(value):
    if value is None or (isinstance(value, str) and value.strip().lower() in ("", "none")):
        return None
    return float(value)


def _to_str(value):
    return str(value).strip()


def _to_optional_str(value):
    if value is None or (isinstance(value, str) and value.strip().lower() in ("", "none")):
        return None
    return str(value).strip()


def _to_tuple(convert):
    def parse(value):
        if isinstance(value, str):
            items = [item.strip() for item in value.split(",")]
            return tuple(convert(item) for item in items if item)
        return tuple(convert(item) for item in value)

    return parse


field_parsers = {
    "experiment": _to_str,
    "dimensions": _to_tuple(_to_int),
    "particle_count": _to_int,
    "particle_grid": _to_tuple(_to_int),
    "replicates": _to_int,
    "schedule": _to_str,
    "arms": _to_tuple(_to_str),
    "phi0": _to_optional_float,
    "theta": _to_float,
    "steps": lambda value: None if _to_optional_float(value) is None else int(value),
    "step_multipliers": _to_tuple(_to_int),
    "kernel": _to_str,
    "proposal_sd": _to_optional_float,
    "sweeps": _to_int,
    "resampling": _to_str,
    "ess_fraction": _to_float,
    "resample_at": _to_tuple(_to_float),
    "probe_at": _to_float,
    "observation_count": _to_int,
    "horizon": _to_int,
    "epsilon": _to_float,
    "amplitude": _to_float,
    "precision": _to_float,
    "observation": _to_float,
    "seed": _to_int,
    "jobs": _to_int,
    "out": _to_optional_str,
}


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Validated settings of one experiment run.

    Every field has a ``validate_<field>`` method returning the cleaned value or raising
    ``ImproperlyConfigured``; cross-field checks run last in ``validate``.

    Attributes:
        experiment (str): One of ``experiment_names``.
        dimensions (tuple[int, ...]): The d grid.
        particle_count (int): N.
        particle_grid (tuple[int, ...]): Optional N grid; ``(particle_count,)`` when empty.
        replicates (int): R, at least 2.
        schedule (str): Schedule kind.
        arms (tuple[str, str]): The two schedule kinds compared by the variance-ratio experiment.
        phi0 (float | None): Initial inverse temperature; ``1 / d`` when unset.
        theta (float): Curvature of the exponential schedule.
        steps (int | None): Number of annealing steps; d when unset.
        step_multipliers (tuple[int, ...]): Multiples of d for the linear-model experiment.
        kernel (str): Kernel kind.
        proposal_sd (float | None): Random-walk proposal standard deviation.
        sweeps (int): Kernel applications per step.
        resampling (str): Resampling policy kind.
        ess_fraction (float): ESS threshold as a fraction of N.
        resample_at (tuple[float, ...]): Deterministic resampling times as fractions of the path.
        probe_at (float): Snapshot time as a fraction of the path.
        observation_count (int): p, data points of the linear model.
        horizon (int): Number of observations of the filtering experiments.
        epsilon (float): ABC tolerance.
        amplitude (float): Transition amplitude of the bounded toy model.
        precision (float): Likelihood precision of the bounded toy model.
        observation (float): The datum y of the collapse experiment.
        seed (int): Master seed.
        jobs (int): Worker count.
        out (str | None): Output path; standard output when unset.
    """

    experiment: str
    dimensions: tuple = (10,)
    particle_count: int = 100
    particle_grid: tuple = ()
    replicates: int = 50
    schedule: str = "linear"
    arms: tuple = ("linear", "exponential")
    phi0: float = None
    theta: float = 5.0
    steps: int = None
    step_multipliers: tuple = (1,)
    kernel: str = "exact"
    proposal_sd: float = None
    sweeps: int = 1
    resampling: str = "never"
    ess_fraction: float = 0.5
    resample_at: tuple = ()
    probe_at: float = 0.5
    observation_count: int = 50
    horizon: int = 200
    epsilon: float = 5.0
    amplitude: float = 0.5
    precision: float = 1.0
    observation: float = 0.5
    seed: int = 0
    jobs: int = 1
    out: str = None

    def __post_init__(self):
        for field in dataclasses.fields(self):
            value = getattr(self, field.name)
            try:
                value = field_parsers[field.name](value)
            except (TypeError, ValueError) as exc:
                raise ImproperlyConfigured(f"Invalid value {value!r} for '{field.name}': {exc}") from exc
            validator = getattr(self, f"validate_{field.name}", None)
            if validator:
                value = validator(value)
            object.__setattr__(self, field.name, value)
        self.validate()

    @classmethod
    def from_mapping(cls, experiment, mapping):
        """
        Build a configuration from raw (possibly string) values.

        Raises:
            ImproperlyConfigured: On unknown keys or invalid values.
        """
        unknown = set(mapping) - set(field_parsers) - {"experiment"}
        if unknown:
            raise ImproperlyConfigured(f"Unknown configuration keys: {', '.join(sorted(unknown))}")
        mapping = {key: value for key, value in mapping.items() if key != "experiment"}
        return cls(experiment=experiment, **mapping)

    # Field validation

    def validate_experiment(self, value):
        if value not in experiment_names:
            raise ImproperlyConfigured(f"Experiment '{value}' not found")
        return value

    def validate_dimensions(self, value):
        if not value or any(d < 1 for d in value):
            raise ImproperlyConfigured(f"Dimensions must be a non-empty list of positive integers, got {value}")
        return value

    def validate_particle_count(self, value):
        if value < 1:
            raise ImproperlyConfigured(f"Particle count must be positive, got {value}")
        return value

    def validate_particle_grid(self, value):
        if any(n < 1 for n in value):
            raise ImproperlyConfigured(f"Particle grid entries must be positive, got {value}")
        return value

    def validate_replicates(self, value):
        if value < 2:
            raise ImproperlyConfigured(f"At least 2 replicates are needed, got {value}")
        return value

    def validate_schedule(self, value):
        if value not in named_schedules:
            raise ImproperlyConfigured(f"Schedule '{value}' not found")
        return value

    def validate_arms(self, value):
        if len(value) != 2 or any(kind not in named_schedules for kind in value):
            raise ImproperlyConfigured(f"Expected two schedule kinds to compare, got {value}")
        return value

    def validate_phi0(self, value):
        if value is not None and not 0.0 <= value <= 1.0:
            raise ImproperlyConfigured(f"phi0 must lie in [0, 1], got {value}")
        return value

    def validate_theta(self, value):
        if not value > 0:
            raise ImproperlyConfigured(f"theta must be positive, got {value}")
        return value

    def validate_steps(self, value):
        if value is not None and value < 1:
            raise ImproperlyConfigured(f"Number of steps must be positive, got {value}")
        return value

    def validate_step_multipliers(self, value):
        if not value or any(m < 1 for m in value):
            raise ImproperlyConfigured(f"Step multipliers must be positive, got {value}")
        return value

    def validate_kernel(self, value):
        if value not in kernel_kinds:
            raise ImproperlyConfigured(f"Kernel backend '{value}' not found")
        return value

    def validate_proposal_sd(self, value):
        if value is not None and not value > 0:
            raise ImproperlyConfigured(f"Proposal standard deviation must be positive, got {value}")
        return value

    def validate_sweeps(self, value):
        if value < 1:
            raise ImproperlyConfigured(f"Sweeps must be positive, got {value}")
        return value

    def validate_resampling(self, value):
        if value not in policy_kinds:
            raise ImproperlyConfigured(f"Resampling policy '{value}' not found")
        return value

    def validate_ess_fraction(self, value):
        if not 0.0 < value <= 1.0:
            raise ImproperlyConfigured(f"ESS fraction must lie in (0, 1], got {value}")
        return value

    def validate_resample_at(self, value):
        if any(not 0.0 < u < 1.0 for u in value) or any(b <= a for a, b in zip(value, value[1:])):
            raise ImproperlyConfigured(f"Resampling times must be increasing fractions in (0, 1), got {value}")
        return value

    def validate_probe_at(self, value):
        if not 0.0 < value <= 1.0:
            raise ImproperlyConfigured(f"Probe time must lie in (0, 1], got {value}")
        return value

    def validate_observation_count(self, value):
        if value < 1:
            raise ImproperlyConfigured(f"Observation count must be positive, got {value}")
        return value

    def validate_horizon(self, value):
        if value < 1:
            raise ImproperlyConfigured(f"Horizon must be positive, got {value}")
        return value

    def validate_epsilon(self, value):
        if not value > 0:
            raise ImproperlyConfigured(f"epsilon must be positive, got {value}")
        return value

    def validate_amplitude(self, value):
        if not 0.0 <= value < 1.0:
            raise ImproperlyConfigured(f"Amplitude must lie in [0, 1), got {value}")
        return value

    def validate_precision(self, value):
        if not value > 0:
            raise ImproperlyConfigured(f"Precision must be positive, got {value}")
        return value

    def validate_seed(self, value):
        if value < 0:
            raise ImproperlyConfigured(f"Seed must be non-negative, got {value}")
        return value

    def validate_jobs(self, value):
        if value == 0:
            raise ImproperlyConfigured("Worker count cannot be 0")
        return value

    def validate(self):
        if self.resampling in ("deterministic_times", "deterministic_plus_final") and self.experiment == CHAOS:
            if not self.resample_at:
                raise ImproperlyConfigured("Deterministic resampling needs resample_at times")
        if self.experiment == ABC and self.resampling not in ("never", "ess_threshold"):
            raise ImproperlyConfigured(f"The ABC filter resamples by ESS or not at all, got '{self.resampling}'")
        if self.resample_at and self.resampling not in ("deterministic_times", "deterministic_plus_final"):
            raise ImproperlyConfigured(f"resample_at is set but the policy '{self.resampling}' is not deterministic")

    # Derived values

    @property
    def particle_counts(self):
        return self.particle_grid or (self.particle_count,)

    def as_dict(self):
        return {field.name: getattr(self, field.name) for field in dataclasses.fields(self)}

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    @property
    def config_hash(self):
        """
        SHA-256 of the canonical ``key=value`` listing of the fields that affect results.
        """
        values = sorted(self.as_dict().items())
        lines = [f"{name}={_canonical(value)}" for name, value in values if name not in _UNHASHED_FIELDS]
        return hashlib.sha256("\n".join(lines).encode("utf-8")).hexdigest()


def _canonical(value):
    if isinstance(value, tuple):
        return ",".join(_canonical(item) for item in value)
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def parse_config_text(text):
    """
    Parse ``key = value`` lines; ``#`` starts a comment and blank lines are skipped.

    Returns:
        dict[str, str]: Raw values by key.

    Raises:
        ImproperlyConfigured: On a line without ``=`` or a repeated key.
    """
    values = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ImproperlyConfigured(f"Line {number}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in values:
            raise ImproperlyConfigured(f"Line {number}: key '{key}' repeated")
        values[key] = value
    return values


def read_config_file(path):
    try:
        with open(path, encoding="utf-8") as handle:
            return parse_config_text(handle.read())
    except (OSError, UnicodeDecodeError) as exc:
        raise ImproperlyConfigured(f"Cannot read configuration file '{path}': {exc}") from exc


def load_config(experiment, path=None, overrides=None):
    """
    Defaults of ``experiment``, then the configuration file, then explicit overrides.

    Args:
        experiment (str): Experiment name.
        path (str, optional): Configuration file.
        overrides (dict, optional): Values that win over everything else; ``None`` values are ignored.

    Returns:
        ExperimentConfig: The validated configuration.

    Raises:
        ImproperlyConfigured: On unknown experiments, keys or invalid values.
    """
    if experiment not in experiment_defaults:
        raise ImproperlyConfigured(f"Experiment '{experiment}' not found")
    values = dict(experiment_defaults[experiment])
    if path:
        from_file = read_config_file(path)
        if from_file.pop("experiment", experiment) != experiment:
            raise ImproperlyConfigured(f"Configuration file '{path}' is for another experiment")
        values.update(from_file)
    values.update({key: value for key, value in (overrides or {}).items() if value is not None})
    config = ExperimentConfig.from_mapping(experiment, values)
    logger.info(f"Configuration for {experiment}: hash {config.config_hash}")
    return config
