import argparse
import logging
import sys

from highdim_smc.exceptions import ImproperlyConfigured
from highdim_smc.harness.config import load_config
from highdim_smc.harness.experiments import experiments, run_experiment
from highdim_smc.harness.renderers import CsvRenderer

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_DEGENERATE = 3

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


def _add_common_arguments(parser):
    parser.add_argument("--config", help="key = value configuration file")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--out", help="output CSV path, standard output when omitted")
    parser.add_argument("--replicates", type=int, help="number of replicates")
    parser.add_argument("--jobs", type=int, help="worker processes, -1 for all cores")
    parser.add_argument("--log-level", default="WARNING", choices=LOG_LEVELS, help="logging level")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="highdim-smc", description="Run SMC sampler and filter experiments in high dimensions."
    )
    subparsers = parser.add_subparsers(dest="experiment", required=True)
    for name, experiment in experiments.items():
        summary = " ".join((experiment.__doc__ or "").strip().split("\n\n")[0].split())
        _add_common_arguments(subparsers.add_parser(name, help=summary, description=summary))
    return parser


def main(argv=None):
    """
    Entry point of the ``highdim-smc`` command.

    Returns:
        int: 0 on success, 2 on a configuration error, 3 when most replicates degenerated.
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    overrides = {"seed": args.seed, "out": args.out, "replicates": args.replicates, "jobs": args.jobs}
    try:
        config = load_config(args.experiment, args.config, overrides)
        result = run_experiment(config)
    except ImproperlyConfigured as exc:
        logger.error(f"Configuration error: {exc}")
        return EXIT_CONFIG_ERROR

    renderer = CsvRenderer()
    if config.out:
        renderer.write(result, config.config_hash, config.seed, config.out)
        logger.info(f"Wrote {len(result.rows)} rows to {config.out}")
    else:
        sys.stdout.write(renderer.render(result, config.config_hash, config.seed))

    if result.degeneracy_dominated:
        logger.error(f"{result.degenerate_fraction:.0%} of the replicates degenerated")
        return EXIT_DEGENERATE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
