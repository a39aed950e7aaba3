import logging
import math
from functools import partial

import numpy as np
from scipy import stats

from highdim_smc.exceptions import ArgumentError, EstimationError, ImproperlyConfigured
from highdim_smc.filtering import (
    BoundedToySSM,
    LinearGaussianSSM,
    abc_error_metric,
    abc_filter,
    abc_monte_carlo_std,
    idealized_predictive_estimate,
    kalman_filter,
    marginal_predictive_rel_error,
    predictive_log_truth,
    simulate_ssm,
)
from highdim_smc.harness.config import ABC, CHAOS, ESS_LIMIT, MARGINAL_COLLAPSE, NC_LIMIT, TABLE1, TABLE2
from highdim_smc.harness.renderers import ExperimentResult
from highdim_smc.harness.replicates import ReplicateSummary, run_replicates, split_degenerate
from highdim_smc.kernels import KernelSpec
from highdim_smc.model import AnnealingSchedule, BayesianLinearModel, GaussianPotential, ProductTarget
from highdim_smc.smc import (
    AnnealedQuadraticPath,
    DatapointTemperingPath,
    ResamplingPolicy,
    final_resample_estimate,
    run_sampler,
)
from highdim_smc.theory import (
    VariancePath,
    block_sigma2s,
    empirical_sigma2,
    ess_limit_sample,
    gaussian_log_nc_ratio,
    nc_limit_no_resampling,
    nc_limit_with_resampling,
    sigma2_exact_kernel,
    variance_split_point,
)

logger = logging.getLogger(__name__)

# Stream tags mixed into the master seed so data, replicates and bootstraps never share draws
DATA_STREAM = 1
BOOTSTRAP_STREAM = 2
LIMIT_STREAM = 3

# Limit-law draws per replicate; the KS distance then mostly reflects replicate noise
LIMIT_SAMPLE_FACTOR = 10


def _rng(config, *tags):
    return np.random.default_rng((config.seed,) + tags)


def _phi0(config, d):
    return config.phi0 if config.phi0 is not None else 1.0 / d


def _steps(config, d):
    return config.steps or d


def _schedule(config, d, kind=None):
    return AnnealingSchedule.from_name(kind or config.schedule, _steps(config, d), _phi0(config, d), config.theta)


def _kernel(config, phi0):
    if config.kernel == "rwm" and config.proposal_sd is None:
        return KernelSpec.rwm_for_initial_temperature(phi0, config.sweeps)
    if config.kernel == "rwm_within_gibbs" and config.proposal_sd is None:
        return KernelSpec.rwm_within_gibbs(sweeps=config.sweeps)
    return KernelSpec.from_name(config.kernel, config.proposal_sd, config.sweeps)


def _resampling_steps(fractions, steps):
    times = sorted({int(math.floor(u * steps)) for u in fractions})
    if not times or times[0] < 1 or times[-1] >= steps:
        raise ImproperlyConfigured(f"Resampling fractions {fractions} do not fall on interior steps of {steps}")
    return times


def _policy(config, steps, path=None):
    """
    The configured policy; deterministic times default to the point where half the path variance has accrued.
    """
    final = config.resampling.endswith("_plus_final")
    if config.resampling == "never":
        return ResamplingPolicy.never()
    if config.resampling.startswith("ess_threshold"):
        return ResamplingPolicy.ess_threshold(fraction=config.ess_fraction, final=final)
    fractions = config.resample_at
    if not fractions:
        if path is None:
            raise ImproperlyConfigured("Deterministic resampling needs resample_at times")
        fractions = (variance_split_point(path, 0.5),)
    return ResamplingPolicy.deterministic(_resampling_steps(fractions, steps), final=final)


def _summary(values, config, *tags, truth=None):
    return ReplicateSummary.from_values(values, truth=truth, rng=_rng(config, BOOTSTRAP_STREAM, *tags))


# Replicate bodies, module level so that worker processes can unpickle them


def _nc_ratio_replicate(index, rng, target, schedule, kernel, policy, particle_count, log_truth):
    report = run_sampler(target, schedule, kernel, policy, particle_count, rng)
    return math.exp(report.log_nc_estimate - log_truth)


def _log_ratio_statistic_replicate(index, rng, target, schedule, kernel, policy, particle_count):
    report = run_sampler(target, schedule, kernel, policy, particle_count, rng)
    phis = schedule.values()
    total = 0.0
    for (start, end), log_mean in zip(report.block_bounds, report.block_log_means):
        # A final resampling leaves an empty block
        if end == start:
            continue
        total += log_mean / gaussian_log_nc_ratio(target.dimension, phis[start], phis[end])
    return total


def _posterior_mean_replicate(index, rng, path, kernel, policy, particle_count):
    report = run_sampler(path, None, kernel, policy, particle_count, rng)
    return final_resample_estimate(report, lambda x: x, 0, rng)


def _terminal_ess_replicate(index, rng, target, schedule, kernel, policy, particle_count):
    return run_sampler(target, schedule, kernel, policy, particle_count, rng).terminal_ess


def _snapshot_pair_replicate(index, rng, target, schedule, kernel, policy, particle_count, probe):
    report = run_sampler(target, schedule, kernel, policy, particle_count, rng, snapshot_steps=(probe,))
    return report.snapshots[probe][:2, 0].copy()


def _abc_replicate(index, rng, model, observations, epsilon, particle_count, resample, threshold_fraction):
    return abc_filter(model, observations, epsilon, particle_count, rng, resample, threshold_fraction)


def _idealized_ratio_replicate(index, rng, model, observation, marginal, dimension, particle_count, log_truth):
    estimate = idealized_predictive_estimate(model, observation, marginal, dimension, particle_count, rng)
    return math.exp(estimate - log_truth)


# Experiments


def exp_nc_limit(config):
    """
    Relative L2 error of the normalizing-constant estimate against its large-d limit.
    """
    columns = ("d", "N", "resampling_steps", "v2", "limit", "ci_low", "ci_high", "mean_ratio")
    result = ExperimentResult(NC_LIMIT, columns)
    potential = GaussianPotential()
    degenerate = []

    for i, d in enumerate(config.dimensions):
        target = ProductTarget(potential, d)
        schedule = _schedule(config, d)
        steps = schedule.steps
        kernel = _kernel(config, schedule.phi0)
        variance_path = VariancePath.from_schedule(schedule, potential)
        policy = _policy(config, steps, variance_path)
        log_truth = gaussian_log_nc_ratio(d, schedule.phi0)

        for j, particle_count in enumerate(config.particle_counts):
            if kernel.is_metropolis:
                if policy.kind != "never":
                    limit = math.nan
                    result.notes.append(f"d={d}: no analytic limit for a Metropolis kernel with resampling")
                elif steps != d:
                    limit = math.nan
                    result.notes.append(f"d={d}: no estimated limit for {steps} steps")
                else:
                    sigma2 = empirical_sigma2(
                        target, kernel, schedule, max(config.replicates, 1000), _rng(config, LIMIT_STREAM, i, j)
                    ).value
                    limit = nc_limit_no_resampling(sigma2, particle_count)
            elif policy.uses_ess:
                limit = math.nan
                result.notes.append(f"d={d}: no analytic limit for random resampling times")
            else:
                boundaries = [0.0] + [t / steps for t in policy.times] + [1.0]
                limit = nc_limit_with_resampling(block_sigma2s(variance_path, boundaries), particle_count)

            body = partial(
                _nc_ratio_replicate,
                target=target,
                schedule=schedule,
                kernel=kernel,
                policy=policy,
                particle_count=particle_count,
                log_truth=log_truth,
            )
            results = run_replicates(body, config.replicates, (config.seed, i, j), config.jobs)
            kept, fraction = split_degenerate(results)
            degenerate.append(fraction)
            summary = _summary(kept, config, i, j, truth=1.0)
            times = " ".join(str(t) for t in policy.times)
            result.rows.append(
                (d, particle_count, times, summary.relative_l2, limit, summary.ci_low, summary.ci_high, summary.mean)
            )
            logger.info(f"d={d} N={particle_count}: V2={summary.relative_l2:.6g}, limit={limit:.6g}")

    result.degenerate_fraction = float(np.mean(degenerate))
    return result


def exp_table1(config):
    """
    Ratio of the variances of the block-wise log-ratio statistic under two annealing schedules.
    """
    columns = ("d", "N", "variance_phi", "variance_nu", "ratio")
    result = ExperimentResult(TABLE1, columns, notes=[f"arms={config.arms[0]},{config.arms[1]}"])
    potential = GaussianPotential()
    degenerate = []

    for i, d in enumerate(config.dimensions):
        target = ProductTarget(potential, d)
        kernel = _kernel(config, _phi0(config, d))
        variances = []
        for arm, kind in enumerate(config.arms):
            schedule = _schedule(config, d, kind)
            policy = _policy(config, schedule.steps)
            body = partial(
                _log_ratio_statistic_replicate,
                target=target,
                schedule=schedule,
                kernel=kernel,
                policy=policy,
                particle_count=config.particle_count,
            )
            kept, fraction = split_degenerate(
                run_replicates(body, config.replicates, (config.seed, i, arm), config.jobs)
            )
            degenerate.append(fraction)
            variances.append(_summary(kept, config, i, arm).variance)
        ratio = variances[0] / variances[1] if variances[1] > 0 else math.nan
        result.rows.append((d, config.particle_count, variances[0], variances[1], ratio))
        logger.info(f"d={d}: variance ratio {ratio:.4g}")

    result.degenerate_fraction = float(np.mean(degenerate))
    return result


def exp_table2(config):
    """
    Mean square error of the posterior mean of the first coefficient of a Bayesian linear model,
    relative to i.i.d. sampling, for annealing with several step counts and for data-point tempering.
    """
    columns = ("d", "p", "N", "method", "steps", "mse", "relative_mse", "ci_low", "ci_high")
    result = ExperimentResult(TABLE2, columns)
    degenerate = []
    p = config.observation_count
    particle_count = config.particle_count
    kernel = _kernel(config, 1.0)

    for i, d in enumerate(config.dimensions):
        model, _ = BayesianLinearModel.simulate(p, d, _rng(config, DATA_STREAM, i))
        posterior = model.posterior()
        truth = float(posterior.mean[0])
        iid_mse = posterior.marginal_variance(0) / particle_count

        settings = []
        for multiplier in config.step_multipliers:
            schedule = _schedule(config, d).with_steps(multiplier * d)
            path = AnnealedQuadraticPath(model.posterior_target(), schedule)
            settings.append((f"annealing_{multiplier}d", path))
        settings.append(("datapoint_tempering", DatapointTemperingPath(model, max(1, (10 * d) // p))))

        for j, (method, path) in enumerate(settings):
            policy = _policy(config, path.steps)
            body = partial(
                _posterior_mean_replicate, path=path, kernel=kernel, policy=policy, particle_count=particle_count
            )
            results = run_replicates(body, config.replicates, (config.seed, i, j), config.jobs)
            kept, fraction = split_degenerate(results)
            degenerate.append(fraction)
            squared = (np.asarray(kept) - truth) ** 2 / iid_mse
            summary = _summary(squared, config, i, j)
            mse = summary.mean * iid_mse
            result.rows.append(
                (d, p, particle_count, method, path.steps, mse, summary.mean, summary.ci_low, summary.ci_high)
            )
            logger.info(f"d={d} {method}: relative MSE {summary.mean:.4g}")

    result.degenerate_fraction = float(np.mean(degenerate))
    return result


def exp_ess_limit(config):
    """
    Terminal ESS across replicates against draws from its large-d limiting law.
    """
    columns = ("d", "N", "sigma2", "mean_ess", "limit_mean_ess", "ks_distance", "ks_pvalue")
    result = ExperimentResult(ESS_LIMIT, columns)
    degenerate = []

    for i, d in enumerate(config.dimensions):
        phi0 = _phi0(config, d)
        for j, particle_count in enumerate(config.particle_counts):
            if phi0 >= 1.0:
                logger.warning("phi0 = 1 leaves nothing to anneal: both laws are a point mass at N")
                result.rows.append((d, particle_count, 0.0, float(particle_count), float(particle_count), 0.0, 1.0))
                continue
            if config.kernel != "exact":
                raise ImproperlyConfigured("The ESS limit law needs the exact kernel")

            schedule = _schedule(config, d)
            variance_path = VariancePath.from_schedule(schedule, GaussianPotential())
            policy = _policy(config, schedule.steps, variance_path)
            if policy.uses_ess:
                raise ImproperlyConfigured("The ESS limit law needs deterministic or no resampling")
            last_boundary = policy.times[-1] / schedule.steps if policy.times else 0.0
            sigma2 = sigma2_exact_kernel(variance_path, last_boundary, 1.0)

            body = partial(
                _terminal_ess_replicate,
                target=ProductTarget(GaussianPotential(), d),
                schedule=schedule,
                kernel=_kernel(config, phi0),
                policy=policy,
                particle_count=particle_count,
            )
            results = run_replicates(body, config.replicates, (config.seed, i, j), config.jobs)
            kept, fraction = split_degenerate(results)
            degenerate.append(fraction)
            empirical = np.asarray(kept, dtype=float)
            limit_rng = _rng(config, LIMIT_STREAM, i, j)
            limit = ess_limit_sample(particle_count, sigma2, limit_rng, size=LIMIT_SAMPLE_FACTOR * config.replicates)
            ks = stats.ks_2samp(empirical, limit)
            result.rows.append(
                (d, particle_count, sigma2, empirical.mean(), limit.mean(), float(ks.statistic), float(ks.pvalue))
            )
            logger.info(f"d={d} N={particle_count}: KS distance {ks.statistic:.4g}")

    result.degenerate_fraction = float(np.mean(degenerate)) if degenerate else 0.0
    return result


def exp_chaos(config):
    """
    Dependence between two particles and the marginal law of one particle at a probe step.
    """
    columns = ("d", "N", "probe_step", "temperature", "dependence", "marginal_ks", "ks_pvalue")
    result = ExperimentResult(CHAOS, columns)
    if config.particle_count < 2:
        raise ImproperlyConfigured("The pairwise statistic needs at least 2 particles")
    degenerate = []

    for i, d in enumerate(config.dimensions):
        schedule = _schedule(config, d)
        steps = schedule.steps
        policy = _policy(config, steps)
        probe = max(1, int(math.floor(config.probe_at * steps)))
        if probe in policy.times:
            result.notes.append(f"d={d}: probe step {probe} directly follows a resampling")
        body = partial(
            _snapshot_pair_replicate,
            target=ProductTarget(GaussianPotential(), d),
            schedule=schedule,
            kernel=_kernel(config, schedule.phi0),
            policy=policy,
            particle_count=config.particle_count,
            probe=probe,
        )
        kept, fraction = split_degenerate(run_replicates(body, config.replicates, (config.seed, i), config.jobs))
        degenerate.append(fraction)
        pairs = np.asarray(kept, dtype=float)
        first, second = np.tanh(pairs[:, 0]), np.tanh(pairs[:, 1])
        if np.ptp(first) == 0.0 or np.ptp(second) == 0.0:
            dependence = math.nan
        else:
            dependence = abs(float(np.corrcoef(first, second)[0, 1]))
        temperature = schedule[probe]
        ks = stats.kstest(pairs[:, 0], "norm", args=(0.0, 1.0 / math.sqrt(temperature)))
        result.rows.append(
            (d, config.particle_count, probe, temperature, dependence, float(ks.statistic), float(ks.pvalue))
        )
        logger.info(f"d={d}: dependence {dependence:.4g}, marginal KS {ks.statistic:.4g}")

    result.degenerate_fraction = float(np.mean(degenerate))
    return result


def exp_abc(config):
    """
    L2 error of the ABC filter's first-moment estimate against the Kalman filter, per time and d.
    """
    columns = ("d", "N", "time", "error", "mc_std", "degenerate", "ratio_to_first_d")
    result = ExperimentResult(ABC, columns)
    errors = {}
    total_runs = 0
    total_degenerate = 0

    for i, d in enumerate(config.dimensions):
        model = LinearGaussianSSM(d)
        _, observations = simulate_ssm(model, config.horizon, _rng(config, DATA_STREAM, i))
        truth = kalman_filter(model, observations).means

        for j, particle_count in enumerate(config.particle_counts):
            body = partial(
                _abc_replicate,
                model=model,
                observations=observations,
                epsilon=config.epsilon,
                particle_count=particle_count,
                resample=config.resampling != "never",
                threshold_fraction=config.ess_fraction,
            )
            estimates = run_replicates(body, config.replicates, (config.seed, i, j), config.jobs)
            flags = [estimate.degenerate for estimate in estimates]
            total_runs += len(flags)
            total_degenerate += sum(flags)
            fraction = sum(flags) / len(flags)
            if fraction > 0:
                logger.warning(f"d={d} N={particle_count}: {sum(flags)} of {len(flags)} runs degenerated")

            for k in range(1, config.horizon + 1):
                try:
                    error = abc_error_metric(estimates, truth, k)
                    spread = abc_monte_carlo_std(estimates, k)
                except EstimationError:
                    error = spread = math.nan
                errors[(d, particle_count, k)] = error
                first = errors.get((config.dimensions[0], particle_count, k), math.nan)
                ratio = error / first if first and math.isfinite(first) else math.nan
                result.rows.append((d, particle_count, k, error, spread, fraction, ratio))

            averaged = np.nanmean([errors[(d, particle_count, k)] for k in range(1, config.horizon + 1)])
            result.notes.append(f"d={d} N={particle_count}: time-averaged error {averaged:.6g}")
            logger.info(f"d={d} N={particle_count}: time-averaged error {averaged:.6g}")

    result.degenerate_fraction = total_degenerate / total_runs if total_runs else 0.0
    return result


def exp_marginal_collapse(config):
    """
    Relative L2 error of the idealized marginal-algorithm predictive estimate: formula against
    simulation, and the slope of log error against d.
    """
    columns = ("d", "N", "formula", "empirical", "ci_low", "ci_high", "slope", "slope_pvalue")
    result = ExperimentResult(MARGINAL_COLLAPSE, columns)
    model = BoundedToySSM(amplitude=config.amplitude, precision=config.precision)
    marginal = stats.uniform(loc=0.0, scale=1.0)
    particle_count = config.particle_count
    rows = []

    for i, d in enumerate(config.dimensions):
        formula = marginal_predictive_rel_error(model, config.observation, marginal, d, particle_count)
        body = partial(
            _idealized_ratio_replicate,
            model=model,
            observation=config.observation,
            marginal=marginal,
            dimension=d,
            particle_count=particle_count,
            log_truth=predictive_log_truth(model, config.observation, marginal, d),
        )
        kept, _ = split_degenerate(run_replicates(body, config.replicates, (config.seed, i), config.jobs))
        summary = _summary(kept, config, i, truth=1.0)
        rows.append((d, particle_count, formula, summary.relative_l2, summary.ci_low, summary.ci_high))
        logger.info(f"d={d}: formula {formula:.6g}, empirical {summary.relative_l2:.6g}")

    slope, pvalue = _log_slope([row[0] for row in rows], [row[3] for row in rows])
    result.rows = [row + (slope, pvalue) for row in rows]
    return result


def _log_slope(dimensions, errors):
    """
    Least-squares slope of log error on d with its one-sided p-value for a positive slope.
    """
    errors = np.asarray(errors, dtype=float)
    if len(dimensions) < 3 or np.any(~(errors > 0)):
        return math.nan, math.nan
    fit = stats.linregress(np.asarray(dimensions, dtype=float), np.log(errors))
    pvalue = fit.pvalue / 2.0 if fit.slope > 0 else 1.0 - fit.pvalue / 2.0
    return float(fit.slope), float(pvalue)


experiments = {
    NC_LIMIT: exp_nc_limit,
    TABLE1: exp_table1,
    TABLE2: exp_table2,
    ESS_LIMIT: exp_ess_limit,
    CHAOS: exp_chaos,
    ABC: exp_abc,
    MARGINAL_COLLAPSE: exp_marginal_collapse,
}


def get_experiment(name):
    """
    Get the experiment function registered under ``name``.

    Raises:
        ImproperlyConfigured: If no experiment is registered under that name.
    """
    experiment = experiments.get(name)

    if not experiment:
        raise ImproperlyConfigured(f"Experiment '{name}' not found")

    return experiment


def run_experiment(config):
    """
    Run the experiment a configuration names.

    Returns:
        ExperimentResult: The table.

    Raises:
        ImproperlyConfigured: If a setting is rejected by the library.
    """
    experiment = get_experiment(config.experiment)
    logger.info(f"Starting {config.experiment} with seed {config.seed}")
    try:
        result = experiment(config)
    except ArgumentError as exc:
        raise ImproperlyConfigured(f"Invalid setting for {config.experiment}: {exc}") from exc
    logger.info(f"Finished {config.experiment}: {len(result.rows)} rows")
    return result
