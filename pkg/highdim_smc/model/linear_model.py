import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from highdim_smc.exceptions import ArgumentError
from highdim_smc.model.targets import QuadraticLogTarget

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GaussianPosterior:
    """
    A multivariate normal law given by its moments.

    Attributes:
        mean (numpy.ndarray): Length-d mean vector.
        covariance (numpy.ndarray): Symmetric positive definite ``(d, d)`` covariance.
    """

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        covariance = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if covariance.shape != (mean.size, mean.size):
            raise ArgumentError(f"Covariance shape {covariance.shape} does not match mean length {mean.size}")
        if not np.allclose(covariance, covariance.T, rtol=0.0, atol=1e-10):
            raise ArgumentError("Posterior covariance is not symmetric")
        try:
            linalg.cholesky(covariance, lower=True)
        except linalg.LinAlgError as exc:
            raise ArgumentError(f"Posterior covariance is not positive definite: {exc}") from exc
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", covariance)

    @property
    def dimension(self):
        return self.mean.size

    def marginal_variance(self, j=0):
        return float(self.covariance[j, j])


def _check_data(design, responses):
    design = np.atleast_2d(np.asarray(design, dtype=float))
    responses = np.atleast_1d(np.asarray(responses, dtype=float))
    if design.shape[0] != responses.size:
        raise ArgumentError(f"Design has {design.shape[0]} rows but there are {responses.size} responses")
    if design.shape[0] < 1 or design.shape[1] < 1:
        raise ArgumentError(f"Design must be at least 1x1, got {design.shape}")
    if not (np.all(np.isfinite(design)) and np.all(np.isfinite(responses))):
        raise ArgumentError("Design and responses must be finite")
    return design, responses


def blm_posterior(design, responses):
    """
    Conjugate posterior of beta for Y = X beta + eps with eps ~ N(0, I_p) and prior beta ~ N(0, I_d).

    Args:
        design (array_like): The ``(p, d)`` matrix X.
        responses (array_like): The length-p vector Y.

    Returns:
        GaussianPosterior: ``N((I + X'X)^{-1} X'Y, (I + X'X)^{-1})``.

    Raises:
        ArgumentError: On non-finite or mis-shaped inputs.
    """
    design, responses = _check_data(design, responses)
    precision = np.eye(design.shape[1]) + design.T @ design
    factor = linalg.cho_factor(precision, lower=True)
    mean = linalg.cho_solve(factor, design.T @ responses)
    covariance = linalg.cho_solve(factor, np.eye(design.shape[1]))
    return GaussianPosterior(mean=mean, covariance=0.5 * (covariance + covariance.T))


class DatumLogLikelihood:
    """
    The log-likelihood contribution -(y_k - x_k beta)**2 / 2 of one observation.

    Args:
        row (array_like): Covariates x_k of length d.
        response (float): Observation y_k.
    """

    def __init__(self, row, response):
        self.row = np.asarray(row, dtype=float)
        self.response = float(response)

    def evaluate(self, beta):
        """
        Args:
            beta (array_like): A length-d vector or an ``(N, d)`` array of coefficients.

        Returns:
            float | numpy.ndarray: The log-likelihood term for each coefficient vector.
        """
        residual = self.response - np.asarray(beta, dtype=float) @ self.row
        return -0.5 * residual**2

    def __call__(self, beta):
        return self.evaluate(beta)

    def quadratic_terms(self):
        """
        ``(x_k x_k', y_k x_k)``, the canonical-form contribution of this datum.
        """
        return np.outer(self.row, self.row), self.response * self.row


def blm_as_sequential_potentials(design, responses):
    """
    Split the linear-model likelihood into one term per datum for data-point tempering.

    Returns:
        list[DatumLogLikelihood]: ``p`` terms whose sum is the full log-likelihood.
    """
    design, responses = _check_data(design, responses)
    return [DatumLogLikelihood(row, response) for row, response in zip(design, responses)]


class BayesianLinearModel:
    """
    Bayesian linear regression with a standard normal prior and unit noise variance.

    Args:
        design (array_like): The ``(p, d)`` matrix X.
        responses (array_like): The length-p vector Y.
    """

    def __init__(self, design, responses):
        self.design, self.responses = _check_data(design, responses)
        self._posterior = None

    @classmethod
    def simulate(cls, p, d, rng):
        """
        Draw X with i.i.d. N(0, 1) entries, beta from the prior and Y = X beta + eps.

        Returns:
            tuple[BayesianLinearModel, numpy.ndarray]: The model and the true coefficients.
        """
        design = rng.standard_normal((p, d))
        beta = rng.standard_normal(d)
        responses = design @ beta + rng.standard_normal(p)
        return cls(design, responses), beta

    @property
    def dimension(self):
        return self.design.shape[1]

    @property
    def observation_count(self):
        return self.design.shape[0]

    def log_prior(self, beta):
        beta = np.asarray(beta, dtype=float)
        return -0.5 * np.sum(beta**2, axis=-1)

    def log_likelihood(self, beta):
        residual = self.responses - np.asarray(beta, dtype=float) @ self.design.T
        return -0.5 * np.sum(residual**2, axis=-1)

    def posterior(self):
        if self._posterior is None:
            self._posterior = blm_posterior(self.design, self.responses)
        return self._posterior

    def potentials(self):
        return blm_as_sequential_potentials(self.design, self.responses)

    def posterior_target(self):
        """
        The posterior in canonical form: precision I + X'X, shift X'Y.
        """
        precision = np.eye(self.dimension) + self.design.T @ self.design
        return QuadraticLogTarget(precision, self.design.T @ self.responses)

    def annealed_target(self, temperature):
        """
        The bridging density posterior(beta)**s.
        """
        return self.posterior_target().scaled(temperature)

    def datapoint_target(self, n, temperature):
        """
        Prior times the first ``n - 1`` likelihood terms times the n-th term raised to ``temperature``.

        Args:
            n (int): Index of the datum being introduced, ``1..p``.
            temperature (float): Tempering of the n-th term in ``[0, 1]``.

        Returns:
            QuadraticLogTarget: The bridging density.
        """
        if not 1 <= n <= self.observation_count:
            raise ArgumentError(f"Datum index {n} outside of 1..{self.observation_count}")
        seen = self.design[: n - 1]
        row = self.design[n - 1]
        precision = np.eye(self.dimension) + seen.T @ seen + temperature * np.outer(row, row)
        shift = seen.T @ self.responses[: n - 1] + temperature * self.responses[n - 1] * row
        return QuadraticLogTarget(precision, shift)
