import logging
import math
from abc import ABC, abstractmethod

import numpy as np
from scipy import integrate, stats

from highdim_smc.exceptions import ArgumentError, NumericalError
from highdim_smc.model.potentials import Support

logger = logging.getLogger(__name__)


class LinearGaussianSSM:
    """
    X_k = X_{k-1} + W_k, Y_k = sum_j X_{k,j} + V_k, with W_k ~ N(0, q I_d), V_k ~ N(0, r) and X_0 = x_0.

    Zero variances are accepted so that degenerate (deterministic) variants can be simulated.

    Args:
        dimension (int): State dimension d.
        obs_variance (float): r, variance of the scalar observation noise.
        state_variance (float): q, variance of each state increment.
        initial_state (array_like, optional): x_0, zeros by default.
    """

    def __init__(self, dimension, obs_variance=1.0, state_variance=1.0, initial_state=None):
        if dimension < 1:
            raise ArgumentError(f"Dimension must be positive, got {dimension}")
        if obs_variance < 0 or state_variance < 0:
            raise ArgumentError(f"Noise variances must be non-negative, got r={obs_variance}, q={state_variance}")
        self.dimension = int(dimension)
        self.obs_variance = float(obs_variance)
        self.state_variance = float(state_variance)
        if initial_state is None:
            self.initial_state = np.zeros(self.dimension)
        else:
            self.initial_state = np.asarray(initial_state, dtype=float).reshape(self.dimension)

    @property
    def observation_matrix(self):
        return np.ones((1, self.dimension))

    def transition_sample(self, states, rng):
        states = np.asarray(states, dtype=float)
        return states + math.sqrt(self.state_variance) * rng.standard_normal(states.shape)

    def observation_sample(self, states, rng):
        """
        Pseudo-observations sum_j x_j + V for each leading index of ``states``.
        """
        states = np.asarray(states, dtype=float)
        totals = states.sum(axis=-1)
        return totals + math.sqrt(self.obs_variance) * rng.standard_normal(np.shape(totals))

    def log_likelihood(self, y, states):
        totals = np.asarray(states, dtype=float).sum(axis=-1)
        return stats.norm.logpdf(y, loc=totals, scale=math.sqrt(self.obs_variance))

    def simulate(self, n, rng):
        states = np.empty((n, self.dimension))
        observations = np.empty(n)
        current = self.initial_state
        for k in range(n):
            current = self.transition_sample(current, rng)
            states[k] = current
            observations[k] = self.observation_sample(current, rng)
        return states, observations


class GeneralSSM(ABC):
    """
    Abstract base class for state-space models that factorize over coordinates.

    The transition density is prod_j f(x_j | x'_j) and the likelihood of the scalar observation y is
    exp(sum_j h(y, x_j)). All per-coordinate methods are element-wise over arrays.

    Attributes:
        dimension (int): Number of coordinates d.
        support (Support): Coordinate state space.
        initial_state (float): The fixed x_0 shared by all coordinates.
        transition_bounds (tuple | None): ``(f_low, f_high)`` with f_low < f < f_high, when declared.
    """

    support = Support()
    initial_state = 0.0
    transition_bounds = None

    def __init__(self, dimension=1):
        if dimension < 1:
            raise ArgumentError(f"Dimension must be positive, got {dimension}")
        self.dimension = int(dimension)

    @abstractmethod
    def transition_sample(self, previous, rng):
        """
        Draw x ~ f(. | previous) element-wise.
        """
        pass

    @abstractmethod
    def transition_log_density(self, x, previous):
        """
        log f(x | previous) element-wise, ``-inf`` outside the support.
        """
        pass

    @abstractmethod
    def log_likelihood(self, y, x):
        """
        h(y, x) element-wise.
        """
        pass

    @abstractmethod
    def observation_sample(self, states, rng):
        """
        Draw y with density proportional to exp(sum_j h(y, x_j)) for each leading index of ``states``.
        """
        pass

    def likelihood_bounds(self, y):
        """
        ``(h_low, h_high)`` over the support for the observation ``y``, when finite.
        """
        return None

    def log_predictive_factor(self, y, previous):
        """
        log F(previous) with F(x') = integral of exp(h(y, x)) f(x | x') dx, by quadrature.
        """

        def one(prev):
            value, _ = integrate.quad(
                lambda x: math.exp(float(self.log_likelihood(y, x)) + float(self.transition_log_density(x, prev))),
                self.support.lower,
                self.support.upper,
                limit=200,
            )
            if not value > 0:
                raise NumericalError(f"Predictive factor quadrature returned {value} at x'={prev}")
            return math.log(value)

        return np.vectorize(one, otypes=[float])(np.asarray(previous, dtype=float))

    def predictive_factor(self, y, previous):
        return np.exp(self.log_predictive_factor(y, previous))

    def simulate(self, n, rng, dimension=None):
        d = self.dimension if dimension is None else int(dimension)
        states = np.empty((n, d))
        observations = np.empty(n)
        current = np.full(d, self.initial_state, dtype=float)
        for k in range(n):
            current = self.transition_sample(current, rng)
            states[k] = current
            observations[k] = self.observation_sample(current, rng)
        return states, observations


class DiscreteToySSM(GeneralSSM):
    """
    A finite-state model: states ``0..K-1``, observations ``0..Y-1``.

    Args:
        transition_matrix (array_like): ``(K, K)`` row-stochastic matrix, ``P[x', x] = f(x | x')``.
        log_likelihood_table (array_like): ``(Y, K)`` table of h(y, x).
        dimension (int): Number of coordinates d.
        initial_state (int): x_0.
    """

    def __init__(self, transition_matrix, log_likelihood_table, dimension=1, initial_state=0):
        super().__init__(dimension)
        self.transition_matrix = np.asarray(transition_matrix, dtype=float)
        self.log_likelihood_table = np.atleast_2d(np.asarray(log_likelihood_table, dtype=float))
        states = self.transition_matrix.shape[0]
        if self.transition_matrix.shape != (states, states) or self.log_likelihood_table.shape[1] != states:
            raise ArgumentError("Transition matrix and likelihood table shapes do not match")
        if np.any(self.transition_matrix < 0) or not np.allclose(self.transition_matrix.sum(axis=1), 1.0):
            raise ArgumentError("Transition matrix must be row-stochastic")
        self.support = Support.interval(0, states - 1)
        self.initial_state = int(initial_state)
        positive = self.transition_matrix[self.transition_matrix > 0]
        self.transition_bounds = (float(positive.min()), float(positive.max()))
        self._cumulative = np.cumsum(self.transition_matrix, axis=1)

    @property
    def state_count(self):
        return self.transition_matrix.shape[0]

    def transition_sample(self, previous, rng):
        previous = np.asarray(previous).astype(int)
        u = np.asarray(rng.random(previous.shape))
        nxt = (u[..., None] > self._cumulative[previous]).sum(axis=-1)
        return np.minimum(nxt, self.state_count - 1).astype(float)

    def transition_log_density(self, x, previous):
        with np.errstate(divide="ignore"):
            return np.log(self.transition_matrix[np.asarray(previous).astype(int), np.asarray(x).astype(int)])

    def log_likelihood(self, y, x):
        return self.log_likelihood_table[int(y), np.asarray(x).astype(int)]

    def likelihood_bounds(self, y):
        row = self.log_likelihood_table[int(y)]
        return float(row.min()), float(row.max())

    def observation_sample(self, states, rng):
        states = np.asarray(states).astype(int)
        # log p(y | x) up to a constant, for every y of the alphabet
        scores = self.log_likelihood_table[:, states].sum(axis=-1)
        scores = np.moveaxis(scores, 0, -1)
        probs = np.exp(scores - scores.max(axis=-1, keepdims=True))
        probs /= probs.sum(axis=-1, keepdims=True)
        u = np.asarray(rng.random(probs.shape[:-1]))
        draws = (u[..., None] > np.cumsum(probs, axis=-1)).sum(axis=-1)
        return np.minimum(draws, probs.shape[-1] - 1).astype(float)

    def log_predictive_factor(self, y, previous):
        factor = self.transition_matrix @ np.exp(self.log_likelihood_table[int(y)])
        return np.log(factor[np.asarray(previous).astype(int)])

    def marginal(self, probabilities):
        """
        A frozen discrete law on the states, usable as a filter marginal.
        """
        return stats.rv_discrete(values=(np.arange(self.state_count), np.asarray(probabilities, dtype=float)))


class BoundedToySSM(GeneralSSM):
    """
    States on [0, 1] with f(x | x') = 1 + a cos(2 pi (x - x')) and h(y, x) = -c (y - x)**2 / 2.

    The transition density lies in (1 - a, 1 + a), so both f and h are bounded on the support.
    Transitions are drawn by rejection from the uniform law; the predictive factor has the closed form
    A + a (cos(2 pi x') C + sin(2 pi x') S) with three scalar integrals of exp(h).

    Args:
        amplitude (float): a in ``[0, 1)``.
        precision (float): c > 0.
        dimension (int): Number of coordinates d.
        initial_state (float): x_0 in [0, 1].
    """

    def __init__(self, amplitude=0.5, precision=1.0, dimension=1, initial_state=0.5):
        super().__init__(dimension)
        if not 0.0 <= amplitude < 1.0:
            raise ArgumentError(f"Amplitude must lie in [0, 1), got {amplitude}")
        if not precision > 0:
            raise ArgumentError(f"Precision must be positive, got {precision}")
        self.amplitude = float(amplitude)
        self.precision = float(precision)
        self.support = Support.interval(0.0, 1.0)
        self.initial_state = float(initial_state)
        self.transition_bounds = (1.0 - self.amplitude, 1.0 + self.amplitude)
        self._moments = {}

    def transition_density(self, x, previous):
        x = np.asarray(x, dtype=float)
        inside = self.support.mask(x)
        return np.where(inside, 1.0 + self.amplitude * np.cos(2.0 * np.pi * (x - previous)), 0.0)

    def transition_log_density(self, x, previous):
        with np.errstate(divide="ignore"):
            return np.log(self.transition_density(x, previous))

    def transition_sample(self, previous, rng):
        previous = np.asarray(previous, dtype=float)
        out = np.empty(previous.shape)
        pending = np.ones(previous.shape, dtype=bool)
        while np.any(pending):
            proposal = rng.random(previous.shape)
            accept = rng.random(previous.shape) * (1.0 + self.amplitude) < self.transition_density(proposal, previous)
            take = pending & accept
            out[take] = proposal[take]
            pending &= ~accept
        return out

    def log_likelihood(self, y, x):
        return -0.5 * self.precision * (y - np.asarray(x, dtype=float)) ** 2

    def likelihood_bounds(self, y):
        farthest = max(abs(y), abs(y - 1.0))
        nearest = 0.0 if 0.0 <= y <= 1.0 else min(abs(y), abs(y - 1.0))
        return -0.5 * self.precision * farthest**2, -0.5 * self.precision * nearest**2

    def observation_sample(self, states, rng):
        states = np.asarray(states, dtype=float)
        d = states.shape[-1]
        centre = states.mean(axis=-1)
        return centre + rng.standard_normal(np.shape(centre)) / math.sqrt(self.precision * d)

    def likelihood_moments(self, y):
        """
        ``(A, C, S)``: integrals over [0, 1] of exp(h(y, x)) times 1, cos(2 pi x) and sin(2 pi x).
        """
        key = float(y)
        if key not in self._moments:

            def weight(x):
                return math.exp(-0.5 * self.precision * (key - x) ** 2)

            a, _ = integrate.quad(weight, 0.0, 1.0)
            c, _ = integrate.quad(lambda x: weight(x) * math.cos(2.0 * math.pi * x), 0.0, 1.0)
            s, _ = integrate.quad(lambda x: weight(x) * math.sin(2.0 * math.pi * x), 0.0, 1.0)
            self._moments[key] = (a, c, s)
        return self._moments[key]

    def log_predictive_factor(self, y, previous):
        a, c, s = self.likelihood_moments(y)
        angle = 2.0 * np.pi * np.asarray(previous, dtype=float)
        return np.log(a + self.amplitude * (np.cos(angle) * c + np.sin(angle) * s))


class GaussianProductSSM(GeneralSSM):
    """
    Independent Gaussian random walks x_k = x_{k-1} + N(0, q) observed through h(y, x) = -(y - x)**2 / (2 r**2).

    Each coordinate is a scalar linear Gaussian model, so tempered trajectory laws can be sampled
    exactly by forward filtering and backward sampling.

    Args:
        state_variance (float): q > 0.
        obs_sd (float): r > 0.
        dimension (int): Number of coordinates d.
        initial_state (float): x_0.
    """

    def __init__(self, state_variance=1.0, obs_sd=1.0, dimension=1, initial_state=0.0):
        super().__init__(dimension)
        if not (state_variance > 0 and obs_sd > 0):
            raise ArgumentError(f"Variances must be positive, got q={state_variance}, r={obs_sd}")
        self.state_variance = float(state_variance)
        self.obs_sd = float(obs_sd)
        self.initial_state = float(initial_state)

    def transition_sample(self, previous, rng):
        previous = np.asarray(previous, dtype=float)
        return previous + math.sqrt(self.state_variance) * rng.standard_normal(previous.shape)

    def transition_log_density(self, x, previous):
        return stats.norm.logpdf(x, loc=previous, scale=math.sqrt(self.state_variance))

    def log_likelihood(self, y, x):
        return -0.5 * (y - np.asarray(x, dtype=float)) ** 2 / self.obs_sd**2

    def observation_sample(self, states, rng):
        states = np.asarray(states, dtype=float)
        d = states.shape[-1]
        centre = states.mean(axis=-1)
        return centre + self.obs_sd / math.sqrt(d) * rng.standard_normal(np.shape(centre))

    def log_predictive_factor(self, y, previous):
        total = self.state_variance + self.obs_sd**2
        previous = np.asarray(previous, dtype=float)
        return 0.5 * math.log(self.obs_sd**2 / total) - 0.5 * (y - previous) ** 2 / total

    def coordinate_model(self):
        """
        The scalar linear Gaussian model followed by each coordinate, for the Kalman oracle.
        """
        return LinearGaussianSSM(
            1, obs_variance=self.obs_sd**2, state_variance=self.state_variance, initial_state=[self.initial_state]
        )

    def tempered_filter_moments(self, observations, temperature):
        """
        Forward filter of one coordinate with the last likelihood term raised to ``temperature``.

        Returns:
            tuple[numpy.ndarray, numpy.ndarray]: Filtered means and variances at times ``1..k``.
        """
        observations = np.atleast_1d(np.asarray(observations, dtype=float))
        means = np.empty(observations.size)
        variances = np.empty(observations.size)
        mean, variance = self.initial_state, 0.0
        last = observations.size - 1
        for i, y in enumerate(observations):
            variance += self.state_variance
            weight = (temperature if i == last else 1.0) / self.obs_sd**2
            if weight > 0:
                gain = variance * weight / (1.0 + variance * weight)
                mean += gain * (y - mean)
                variance *= 1.0 - gain
            means[i], variances[i] = mean, variance
        return means, variances

    def tempered_likelihood_variance(self, observations, temperature):
        """
        Var(h(y_k, X_k)) for X_k under the tempered law, (2 v**2 + 4 mu**2 v) / (4 r**4).
        """
        means, variances = self.tempered_filter_moments(observations, temperature)
        mu = means[-1] - np.atleast_1d(observations)[-1]
        v = variances[-1]
        return (2.0 * v**2 + 4.0 * mu**2 * v) / (4.0 * self.obs_sd**4)

    def sample_tempered_trajectories(self, observations, temperature, size, rng):
        """
        Exact draws of x_{1:k} under the tempered trajectory law, by backward sampling.

        Returns:
            numpy.ndarray: Array of shape ``(size, k, d)``.
        """
        means, variances = self.tempered_filter_moments(observations, temperature)
        k = means.size
        out = np.empty((size, k, self.dimension))
        out[:, -1, :] = means[-1] + math.sqrt(variances[-1]) * rng.standard_normal((size, self.dimension))
        for i in range(k - 2, -1, -1):
            gain = variances[i] / (variances[i] + self.state_variance)
            mean = means[i] + gain * (out[:, i + 1, :] - means[i])
            sd = math.sqrt(variances[i] * (1.0 - gain))
            out[:, i, :] = mean + sd * rng.standard_normal((size, self.dimension))
        return out


def simulate_ssm(model, n, rng):
    """
    Forward-simulate ``n`` states and observations.

    Args:
        model (LinearGaussianSSM | GeneralSSM): The model.
        n (int): Horizon.
        rng (numpy.random.Generator): Random source.

    Returns:
        tuple[numpy.ndarray, numpy.ndarray]: States ``(n, d)`` and observations ``(n,)``.
    """
    if n < 0:
        raise ArgumentError(f"Horizon must be non-negative, got {n}")
    return model.simulate(n, rng)
