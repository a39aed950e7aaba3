import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from highdim_smc.exceptions import ArgumentError, EvaluationError, NumericalError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Support:
    """
    The state space E of one coordinate: the full real line or a closed interval.

    Attributes:
        lower (float): Left end point, ``-inf`` for the full line.
        upper (float): Right end point, ``+inf`` for the full line.
    """

    lower: float = -math.inf
    upper: float = math.inf

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ArgumentError(f"Support lower bound {self.lower} must be below upper bound {self.upper}")

    @classmethod
    def full_line(cls):
        return cls()

    @classmethod
    def interval(cls, lower, upper):
        return cls(float(lower), float(upper))

    @property
    def is_compact(self):
        return math.isfinite(self.lower) and math.isfinite(self.upper)

    def mask(self, x):
        """
        Element-wise membership test.

        Args:
            x (array_like): Coordinate values.

        Returns:
            numpy.ndarray: Boolean array, True where the value lies in the support.
        """
        x = np.asarray(x, dtype=float)
        return (x >= self.lower) & (x <= self.upper)

    def contains(self, x):
        return bool(np.all(self.mask(x)))

    def check(self, x):
        """
        Raise if any coordinate lies outside the support.

        Raises:
            EvaluationError: If a value is outside ``[lower, upper]`` or is NaN.
        """
        if not self.contains(x):
            raise EvaluationError(f"State outside of support [{self.lower}, {self.upper}]")


class ScalarPotential(ABC):
    """
    A scalar log-potential g on one coordinate, the building block of a product target.

    The tempered coordinate law is pi_s(x) ∝ exp(s * g(x)). Subclasses implement ``evaluate`` and may
    override the exact sampler, the per-temperature variance and the log-normaliser with closed forms;
    the defaults integrate numerically over the support.

    Attributes:
        name (str): Short identifier used in logs and CSV output.
        support (Support): The coordinate state space.
        bound (float | None): A declared constant G_max with |g| <= G_max on the support, if any.
    """

    name = "potential"
    support = Support()
    bound = None

    @abstractmethod
    def evaluate(self, x):
        """
        Evaluate g element-wise.

        Args:
            x (array_like): Coordinate values.

        Returns:
            numpy.ndarray: g(x), same shape as ``x``, in nats.
        """
        pass

    def __call__(self, x):
        return self.evaluate(x)

    @property
    def supports_exact_sampling(self):
        return type(self).sample_tempered is not ScalarPotential.sample_tempered

    def sample_tempered(self, temperature, size, rng):
        """
        Draw i.i.d. values from pi_s.

        Args:
            temperature (float): Inverse temperature s.
            size (int | tuple): Output shape.
            rng (numpy.random.Generator): Random source.

        Returns:
            numpy.ndarray: Draws of shape ``size``.

        Raises:
            NotImplementedError: If the family has no direct sampler.
        """
        raise NotImplementedError(f"Potential '{self.name}' does not provide exact sampling")

    def _integrate(self, func):
        value, abserr = integrate.quad(func, self.support.lower, self.support.upper, limit=200)
        if not np.isfinite(value):
            raise NumericalError(f"Quadrature over the support of '{self.name}' returned {value}")
        return value

    def log_normalizer(self, temperature):
        """
        log Z_s = log ∫ exp(s * g(x)) dx over the support.

        Args:
            temperature (float): Inverse temperature s.

        Returns:
            float: The log-normaliser.
        """
        z = self._integrate(lambda x: math.exp(temperature * float(self.evaluate(x))))
        if z <= 0.0:
            raise NumericalError(f"Non-positive normaliser {z} for '{self.name}' at s={temperature}")
        return math.log(z)

    def tempered_moments(self, temperature):
        """
        First two moments of g under pi_s.

        Args:
            temperature (float): Inverse temperature s.

        Returns:
            tuple[float, float]: ``(pi_s(g), pi_s(g**2))``.
        """
        log_z = self.log_normalizer(temperature)

        def density(x):
            return math.exp(temperature * float(self.evaluate(x)) - log_z)

        first = self._integrate(lambda x: float(self.evaluate(x)) * density(x))
        second = self._integrate(lambda x: float(self.evaluate(x)) ** 2 * density(x))
        return first, second

    def tempered_variance(self, temperature):
        """
        Var_{pi_s}(g), the integrand of the exact-sampling asymptotic variance.

        Args:
            temperature (float): Inverse temperature s.

        Returns:
            float: The variance, clipped at zero.
        """
        first, second = self.tempered_moments(temperature)
        return max(second - first**2, 0.0)


class GaussianPotential(ScalarPotential):
    """
    g(x) = -x**2 / 2 on the real line, so pi_s is Normal(0, 1/s).
    """

    name = "gaussian"

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        return -0.5 * x**2

    def sample_tempered(self, temperature, size, rng):
        if temperature <= 0:
            raise ArgumentError(f"Exact Gaussian sampling needs s > 0, got {temperature}")
        return rng.normal(0.0, 1.0 / math.sqrt(temperature), size=size)

    def log_normalizer(self, temperature):
        if temperature <= 0:
            raise ArgumentError(f"Gaussian normaliser needs s > 0, got {temperature}")
        return 0.5 * math.log(2.0 * math.pi / temperature)

    def tempered_moments(self, temperature):
        # x ~ N(0, 1/s): E[g] = -1/(2s), E[g^2] = E[x^4]/4 = 3/(4 s^2)
        return -0.5 / temperature, 0.75 / temperature**2

    def tempered_variance(self, temperature):
        if temperature <= 0:
            raise ArgumentError(f"Gaussian variance needs s > 0, got {temperature}")
        return 0.5 / temperature**2


class BoundedPotential(ScalarPotential):
    """
    g(x) = max(-x**2 / 2, -G_max) on a compact interval, so |g| <= G_max on the support.

    Exact tempered sampling is by rejection from the uniform law on the interval, which accepts with
    probability exp(s * g(x)) >= exp(-s * G_max).

    Args:
        g_max (float): The declared bound G_max > 0.
        lower (float): Left end of the support.
        upper (float): Right end of the support.
    """

    name = "bounded"

    def __init__(self, g_max=2.0, lower=-3.0, upper=3.0):
        if g_max <= 0:
            raise ArgumentError(f"G_max must be positive, got {g_max}")
        self.bound = float(g_max)
        self.support = Support.interval(lower, upper)

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        return np.maximum(-0.5 * x**2, -self.bound)

    def sample_tempered(self, temperature, size, rng):
        if temperature < 0:
            raise ArgumentError(f"Tempered sampling needs s >= 0, got {temperature}")
        out = np.empty(int(np.prod(size)), dtype=float)
        filled = 0
        while filled < out.size:
            wanted = out.size - filled
            # expected acceptance is at least exp(-s G_max)
            batch = int(wanted * math.exp(temperature * self.bound)) + 16
            proposal = rng.uniform(self.support.lower, self.support.upper, size=batch)
            accepted = proposal[np.log(rng.random(batch)) < temperature * self.evaluate(proposal)]
            take = min(accepted.size, wanted)
            out[filled : filled + take] = accepted[:take]
            filled += take
        return out.reshape(size)


class ConstantPotential(ScalarPotential):
    """
    A flat potential g ≡ c on a compact interval; every tempered law is uniform.

    Args:
        value (float): The constant c.
        lower (float): Left end of the support.
        upper (float): Right end of the support.
    """

    name = "constant"

    def __init__(self, value=0.0, lower=-1.0, upper=1.0):
        self.value = float(value)
        self.bound = abs(self.value)
        self.support = Support.interval(lower, upper)

    def evaluate(self, x):
        return np.full(np.shape(x), self.value, dtype=float)

    def sample_tempered(self, temperature, size, rng):
        return rng.uniform(self.support.lower, self.support.upper, size=size)

    def log_normalizer(self, temperature):
        return temperature * self.value + math.log(self.support.upper - self.support.lower)

    def tempered_moments(self, temperature):
        return self.value, self.value**2

    def tempered_variance(self, temperature):
        return 0.0


class CallablePotential(ScalarPotential):
    """
    Wrap a vectorized function as a potential.

    Args:
        func (callable): Maps an array of coordinate values to g values element-wise.
        support (Support, optional): The coordinate state space. Defaults to the full line.
        bound (float, optional): Declared G_max, if known.
        name (str, optional): Identifier for logs.
    """

    def __init__(self, func, support=None, bound=None, name="callable"):
        self.func = func
        self.support = support or Support()
        self.bound = bound
        self.name = name

    def evaluate(self, x):
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float)


potential_classes = {
    "gaussian": GaussianPotential,
    "bounded": BoundedPotential,
    "constant": ConstantPotential,
}
