import logging
import math
from dataclasses import dataclass, field

import numpy as np

from highdim_smc.exceptions import ArgumentError

logger = logging.getLogger(__name__)

LINEAR = "linear"
EXPONENTIAL = "exponential"
TABULATED = "tabulated"

schedule_kinds = (LINEAR, EXPONENTIAL, TABULATED)


def _check_phi0(phi0):
    if not 0.0 <= phi0 < 1.0:
        raise ArgumentError(f"phi0 must lie in [0, 1), got {phi0}")


def linear_phi(n, d, phi0):
    """
    Linear cooling constant phi_n = phi0 + n (1 - phi0) / d.

    Args:
        n (int): Step index in ``0..d``.
        d (int): Number of steps.
        phi0 (float): Initial inverse temperature in ``[0, 1)``.

    Returns:
        float: The inverse temperature at step ``n``.

    Raises:
        ArgumentError: If ``n`` is out of range, ``d < 1`` or ``phi0`` is not in ``[0, 1)``.
    """
    if d < 1:
        raise ArgumentError(f"Number of steps must be positive, got {d}")
    if not 0 <= n <= d:
        raise ArgumentError(f"Step index {n} outside of 0..{d}")
    _check_phi0(phi0)
    if n == d:
        return 1.0
    return phi0 + n * (1.0 - phi0) / d


def exponential_nu(s, phi0, theta):
    """
    Exponential annealing nu(s), which starts slowly near phi0 and accelerates towards 1.

    Args:
        s (float): Continuous time in ``[0, 1]``.
        phi0 (float): nu(0).
        theta (float): Curvature, strictly positive.

    Returns:
        float: nu(s).

    Raises:
        ArgumentError: If ``theta <= 0`` or ``s``/``phi0`` are out of range.
    """
    if theta <= 0:
        raise ArgumentError(f"theta must be positive, got {theta}")
    if not 0.0 <= s <= 1.0:
        raise ArgumentError(f"Time s must lie in [0, 1], got {s}")
    _check_phi0(phi0)
    if s == 0.0:
        return phi0
    if s == 1.0:
        return 1.0
    scale = math.expm1(theta)
    return (phi0 * math.exp(theta) - 1.0) / scale + (1.0 - phi0) / scale * math.exp(theta * s)


def step_index(s, d, phi0):
    """
    Map an inverse temperature to the number of completed steps, floor(d (s - phi0) / (1 - phi0)).

    Args:
        s (float): Inverse temperature in ``[phi0, 1]``.
        d (int): Number of steps of the linear schedule.
        phi0 (float): Initial inverse temperature.

    Returns:
        int: The step index in ``0..d``.
    """
    _check_phi0(phi0)
    if not phi0 <= s <= 1.0:
        raise ArgumentError(f"Inverse temperature {s} outside of [{phi0}, 1]")
    # guard against 0.49999999 style round-off for exact grid points
    return int(math.floor(d * (s - phi0) / (1.0 - phi0) + 1e-9))


@dataclass(frozen=True)
class AnnealingSchedule:
    """
    A strictly increasing sequence of inverse temperatures phi_0 < ... < phi_p = 1.

    The discrete values are phi_n = phi(n / p) for a continuous increasing map phi on ``[0, 1]``:
    linear, exponential with curvature theta, or piecewise-linear through tabulated knots.

    Attributes:
        phi0 (float): Initial inverse temperature in ``[0, 1)``.
        steps (int): Number of annealing steps p.
        kind (str): One of ``linear``, ``exponential``, ``tabulated``.
        theta (float | None): Curvature of the exponential kind.
        knots (tuple): ``(times, values)`` of the tabulated kind.
    """

    phi0: float
    steps: int
    kind: str = LINEAR
    theta: float = None
    knots: tuple = field(default=None, repr=False)

    def __post_init__(self):
        _check_phi0(self.phi0)
        if self.steps < 1:
            raise ArgumentError(f"Number of steps must be positive, got {self.steps}")
        if self.kind not in schedule_kinds:
            raise ArgumentError(f"Unknown schedule kind '{self.kind}', expected one of {schedule_kinds}")
        if self.kind == EXPONENTIAL and (self.theta is None or self.theta <= 0):
            raise ArgumentError(f"Exponential schedule needs theta > 0, got {self.theta}")
        if self.kind == TABULATED:
            self._validate_knots()
        values = self.values()
        if not np.all(np.diff(values) > 0):
            raise ArgumentError("Schedule values must be strictly increasing")

    def _validate_knots(self):
        if self.knots is None:
            raise ArgumentError("Tabulated schedule needs knots")
        times, values = (np.asarray(k, dtype=float) for k in self.knots)
        if times.shape != values.shape or times.size < 2:
            raise ArgumentError("Knot times and values must be equally long with at least two entries")
        if times[0] != 0.0 or times[-1] != 1.0:
            raise ArgumentError("Knot times must start at 0 and end at 1")
        if not math.isclose(values[0], self.phi0) or values[-1] != 1.0:
            raise ArgumentError(f"Knot values must run from phi0={self.phi0} to 1")
        if not (np.all(np.diff(times) > 0) and np.all(np.diff(values) > 0)):
            raise ArgumentError("Knot times and values must be strictly increasing")

    @classmethod
    def linear(cls, steps, phi0=None):
        """
        Linear schedule; ``phi0`` defaults to ``1 / steps``.
        """
        return cls(phi0=1.0 / steps if phi0 is None else float(phi0), steps=int(steps), kind=LINEAR)

    @classmethod
    def exponential(cls, steps, theta=5.0, phi0=None):
        """
        Exponential schedule nu; ``phi0`` defaults to ``1 / steps``.
        """
        return cls(
            phi0=1.0 / steps if phi0 is None else float(phi0),
            steps=int(steps),
            kind=EXPONENTIAL,
            theta=float(theta),
        )

    @classmethod
    def tabulated(cls, steps, times, values):
        """
        Piecewise-linear schedule through the knots ``(times[i], values[i])``.
        """
        times = tuple(float(t) for t in times)
        values = tuple(float(v) for v in values)
        return cls(phi0=values[0], steps=int(steps), kind=TABULATED, knots=(times, values))

    @classmethod
    def from_name(cls, kind, steps, phi0=None, theta=5.0):
        if kind == LINEAR:
            return cls.linear(steps, phi0)
        if kind == EXPONENTIAL:
            return cls.exponential(steps, theta, phi0)
        raise ArgumentError(f"Schedule kind '{kind}' cannot be built by name")

    def continuous(self, u):
        """
        The continuous map phi(u) for ``u`` in ``[0, 1]``; vectorized over arrays.
        """
        u = np.asarray(u, dtype=float)
        if self.kind == LINEAR:
            out = self.phi0 + (1.0 - self.phi0) * u
        elif self.kind == EXPONENTIAL:
            scale = math.expm1(self.theta)
            out = (self.phi0 * math.exp(self.theta) - 1.0) / scale + (1.0 - self.phi0) / scale * np.exp(self.theta * u)
        else:
            out = np.interp(u, *self.knots)
        return out if out.ndim else float(out)

    def derivative(self, u):
        """
        phi'(u); for the tabulated kind the slope of the segment containing ``u`` (right-continuous).
        """
        u = np.asarray(u, dtype=float)
        if self.kind == LINEAR:
            out = np.full(u.shape, 1.0 - self.phi0)
        elif self.kind == EXPONENTIAL:
            out = (1.0 - self.phi0) * self.theta / math.expm1(self.theta) * np.exp(self.theta * u)
        else:
            times, values = (np.asarray(k) for k in self.knots)
            slopes = np.diff(values) / np.diff(times)
            segment = np.clip(np.searchsorted(times, u, side="right") - 1, 0, slopes.size - 1)
            out = slopes[segment]
        return out if out.ndim else float(out)

    def breakpoints(self):
        """
        Interior points where phi' is discontinuous (tabulated knots), for quadrature.
        """
        if self.kind != TABULATED:
            return ()
        return tuple(self.knots[0][1:-1])

    def __getitem__(self, n):
        if not 0 <= n <= self.steps:
            raise ArgumentError(f"Step index {n} outside of 0..{self.steps}")
        if n == self.steps:
            return 1.0
        if self.kind == LINEAR:
            return linear_phi(n, self.steps, self.phi0)
        if self.kind == EXPONENTIAL:
            return exponential_nu(n / self.steps, self.phi0, self.theta)
        return float(self.continuous(n / self.steps))

    def __len__(self):
        return self.steps + 1

    def values(self):
        """
        All inverse temperatures ``phi_0..phi_p`` as an array of length ``steps + 1``.
        """
        values = np.asarray(self.continuous(np.arange(self.steps + 1) / self.steps), dtype=float)
        values[0] = self.phi0
        values[-1] = 1.0
        return values

    def with_steps(self, steps):
        """
        The same continuous map discretized with a different number of steps.
        """
        return AnnealingSchedule(phi0=self.phi0, steps=int(steps), kind=self.kind, theta=self.theta, knots=self.knots)
