"""Scalar functions of time used for c0(t) and V0(t)."""

from dataclasses import dataclass

import numpy as np


class TimeFunction:
    is_constant = False

    def __call__(self, t):
        raise NotImplementedError

    def derivative(self, t):
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(TimeFunction):
    value: float

    is_constant = True

    def __call__(self, t):
        if np.ndim(t):
            return np.full(np.shape(t), float(self.value))
        return float(self.value)

    def derivative(self, t):
        return np.zeros(np.shape(t)) if np.ndim(t) else 0.0


@dataclass(frozen=True)
class Polynomial(TimeFunction):
    """sum_k coeffs[k] * t**k."""

    coeffs: tuple

    def __call__(self, t):
        return np.polynomial.polynomial.polyval(t, self.coeffs)

    def derivative(self, t):
        d = np.polynomial.polynomial.polyder(self.coeffs) if len(self.coeffs) > 1 else [0.0]
        return np.polynomial.polynomial.polyval(t, d)

    @property
    def is_constant(self):
        return all(c == 0 for c in self.coeffs[1:])


def linear(value, rate):
    return Polynomial((float(value), float(rate)))


@dataclass(frozen=True)
class Sinusoid(TimeFunction):
    """offset + amplitude * sin(omega*t + phase)."""

    offset: float = 0.0
    amplitude: float = 1.0
    omega: float = 1.0
    phase: float = 0.0

    def __call__(self, t):
        return self.offset + self.amplitude * np.sin(self.omega * np.asarray(t) + self.phase)

    def derivative(self, t):
        return self.amplitude * self.omega * np.cos(self.omega * np.asarray(t) + self.phase)


@dataclass(frozen=True)
class Table(TimeFunction):
    """Piecewise-linear interpolation through (times, values)."""

    times: tuple
    values: tuple

    def __post_init__(self):
        if len(self.times) != len(self.values) or len(self.times) < 2:
            raise ValueError("table needs at least two (t, value) pairs")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("table times must be strictly increasing")

    def __call__(self, t):
        return np.interp(t, self.times, self.values)

    def derivative(self, t):
        slopes = np.diff(self.values) / np.diff(self.times)
        idx = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(slopes) - 1)
        return slopes[idx]

    @property
    def is_constant(self):
        return len(set(self.values)) == 1


def as_time_function(value):
    if isinstance(value, TimeFunction):
        return value
    if callable(value):
        return _Callable(value)
    return Constant(float(value))


@dataclass(frozen=True)
class _Callable(TimeFunction):
    func: object
    step: float = 1e-6

    def __call__(self, t):
        return self.func(t)

    def derivative(self, t):
        return (self.func(t + self.step) - self.func(t - self.step)) / (2 * self.step)
