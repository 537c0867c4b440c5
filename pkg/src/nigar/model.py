"""The NIGAR(1) process ``Y_t = rho * Y_{t-1} + eps_t`` with iid NIG innovations."""

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .distributions import NigParams, nig_moments, nig_sample
from .errors import ParameterError, TooShortError

__all__ = ["NigArModel", "TimeSeries", "simulate_path", "residuals", "theoretical_moments"]


@dataclass(frozen=True)
class NigArModel:
    """Autoregression coefficient plus the innovation law."""

    rho: float
    innov: NigParams

    def __post_init__(self):
        object.__setattr__(self, "rho", float(self.rho))
        if not math.isfinite(self.rho):
            raise ParameterError(f"rho must be finite, got {self.rho!r}")

    def as_dict(self):
        return {"rho": self.rho, **self.innov.as_dict()}


@dataclass(frozen=True)
class TimeSeries:
    """Ordered finite observations with optional ISO date labels."""

    values: np.ndarray
    labels: Optional[Tuple[str, ...]] = field(default=None)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size < 1:
            raise TooShortError("a time series needs at least one observation")
        if not np.all(np.isfinite(values)):
            raise ParameterError("time series values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.labels is not None:
            labels = tuple(str(label) for label in self.labels)
            if len(labels) != values.size:
                raise ParameterError("labels and values differ in length")
            if any(b <= a for a, b in zip(labels, labels[1:])):
                raise ParameterError("labels must be strictly increasing")
            object.__setattr__(self, "labels", labels)

    def __len__(self):
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


def _as_values(y):
    if isinstance(y, TimeSeries):
        return y.values
    return np.asarray(y, dtype=float)


def _stationary_burn_in(rho):
    # enough steps for rho**k to fall below double precision
    if rho == 0:
        return 0
    if abs(rho) >= 1:
        raise ParameterError("a stationary start needs |rho| < 1")
    return int(math.ceil(math.log(np.finfo(float).eps) / math.log(abs(rho))))


def simulate_path(m, n, rng, *, stationary_start=False, return_innovations=False):
    """Simulate ``n`` values of the process.

    The first value is the first innovation (``y_0 = eps_0``) and
    ``y_t = rho*y_{t-1} + eps_t`` thereafter.  With ``stationary_start`` a
    burn-in long enough for ``rho**k`` to vanish is simulated and discarded.

    Returns the :class:`TimeSeries`, or ``(series, innovations)`` when
    ``return_innovations`` is set.
    """
    n = int(n)
    if n < 1:
        raise ParameterError("n must be at least 1")
    burn = _stationary_burn_in(m.rho) if stationary_start else 0
    eps = nig_sample(m.innov, rng, size=n + burn)
    y = np.empty_like(eps)
    y[0] = eps[0]
    rho = m.rho
    for t in range(1, eps.size):
        y[t] = rho * y[t - 1] + eps[t]
    series = TimeSeries(y[burn:])
    if return_innovations:
        return series, eps[burn:]
    return series


def residuals(y, rho):
    """``eps_t = y_t - rho*y_{t-1}`` for ``t = 1..n-1``; one fewer value than ``y``."""
    values = _as_values(y)
    if values.size < 2:
        raise TooShortError("residuals need at least two observations")
    return values[1:] - rho * values[:-1]


def theoretical_moments(m, t):
    """Mean and variance of ``Y_t`` for a path started at ``y_0 = eps_0``.

    ``E[Y_t] = E[eps] (1 - rho**(t+1)) / (1 - rho)`` and
    ``Var[Y_t] = Var[eps] (1 - rho**(2(t+1))) / (1 - rho**2)``, the closed
    form of ``Var[Y_t] = Var[eps] + rho**2 Var[Y_{t-1}]``.
    """
    t = int(t)
    if t < 0:
        raise ParameterError("t must be non-negative")
    rho = m.rho
    if abs(rho) == 1:
        raise ParameterError("|rho| = 1 has no closed-form moments")
    mean_eps, var_eps = nig_moments(m.innov)
    mean_factor = (1.0 - rho ** (t + 1)) / (1.0 - rho)
    var_factor = (1.0 - rho ** (2 * (t + 1))) / (1.0 - rho * rho)
    return mean_eps * mean_factor, var_eps * var_factor
