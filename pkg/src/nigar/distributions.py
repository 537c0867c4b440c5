"""NIG innovations, the inverse Gaussian mixing law and the GIG posterior moments.

Parametrisation follows the usual ``NIG(alpha, beta, mu, delta)`` with
``gamma = sqrt(alpha**2 - beta**2)``.  The mixing law is ``IG(gamma, delta)``
with density

    g(x) = delta / sqrt(2 pi) * exp(delta*gamma) * x**-1.5
           * exp(-(delta**2 / x + gamma**2 * x) / 2),   x > 0,

mean ``delta/gamma`` and variance ``delta/gamma**3``.  Given ``G = g`` the
innovation is ``N(mu + beta*g, g)``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError
from .special import bessel_k01e

__all__ = [
    "NigParams",
    "IgParams",
    "RngStream",
    "CondMoments",
    "ig_pdf",
    "ig_logpdf",
    "ig_sample",
    "nig_phi",
    "nig_logpdf",
    "nig_pdf",
    "nig_sample",
    "gig_cond_moments",
    "nig_moments",
]

_LOG_2PI = math.log(2.0 * math.pi)


def _check_finite(**values):
    for name, value in values.items():
        if not math.isfinite(value):
            raise ParameterError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class NigParams:
    """Normal inverse Gaussian parameters.

    Attributes
    ----------
    alpha : float
        Tail heaviness; must exceed ``abs(beta)``.
    beta : float
        Asymmetry.
    mu : float
        Location.
    delta : float
        Scale, ``> 0``.
    """

    alpha: float
    beta: float
    mu: float
    delta: float

    def __post_init__(self):
        for name in ("alpha", "beta", "mu", "delta"):
            object.__setattr__(self, name, float(getattr(self, name)))
        _check_finite(alpha=self.alpha, beta=self.beta, mu=self.mu, delta=self.delta)
        if self.delta <= 0:
            raise ParameterError(f"delta must be positive, got {self.delta}")
        if self.alpha <= abs(self.beta):
            raise ParameterError(
                f"alpha must exceed |beta| (alpha={self.alpha}, beta={self.beta})"
            )

    @classmethod
    def from_gamma(cls, gamma, beta, mu, delta):
        """Build from ``gamma`` instead of ``alpha`` (``alpha = hypot(gamma, beta)``)."""
        if not gamma > 0:
            raise ParameterError(f"gamma must be positive, got {gamma}")
        return cls(math.hypot(gamma, beta), beta, mu, delta)

    @property
    def gamma(self):
        # (alpha - beta)(alpha + beta) keeps precision when alpha is close to |beta|
        return math.sqrt((self.alpha - self.beta) * (self.alpha + self.beta))

    @property
    def mixing(self):
        return IgParams(self.gamma, self.delta)

    def as_dict(self):
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "mu": self.mu,
            "delta": self.delta,
            "gamma": self.gamma,
        }


@dataclass(frozen=True)
class IgParams:
    """Inverse Gaussian ``IG(gamma, delta)`` mixing law."""

    gamma: float
    delta: float

    def __post_init__(self):
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "delta", float(self.delta))
        _check_finite(gamma=self.gamma, delta=self.delta)
        if self.gamma <= 0 or self.delta <= 0:
            raise ParameterError("IG parameters gamma and delta must be positive")

    @property
    def mean(self):
        """Mean ``delta/gamma``; the location of the mean/shape parametrisation."""
        return self.delta / self.gamma

    @property
    def shape(self):
        """Shape ``delta**2`` of the mean/shape parametrisation."""
        return self.delta * self.delta

    @property
    def variance(self):
        return self.delta / self.gamma**3


class RngStream:
    """Reproducible random stream identified by ``(seed, stream_id)``.

    Backed by the counter-based Philox generator keyed through
    :class:`numpy.random.SeedSequence`; distinct ``stream_id`` values give
    independent streams for the same seed.  A stream carries state, so do
    not share one between threads without external locking.
    """

    def __init__(self, seed=0, stream_id=0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        if not (0 <= self.seed < 2**64 and 0 <= self.stream_id < 2**64):
            raise ParameterError("seed and stream_id must be unsigned 64-bit integers")
        seq = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.Philox(seq))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    def substream(self, stream_id):
        """A fresh stream sharing this seed."""
        return RngStream(self.seed, stream_id)

    def normal(self, size=None):
        return self.generator.standard_normal(size)

    def uniform(self, size=None):
        return self.generator.random(size)


@dataclass(frozen=True)
class CondMoments:
    """Posterior moments of the mixing variable: ``s = E[G|eps]``, ``w = E[1/G|eps]``."""

    s: np.ndarray
    w: np.ndarray


def _positive(x):
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("inverse Gaussian density is defined for x > 0 only")
    return arr


def ig_logpdf(x, p):
    """Log density of ``IG(gamma, delta)``."""
    x = _positive(x)
    # delta*gamma - (delta^2/x + gamma^2 x)/2 == -(delta - gamma x)^2 / (2x)
    out = (
        math.log(p.delta)
        - 0.5 * _LOG_2PI
        - 1.5 * np.log(x)
        - (p.delta - p.gamma * x) ** 2 / (2.0 * x)
    )
    return float(out) if np.ndim(out) == 0 else out


def ig_pdf(x, p):
    """Density of ``IG(gamma, delta)``; raises DomainError for ``x <= 0``."""
    return np.exp(ig_logpdf(x, p))


def ig_sample(p, rng, size=None):
    """Draw from ``IG(gamma, delta)`` with the Michael-Schucany-Haas method.

    Uses the mean/shape form ``m = delta/gamma``, ``lam = delta**2``:

    1. ``Y = N**2`` for a standard normal ``N``;
    2. ``X1`` is the smaller root of the quadratic
       ``m + m**2 Y / (2 lam) - m/(2 lam) sqrt(4 m lam Y + m**2 Y**2)``;
    3. ``U ~ U(0, 1)``;
    4. return ``X1`` if ``U <= m / (m + X1)`` else ``m**2 / X1``.

    Step 2 is evaluated as ``4 m**2 lam Y / D**2`` with
    ``D = m Y + sqrt(4 m lam Y + m**2 Y**2)``, which is algebraically the same
    but free of cancellation when ``m Y >> lam``.
    """
    if isinstance(p, NigParams):
        p = p.mixing
    m = p.mean
    lam = p.shape
    y = rng.normal(size) ** 2
    u = rng.uniform(size)
    disc = np.sqrt(4.0 * m * lam * y + (m * y) ** 2)
    denom = m * y + disc
    with np.errstate(invalid="ignore", divide="ignore"):
        x1 = np.where(y > 0, 4.0 * m * m * lam * y / denom**2, m)
    out = np.where(u <= m / (m + x1), x1, m * m / x1)
    return float(out) if size is None else out


def nig_phi(x, p):
    """``1 + ((x - mu) / delta)**2``."""
    z = (np.asarray(x, dtype=float) - p.mu) / p.delta
    out = 1.0 + z * z
    return float(out) if np.ndim(out) == 0 else out


def _bessel_argument(x, p):
    root_phi = np.sqrt(nig_phi(x, p))
    return root_phi, p.delta * p.alpha * root_phi


def nig_logpdf(x, p):
    """Log density of ``NIG(alpha, beta, mu, delta)``.

    ``log(alpha/pi) + delta*gamma + beta*(x - mu) - log(phi)/2 + log K_1(delta*alpha*sqrt(phi))``
    with the Bessel term taken from its scaled form so that large arguments
    do not underflow.
    """
    root_phi, z = _bessel_argument(x, p)
    _, k1e = bessel_k01e(z)
    out = _logpdf_from_k1e(np.asarray(x, dtype=float), p, root_phi, z, k1e)
    return float(out) if np.ndim(out) == 0 else out


def _logpdf_from_k1e(x, p, root_phi, z, k1e):
    return (
        math.log(p.alpha / math.pi)
        + p.delta * p.gamma
        + p.beta * (x - p.mu)
        - np.log(root_phi)
        + np.log(k1e)
        - z
    )


def nig_pdf(x, p):
    return np.exp(nig_logpdf(x, p))


def nig_sample(p, rng, size=None):
    """Draw ``mu + beta*G + sqrt(G)*Z`` with ``G ~ IG(gamma, delta)``, ``Z ~ N(0, 1)``."""
    g = ig_sample(p.mixing, rng, size)
    z = rng.normal(size)
    out = p.mu + p.beta * g + np.sqrt(g) * z
    return float(out) if size is None else out


def gig_cond_moments(eps, p):
    """Posterior moments of the mixing variable given a residual.

    With ``z = alpha*delta*sqrt(phi(eps))``::

        s = E[G | eps]   = (delta*sqrt(phi)/alpha) * K_0(z)/K_1(z)
        w = E[1/G | eps] = (alpha/(delta*sqrt(phi))) * K_2(z)/K_1(z)

    and ``K_2/K_1 = K_0/K_1 + 2/z``.  Only ratios of scaled Bessel values are
    formed, so the result stays finite for ``z`` up to 1e6 and beyond.
    """
    root_phi, z = _bessel_argument(eps, p)
    k0e, k1e = bessel_k01e(z)
    return _moments_from_bessel(p, root_phi, z, k0e, k1e)


def _moments_from_bessel(p, root_phi, z, k0e, k1e):
    ratio = k0e / k1e
    scale = p.delta * root_phi / p.alpha
    s = scale * ratio
    w = (ratio + 2.0 / z) / scale
    if np.ndim(s) == 0:
        return CondMoments(float(s), float(w))
    return CondMoments(s, w)


def nig_moments(p):
    """Return ``(mean, variance) = (mu + delta*beta/gamma, delta*alpha**2/gamma**3)``."""
    g = p.gamma
    return p.mu + p.delta * p.beta / g, p.delta * p.alpha**2 / g**3
