"""Maximum-likelihood estimation of the NIGAR(1) model by EM.

The mixing variables ``G_t`` are treated as missing data.  The E-step
replaces ``G_t`` and ``1/G_t`` by their posterior means ``s_t`` and ``w_t``;
the M-step maximises the expected complete-data log-likelihood, which is a
concave quadratic in ``(rho, mu, beta)`` and has closed forms for
``delta`` and ``gamma``:

    delta = sqrt(s_bar / (s_bar*w_bar - 1)),   gamma = delta / s_bar.

Two M-steps are provided: ``joint`` updates ``rho`` with the innovation
parameters, ``two-stage`` holds ``rho`` at the conditional least squares
estimate and runs the plain NIG EM on the residuals.
"""

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np

from .distributions import (
    NigParams,
    _bessel_argument,
    _logpdf_from_k1e,
    _moments_from_bessel,
    nig_logpdf,
)
from .errors import (
    ConstantSeriesError,
    DegenerateWeightsError,
    NonFiniteLikelihoodError,
    ParameterError,
    SingularSystemError,
    TooShortError,
    ZeroVarianceError,
)
from .model import NigArModel, TimeSeries, residuals
from .special import bessel_k01e

__all__ = [
    "Criterion",
    "Mode",
    "StopReason",
    "METHOD_OF_MOMENTS",
    "EmConfig",
    "TraceEntry",
    "FitReport",
    "cls_rho",
    "e_step",
    "m_step_joint",
    "m_step_two_stage",
    "log_likelihood",
    "init_method_of_moments",
    "em_fit",
]

logger = logging.getLogger(__name__)

METHOD_OF_MOMENTS = "moments"
_GAMMA_FLOOR = 1e-8
_DENOM_GUARD = 1e-12
_KURTOSIS_FLOOR = 0.1


class Criterion(str, enum.Enum):
    """Stopping rule: relative log-likelihood change or max relative parameter change."""

    LOGLIK = "loglik"
    PARAMS = "params"


class Mode(str, enum.Enum):
    JOINT = "joint"
    TWO_STAGE = "two-stage"


class StopReason(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"


@dataclass(frozen=True)
class EmConfig:
    """Settings for :func:`em_fit`.

    ``init`` is either a :class:`NigArModel` starting point or the string
    ``"moments"`` for :func:`init_method_of_moments` on the CLS residuals.
    """

    max_iterations: int = 2000
    tolerance: float = 1e-5
    criterion: Criterion = Criterion.LOGLIK
    mode: Mode = Mode.JOINT
    init: Union[NigArModel, str] = METHOD_OF_MOMENTS

    def __post_init__(self):
        object.__setattr__(self, "criterion", Criterion(self.criterion))
        object.__setattr__(self, "mode", Mode(self.mode))
        if int(self.max_iterations) < 1:
            raise ParameterError("max_iterations must be at least 1")
        object.__setattr__(self, "max_iterations", int(self.max_iterations))
        if not self.tolerance > 0:
            raise ParameterError("tolerance must be positive")
        if not isinstance(self.init, NigArModel) and self.init != METHOD_OF_MOMENTS:
            raise ParameterError(f"init must be a NigArModel or {METHOD_OF_MOMENTS!r}")

    def as_dict(self):
        init = self.init.as_dict() if isinstance(self.init, NigArModel) else self.init
        return {
            "max_iterations": self.max_iterations,
            "tolerance": self.tolerance,
            "criterion": self.criterion.value,
            "mode": self.mode.value,
            "init": init,
        }


@dataclass(frozen=True)
class TraceEntry:
    iteration: int
    params: NigArModel
    loglik: float


@dataclass
class FitReport:
    """Outcome of :func:`em_fit`.

    ``trace[0]`` holds the starting point; entry ``k`` the parameters after
    ``k`` EM iterations together with the observed-data log-likelihood of
    the residuals they imply.
    """

    params: NigArModel
    trace: List[TraceEntry]
    stop_reason: StopReason
    criterion: Criterion
    mode: Mode
    rho_cls: Optional[float] = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def iterations(self):
        return len(self.trace) - 1

    @property
    def loglik(self):
        return self.trace[-1].loglik

    @property
    def converged(self):
        return self.stop_reason is StopReason.CONVERGED

    def intercept_form(self):
        """The equivalent ``Y_t = mu + rho*Y_{t-1} + e_t`` reading, ``e_t = beta*G + sqrt(G)*Z``."""
        p = self.params
        return {
            "intercept": p.innov.mu,
            "rho": p.rho,
            "beta": p.innov.beta,
            "gamma": p.innov.gamma,
            "delta": p.innov.delta,
        }

    def to_dict(self):
        return {
            "params": self.params.as_dict(),
            "stop_reason": self.stop_reason.value,
            "criterion": self.criterion.value,
            "mode": self.mode.value,
            "iterations": self.iterations,
            "loglik": self.loglik,
            "rho_cls": self.rho_cls,
            "intercept_form": self.intercept_form(),
            "diagnostics": self.diagnostics,
            "trace": [
                {"iteration": e.iteration, "loglik": e.loglik, **e.params.as_dict()}
                for e in self.trace
            ],
        }


def _values(y):
    return y.values if isinstance(y, TimeSeries) else np.asarray(y, dtype=float)


def cls_rho(y):
    """Conditional least squares estimate of the AR(1) coefficient.

    Sums run over the ``n-1`` adjacent pairs; the mean is the full-sample
    mean and the denominator uses the first ``n-1`` observations.
    """
    v = _values(y)
    if v.size < 3:
        raise TooShortError("cls_rho needs at least three observations")
    dev = v - v.mean()
    denom = np.dot(dev[:-1], dev[:-1])
    if denom == 0:
        raise ConstantSeriesError("series is constant; rho is not identified")
    return float(np.dot(dev[:-1], dev[1:]) / denom)


def _evaluate(eps, p):
    """Log-likelihood and posterior moments sharing one Bessel evaluation."""
    eps = np.asarray(eps, dtype=float)
    root_phi, z = _bessel_argument(eps, p)
    k0e, k1e = bessel_k01e(z)
    loglik = float(np.sum(_logpdf_from_k1e(eps, p, root_phi, z, k1e)))
    moments = _moments_from_bessel(p, root_phi, z, k0e, k1e)
    return loglik, moments


def e_step(eps, p):
    """Posterior moments ``(s, w)`` of the mixing variables, one pair per residual."""
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    _, moments = _evaluate(eps, p)
    return moments.s, moments.w


def log_likelihood(eps, p):
    """Observed-data log-likelihood ``sum(nig_logpdf(eps))``; 0 for no residuals."""
    eps = np.asarray(eps, dtype=float)
    if eps.size == 0:
        return 0.0
    return float(np.sum(nig_logpdf(eps, p)))


def _weights(s, w, n):
    s = np.asarray(s, dtype=float)
    w = np.asarray(w, dtype=float)
    if s.shape != (n,) or w.shape != (n,):
        raise ParameterError(f"s and w must both have length {n}")
    s_bar = s.mean()
    w_bar = w.mean()
    if not s_bar * w_bar > 1.0:
        raise DegenerateWeightsError(
            f"mean(s)*mean(w) = {s_bar * w_bar!r} <= 1; delta update undefined"
        )
    return s, w, s_bar, w_bar


def _scale_update(s_bar, w_bar, beta, mu):
    delta = math.sqrt(s_bar / (s_bar * w_bar - 1.0))
    gamma = delta / s_bar
    if not (math.isfinite(gamma) and gamma > 0):
        logger.warning("gamma update %r outside the domain; projecting to %g", gamma, _GAMMA_FLOOR)
        gamma = _GAMMA_FLOOR
    return NigParams.from_gamma(gamma, beta, mu, delta)


def _lagged(y, n):
    v = _values(y)
    if v.size != n + 1:
        raise ParameterError(f"series must have {n + 1} values for {n} weights")
    return v[1:], v[:-1]


def m_step_joint(y, s, w, *, closed_form=False):
    """Joint M-step for ``(rho, mu, beta, delta, gamma)``.

    ``(rho, mu, beta)`` solve the score equations of the expected
    complete-data log-likelihood, a symmetric 3x3 linear system::

        [sum w x^2  sum w x  sum x] [rho ]   [sum w y x]
        [sum w x    sum w    n    ] [mu  ] = [sum w y  ]
        [sum x      n        sum s] [beta]   [sum y    ]

    with ``y = y_t`` and ``x = y_{t-1}``.  ``closed_form=True`` evaluates the
    same solution through the eliminated closed-form ratios instead; the two
    agree to rounding and the flag exists for cross-checking.
    """
    s_raw = np.asarray(s, dtype=float)
    n = s_raw.size
    yt, x = _lagged(y, n)
    s, w, s_bar, w_bar = _weights(s, w, n)
    if closed_form:
        rho, mu, beta = _joint_closed_form(yt, x, s, w)
    else:
        sum_x = x.sum()
        wx = w * x
        sum_wx = wx.sum()
        a = np.array(
            [
                [np.dot(wx, x), sum_wx, sum_x],
                [sum_wx, w.sum(), n],
                [sum_x, n, s.sum()],
            ]
        )
        rhs = np.array([np.dot(wx, yt), np.dot(w, yt), yt.sum()])
        try:
            rho, mu, beta = np.linalg.solve(a, rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError("score equations are singular") from exc
    if not all(map(math.isfinite, (rho, mu, beta))):
        raise SingularSystemError("score equations gave non-finite estimates")
    return NigArModel(float(rho), _scale_update(s_bar, w_bar, float(beta), float(mu)))


def _joint_closed_form(yt, x, s, w):
    n = yt.size
    sw, ss = w.sum(), s.sum()
    sx, sy = x.sum(), yt.sum()
    swy, swx = np.dot(w, yt), np.dot(w, x)
    swyx, swxx = np.dot(w * yt, x), np.dot(w * x, x)
    a = n * swyx - swy * sx
    b = ss * sw - n * n
    c = n * swx - sw * sx
    d = n * sy - swy * ss
    e = n * sx - swx * ss
    f = n * swxx - swx * sx
    rho = (a * b + c * d) / (c * e + f * b)
    mu = (a - rho * f) / c
    beta = (swy - rho * swx - mu * sw) / n
    return rho, mu, beta


def m_step_two_stage(y, rho_hat, s, w):
    """M-step with ``rho`` held at ``rho_hat``.

    ``beta = (rho*sum(w x) - sum(w y) + y_bar*sum(w) - rho*w_bar*sum(x)) / (s_bar*sum(w) - n)``
    and ``mu = y_bar - rho*mean(x) - beta*s_bar``, where ``y_bar`` averages
    ``y_1..y_n``; ``delta`` and ``gamma`` as in the joint step.
    """
    s_raw = np.asarray(s, dtype=float)
    n = s_raw.size
    yt, x = _lagged(y, n)
    s, w, s_bar, w_bar = _weights(s, w, n)
    rho = float(rho_hat)
    sum_w = w.sum()
    y_bar = yt.mean()
    sum_x = x.sum()
    beta = (rho * np.dot(w, x) - np.dot(w, yt) + y_bar * sum_w - rho * w_bar * sum_x) / (
        s_bar * sum_w - n
    )
    mu = y_bar - rho * sum_x / n - beta * s_bar
    return NigArModel(rho, _scale_update(s_bar, w_bar, float(beta), float(mu)))


def _moment_start(eps):
    eps = np.asarray(eps, dtype=float)
    mean = eps.mean()
    var = eps.var()
    if not var > 0:
        raise ZeroVarianceError("residuals have zero variance")
    excess = np.mean((eps - mean) ** 4) / var**2 - 3.0
    excess = max(excess, _KURTOSIS_FLOOR)
    # symmetric NIG: variance = delta/gamma, excess kurtosis = 3/(delta*gamma)
    dg = 3.0 / excess
    delta = math.sqrt(dg * var)
    gamma = math.sqrt(dg / var)
    return NigParams(gamma, 0.0, mean, delta)


def init_method_of_moments(eps):
    """Symmetric starting point matched to the residual variance and kurtosis.

    ``beta = 0``, ``mu`` is the sample mean, ``delta/gamma`` equals the sample
    variance and ``3/(delta*gamma)`` the sample excess kurtosis (floored at
    0.1); ``alpha = gamma``.
    """
    eps = np.asarray(eps, dtype=float)
    if eps.size < 4:
        raise TooShortError("method of moments needs at least four residuals")
    return _moment_start(eps)


def _relative_change(new, old):
    return abs(new - old) / (abs(old) + _DENOM_GUARD)


def _param_change(new, old):
    a, b = new.innov, old.innov
    return max(
        _relative_change(a.alpha, b.alpha),
        _relative_change(a.beta, b.beta),
        _relative_change(a.mu, b.mu),
        _relative_change(a.gamma, b.gamma),
        _relative_change(a.delta, b.delta),
    )


def _initial_model(values, cfg, rho_cls):
    if isinstance(cfg.init, NigArModel):
        rho0 = rho_cls if cfg.mode is Mode.TWO_STAGE else cfg.init.rho
        return NigArModel(rho0, cfg.init.innov)
    eps = residuals(values, rho_cls)
    return NigArModel(rho_cls, _moment_start(eps))


def em_fit(y, cfg=None):
    """Fit the NIGAR(1) model by EM.

    Parameters
    ----------
    y : TimeSeries or array_like
        Observations ``y_0..y_n``; at least three are needed.
    cfg : EmConfig, optional
        Defaults to joint updates, log-likelihood criterion, tolerance 1e-5.

    Returns
    -------
    FitReport
        Final parameters, the full iteration trace and the stop reason.

    Raises
    ------
    DegenerateWeightsError
        When the E-step weights leave the scale update undefined.
    NonFiniteLikelihoodError
        When the log-likelihood stops being finite; carries the trace so far.
    """
    cfg = cfg or EmConfig()
    values = _values(y)
    if values.size < 3:
        raise TooShortError("em_fit needs at least three observations")
    rho_cls = cls_rho(values)
    model = _initial_model(values, cfg, rho_cls)
    eps = residuals(values, model.rho)
    loglik, moments = _evaluate(eps, model.innov)
    trace = [TraceEntry(0, model, loglik)]
    if not math.isfinite(loglik):
        raise NonFiniteLikelihoodError("log-likelihood at the starting point is not finite", trace)

    stop = StopReason.MAX_ITERATIONS
    for k in range(1, cfg.max_iterations + 1):
        if cfg.mode is Mode.JOINT:
            new = m_step_joint(values, moments.s, moments.w)
        else:
            new = m_step_two_stage(values, rho_cls, moments.s, moments.w)
        eps = residuals(values, new.rho)
        new_loglik, moments = _evaluate(eps, new.innov)
        if not math.isfinite(new_loglik):
            raise NonFiniteLikelihoodError(f"log-likelihood not finite at iteration {k}", trace)
        trace.append(TraceEntry(k, new, new_loglik))
        if cfg.criterion is Criterion.LOGLIK:
            change = _relative_change(new_loglik, loglik)
        else:
            change = _param_change(new, model)
        logger.debug("iteration %d loglik %.10g change %.3e", k, new_loglik, change)
        model, loglik = new, new_loglik
        if change < cfg.tolerance:
            stop = StopReason.CONVERGED
            break

    logger.info("EM stopped after %d iterations (%s)", len(trace) - 1, stop.value)
    return FitReport(
        params=model,
        trace=trace,
        stop_reason=stop,
        criterion=cfg.criterion,
        mode=cfg.mode,
        rho_cls=rho_cls,
    )
