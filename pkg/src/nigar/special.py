"""Modified Bessel functions of the third kind, K_nu, for integer orders.

K_0 and K_1 are evaluated together:

* ``x <= 2``: the ascending power series (A&S 9.6.11 with n = 0, 1).
* ``x > 2``: Chebyshev expansions in ``u = 4/x - 1`` of the scaled
  functions ``sqrt(x) exp(x) K_nu(x)``, nu = 0, 1.  The expansion
  coefficients are interpolated once, at import, from Steed's continued
  fraction (Thompson & Barnett), which is exact to rounding for x > 2 but
  too slow to run on every E-step.  Neither path forms ``exp(-x)``, so the
  scaled values stay finite for arguments far beyond 700.

Higher orders come from the forward recurrence
``K_{n+1}(x) = K_{n-1}(x) + (2n/x) K_n(x)``, which is stable for K in the
increasing-order direction. Negative orders use ``K_{-n} = K_n``.
"""

import math

import numpy as np
from numpy.polynomial import chebyshev

from .errors import DomainError

__all__ = ["bessel_k", "bessel_ke", "log_bessel_k", "bessel_k01e"]

_EULER_GAMMA = 0.57721566490153286061
_SERIES_TERMS = 20
_SERIES_SWITCH = 2.0
_CF_EPS = 1e-16
_CF_MAXIT = 10_000
_CHEB_DEGREE = 26


def _series_coefficients():
    # t^k / (k!)^2, H_k, and t^k / (k! (k+1)!) prefactors, k = 0.._SERIES_TERMS-1
    inv_fact_sq = np.empty(_SERIES_TERMS)
    inv_fact_fact1 = np.empty(_SERIES_TERMS)
    harmonic = np.empty(_SERIES_TERMS)
    h = 0.0
    for k in range(_SERIES_TERMS):
        if k:
            h += 1.0 / k
        harmonic[k] = h
        inv_fact_sq[k] = 1.0 / math.factorial(k) ** 2
        inv_fact_fact1[k] = 1.0 / (math.factorial(k) * math.factorial(k + 1))
    # psi(k+1) + psi(k+2) = 2 H_k + 1/(k+1) - 2 gamma
    psi_pair = 2.0 * harmonic + 1.0 / np.arange(1, _SERIES_TERMS + 1) - 2.0 * _EULER_GAMMA
    return inv_fact_sq, inv_fact_fact1, harmonic, psi_pair


_INV_FACT_SQ, _INV_FACT_FACT1, _HARMONIC, _PSI_PAIR = _series_coefficients()


def _k01_series(x):
    """Unscaled K_0, K_1 by power series; accurate for 0 < x <= 2."""
    t = 0.25 * x * x
    powers = t[:, None] ** np.arange(_SERIES_TERMS)
    i0 = powers @ _INV_FACT_SQ
    i1 = 0.5 * x * (powers @ _INV_FACT_FACT1)
    log_half = np.log(0.5 * x)
    k0 = -(log_half + _EULER_GAMMA) * i0 + powers @ (_HARMONIC * _INV_FACT_SQ)
    with np.errstate(over="ignore", divide="ignore"):
        k1 = 1.0 / x + log_half * i1 - 0.25 * x * (powers @ (_PSI_PAIR * _INV_FACT_FACT1))
    return k0, k1


def _k01e_continued_fraction(x):
    """Scaled exp(x) K_0, exp(x) K_1 by Steed's CF2; intended for x > 2.

    Lanes that have converged are dropped from the working set, so the cost
    is driven by the smallest arguments rather than paid by every lane.
    """
    a1 = 0.25
    s_out = np.empty_like(x)
    h_out = np.empty_like(x)
    idx = np.arange(x.size)
    xs = x
    b = 2.0 * (1.0 + xs)
    d = 1.0 / b
    h = d.copy()
    delh = d.copy()
    q1 = np.zeros_like(xs)
    q2 = np.ones_like(xs)
    q = np.full_like(xs, a1)
    c = np.full_like(xs, a1)
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, _CF_MAXIT):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1 = q2
        q2 = qnew
        q = q + c * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h = h + delh
        dels = q * delh
        s = s + dels
        done = np.abs(dels) < _CF_EPS * np.abs(s)
        if done.any():
            s_out[idx[done]] = s[done]
            h_out[idx[done]] = h[done]
            keep = ~done
            if not keep.any():
                break
            idx, b, d, h, delh = idx[keep], b[keep], d[keep], h[keep], delh[keep]
            q1, q2, q, c, s = q1[keep], q2[keep], q[keep], c[keep], s[keep]
    else:  # pragma: no cover - CF2 converges in tens of steps for x > 2
        raise ArithmeticError("Bessel continued fraction failed to converge")
    k0e = np.sqrt(np.pi / (2.0 * x)) / s_out
    k1e = k0e * (x + 0.5 - a1 * h_out) / x
    return k0e, k1e


def _chebyshev_tables():
    nodes = np.cos(np.pi * (np.arange(_CHEB_DEGREE + 1) + 0.5) / (_CHEB_DEGREE + 1))
    x = 4.0 / (nodes + 1.0)
    k0e, k1e = _k01e_continued_fraction(x)
    root = np.sqrt(x)
    return (
        chebyshev.chebfit(nodes, k0e * root, _CHEB_DEGREE),
        chebyshev.chebfit(nodes, k1e * root, _CHEB_DEGREE),
    )


_CHEB_K0E, _CHEB_K1E = _chebyshev_tables()


def _k01e_chebyshev(x):
    u = 4.0 / x - 1.0
    root = np.sqrt(x)
    return chebyshev.chebval(u, _CHEB_K0E) / root, chebyshev.chebval(u, _CHEB_K1E) / root


def _as_positive_array(x):
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr <= 0):
        raise DomainError("Bessel K requires x > 0")
    return arr


def _integer_order(nu):
    order = abs(float(nu))
    if order != math.floor(order):
        raise DomainError(f"only integer orders are supported, got {nu!r}")
    return int(order)


def bessel_k01e(x):
    """Return ``(exp(x) K_0(x), exp(x) K_1(x))`` for positive ``x`` (arrays allowed)."""
    arr = _as_positive_array(x)
    flat = np.atleast_1d(arr).ravel()
    k0e = np.empty_like(flat)
    k1e = np.empty_like(flat)
    small = flat <= _SERIES_SWITCH
    if small.any():
        xs = flat[small]
        k0, k1 = _k01_series(xs)
        scale = np.exp(xs)
        k0e[small] = k0 * scale
        k1e[small] = k1 * scale
    if (~small).any():
        k0e[~small], k1e[~small] = _k01e_chebyshev(flat[~small])
    if arr.ndim == 0:
        return float(k0e[0]), float(k1e[0])
    return k0e.reshape(arr.shape), k1e.reshape(arr.shape)


def bessel_ke(nu, x):
    """Exponentially scaled Bessel function ``exp(x) * K_nu(x)``.

    Parameters
    ----------
    nu : int
        Order; the sign is ignored (``K_{-nu} = K_nu``).
    x : float or array_like
        Positive argument.
    """
    n = _integer_order(nu)
    arr = _as_positive_array(x)
    k_prev, k_cur = bessel_k01e(arr)
    if n == 0:
        return k_prev
    with np.errstate(over="ignore"):
        for j in range(1, n):
            k_prev, k_cur = k_cur, k_prev + (2.0 * j / arr) * k_cur
    if np.any(np.isinf(k_cur)):
        raise OverflowError(f"K_{n}(x) exceeds the double-precision range")
    return k_cur


def bessel_k(nu, x):
    """Modified Bessel function of the third kind ``K_nu(x)``.

    Raises :class:`~nigar.errors.DomainError` for ``x <= 0`` and
    :class:`OverflowError` when the value is not representable.
    Underflow for large ``x`` returns 0; use :func:`log_bessel_k` there.
    """
    arr = _as_positive_array(x)
    ke = bessel_ke(nu, arr)
    with np.errstate(under="ignore"):
        out = ke * np.exp(-arr)
    return float(out) if np.ndim(out) == 0 else out


def log_bessel_k(nu, x):
    """Natural log of ``K_nu(x)`` without forming K_nu itself.

    Works on the scaled pair and accumulates the order recurrence as
    log-ratios ``K_{j+1}/K_j = K_{j-1}/K_j + 2j/x``, so neither the
    ``exp(-x)`` underflow at large ``x`` nor the ``x**-nu`` overflow at tiny
    ``x`` is ever formed.
    """
    n = _integer_order(nu)
    arr = _as_positive_array(x)
    k0e, k1e = bessel_k01e(arr)
    out = np.log(k0e) - arr
    if n >= 1:
        ratio = np.asarray(k1e / k0e)
        out = out + np.log(ratio)
        for j in range(1, n):
            ratio = 1.0 / ratio + 2.0 * j / arr
            out = out + np.log(ratio)
    if not np.all(np.isfinite(out)):
        raise OverflowError(f"log K_{n}(x) is not representable")
    return float(out) if np.ndim(out) == 0 else out
