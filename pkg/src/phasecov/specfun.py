r"""Special functions used by the fidelity series.

Two families are provided, both in plain double precision:

* exponentially scaled modified Bessel functions of integer order,
  :math:`e^{-z} I_m(z)`, computed for a whole row of orders at once by
  backward recurrence on the ratios :math:`I_m / I_{m-1}` and normalized with
  :math:`e^{z} = I_0(z) + 2\sum_{k\ge1} I_k(z)`;
* :math:`\ln\Gamma(x)` from a Lanczos approximation (g = 7, nine coefficients),
  and :math:`\ln n!` on top of it.

The Bessel routines accept arrays of arguments so that a full optimizer grid
can be evaluated in one pass.
"""

import math

import numpy as np
from scipy.special import zeta

__all__ = [
    "scaled_bessel_i",
    "scaled_bessel_row",
    "log_gamma",
    "log_factorial",
]

_LANCZOS_G = 7.0
_LANCZOS_COEF = np.array([
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
])
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

# Taylor coefficients of ln Gamma(1 + e): -euler_gamma * e + sum_k (-1)^k zeta(k) e^k / k
_NEAR_ONE_COEF = np.array(
    [-np.euler_gamma] + [(-1) ** k * zeta(k) / k for k in range(2, 30)])
_NEAR_ROOT = 0.2

# exact ln(n!) for small n, built from integer products
_SMALL_LOG_FACT = np.array([math.log(math.factorial(n)) for n in range(21)])


def _start_order(m_max, z):
    """Order at which the backward ratio recurrence is started."""
    n0 = max(float(m_max), float(z))
    start = n0 + 10.0 * math.sqrt(n0) + 40.0
    start = max(start, m_max + 10.0 + 2.0 * math.sqrt(m_max * z))
    return int(math.ceil(start))


def scaled_bessel_row(m_max, z):
    r"""Row of exponentially scaled modified Bessel functions.

    Parameters
    ----------
    m_max : int
        Highest order returned.
    z : float or array_like
        Nonnegative argument(s).

    Returns
    -------
    numpy.ndarray
        Array of shape ``np.shape(z) + (m_max + 1,)`` holding
        :math:`e^{-z} I_m(z)` for :math:`m = 0, \dots, m_max`.
        Values below the double-precision range come back as 0.
    """
    m_max = int(m_max)
    if m_max < 0:
        raise ValueError(f"m_max must be nonnegative, got {m_max}")
    z = np.asarray(z, dtype=float)
    if np.any(z < 0) or np.any(np.isnan(z)):
        raise ValueError("scaled Bessel functions need z >= 0")

    top = _start_order(m_max, z.max() if z.size else 0.0)
    ratios = np.empty(z.shape + (top,))
    r = np.zeros_like(z)
    for m in range(top, 0, -1):
        # r_m = I_m / I_{m-1} = z / (2m + z r_{m+1}); stable downward, never overflows
        r = z / (2.0 * m + z * r)
        ratios[..., m - 1] = r

    rel = np.cumprod(ratios, axis=-1)  # I_m / I_0 for m = 1..top
    i0 = 1.0 / (1.0 + 2.0 * rel.sum(axis=-1))
    row = np.empty(z.shape + (m_max + 1,))
    row[..., 0] = i0
    row[..., 1:] = rel[..., :m_max] * i0[..., None]
    return row


def scaled_bessel_i(m, z):
    r"""Return :math:`e^{-z} I_m(z)` for integer order ``m`` and ``z >= 0``."""
    if z < 0:
        raise ValueError(f"scaled Bessel function needs z >= 0, got {z}")
    m = abs(int(m))
    return float(scaled_bessel_row(m, float(z))[m])


def _log_gamma_lanczos(x):
    # valid for x >= 0.5
    xm1 = x - 1.0
    series = np.full_like(xm1, _LANCZOS_COEF[0])
    for i in range(1, len(_LANCZOS_COEF)):
        series = series + _LANCZOS_COEF[i] / (xm1 + i)
    t = xm1 + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (xm1 + 0.5) * np.log(t) - t + np.log(series)


def log_gamma(x):
    """Natural logarithm of the gamma function for positive arguments.

    Accepts scalars or arrays. Positive integers up to 21 are returned exactly
    from the factorial table (so ``log_gamma(1) == log_gamma(2) == 0``).
    """
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0) or np.any(np.isnan(x)):
        raise ValueError("log_gamma is defined here for x > 0 only")

    out = np.empty_like(x)
    small = x < 0.5
    if np.any(small):
        xs = x[small]
        out[small] = (math.log(math.pi) - np.log(np.sin(math.pi * xs))
                      - _log_gamma_lanczos(1.0 - xs))
    big = ~small
    if np.any(big):
        out[big] = _log_gamma_lanczos(x[big])

    # cancellation near the zeros at 1 and 2
    for root in (1.0, 2.0):
        near = np.abs(x - root) < _NEAR_ROOT
        if np.any(near):
            eps = x[near] - root
            val = np.polynomial.polynomial.polyval(eps, _NEAR_ONE_COEF) * eps
            if root == 2.0:
                val = val + np.log1p(eps)
            out[near] = val

    exact = (x == np.round(x)) & (x <= 21)
    if np.any(exact):
        out[exact] = _SMALL_LOG_FACT[x[exact].astype(int) - 1]
    return float(out) if scalar else out


def log_factorial(n):
    """``ln(n!)``; exact products for ``n <= 20``, :func:`log_gamma` beyond."""
    scalar = np.ndim(n) == 0
    n = np.asarray(n)
    if np.any(n < 0):
        raise ValueError("log_factorial needs n >= 0")
    n = n.astype(int)
    out = np.empty(n.shape)
    small = n <= 20
    out[small] = _SMALL_LOG_FACT[n[small]]
    if np.any(~small):
        out[~small] = log_gamma(n[~small] + 1.0)
    return float(out) if scalar else out
