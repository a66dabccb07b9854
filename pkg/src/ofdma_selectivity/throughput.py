"""Moments of the block average throughput and approximations of its maximum.

Block throughput is ``C_b = mean_n log2(1 + gamma_n)`` over one block, with
exponentially distributed ``gamma_n`` of mean ``snr_scale``. Variances come
from first- and second-order Taylor (delta-method) expansions of
``log2(1 + gamma)`` about the mean SNR.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidParameterError

__all__ = [
    "CbMoments",
    "exp_integral_e1",
    "mean_cb",
    "var_gamma_ratio",
    "delta_coefficients",
    "var_cb_first_order",
    "var_cb_second_order",
    "cb_moments",
    "max_cb_os_bound",
    "max_cb_gaussian",
    "os_gain_factor",
    "gaussian_gain_factor",
]

_EULER_GAMMA = 0.57721566490153286061
_LN2 = math.log(2.0)
_EPS = 1e-16


def _e1_series(x: float) -> float:
    # E1(x) = -gamma - ln x + sum_{k>=1} (-1)^{k+1} x^k / (k k!)
    total = 0.0
    term = 1.0
    k = 1
    while True:
        term *= -x / k
        contrib = -term / k
        total += contrib
        if abs(contrib) < _EPS * abs(total):
            break
        k += 1
        if k > 500:
            break
    return -_EULER_GAMMA - math.log(x) + total


def _e1_scaled_cf(x: float) -> float:
    # exp(x) * E1(x) via the modified Lentz continued fraction
    tiny = 1e-300
    b = x + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 1000):
        a = -float(i * i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h


def exp_integral_e1(x: float, scaled: bool = False) -> float:
    """Exponential integral ``E1(x) = int_1^inf exp(-x t) / t dt`` for ``x > 0``.

    With ``scaled=True`` returns ``exp(x) * E1(x)``, which stays finite for
    large ``x``. Power series below x = 1, continued fraction above.
    """
    x = float(x)
    if not x > 0:
        raise InvalidParameterError(f"E1 is defined here for x > 0, got {x}")
    if x <= 1.0:
        val = _e1_series(x)
        return val * math.exp(x) if scaled else val
    val = _e1_scaled_cf(x)
    return val if scaled else val * math.exp(-x)


def mean_cb(snr_scale: float) -> float:
    """``E[log2(1 + gamma)]`` for exponential ``gamma`` with mean ``snr_scale``."""
    if not snr_scale > 0:
        raise InvalidParameterError(f"snr_scale must be positive, got {snr_scale}")
    return exp_integral_e1(1.0 / snr_scale, scaled=True) / _LN2


def var_gamma_ratio(snr_scale: float) -> float:
    """``V1 = Var[gamma] / ((1 + E[gamma]) ln 2)**2`` with ``Var[gamma] = E[gamma]**2``."""
    g = float(snr_scale)
    return (g / ((1.0 + g) * _LN2)) ** 2


def delta_coefficients(snr_scale: float, second_order: bool = True) -> tuple[float, float, float]:
    """Coefficients ``(A1, A2, A3)`` of ``log2(1 + gamma) ~ A1 + A2 gamma + A3 gamma**2``.

    ``second_order=False`` drops the quadratic Taylor term entirely, leaving
    the first-order (linear) expansion.
    """
    g = float(snr_scale)
    a2 = 1.0 / ((1.0 + g) * _LN2)
    a1 = math.log2(1.0 + g) - g * a2
    a3 = 0.0
    if second_order:
        q = 1.0 / (2.0 * (1.0 + g) ** 2 * _LN2)
        a1 -= g * g * q
        a2 += 2.0 * g * q
        a3 = -q
    return a1, a2, a3


def var_cb_first_order(snr_scale: float, s_sc_intra: float) -> float:
    if not 0.0 <= s_sc_intra <= 1.0 + 1e-12:
        raise InvalidParameterError(f"s_sc_intra must lie in [0, 1], got {s_sc_intra}")
    return var_gamma_ratio(snr_scale) * s_sc_intra


def _second_order_b(snr_scale: float, second_order: bool = True) -> tuple[float, float]:
    g = float(snr_scale)
    _, a2, a3 = delta_coefficients(g, second_order)
    b1 = g**2 * (a2**2 + 8.0 * a2 * a3 * g + 16.0 * a3**2 * g**2)
    b2 = 4.0 * a3**2 * g**4
    return b1, b2


def var_cb_second_order(snr_scale: float, s_sc_1: float, s_sc_2: float) -> float:
    """Block throughput variance from the quadratic expansion.

    ``s_sc_1`` and ``s_sc_2`` are the intra-block sums of ``rho`` and
    ``rho**2``. Uses ``Cov(g, g'^2) = 4 gbar^3 rho`` and
    ``Cov(g^2, g'^2) = 4 gbar^4 (4 rho + rho^2)`` for exponential SNRs.
    """
    if s_sc_2 > s_sc_1 + 1e-12:
        raise InvalidParameterError("s_sc_2 cannot exceed s_sc_1")
    b1, b2 = _second_order_b(snr_scale)
    return max(b1 * s_sc_1 + b2 * s_sc_2, 0.0)


@dataclass(frozen=True)
class CbMoments:
    mean: float
    var_fo: float
    var_so: float
    e1: float
    v1: float
    s_sc_intra: float


def cb_moments(snr_scale: float, s_sc_intra: float, s_sc_2: float | None = None) -> CbMoments:
    """Bundle mean and both variance approximations of ``C_b``.

    When ``s_sc_2`` is omitted the second-order variance falls back to the
    first-order one.
    """
    e1 = mean_cb(snr_scale)
    v1 = var_gamma_ratio(snr_scale)
    var_fo = var_cb_first_order(snr_scale, s_sc_intra)
    var_so = var_fo if s_sc_2 is None else var_cb_second_order(snr_scale, s_sc_intra, s_sc_2)
    return CbMoments(mean=e1, var_fo=var_fo, var_so=var_so, e1=e1, v1=v1, s_sc_intra=s_sc_intra)


def _check_phi(phi: float) -> float:
    if not 0.0 < phi <= 1.0 + 1e-12:
        raise InvalidParameterError(f"phi must lie in (0, 1], got {phi}")
    return min(float(phi), 1.0)


def os_gain_factor(phi: float) -> float:
    """``(N - 1) / sqrt(2N - 1)`` at the real-valued effective block count ``N = 1/phi``."""
    n = 1.0 / _check_phi(phi)
    return (n - 1.0) / math.sqrt(2.0 * n - 1.0)


def gaussian_gain_factor(phi: float) -> float:
    """``sqrt(2 ln N)`` at ``N = 1/phi``."""
    return math.sqrt(2.0 * math.log(1.0 / _check_phi(phi)))


def max_cb_os_bound(moments: CbMoments, phi: float, second_order: bool = False) -> float:
    """Order-statistics estimate of ``E[max_b C_b]`` with ``1/phi`` effective blocks."""
    var = moments.var_so if second_order else moments.var_fo
    return moments.e1 + os_gain_factor(phi) * math.sqrt(var)


def max_cb_gaussian(
    moments: CbMoments, s_sc_intra: float | None = None, phi: float = 1.0, second_order: bool = False
) -> float:
    """Gaussian (extreme-value) approximation of ``E[max_b C_b]``."""
    if second_order:
        var = moments.var_so
    else:
        s = moments.s_sc_intra if s_sc_intra is None else s_sc_intra
        var = moments.v1 * s
    return moments.e1 + gaussian_gain_factor(phi) * math.sqrt(var)
