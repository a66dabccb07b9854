"""Closed-form frequency-correlation calculus for a power delay profile.

Everything here is a deterministic function of the PDP (and, for CDD, the
cyclic delays). Subcarrier offsets are reduced modulo ``n_sc`` and block
offsets modulo ``n_rb``, since both correlations are periodic.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .channel import CddConfig, PowerDelayProfile, cdd_compose_pdp
from .errors import InvalidParameterError, UnsupportedConfigurationError, UnsupportedOrderError

__all__ = [
    "CorrelationSummary",
    "DelaySpreadStats",
    "DEFAULT_KAPPA",
    "default_k_c",
    "cov_h",
    "rho_sc",
    "rho_sc_table",
    "sum_sc",
    "sum_sc_from_rho",
    "selectivity_measure",
    "rho_rb",
    "rho_rb_from_rho",
    "inter_block_sum",
    "phi_from_rho_rb",
    "correlation_summary",
    "summary_from_rho",
    "cdd_weight",
    "rho_sc_cdd",
    "rho_sc_cdd_table",
    "effective_paths_cdd",
    "rms_delay",
    "cdd_rms_delay",
    "cdd_rms_constants",
    "coherence_bandwidth_cdd",
    "tau_max",
]

DEFAULT_KAPPA = 0.9


def default_k_c(n_sc: int = 1024) -> float:
    """Coherence constant giving ``n_sc / (2 pi)`` subcarriers at a 1-sample RMS spread."""
    return 2.0 * np.pi / n_sc


@dataclass(frozen=True)
class CorrelationSummary:
    rho_sc: np.ndarray
    s_sc_intra: float
    phi: float
    eff_paths: float
    eff_blocks: float
    rho_rb: np.ndarray

    def to_dict(self, full: bool = False) -> dict:
        out = asdict(self)
        for key in ("rho_sc", "rho_rb"):
            out[key] = out[key].tolist() if full else None
        if not full:
            del out["rho_sc"], out["rho_rb"]
        return out


@dataclass(frozen=True)
class DelaySpreadStats:
    """Delay moments in samples: mean ``mu``, RMS spread, Chebyshev max spread."""

    mu: float
    tau_rms: float
    tau_max: int
    kappa: float = DEFAULT_KAPPA


# ---------------------------------------------------------------------------
# subcarrier correlation
# ---------------------------------------------------------------------------


@lru_cache(maxsize=256)
def _cov_table(pdp: PowerDelayProfile, n_sc: int) -> np.ndarray:
    if pdp.n_taps > n_sc:
        raise InvalidParameterError(f"{pdp.n_taps} taps do not fit in {n_sc} subcarriers")
    table = np.fft.fft(pdp.powers, n=n_sc)
    table.setflags(write=False)
    return table


def cov_h(pdp: PowerDelayProfile, delta_n, n_sc: int):
    """Covariance of ``H_n`` and ``H_{n + delta_n}``."""
    table = _cov_table(pdp, n_sc)
    out = table[np.mod(delta_n, n_sc)]
    return complex(out) if np.ndim(out) == 0 else out


def rho_sc_table(pdp: PowerDelayProfile, n_sc: int) -> np.ndarray:
    """SNR correlation coefficient for every offset 0..n_sc-1."""
    table = _cov_table(pdp, n_sc)
    rho = np.clip(table.real**2 + table.imag**2, 0.0, 1.0)
    rho[0] = 1.0
    return rho


def rho_sc(pdp: PowerDelayProfile, delta_n, n_sc: int):
    out = np.abs(cov_h(pdp, delta_n, n_sc)) ** 2
    out = np.minimum(out, 1.0)
    return float(out) if np.ndim(out) == 0 else out


def _check_block(block_size: int, n_sc: int) -> int:
    if block_size < 1 or n_sc % block_size:
        raise InvalidParameterError(f"block_size {block_size} does not divide n_sc {n_sc}")
    return n_sc // block_size


def sum_sc_from_rho(rho: np.ndarray, r: int, delta_b, block_size: int) -> np.ndarray | float:
    """Block sum correlation from a tabulated ``rho_sc`` (length n_sc).

    Uses the offset-count form: each in-block difference d occurs
    ``block_size - |d|`` times.
    """
    if r not in (1, 2):
        raise UnsupportedOrderError(f"order r must be 1 or 2, got {r}")
    n_sc = rho.shape[-1]
    _check_block(block_size, n_sc)
    d = np.arange(-(block_size - 1), block_size)
    weights = (block_size - np.abs(d)) / block_size**2
    db = np.asarray(delta_b)
    idx = np.mod(db[..., None] * block_size + d, n_sc)
    vals = rho[..., idx] ** r if r == 2 else rho[..., idx]
    out = vals @ weights
    return float(out) if np.ndim(out) == 0 else out


def sum_sc(pdp: PowerDelayProfile, r: int, delta_b, block_size: int, n_sc: int):
    """Average ``rho_sc**r`` over all subcarrier pairs of two blocks ``delta_b`` apart."""
    if r not in (1, 2):
        raise UnsupportedOrderError(f"order r must be 1 or 2, got {r}")
    return sum_sc_from_rho(rho_sc_table(pdp, n_sc), r, delta_b, block_size)


def selectivity_measure(pdp: PowerDelayProfile, n_sc: int, method: str = "sum") -> float:
    """Effective number of paths, the inverse whole-band sum correlation.

    ``method="sum"`` averages the tabulated correlation; ``method="closed"``
    returns ``1 / sum(alpha**4)``. They agree whenever the PDP fits in
    ``n_sc`` taps.
    """
    if method == "closed":
        return float(1.0 / np.sum(pdp.powers**2))
    if method != "sum":
        raise InvalidParameterError(f"unknown method {method!r}")
    return float(1.0 / np.mean(rho_sc_table(pdp, n_sc)))


def rho_rb_from_rho(rho: np.ndarray, delta_b, block_size: int):
    s0 = sum_sc_from_rho(rho, 1, 0, block_size)
    out = np.clip(np.asarray(sum_sc_from_rho(rho, 1, delta_b, block_size)) / s0, 0.0, 1.0)
    # zero block offset is exactly 1, not 1 up to rounding
    out = np.where(np.mod(delta_b, rho.shape[-1] // block_size) == 0, 1.0, out)
    return float(out) if np.ndim(out) == 0 else out


def rho_rb(pdp: PowerDelayProfile, delta_b, block_size: int, n_sc: int):
    """First-order correlation coefficient of block throughputs ``delta_b`` blocks apart."""
    return rho_rb_from_rho(rho_sc_table(pdp, n_sc), delta_b, block_size)


def phi_from_rho_rb(rho_rb_profile) -> float:
    """Inter-block sum correlation from a full ``rho_rb`` period (b = 0..n_rb-1)."""
    return float(np.mean(rho_rb_profile))


def inter_block_sum(pdp: PowerDelayProfile, block_size: int, n_sc: int) -> float:
    n_rb = _check_block(block_size, n_sc)
    return phi_from_rho_rb(rho_rb(pdp, np.arange(n_rb), block_size, n_sc))


def summary_from_rho(rho: np.ndarray, block_size: int) -> CorrelationSummary:
    n_sc = rho.shape[-1]
    n_rb = _check_block(block_size, n_sc)
    s_intra = sum_sc_from_rho(rho, 1, 0, block_size)
    profile = rho_rb_from_rho(rho, np.arange(n_rb), block_size)
    profile = np.atleast_1d(profile)
    phi = phi_from_rho_rb(profile)
    return CorrelationSummary(
        rho_sc=rho,
        s_sc_intra=float(s_intra),
        phi=phi,
        eff_paths=float(1.0 / np.mean(rho)),
        eff_blocks=1.0 / phi,
        rho_rb=profile,
    )


def correlation_summary(
    pdp: PowerDelayProfile, block_size: int, n_sc: int, cdd: CddConfig | None = None
) -> CorrelationSummary:
    """All correlation measures of a channel, optionally after CDD with identical antennas."""
    rho = rho_sc_table(pdp, n_sc) if cdd is None else rho_sc_cdd_table(pdp, cdd, n_sc)
    return summary_from_rho(rho, block_size)


# ---------------------------------------------------------------------------
# cyclic delay diversity
# ---------------------------------------------------------------------------


def cdd_weight(cdd: CddConfig, delta_n, n_sc: int):
    """``|mean_i exp(-j 2 pi D_i delta_n / n_sc)|**2``."""
    dn = np.mod(np.asarray(delta_n), n_sc)
    phase = np.exp(-2j * np.pi * np.multiply.outer(dn, np.asarray(cdd.delays)) / n_sc)
    w = np.abs(phase.mean(axis=-1)) ** 2
    w = np.minimum(w, 1.0)
    return float(w) if np.ndim(w) == 0 else w


def _common_pdp(pdp, cdd: CddConfig) -> PowerDelayProfile:
    if isinstance(pdp, PowerDelayProfile):
        return pdp
    pdps = list(pdp)
    if len(pdps) != cdd.n_tx:
        raise InvalidParameterError(f"got {len(pdps)} PDPs for {cdd.n_tx} antennas")
    first = pdps[0].trimmed()
    if any(p.trimmed() != first for p in pdps[1:]):
        raise UnsupportedConfigurationError(
            "per-antenna PDPs differ; compose them with cdd_compose_pdp and use rho_sc"
        )
    return pdps[0]


def rho_sc_cdd_table(pdp, cdd: CddConfig, n_sc: int) -> np.ndarray:
    pdp = _common_pdp(pdp, cdd)
    cdd.check(n_sc)
    rho = rho_sc_table(pdp, n_sc) * cdd_weight(cdd, np.arange(n_sc), n_sc)
    rho[0] = 1.0
    return rho


def rho_sc_cdd(pdp, cdd: CddConfig, delta_n, n_sc: int):
    """CDD subcarrier correlation: SISO correlation times the delay weight.

    Valid only when every antenna shares the same PDP.
    """
    pdp = _common_pdp(pdp, cdd)
    out = np.asarray(rho_sc(pdp, delta_n, n_sc)) * cdd_weight(cdd, delta_n, n_sc)
    return float(out) if np.ndim(out) == 0 else out


def effective_paths_cdd(pdp: PowerDelayProfile, delay: int, n_tx: int = 2) -> float:
    """Effective paths of a two-antenna CDD channel with identical antenna PDPs.

    Assumes the delayed copy does not wrap around the FFT window.
    """
    if n_tx != 2:
        raise UnsupportedConfigurationError("closed form exists for n_tx = 2 only")
    if delay < 0:
        raise InvalidParameterError("delay must be nonnegative")
    p = pdp.powers
    denom = np.sum(p**2)
    if delay < pdp.n_taps:
        denom += np.dot(p[delay:], p[: pdp.n_taps - delay])
    return float(2.0 / denom)


# ---------------------------------------------------------------------------
# delay spread
# ---------------------------------------------------------------------------


def tau_max(tau_rms_i: float, kappa: float = DEFAULT_KAPPA) -> int:
    """Integer delay window holding at least a ``kappa`` power fraction (Chebyshev)."""
    if not 0 < kappa < 1:
        raise InvalidParameterError(f"kappa must lie in (0, 1), got {kappa}")
    if tau_rms_i < 0:
        raise InvalidParameterError("tau_rms must be nonnegative")
    # guard against 2*tau/sqrt(1-kappa) landing a hair above an integer
    x = 2.0 * tau_rms_i / math.sqrt(1.0 - kappa)
    return int(math.ceil(x - 1e-12 * max(1.0, x))) + 1


def rms_delay(pdp: PowerDelayProfile, kappa: float = DEFAULT_KAPPA) -> DelaySpreadStats:
    p = pdp.powers
    m = np.arange(pdp.n_taps)
    mu = float(np.dot(m, p))
    var = float(np.dot((m - mu) ** 2, p))
    tau = math.sqrt(max(var, 0.0))
    return DelaySpreadStats(mu=mu, tau_rms=tau, tau_max=tau_max(tau, kappa), kappa=kappa)


def cdd_rms_constants(stats: Sequence[DelaySpreadStats]) -> tuple[float, float, float, float]:
    """Quadratic coefficients ``(a, b, c, tau_bar_sq)`` of the linear-delay RMS spread."""
    n_tx = len(stats)
    mu = np.array([s.mu for s in stats])
    tau = np.array([s.tau_rms for s in stats])
    i = np.arange(1, n_tx + 1)
    mu1 = mu.mean()
    mu_w = np.mean(i * mu)
    mu2 = np.mean(mu**2)
    a = (n_tx**2 - 1) / 12.0
    b = 2.0 * mu_w - mu1 * (n_tx + 1)
    c = mu2 - mu1**2
    return a, float(b), float(c), float(np.mean(tau**2))


def cdd_rms_delay(
    per_antenna_stats: Sequence[DelaySpreadStats], cdd: CddConfig, method: str = "general"
) -> float:
    """RMS delay spread of the CDD channel from per-antenna delay moments.

    ``method="linear"`` uses the quadratic-in-D form and requires delays
    ``(i - 1) * D``.
    """
    stats = list(per_antenna_stats)
    if len(stats) != cdd.n_tx:
        raise InvalidParameterError(f"got {len(stats)} antenna stats for {cdd.n_tx} antennas")
    if method == "general":
        mu = np.array([s.mu for s in stats]) + np.array(cdd.delays)
        tau = np.array([s.tau_rms for s in stats])
        var = np.mean(tau**2 + mu**2) - np.mean(mu) ** 2
    elif method == "linear":
        step = cdd.delays[1] if cdd.n_tx > 1 else 0
        if tuple(cdd.delays) != CddConfig.linear(step, cdd.n_tx).delays:
            raise UnsupportedConfigurationError("linear form needs delays (i - 1) * D")
        a, b, c, tbar2 = cdd_rms_constants(stats)
        var = a * step**2 + b * step + c + tbar2
    else:
        raise InvalidParameterError(f"unknown method {method!r}")
    return math.sqrt(max(float(var), 0.0))


def coherence_bandwidth_cdd(tau_rms_cdd: float, k_c: float | None = None, n_sc: int = 1024) -> float:
    """Coherence bandwidth ``1 / (k_c * tau)`` in subcarriers; ``inf`` for a flat channel."""
    if k_c is None:
        k_c = default_k_c(n_sc)
    if not k_c > 0:
        raise InvalidParameterError(f"k_c must be positive, got {k_c}")
    if tau_rms_cdd <= 0:
        return math.inf
    return 1.0 / (k_c * tau_rms_cdd)
