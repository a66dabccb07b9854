"""Multipath Rayleigh channels on an OFDM grid, with cyclic delay diversity.

Tap spacing is one sample (T / n_sc), so every delay in this module is an
integer sample count. Random draws use ``numpy.random.default_rng`` (PCG64);
a complex gain is built from two independent N(0, 1/2) components, real part
drawn first.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidParameterError

__all__ = [
    "PowerDelayProfile",
    "OfdmConfig",
    "CddConfig",
    "ChannelRealization",
    "FrequencyResponse",
    "make_exponential_pdp",
    "exponential_pdp_for_eff_paths",
    "uniform_pdp",
    "sample_taps",
    "sample_channel",
    "freq_response",
    "snr_grid",
    "cdd_compose_pdp",
    "cdd_compose_taps",
    "cdd_freq_response",
]

POWER_TOL = 1e-12
# fraction of the untruncated exponential power kept by make_exponential_pdp
EXP_PDP_CAPTURE = 0.9999


@dataclass(frozen=True)
class PowerDelayProfile:
    """Per-tap average amplitude gains ``alpha_m`` with unit total power.

    Tap ``m`` (0-based) sits at a delay of ``m`` samples.
    """

    gains: np.ndarray

    def __post_init__(self):
        gains = np.asarray(self.gains, dtype=float).ravel()
        if gains.size < 1:
            raise InvalidParameterError("a PDP needs at least one tap")
        if np.any(gains < 0) or not np.all(np.isfinite(gains)):
            raise InvalidParameterError("PDP gains must be finite and nonnegative")
        total = float(np.sum(gains**2))
        if abs(total - 1.0) > POWER_TOL:
            raise InvalidParameterError(
                f"PDP power must sum to 1 (got {total!r}); use PowerDelayProfile.from_powers"
            )
        gains.setflags(write=False)
        object.__setattr__(self, "gains", gains)

    @classmethod
    def from_powers(cls, powers) -> "PowerDelayProfile":
        """Build a profile from unnormalized per-tap powers ``alpha_m**2``."""
        powers = np.asarray(powers, dtype=float).ravel()
        if powers.size < 1 or np.any(powers < 0) or not np.all(np.isfinite(powers)):
            raise InvalidParameterError("tap powers must be finite, nonnegative and nonempty")
        total = powers.sum()
        if total <= 0:
            raise InvalidParameterError("tap powers sum to zero")
        return cls(np.sqrt(powers / total))

    @classmethod
    def from_gains(cls, gains) -> "PowerDelayProfile":
        """Build a profile from unnormalized amplitude gains."""
        gains = np.asarray(gains, dtype=float)
        if np.any(gains < 0):
            raise InvalidParameterError("amplitude gains must be nonnegative")
        return cls.from_powers(gains**2)

    @property
    def powers(self) -> np.ndarray:
        return self.gains**2

    @property
    def n_taps(self) -> int:
        return self.gains.size

    def trimmed(self) -> "PowerDelayProfile":
        """Drop trailing zero-power taps (keeps at least one tap)."""
        nz = np.flatnonzero(self.gains > 0)
        last = nz[-1] + 1 if nz.size else 1
        return PowerDelayProfile(self.gains[:last]) if last < self.n_taps else self

    def __eq__(self, other):
        if not isinstance(other, PowerDelayProfile):
            return NotImplemented
        return np.array_equal(self.gains, other.gains)

    def __hash__(self):
        return hash(self.gains.tobytes())


@dataclass(frozen=True)
class OfdmConfig:
    """Subcarrier grid: ``n_sc`` subcarriers split into blocks of ``block_size``.

    ``snr_scale`` is the linear ratio P / sigma_w**2, i.e. the mean SNR.
    """

    n_sc: int = 1024
    block_size: int = 32
    snr_scale: float = 1.0

    def __post_init__(self):
        if self.n_sc < 1 or self.n_sc & (self.n_sc - 1):
            raise InvalidParameterError(f"n_sc must be a power of two, got {self.n_sc}")
        if self.block_size < 1 or self.n_sc % self.block_size:
            raise InvalidParameterError(
                f"block_size {self.block_size} does not divide n_sc {self.n_sc}"
            )
        if not self.snr_scale > 0:
            raise InvalidParameterError(f"snr_scale must be positive, got {self.snr_scale}")

    @property
    def n_rb(self) -> int:
        return self.n_sc // self.block_size


@dataclass(frozen=True)
class CddConfig:
    """Cyclic delays per transmit antenna; the first antenna is never delayed."""

    delays: tuple[int, ...] = (0,)

    def __post_init__(self):
        delays = tuple(int(d) for d in self.delays)
        if len(delays) < 1:
            raise InvalidParameterError("need at least one transmit antenna")
        if delays[0] != 0:
            raise InvalidParameterError("the first antenna's cyclic delay must be 0")
        if any(d < 0 for d in delays):
            raise InvalidParameterError("cyclic delays must be nonnegative")
        object.__setattr__(self, "delays", delays)

    @classmethod
    def linear(cls, delay: int, n_tx: int = 2) -> "CddConfig":
        """Delays ``(i - 1) * delay`` for antennas ``i = 1..n_tx``."""
        if n_tx < 1:
            raise InvalidParameterError(f"n_tx must be >= 1, got {n_tx}")
        return cls(tuple(i * int(delay) for i in range(n_tx)))

    @property
    def n_tx(self) -> int:
        return len(self.delays)

    def check(self, n_sc: int) -> None:
        if max(self.delays) > n_sc - 1:
            raise InvalidParameterError(f"cyclic delays must lie in [0, {n_sc - 1}]")


@dataclass(frozen=True)
class ChannelRealization:
    """Complex tap values ``alpha_m * h_m``; the last axis indexes taps.

    Leading axes (antennas, users, trials) are allowed.
    """

    taps: np.ndarray
    rng_seed: int | None = None


@dataclass(frozen=True)
class FrequencyResponse:
    """``H_n`` for n = 0..n_sc-1 along the last axis."""

    values: np.ndarray

    @property
    def n_sc(self) -> int:
        return self.values.shape[-1]


def make_exponential_pdp(tau_o: float, max_taps: int = 64) -> PowerDelayProfile:
    """Exponential profile ``alpha_m ~ exp(-m / tau_o)``, m = 1..L.

    L is the smaller of ``max_taps`` and the shortest length holding 99.99 %
    of the untruncated power.
    """
    if not tau_o > 0:
        raise InvalidParameterError(f"tau_o must be positive, got {tau_o}")
    if max_taps < 1:
        raise InvalidParameterError(f"max_taps must be >= 1, got {max_taps}")
    # power ratio between neighbouring taps is exp(-2 / tau_o); the tail beyond
    # L taps holds a fraction r**L of the infinite-sum power.
    log_r = -2.0 / tau_o
    n_keep = int(np.ceil(np.log1p(-EXP_PDP_CAPTURE) / log_r - 1e-12))
    n_taps = int(min(max_taps, max(n_keep, 1)))
    m = np.arange(n_taps)
    # shifting the exponent by one tap cancels in the normalization
    return PowerDelayProfile.from_powers(np.exp(log_r * m))


def exponential_pdp_for_eff_paths(
    target: float, max_taps: int = 64, tol: float = 1e-6
) -> PowerDelayProfile:
    """Exponential PDP whose effective path count ``1 / sum(alpha**4)`` hits ``target``.

    Bisects on ``log(tau_o)``. Targets at or above ``max_taps`` return the
    uniform profile, the exponential family's flat-decay limit.
    """
    if not 1.0 <= target:
        raise InvalidParameterError(f"effective path count must be >= 1, got {target}")
    if target >= max_taps:
        return uniform_pdp(max_taps)

    def eff(log_tau):
        p = make_exponential_pdp(float(np.exp(log_tau)), max_taps).powers
        return 1.0 / np.sum(p**2)

    lo, hi = np.log(1e-3), np.log(1e7)
    if eff(lo) >= target:
        return make_exponential_pdp(float(np.exp(lo)), max_taps)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        val = eff(mid)
        if abs(val - target) <= tol * target:
            break
        if val < target:
            lo = mid
        else:
            hi = mid
    return make_exponential_pdp(float(np.exp(mid)), max_taps)


def uniform_pdp(n_taps: int) -> PowerDelayProfile:
    if n_taps < 1:
        raise InvalidParameterError("n_taps must be >= 1")
    return PowerDelayProfile(np.full(n_taps, np.sqrt(1.0 / n_taps)))


def sample_taps(pdp: PowerDelayProfile, rng: np.random.Generator, size=()) -> np.ndarray:
    """Draw ``alpha_m * h_m`` with h_m iid CN(0, 1); output shape ``size + (L,)``."""
    shape = tuple(np.atleast_1d(size)) if size != () else ()
    shape = shape + (pdp.n_taps,)
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return pdp.gains * (re + 1j * im) * np.sqrt(0.5)


def sample_channel(pdp: PowerDelayProfile, rng, size=()) -> ChannelRealization:
    """One Rayleigh draw (or a batch) for ``pdp``.

    ``rng`` may be an integer seed or a ``numpy.random.Generator``.
    """
    seed = None
    if not isinstance(rng, np.random.Generator):
        seed = int(rng)
        rng = np.random.default_rng(seed)
    return ChannelRealization(sample_taps(pdp, rng, size), rng_seed=seed)


def _as_taps(ch) -> np.ndarray:
    return np.asarray(ch.taps if isinstance(ch, ChannelRealization) else ch)


def freq_response(ch, cfg: OfdmConfig | int, method: str = "fft") -> FrequencyResponse:
    """``H_n = sum_m taps_m exp(-j 2 pi m n / n_sc)``.

    ``method="fft"`` zero-pads and transforms; ``method="direct"`` evaluates
    the sum explicitly (slow, used for cross-checking).
    """
    n_sc = cfg.n_sc if isinstance(cfg, OfdmConfig) else int(cfg)
    taps = _as_taps(ch)
    n_taps = taps.shape[-1]
    if n_taps > n_sc:
        raise InvalidParameterError(f"{n_taps} taps do not fit in {n_sc} subcarriers")
    if method == "fft":
        values = np.fft.fft(taps, n=n_sc, axis=-1)
    elif method == "direct":
        n = np.arange(n_sc)
        m = np.arange(n_taps)
        kernel = np.exp(-2j * np.pi * np.outer(m, n) / n_sc)
        values = taps @ kernel
    else:
        raise InvalidParameterError(f"unknown method {method!r}")
    return FrequencyResponse(values)


def snr_grid(fr: FrequencyResponse | np.ndarray, cfg: OfdmConfig) -> np.ndarray:
    values = fr.values if isinstance(fr, FrequencyResponse) else np.asarray(fr)
    return cfg.snr_scale * np.abs(values) ** 2


def _check_antennas(n_items: int, cdd: CddConfig, what: str) -> None:
    if n_items != cdd.n_tx:
        raise InvalidParameterError(f"got {n_items} {what} for {cdd.n_tx} transmit antennas")


def cdd_compose_pdp(
    pdps: Sequence[PowerDelayProfile], cdd: CddConfig, cfg: OfdmConfig | int
) -> PowerDelayProfile:
    """Equivalent single-antenna profile of a CDD transmission.

    The power at delay d is the antenna average of ``alpha_{i, (d - D_i) mod n_sc}**2``.
    Trailing empty taps are dropped.
    """
    n_sc = cfg.n_sc if isinstance(cfg, OfdmConfig) else int(cfg)
    _check_antennas(len(pdps), cdd, "PDPs")
    cdd.check(n_sc)
    power = np.zeros(n_sc)
    for pdp, delay in zip(pdps, cdd.delays):
        if pdp.n_taps > n_sc:
            raise InvalidParameterError("PDP longer than the subcarrier count")
        idx = (np.arange(pdp.n_taps) + delay) % n_sc
        np.add.at(power, idx, pdp.powers)
    return PowerDelayProfile.from_powers(power / cdd.n_tx).trimmed()


def cdd_compose_taps(taps: np.ndarray, cdd: CddConfig, n_sc: int) -> np.ndarray:
    """Time-domain CDD channel of length ``n_sc`` from per-antenna taps.

    ``taps`` has the antenna axis second to last: shape ``(..., n_tx, L)``.
    """
    taps = np.asarray(taps)
    _check_antennas(taps.shape[-2], cdd, "antenna tap sets")
    cdd.check(n_sc)
    n_taps = taps.shape[-1]
    out = np.zeros(taps.shape[:-2] + (n_sc,), dtype=complex)
    for i, delay in enumerate(cdd.delays):
        idx = (np.arange(n_taps) + delay) % n_sc
        # idx has no repeats within one antenna, so fancy-index addition is safe
        out[..., idx] += taps[..., i, :]
    return out / np.sqrt(cdd.n_tx)


def cdd_freq_response(
    frs: Sequence[FrequencyResponse] | np.ndarray, cdd: CddConfig, cfg: OfdmConfig | int
) -> FrequencyResponse:
    """Superpose per-antenna responses with cyclic-delay phase ramps."""
    n_sc = cfg.n_sc if isinstance(cfg, OfdmConfig) else int(cfg)
    if isinstance(frs, np.ndarray):
        stack = frs
    else:
        stack = np.stack([f.values if isinstance(f, FrequencyResponse) else f for f in frs], axis=-2)
    _check_antennas(stack.shape[-2], cdd, "frequency responses")
    cdd.check(n_sc)
    n = np.arange(n_sc)
    ramps = np.exp(-2j * np.pi * np.outer(cdd.delays, n) / n_sc)
    return FrequencyResponse((stack * ramps).sum(axis=-2) / np.sqrt(cdd.n_tx))
