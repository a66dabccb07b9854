"""Monte Carlo ground truth: block throughputs, best-N feedback, PF scheduling.

Channels are drawn independently for every slot (block fading). The PF
average throughput ``T_k`` is updated after each of the ``n_rb`` assignments
within a slot, for all users, with window ``t_c``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numba
import numpy as np

from .channel import (
    CddConfig,
    OfdmConfig,
    PowerDelayProfile,
    cdd_compose_taps,
    sample_taps,
)
from .errors import InvalidParameterError
from .throughput import mean_cb

__all__ = [
    "OUTAGE",
    "ChannelSpec",
    "FeedbackReport",
    "SchedulerState",
    "SlotAssignment",
    "CampaignStats",
    "block_throughputs",
    "make_feedback",
    "init_state",
    "ewma_update",
    "pf_schedule_slot",
    "run_campaign",
    "empirical_max_cb",
]

OUTAGE = -1
OUTAGE_POLICIES = ("skip", "round_robin")


@dataclass(frozen=True)
class ChannelSpec:
    """Per-antenna PDPs plus cyclic delays; a single antenna means plain SISO."""

    pdps: tuple[PowerDelayProfile, ...]
    cdd: CddConfig = CddConfig()

    def __post_init__(self):
        if len(self.pdps) != self.cdd.n_tx:
            raise InvalidParameterError(
                f"{len(self.pdps)} PDPs given for {self.cdd.n_tx} transmit antennas"
            )

    @classmethod
    def siso(cls, pdp: PowerDelayProfile) -> "ChannelSpec":
        return cls((pdp,))

    @classmethod
    def with_cdd(cls, pdp: PowerDelayProfile, delay: int, n_tx: int = 2) -> "ChannelSpec":
        """Identical antenna PDPs with linear delays ``(i - 1) * delay``."""
        return cls((pdp,) * n_tx, CddConfig.linear(delay, n_tx))

    @property
    def n_tx(self) -> int:
        return self.cdd.n_tx

    def draw_response(self, rng: np.random.Generator, size: tuple[int, ...], n_sc: int) -> np.ndarray:
        """Frequency responses with shape ``size + (n_sc,)``.

        Each antenna's taps are drawn in order, so for a fixed seed the
        per-antenna fades do not depend on the cyclic delays.
        """
        n_taps = max(p.n_taps for p in self.pdps)
        taps = np.zeros(size + (self.n_tx, n_taps), dtype=complex)
        for i, pdp in enumerate(self.pdps):
            taps[..., i, : pdp.n_taps] = sample_taps(pdp, rng, size)
        if self.n_tx == 1:
            return np.fft.fft(taps[..., 0, :], n=n_sc, axis=-1)
        return np.fft.fft(cdd_compose_taps(taps, self.cdd, n_sc), axis=-1)


def _as_spec(channel) -> ChannelSpec:
    if isinstance(channel, ChannelSpec):
        return channel
    if isinstance(channel, PowerDelayProfile):
        return ChannelSpec.siso(channel)
    raise InvalidParameterError(f"expected a PowerDelayProfile or ChannelSpec, got {type(channel)!r}")


def block_throughputs(snrs, cfg: OfdmConfig) -> np.ndarray:
    """Block average throughput ``mean log2(1 + gamma_n)`` per block; last axis is blocks."""
    snrs = np.asarray(snrs, dtype=float)
    if snrs.shape[-1] != cfg.n_sc:
        raise InvalidParameterError(f"expected {cfg.n_sc} subcarriers, got {snrs.shape[-1]}")
    rate = np.log2(1.0 + snrs)
    return rate.reshape(snrs.shape[:-1] + (cfg.n_rb, cfg.block_size)).mean(axis=-1)


@dataclass(frozen=True)
class FeedbackReport:
    """Best-``n_fb`` (block, throughput) pairs of one user, best first."""

    user_id: int
    entries: tuple[tuple[int, float], ...]

    def __post_init__(self):
        if len(self.entries) < 1:
            raise InvalidParameterError("a feedback report needs at least one entry")
        for (b1, v1), (b2, v2) in zip(self.entries, self.entries[1:]):
            if v2 > v1 or (v2 == v1 and b2 < b1):
                raise InvalidParameterError("feedback entries must be sorted best first")


def make_feedback(c_row, n_fb: int, user_id: int = 0) -> FeedbackReport:
    """Report the ``n_fb`` largest block throughputs; ties go to the lower block index."""
    c_row = np.asarray(c_row, dtype=float)
    if not 1 <= n_fb:
        raise InvalidParameterError(f"n_fb must be >= 1, got {n_fb}")
    order = np.argsort(-c_row, kind="stable")[: min(n_fb, c_row.size)]
    return FeedbackReport(user_id, tuple((int(b), float(c_row[b])) for b in order))


def _report_mask(c: np.ndarray, n_fb: int) -> np.ndarray:
    """Boolean (..., K, n_rb) mask of reported blocks, same tie rule as make_feedback."""
    n_rb = c.shape[-1]
    if n_fb >= n_rb:
        return np.ones(c.shape, dtype=bool)
    if n_fb == 1:
        mask = np.zeros(c.shape, dtype=bool)
        np.put_along_axis(mask, np.argmax(c, axis=-1)[..., None], True, axis=-1)
        return mask
    order = np.argsort(-c, axis=-1, kind="stable")[..., :n_fb]
    mask = np.zeros(c.shape, dtype=bool)
    np.put_along_axis(mask, order, True, axis=-1)
    return mask


@dataclass
class SchedulerState:
    """PF bookkeeping: EWMA throughput per user, window ``t_c``, slot counter."""

    t_k: np.ndarray
    t_c: float = 100.0
    time_index: int = 0
    rr_next: int = 0

    def __post_init__(self):
        self.t_k = np.array(self.t_k, dtype=float)
        if self.t_c < 1:
            raise InvalidParameterError(f"t_c must be >= 1, got {self.t_c}")
        if np.any(self.t_k <= 0):
            raise InvalidParameterError("average throughputs must be strictly positive")


def init_state(k_users: int, snr_scale: float, t_c: float = 100.0) -> SchedulerState:
    """Warm start at ``E[C_b] / K`` for every user."""
    if k_users < 1:
        raise InvalidParameterError("need at least one user")
    return SchedulerState(np.full(k_users, mean_cb(snr_scale) / k_users), t_c=t_c)


def ewma_update(state: SchedulerState, winner: int, value: float) -> None:
    """One intra-slot EWMA step: every user decays, the winner also gains ``value / t_c``."""
    state.t_k *= 1.0 - 1.0 / state.t_c
    state.t_k[winner] += value / state.t_c


@dataclass(frozen=True)
class SlotAssignment:
    """Per-block winner (``OUTAGE`` if unassigned) and the throughput it earned."""

    users: np.ndarray
    values: np.ndarray

    @property
    def assigned(self) -> np.ndarray:
        return self.users != OUTAGE

    @property
    def n_assigned(self) -> int:
        return int(self.assigned.sum())

    @property
    def sum_rate(self) -> float:
        """Mean throughput over assigned blocks (outage blocks are ignored)."""
        n = self.n_assigned
        return float(self.values[self.assigned].sum() / n) if n else 0.0


@numba.njit(cache=True)
def _pf_assign(c, mask, t_k, t_c, users, values):
    # sequential PF: best C/T over available (user, block) pairs, then EWMA decay
    k_users, n_rb = c.shape
    decay = 1.0 - 1.0 / t_c
    avail = mask.copy()
    for _ in range(n_rb):
        best = -1.0
        bk = -1
        bb = -1
        for k in range(k_users):
            inv = 1.0 / t_k[k]
            for b in range(n_rb):
                if avail[k, b]:
                    m = c[k, b] * inv
                    # strict '>' keeps the lowest (user, block) among ties
                    if bk < 0 or m > best:
                        best = m
                        bk = k
                        bb = b
        if bk < 0:
            break
        users[bb] = bk
        values[bb] = c[bk, bb]
        for k in range(k_users):
            avail[k, bb] = False
            t_k[k] *= decay
        t_k[bk] += c[bk, bb] / t_c


def _schedule(
    c: np.ndarray, mask: np.ndarray, state: SchedulerState, outage_policy: str
) -> SlotAssignment:
    k_users, n_rb = c.shape
    users = np.full(n_rb, OUTAGE, dtype=np.int64)
    values = np.zeros(n_rb)
    _pf_assign(
        np.ascontiguousarray(c, dtype=float), np.ascontiguousarray(mask), state.t_k, float(state.t_c),
        users, values,
    )
    if outage_policy == "round_robin":
        for b in np.flatnonzero(users == OUTAGE):
            k = state.rr_next
            state.rr_next = (k + 1) % k_users
            users[b] = k
            values[b] = c[k, b]
            ewma_update(state, k, c[k, b])
    state.time_index += 1
    return SlotAssignment(users, values)


def pf_schedule_slot(
    reports: Sequence[FeedbackReport],
    state: SchedulerState,
    outage_policy: str = "skip",
    n_rb: int | None = None,
    full_c: np.ndarray | None = None,
) -> SlotAssignment:
    """Assign blocks one at a time to the reported (user, block) pair with the best ``C / T_k``.

    ``state`` is updated in place. Blocks no user reported are left empty
    (``skip``) or handed to users in rotation (``round_robin``), which needs
    the full ``(K, n_rb)`` throughput matrix ``full_c``.
    """
    if not reports:
        raise InvalidParameterError("no users to schedule")
    if outage_policy not in OUTAGE_POLICIES:
        raise InvalidParameterError(f"unknown outage policy {outage_policy!r}")
    k_users = len(state.t_k)
    if full_c is not None:
        full_c = np.asarray(full_c, dtype=float)
        n_rb = full_c.shape[1]
    if n_rb is None:
        raise InvalidParameterError("n_rb is required when full_c is not given")
    if outage_policy == "round_robin" and full_c is None:
        raise InvalidParameterError("round_robin outage handling needs full_c")
    c = np.zeros((k_users, n_rb)) if full_c is None else full_c.copy()
    mask = np.zeros((k_users, n_rb), dtype=bool)
    for rep in reports:
        if not 0 <= rep.user_id < k_users:
            raise InvalidParameterError(f"unknown user {rep.user_id}")
        for b, v in rep.entries:
            mask[rep.user_id, b] = True
            c[rep.user_id, b] = v
    return _schedule(c, mask, state, outage_policy)


@dataclass
class CampaignStats:
    sum_rate: float
    sum_rate_se: float
    max_cb: float
    max_cb_se: float
    mean_cb: float
    mean_cb_se: float
    win_share: np.ndarray
    outage_fraction: float
    n_slots: int
    seed: int
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in (
            "sum_rate", "sum_rate_se", "max_cb", "max_cb_se", "mean_cb", "mean_cb_se",
            "outage_fraction", "n_slots", "seed",
        )}
        out["win_share"] = self.win_share.tolist()
        out.update(self.extra)
        return out


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        return float(x.mean()), math.nan
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def run_campaign(
    channel,
    cfg: OfdmConfig,
    k_users: int = 32,
    n_fb: int = 1,
    t_c: float = 100.0,
    n_slots: int = 2000,
    seed: int = 0,
    outage_policy: str = "skip",
    warmup: int | None = None,
    chunk: int = 128,
    progress: Callable[[int, int], None] | None = None,
) -> CampaignStats:
    """Simulate PF scheduling over ``n_slots`` measured slots.

    ``channel`` is a PDP (SISO) or a ``ChannelSpec``. The first ``warmup``
    slots (default ``t_c``) run but are not reported. Deterministic in ``seed``.
    """
    spec = _as_spec(channel)
    if k_users < 1 or n_fb < 1 or n_slots < 1:
        raise InvalidParameterError("k_users, n_fb and n_slots must all be >= 1")
    if outage_policy not in OUTAGE_POLICIES:
        raise InvalidParameterError(f"unknown outage policy {outage_policy!r}")
    warmup = int(t_c) if warmup is None else int(warmup)
    total = warmup + n_slots
    rng = np.random.default_rng(seed)
    state = init_state(k_users, cfg.snr_scale, t_c)

    slot_rate = np.empty(n_slots)
    user_max = np.empty((n_slots, k_users))
    user_mean = np.empty(n_slots)
    wins = np.zeros(k_users)
    n_out = 0
    done = 0
    while done < total:
        n = min(chunk, total - done)
        resp = spec.draw_response(rng, (n, k_users), cfg.n_sc)
        c_all = block_throughputs(cfg.snr_scale * (resp.real**2 + resp.imag**2), cfg)
        masks = _report_mask(c_all, n_fb)
        first = max(warmup - done, 0)
        lo = done + first - warmup
        user_max[lo : lo + n - first] = c_all[first:].max(axis=-1)
        user_mean[lo : lo + n - first] = c_all[first:].mean(axis=(-2, -1))
        for j in range(n):
            res = _schedule(c_all[j], masks[j], state, outage_policy)
            if j < first:
                continue
            assigned = res.users[res.users != OUTAGE]
            slot_rate[lo + j - first] = res.values[res.users != OUTAGE].mean() if assigned.size else 0.0
            wins += np.bincount(assigned, minlength=k_users)
            n_out += cfg.n_rb - assigned.size
        done += n
        if progress is not None:
            progress(done, total)

    sr, sr_se = _mean_se(slot_rate)
    mx, mx_se = _mean_se(user_max.mean(axis=1))
    mc, mc_se = _mean_se(user_mean)
    return CampaignStats(
        sum_rate=sr,
        sum_rate_se=sr_se,
        max_cb=mx,
        max_cb_se=mx_se,
        mean_cb=mc,
        mean_cb_se=mc_se,
        win_share=wins / max(wins.sum(), 1),
        outage_fraction=n_out / (n_slots * cfg.n_rb),
        n_slots=n_slots,
        seed=seed,
    )


def empirical_max_cb(
    channel, cfg: OfdmConfig, n_trials: int = 10_000, seed: int = 0, chunk: int = 4096
) -> tuple[float, float]:
    """Monte Carlo ``E[max_b C_b]`` for one user; returns ``(mean, standard error)``."""
    if n_trials < 1:
        raise InvalidParameterError("n_trials must be >= 1")
    spec = _as_spec(channel)
    rng = np.random.default_rng(seed)
    maxima = np.empty(n_trials)
    done = 0
    while done < n_trials:
        n = min(chunk, n_trials - done)
        resp = spec.draw_response(rng, (n,), cfg.n_sc)
        c = block_throughputs(cfg.snr_scale * (resp.real**2 + resp.imag**2), cfg)
        maxima[done : done + n] = c.max(axis=-1)
        done += n
    return _mean_se(maxima)
