"""Per-user cyclic delay selection.

Two routes: an exhaustive search over the analytic ``E[max_b C_b]``
approximations, and a closed form that takes the largest delay keeping the
coherence bandwidth above one block while the delayed profiles still overlap.
Both assume the linear delay pattern ``D_i = (i - 1) D``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .analytics import (
    DEFAULT_KAPPA,
    DelaySpreadStats,
    cdd_rms_constants,
    default_k_c,
    rho_sc_table,
    rms_delay,
    summary_from_rho,
    tau_max,
)
from .channel import CddConfig, OfdmConfig, PowerDelayProfile, cdd_compose_pdp
from .errors import InvalidParameterError
from .throughput import gaussian_gain_factor, mean_cb, os_gain_factor, var_gamma_ratio

__all__ = [
    "DelayDecision",
    "OBJECTIVES",
    "delay_objective",
    "delay_objective_curve",
    "search_delay",
    "closed_form_delay",
    "closed_form_delay_for_pdp",
    "calibrate_k_c",
]

OBJECTIVES = ("os", "gaussian")
# consecutive joint decreases of eff_blocks and s_sc_intra that end the search
STOP_RUN = 3


@dataclass(frozen=True)
class DelayDecision:
    d_star: int
    method: str
    objective_curve: tuple[tuple[int, float], ...] | None = None
    d_bc: int | None = None
    d_max: int | None = None
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "d_star": self.d_star,
            "method": self.method,
            "d_bc": self.d_bc,
            "d_max": self.d_max,
        }
        out.update(self.params)
        if self.objective_curve is not None:
            out["objective_curve"] = [list(p) for p in self.objective_curve]
        return out


def _cdd_measures(pdps: Sequence[PowerDelayProfile], delay: int, n_sc: int, block_size: int):
    cdd = CddConfig.linear(delay, len(pdps))
    composed = cdd_compose_pdp(pdps, cdd, n_sc)
    s = summary_from_rho(rho_sc_table(composed, n_sc), block_size)
    return s.s_sc_intra, s.phi


def delay_objective(s_sc_intra: float, phi: float, objective: str, snr_scale: float) -> float:
    """Analytic ``E[max_b C_b]`` for one delay; the mean term does not depend on the delay."""
    if objective == "os":
        factor = os_gain_factor(phi)
    elif objective == "gaussian":
        factor = gaussian_gain_factor(phi)
    else:
        raise InvalidParameterError(f"objective must be one of {OBJECTIVES}, got {objective!r}")
    return mean_cb(snr_scale) + factor * math.sqrt(var_gamma_ratio(snr_scale) * s_sc_intra)


def _antenna_pdps(pdp, n_tx: int) -> list[PowerDelayProfile]:
    if n_tx < 1:
        raise InvalidParameterError(f"n_tx must be >= 1, got {n_tx}")
    if isinstance(pdp, PowerDelayProfile):
        return [pdp] * n_tx
    pdps = list(pdp)
    if len(pdps) != n_tx:
        raise InvalidParameterError(f"got {len(pdps)} PDPs for {n_tx} antennas")
    return pdps


def _scan(pdps, cfg: OfdmConfig, objective: str, max_delay: int | None):
    n_tx = len(pdps)
    cap = (cfg.n_sc - 1) // max(n_tx - 1, 1)
    if max_delay is not None:
        cap = min(cap, int(max_delay))
    if n_tx == 1:
        cap = 0
    curve = []
    best_blocks, peak = -math.inf, 0
    prev = None
    run = 0
    for d in range(cap + 1):
        s_intra, phi = _cdd_measures(pdps, d, cfg.n_sc, cfg.block_size)
        curve.append((d, delay_objective(s_intra, phi, objective, cfg.snr_scale)))
        eff_blocks = 1.0 / phi
        if eff_blocks > best_blocks:
            best_blocks, peak = eff_blocks, d
        if prev is not None and d > peak and eff_blocks < prev[0] and s_intra < prev[1]:
            run += 1
        else:
            run = 0
        prev = (eff_blocks, s_intra)
        if run >= STOP_RUN:
            break
    return curve


def delay_objective_curve(
    pdp, cfg: OfdmConfig, n_tx: int = 2, objective: str = "gaussian", max_delay: int | None = None
) -> list[tuple[int, float]]:
    """``(D, objective)`` pairs for D = 0..D_stop.

    The scan stops once ``STOP_RUN`` consecutive delays past the running peak
    of the effective block count lower both the effective block count and the
    intra-block sum correlation, since the objective can only fall there.
    """
    if objective not in OBJECTIVES:
        raise InvalidParameterError(f"objective must be one of {OBJECTIVES}, got {objective!r}")
    return _scan(_antenna_pdps(pdp, n_tx), cfg, objective, max_delay)


def search_delay(
    pdp, cfg: OfdmConfig, n_tx: int = 2, objective: str = "gaussian", max_delay: int | None = None
) -> DelayDecision:
    """Exhaustive search of the per-user delay; ties go to the smaller delay."""
    curve = delay_objective_curve(pdp, cfg, n_tx, objective, max_delay)
    values = np.array([v for _, v in curve])
    d_star = int(curve[int(np.argmax(values))][0])
    return DelayDecision(
        d_star=d_star,
        method=f"{objective}_search",
        objective_curve=tuple(curve),
        params={
            "n_tx": n_tx,
            "block_size": cfg.block_size,
            "n_sc": cfg.n_sc,
            "snr_scale": cfg.snr_scale,
            "search_range": [0, int(curve[-1][0])],
        },
    )


def closed_form_delay(
    per_antenna_stats: Sequence[DelaySpreadStats] | DelaySpreadStats,
    block_size: int,
    k_c: float | None = None,
    kappa: float = DEFAULT_KAPPA,
    n_tx: int = 2,
    n_sc: int = 1024,
) -> DelayDecision:
    """Delay from the RMS spread: ``min(d_bc, d_max)``.

    ``d_bc`` is the largest delay keeping the CDD coherence bandwidth at least
    one block wide; ``d_max`` is the Chebyshev maximum delay spread, beyond
    which neighbouring antenna profiles stop overlapping.
    """
    if n_tx < 2:
        raise InvalidParameterError("closed-form delay needs at least two antennas")
    if isinstance(per_antenna_stats, DelaySpreadStats):
        stats = [per_antenna_stats] * n_tx
    else:
        stats = list(per_antenna_stats)
    if len(stats) != n_tx:
        raise InvalidParameterError(f"got {len(stats)} antenna stats for {n_tx} antennas")
    if k_c is None:
        k_c = default_k_c(n_sc)
    if not k_c > 0:
        raise InvalidParameterError(f"k_c must be positive, got {k_c}")
    if not 0 < kappa < 1:
        raise InvalidParameterError(f"kappa must lie in (0, 1), got {kappa}")

    a, b, c, tbar2 = cdd_rms_constants(stats)
    radicand = max(1.0 / (k_c * block_size) ** 2 - tbar2 + (b * b - 4 * a * c) / (4 * a), 0.0)
    x = math.sqrt(radicand) / math.sqrt(a) - b / (2 * a)
    d_bc = max(int(math.floor(x + 1e-9)), 0)
    d_max = min(tau_max(s.tau_rms, kappa) for s in stats[:-1])
    return DelayDecision(
        d_star=min(d_bc, d_max),
        method="rms_closed_form",
        d_bc=d_bc,
        d_max=d_max,
        params={"k_c": k_c, "kappa": kappa, "n_tx": n_tx, "block_size": block_size},
    )


def closed_form_delay_for_pdp(
    pdp: PowerDelayProfile,
    cfg: OfdmConfig,
    n_tx: int = 2,
    k_c: float | None = None,
    kappa: float = DEFAULT_KAPPA,
) -> DelayDecision:
    stats = [rms_delay(p, kappa) for p in _antenna_pdps(pdp, n_tx)]
    return closed_form_delay(stats, cfg.block_size, k_c, kappa, n_tx, cfg.n_sc)


def calibrate_k_c(
    pdps: Iterable[PowerDelayProfile],
    cfg: OfdmConfig,
    n_tx: int = 2,
    kappa: float = DEFAULT_KAPPA,
    objective: str = "gaussian",
    candidates: np.ndarray | None = None,
) -> tuple[float, float]:
    """Pick ``k_c`` so the closed form tracks the search-based delay.

    Scores each candidate by the mean absolute delay mismatch over ``pdps``
    and returns ``(k_c, score)``. Ties resolve toward the default constant.
    """
    pdps = list(pdps)
    if not pdps:
        raise InvalidParameterError("need at least one reference channel")
    base = default_k_c(cfg.n_sc)
    if candidates is None:
        candidates = base * np.geomspace(0.05, 20.0, 241)
    targets = [search_delay(p, cfg, n_tx, objective).d_star for p in pdps]
    stats = [[rms_delay(p, kappa)] * n_tx for p in pdps]
    best = None
    for k_c in candidates:
        score = np.mean(
            [
                abs(closed_form_delay(st, cfg.block_size, k_c, kappa, n_tx, cfg.n_sc).d_star - t)
                for st, t in zip(stats, targets)
            ]
        )
        key = (score, abs(math.log(k_c / base)))
        if best is None or key < best[0]:
            best = (key, float(k_c))
    return best[1], float(best[0][0])
