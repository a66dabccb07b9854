"""Analysis-only channel report: correlation summary, throughput moments and delay choices.

Nothing here draws random numbers.
"""

from __future__ import annotations

from .analytics import DEFAULT_KAPPA, correlation_summary, rho_sc_table, rms_delay, sum_sc_from_rho
from .cdd import closed_form_delay_for_pdp, search_delay
from .channel import CddConfig, OfdmConfig, PowerDelayProfile, cdd_compose_pdp
from .throughput import cb_moments, max_cb_gaussian, max_cb_os_bound

__all__ = ["channel_report", "format_report"]


def channel_report(
    pdp: PowerDelayProfile,
    cfg: OfdmConfig,
    n_tx: int = 2,
    cdd_delay: int | None = None,
    kappa: float = DEFAULT_KAPPA,
    k_c: float | None = None,
) -> dict:
    """Structured report for one channel.

    With ``cdd_delay`` the correlation and moment sections describe the
    composed CDD channel; the delay decisions always refer to ``pdp`` as the
    per-antenna profile.
    """
    eff = pdp
    if cdd_delay is not None:
        eff = cdd_compose_pdp([pdp] * n_tx, CddConfig.linear(cdd_delay, n_tx), cfg.n_sc)
    summary = correlation_summary(eff, cfg.block_size, cfg.n_sc)
    s2 = float(sum_sc_from_rho(rho_sc_table(eff, cfg.n_sc), 2, 0, cfg.block_size))
    moments = cb_moments(cfg.snr_scale, summary.s_sc_intra, s2)
    spread = rms_delay(eff, kappa)
    out = {
        "channel": {
            "n_taps": eff.n_taps,
            "tau_mean": spread.mu,
            "tau_rms": spread.tau_rms,
            "tau_max": spread.tau_max,
            "cdd_delay": cdd_delay,
            "n_tx": n_tx if cdd_delay is not None else 1,
        },
        "ofdm": {"n_sc": cfg.n_sc, "block_size": cfg.block_size, "n_rb": cfg.n_rb,
                 "snr_scale": cfg.snr_scale},
        "correlation": summary.to_dict(),
        "moments": {
            "mean": moments.mean,
            "var_fo": moments.var_fo,
            "var_so": moments.var_so,
            "v1": moments.v1,
            "s_sc_intra": moments.s_sc_intra,
            "max_cb_os": max_cb_os_bound(moments, summary.phi),
            "max_cb_gaussian": max_cb_gaussian(moments, phi=summary.phi),
        },
    }
    if n_tx >= 2:
        decisions = [
            search_delay(pdp, cfg, n_tx, "gaussian"),
            search_delay(pdp, cfg, n_tx, "os"),
            closed_form_delay_for_pdp(pdp, cfg, n_tx, k_c, kappa),
        ]
        out["delay"] = [
            {k: v for k, v in d.to_dict().items() if k != "objective_curve"} for d in decisions
        ]
    return out


def format_report(rep: dict) -> str:
    lines = []
    for section, body in rep.items():
        lines.append(f"[{section}]")
        items = body if isinstance(body, list) else [body]
        for item in items:
            for k, v in item.items():
                v = f"{v:.10g}" if isinstance(v, float) else v
                lines.append(f"  {k:<16} {v}")
            if isinstance(body, list):
                lines.append("")
    return "\n".join(lines).rstrip() + "\n"
