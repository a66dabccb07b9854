"""Sweep runners behind ``reproduce`` and ``run_experiment``.

Each experiment produces one or more tables. A table is written as a CSV
whose leading ``#`` lines carry the experiment id, seed, config hash and
column units, followed by a JSON sidecar with the full config and a short
summary. Every Monte Carlo point of a sweep reuses ``cfg.seed``, so points
share common random numbers and differences between them are not seed noise.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import correlation_summary, rms_delay, sum_sc_from_rho, rho_sc_table
from .cdd import closed_form_delay_for_pdp, delay_objective, search_delay
from .channel import (
    CddConfig,
    PowerDelayProfile,
    cdd_compose_pdp,
    exponential_pdp_for_eff_paths,
    make_exponential_pdp,
    uniform_pdp,
)
from .config import ExperimentConfig
from .errors import ConfigError
from .scheduler import ChannelSpec, run_campaign
from .throughput import cb_moments, max_cb_gaussian, max_cb_os_bound

__all__ = [
    "FIGURES",
    "Table",
    "figure_config",
    "run_experiment",
    "write_table",
    "build_tables",
]

# figure id -> (experiment, variant, overrides)
FIGURES = {
    "fig4": ("corr_sweep", "siso", {}),
    "fig5": ("corr_sweep", "cdd", {}),
    "fig6": ("max_cb_vs_selectivity", "", {"block_sizes": [32]}),
    "fig7": ("sum_rate_vs_delay", "channel", {}),
    "fig8": ("sum_rate_vs_delay", "selectivity",
             {"eff_paths_grid": [1.01, 1.25, 1.6246, 2.0, 3.0, 4.0, 6.0, 8.0]}),
    "fig9": ("gain_vs_blocksize", "", {}),
    "fig10a": ("max_cb_vs_selectivity", "", {}),
    "fig10b": ("gain_vs_blocksize", "", {"fixed_delays": []}),
    "fig11": ("optimal_delay_vs_tau", "", {}),
}
FIGURE_ALIASES = {"fig10": ("fig10a", "fig10b")}

# smaller grids for a fast look at a figure's shape
QUICK = {
    "n_slots": 300,
    "eff_paths_grid": [1.01, 1.6, 2.5, 4.0, 8.0, 16.0, 32.0, 64.0],
    "tau_grid": [0.1, 0.4, 1.0, 2.0, 4.0, 8.0, 16.0],
    "delay_grid": [0, 1, 2, 3, 4, 6, 8, 12, 16, 32],
    "block_sizes": [8, 32, 128],
}


@dataclass
class Table:
    name: str
    columns: list[str]
    units: dict[str, str]
    rows: list[list] = field(default_factory=list)
    summary: dict = field(default_factory=dict)


class Progress:
    """Counts finished work items and prints elapsed time and ETA to stderr."""

    def __init__(self, label: str, total: int, enabled: bool = True, every: float = 2.0):
        self.label, self.total, self.enabled, self.every = label, max(total, 1), enabled, every
        self.done = 0
        self.t0 = time.monotonic()
        self._last = -math.inf

    def step(self, n: int = 1) -> None:
        self.done += n
        now = time.monotonic()
        if not self.enabled or (now - self._last < self.every and self.done < self.total):
            return
        self._last = now
        elapsed = now - self.t0
        eta = elapsed / self.done * (self.total - self.done) if self.done else math.nan
        print(f"[{self.label}] {self.done}/{self.total}  elapsed {elapsed:6.1f}s  eta {eta:6.1f}s",
              file=sys.stderr, flush=True)


def figure_config(figure: str, base: ExperimentConfig | None = None, quick: bool = False):
    """Config for one figure id; returns ``(config, variant)``."""
    if figure not in FIGURES:
        raise ConfigError(f"unknown figure id {figure!r}; choose from {sorted(FIGURES)}",
                          field="figure")
    experiment, variant, overrides = FIGURES[figure]
    cfg = base or ExperimentConfig()
    changes = dict(overrides)
    if quick:
        changes.update(QUICK)
        if "block_sizes" in overrides:
            changes["block_sizes"] = overrides["block_sizes"]
    cfg = cfg.replace(experiment=experiment, **changes)
    cfg.validate()
    return cfg, variant


# ---------------------------------------------------------------------------
# Monte Carlo tasks (top level so a process pool can pickle them)
# ---------------------------------------------------------------------------


def _campaign_task(args) -> tuple[float, float, float, float]:
    spec, ofdm, k, n_fb, t_c, n_slots, seed, policy = args
    st = run_campaign(spec, ofdm, k, n_fb, t_c, n_slots, seed, policy)
    return st.sum_rate, st.sum_rate_se, st.max_cb, st.max_cb_se


def _run_campaigns(specs, cfg: ExperimentConfig, progress: Progress, block_size=None,
                   policy=None) -> list[tuple[float, float, float, float]]:
    ofdm = cfg.ofdm(block_size)
    tasks = [(s, ofdm, cfg.k_users, cfg.n_fb, cfg.t_c, cfg.n_slots, cfg.seed,
              policy or cfg.outage_policy) for s in specs]
    out = []
    if cfg.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            for res in pool.map(_campaign_task, tasks):
                out.append(res)
                progress.step()
    else:
        for t in tasks:
            out.append(_campaign_task(t))
            progress.step()
    return out


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _channel_pdp(cfg: ExperimentConfig) -> PowerDelayProfile:
    return exponential_pdp_for_eff_paths(cfg.channel_eff_paths, cfg.max_taps)


def _delay_cap(cfg: ExperimentConfig) -> int:
    return (cfg.n_sc - 1) // max(cfg.n_tx - 1, 1)


def _delays(cfg: ExperimentConfig) -> list[int]:
    cap = _delay_cap(cfg)
    return sorted({int(d) for d in cfg.delay_grid if d <= cap})


def _cdd_objectives(pdp, delay: int, cfg: ExperimentConfig, block_size: int) -> tuple[float, float]:
    composed = cdd_compose_pdp([pdp] * cfg.n_tx, CddConfig.linear(delay, cfg.n_tx), cfg.n_sc)
    s = correlation_summary(composed, block_size, cfg.n_sc)
    return (delay_objective(s.s_sc_intra, s.phi, "gaussian", cfg.snr_scale),
            delay_objective(s.s_sc_intra, s.phi, "os", cfg.snr_scale))


def _decisions(pdp, cfg: ExperimentConfig, block_size: int) -> dict[str, int]:
    ofdm = cfg.ofdm(block_size)
    return {
        "gaussian": search_delay(pdp, ofdm, cfg.n_tx, "gaussian").d_star,
        "os": search_delay(pdp, ofdm, cfg.n_tx, "os").d_star,
        "rms": closed_form_delay_for_pdp(pdp, ofdm, cfg.n_tx, cfg.k_c, cfg.kappa).d_star,
    }


def _delay_rates(pdp, delays, cfg, progress, block_size=None) -> dict[int, tuple]:
    specs = [ChannelSpec.with_cdd(pdp, d, cfg.n_tx) for d in delays]
    return dict(zip(delays, _run_campaigns(specs, cfg, progress, block_size)))


def _argmax(keys, values) -> object:
    # first maximum, so ties go to the earlier (smaller) key
    return keys[int(np.argmax(np.asarray(values)))]


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------


def _corr_sweep(cfg: ExperimentConfig, variant: str, show: bool) -> list[Table]:
    if variant == "cdd":
        pdp = _channel_pdp(cfg)
        table = Table(
            "corr_sweep_cdd",
            ["delay", "block_size", "tau_rms", "eff_paths", "eff_blocks", "s_sc_intra"],
            {"delay": "samples", "tau_rms": "samples"},
        )
        for d in _delays(cfg):
            composed = cdd_compose_pdp([pdp] * cfg.n_tx, CddConfig.linear(d, cfg.n_tx), cfg.n_sc)
            tau = rms_delay(composed, cfg.kappa).tau_rms
            for s in cfg.block_sizes:
                cs = correlation_summary(composed, s, cfg.n_sc)
                table.rows.append([d, s, tau, cs.eff_paths, cs.eff_blocks, cs.s_sc_intra])
        table.summary = {"channel_eff_paths": float(1.0 / np.sum(pdp.powers**2)),
                         "n_tx": cfg.n_tx}
        return [table]

    table = Table(
        "corr_sweep",
        ["tau_o", "block_size", "tau_rms", "eff_paths", "eff_blocks", "s_sc_intra"],
        {"tau_o": "samples", "tau_rms": "samples"},
    )
    for tau_o in cfg.tau_grid:
        pdp = make_exponential_pdp(tau_o, cfg.max_taps)
        tau = rms_delay(pdp, cfg.kappa).tau_rms
        for s in cfg.block_sizes:
            cs = correlation_summary(pdp, s, cfg.n_sc)
            table.rows.append([tau_o, s, tau, cs.eff_paths, cs.eff_blocks, cs.s_sc_intra])
    return [table]


def _max_cb_vs_selectivity(cfg: ExperimentConfig, variant: str, show: bool) -> list[Table]:
    cols = ["block_size", "eff_paths", "tau_rms", "eff_blocks", "s_sc_intra",
            "analytic_os", "analytic_gaussian"]
    if cfg.simulate:
        cols += ["mc_max_cb", "mc_max_cb_se", "sum_rate", "sum_rate_se",
                 "sum_rate_rr", "sum_rate_rr_se"]
    units = {c: "bits/s/Hz" for c in cols if c.startswith(("analytic", "mc_", "sum_rate"))}
    units["tau_rms"] = "samples"
    table = Table("max_cb_vs_selectivity", cols, units)
    opt = Table("optimal_selectivity",
                ["block_size", "eff_paths_gaussian", "eff_paths_os"]
                + (["eff_paths_sim"] if cfg.simulate else []), {})

    pdps = [exponential_pdp_for_eff_paths(e, cfg.max_taps) for e in cfg.eff_paths_grid]
    n_sims = 2 * len(pdps) * len(cfg.block_sizes) if cfg.simulate else 0
    progress = Progress("max_cb_vs_selectivity", n_sims, show)
    for s in cfg.block_sizes:
        rows = []
        for pdp in pdps:
            cs = correlation_summary(pdp, s, cfg.n_sc)
            s2 = float(sum_sc_from_rho(rho_sc_table(pdp, cfg.n_sc), 2, 0, s))
            m = cb_moments(cfg.snr_scale, cs.s_sc_intra, s2)
            rows.append([s, cs.eff_paths, rms_delay(pdp, cfg.kappa).tau_rms, cs.eff_blocks,
                         cs.s_sc_intra, max_cb_os_bound(m, cs.phi), max_cb_gaussian(m, phi=cs.phi)])
        if cfg.simulate:
            specs = [ChannelSpec.siso(p) for p in pdps]
            skip = _run_campaigns(specs, cfg, progress, s, "skip")
            rr = _run_campaigns(specs, cfg, progress, s, "round_robin")
            for row, a, b in zip(rows, skip, rr):
                row += [a[2], a[3], a[0], a[1], b[0], b[1]]
        table.rows += rows
        eff = [r[1] for r in rows]
        best = [s, _argmax(eff, [r[6] for r in rows]), _argmax(eff, [r[5] for r in rows])]
        if cfg.simulate:
            best.append(_argmax(eff, [r[9] for r in rows]))
        opt.rows.append(best)
    return [table, opt]


def _sum_rate_vs_delay(cfg: ExperimentConfig, variant: str, show: bool) -> list[Table]:
    delays = _delays(cfg)
    s = cfg.block_size
    if variant == "selectivity":
        table = Table(
            "cdd_gain_vs_selectivity",
            ["eff_paths", "tau_rms", "siso", "siso_se", "d_gaussian", "rate_gaussian", "d_os",
             "rate_os", "d_rms", "rate_rms", "d_sum_rate", "rate_sum_rate"],
            {"tau_rms": "samples", "siso": "bits/s/Hz", "rate_gaussian": "bits/s/Hz",
             "rate_os": "bits/s/Hz", "rate_rms": "bits/s/Hz", "rate_sum_rate": "bits/s/Hz"},
        )
        pdps = [exponential_pdp_for_eff_paths(e, cfg.max_taps) for e in cfg.eff_paths_grid]
        progress = Progress("cdd_gain_vs_selectivity", len(pdps) * (len(delays) + 4), show)
        for pdp in pdps:
            siso = _run_campaigns([ChannelSpec.siso(pdp)], cfg, progress)[0]
            dec = _decisions(pdp, cfg, s)
            grid = sorted(set(delays) | set(dec.values()))
            progress.total += len(grid) - len(delays) - 3
            rates = _delay_rates(pdp, grid, cfg, progress)
            d_sr = _argmax(delays, [rates[d][0] for d in delays])
            row = [1.0 / float(np.sum(pdp.powers**2)), rms_delay(pdp, cfg.kappa).tau_rms,
                   siso[0], siso[1]]
            for key in ("gaussian", "os", "rms"):
                row += [dec[key], rates[dec[key]][0]]
            row += [d_sr, rates[d_sr][0]]
            table.rows.append(row)
        return [table]

    pdp = _channel_pdp(cfg)
    dec = _decisions(pdp, cfg, s)
    grid = sorted(set(delays) | set(dec.values()))
    progress = Progress("sum_rate_vs_delay", len(grid) + 1, show)
    rates = _delay_rates(pdp, grid, cfg, progress)
    siso = _run_campaigns([ChannelSpec.siso(pdp)], cfg, progress)[0]
    table = Table(
        "sum_rate_vs_delay",
        ["delay", "sum_rate", "sum_rate_se", "mc_max_cb", "mc_max_cb_se",
         "objective_gaussian", "objective_os"],
        {"delay": "samples", "sum_rate": "bits/s/Hz", "mc_max_cb": "bits/s/Hz",
         "objective_gaussian": "bits/s/Hz", "objective_os": "bits/s/Hz"},
    )
    for d in delays:
        g, o = _cdd_objectives(pdp, d, cfg, s)
        table.rows.append([d, *rates[d], g, o])
    best = max(rates[d][0] for d in delays)
    d_sr = _argmax(delays, [rates[d][0] for d in delays])
    markers = Table("delay_markers", ["method", "delay", "sum_rate", "fraction_of_max"],
                    {"delay": "samples", "sum_rate": "bits/s/Hz"})
    for key in ("gaussian", "os", "rms"):
        d = dec[key]
        markers.rows.append([key, d, rates[d][0], rates[d][0] / best])
    markers.rows.append(["sum_rate", d_sr, best, 1.0])
    markers.rows.append(["siso", -1, siso[0], siso[0] / best])
    table.summary = {"channel_eff_paths": float(1.0 / np.sum(pdp.powers**2)),
                     "d_star": dict(dec, sum_rate=d_sr), "siso_sum_rate": siso[0]}
    return [table, markers]


def _gain_vs_blocksize(cfg: ExperimentConfig, variant: str, show: bool) -> list[Table]:
    pdp = _channel_pdp(cfg)
    delays = _delays(cfg)
    fixed = [int(d) for d in cfg.fixed_delays]
    cols = ["block_size", "d_gaussian", "d_os", "d_rms"]
    if cfg.simulate:
        cols += ["siso", "gain_gaussian", "gain_os", "gain_rms", "d_sum_rate", "gain_sum_rate"]
        cols += [f"gain_d{d}" for d in fixed]
    units = {c: "relative" for c in cols if c.startswith("gain")}
    units.update({c: "samples" for c in cols if c.startswith("d_")})
    units["siso"] = "bits/s/Hz"
    table = Table("gain_vs_blocksize", cols, units)
    progress = Progress("gain_vs_blocksize", len(cfg.block_sizes) * (len(delays) + len(fixed) + 4)
                        if cfg.simulate else 0, show)
    for s in cfg.block_sizes:
        dec = _decisions(pdp, cfg, s)
        row = [s, dec["gaussian"], dec["os"], dec["rms"]]
        if cfg.simulate:
            grid = sorted(set(delays) | set(dec.values()) | set(fixed))
            progress.total += len(grid) - len(delays) - len(fixed) - 3
            rates = _delay_rates(pdp, grid, cfg, progress, s)
            siso = _run_campaigns([ChannelSpec.siso(pdp)], cfg, progress, s)[0][0]
            d_sr = _argmax(delays, [rates[d][0] for d in delays])
            row += [siso] + [rates[dec[k]][0] / siso - 1.0 for k in ("gaussian", "os", "rms")]
            row += [d_sr, rates[d_sr][0] / siso - 1.0]
            row += [rates[d][0] / siso - 1.0 for d in fixed]
        table.rows.append(row)
    table.summary = {"channel_eff_paths": float(1.0 / np.sum(pdp.powers**2))}
    return [table]


def _optimal_delay_vs_tau(cfg: ExperimentConfig, variant: str, show: bool) -> list[Table]:
    cols = ["tau_o", "tau_rms", "eff_paths", "d_gaussian", "d_os", "d_rms"]
    if cfg.simulate:
        cols.append("d_sum_rate")
    table = Table("optimal_delay_vs_tau", cols,
                  {"tau_o": "samples", "tau_rms": "samples", "d_gaussian": "samples",
                   "d_os": "samples", "d_rms": "samples", "d_sum_rate": "samples"})
    delays = _delays(cfg)
    progress = Progress("optimal_delay_vs_tau",
                        len(cfg.tau_grid) * len(delays) if cfg.simulate else 0, show)
    for tau_o in cfg.tau_grid:
        pdp = make_exponential_pdp(tau_o, cfg.max_taps)
        dec = _decisions(pdp, cfg, cfg.block_size)
        row = [tau_o, rms_delay(pdp, cfg.kappa).tau_rms, 1.0 / float(np.sum(pdp.powers**2)),
               dec["gaussian"], dec["os"], dec["rms"]]
        if cfg.simulate:
            rates = _delay_rates(pdp, delays, cfg, progress)
            row.append(_argmax(delays, [rates[d][0] for d in delays]))
        table.rows.append(row)
    return [table]


_RUNNERS = {
    "corr_sweep": _corr_sweep,
    "max_cb_vs_selectivity": _max_cb_vs_selectivity,
    "sum_rate_vs_delay": _sum_rate_vs_delay,
    "gain_vs_blocksize": _gain_vs_blocksize,
    "optimal_delay_vs_tau": _optimal_delay_vs_tau,
}


def build_tables(cfg: ExperimentConfig, variant: str = "", progress: bool = False) -> list[Table]:
    """Compute an experiment's tables in memory without writing anything."""
    cfg.validate()
    return _RUNNERS[cfg.experiment](cfg, variant, progress)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _atomic_write(path: Path, text: str) -> None:
    # write then rename, so a crash never leaves a truncated file behind
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def write_table(table: Table, cfg: ExperimentConfig, out_dir, label: str) -> tuple[Path, Path]:
    """Write ``table`` as CSV plus JSON sidecar; returns both paths."""
    out_dir = Path(out_dir)
    stem = f"{label}_{table.name}" if label != table.name else label
    buf = io.StringIO()
    buf.write(f"# experiment: {cfg.experiment} ({label})\n")
    buf.write(f"# seed: {cfg.seed}\n")
    buf.write(f"# config_hash: {cfg.config_hash()}\n")
    units = ", ".join(f"{c}={table.units.get(c, '-')}" for c in table.columns)
    buf.write(f"# units: {units}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_fmt(v) for v in row])
    csv_path = out_dir / f"{stem}.csv"
    json_path = out_dir / f"{stem}.json"
    sidecar = {
        "experiment": cfg.experiment,
        "label": label,
        "table": table.name,
        "package_version": __version__,
        "seed": cfg.seed,
        "config_hash": cfg.config_hash(),
        "columns": table.columns,
        "units": table.units,
        "n_rows": len(table.rows),
        "summary": table.summary,
        "config": cfg.to_dict(),
    }
    _atomic_write(csv_path, buf.getvalue())
    _atomic_write(json_path, json.dumps(sidecar, indent=2, sort_keys=True, default=_fmt) + "\n")
    return csv_path, json_path


def _check_output_dir(path) -> Path:
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {str(path)!r}: {exc.strerror}",
                          field="output_dir") from None
    if not os.access(path, os.W_OK):
        raise ConfigError(f"output directory {str(path)!r} is not writable", field="output_dir")
    return path


def run_experiment(cfg: ExperimentConfig, label: str | None = None, variant: str = "",
                   progress: bool = True) -> list[Path]:
    """Run ``cfg`` and write its tables under ``cfg.output_dir``; returns written paths."""
    out_dir = _check_output_dir(cfg.output_dir)
    tables = build_tables(cfg, variant, progress)
    label = label or cfg.experiment
    paths = []
    for t in tables:
        paths.extend(write_table(t, cfg, out_dir, label))
    return paths


def reproduce(figure: str, base: ExperimentConfig | None = None, quick: bool = False,
              progress: bool = True) -> list[Path]:
    ids = FIGURE_ALIASES.get(figure, (figure,))
    paths = []
    for fid in ids:
        cfg, variant = figure_config(fid, base, quick)
        paths += run_experiment(cfg, fid, variant, progress)
    return paths


def uniform_or_exponential(kind: str, value: float, max_taps: int = 64) -> PowerDelayProfile:
    """Small convenience used by scripts: ``uniform`` takes a tap count, ``exponential`` ``tau_o``."""
    if kind == "uniform":
        return uniform_pdp(int(value))
    return make_exponential_pdp(value, max_taps)
