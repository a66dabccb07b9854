"""Command line entry point: ``ofdma-sel {analyze,simulate,optimize-delay,reproduce}``.

Exit status is 0 on success, 2 for a bad config or input, 3 for a runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .channel import OfdmConfig, exponential_pdp_for_eff_paths, make_exponential_pdp
from .config import (
    ExperimentConfig,
    defaults_table,
    load_config,
    load_pdp,
    parse_assignments,
    parse_pdp_text,
)
from .errors import ConfigError, InvalidParameterError
from .experiments import FIGURE_ALIASES, FIGURES, reproduce
from .report import channel_report, format_report

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _add_channel(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("channel (pick one; default is a single tap)")
    src = g.add_mutually_exclusive_group()
    src.add_argument("--pdp", metavar="FILE", help="PDP definition file (gains, JSON or key = value)")
    src.add_argument("--gains", metavar="LIST", help="comma-separated amplitude gains, normalized")
    src.add_argument("--tau-o", type=float, help="exponential profile decay constant in samples")
    src.add_argument("--eff-paths", type=float, help="exponential profile with this effective path count")
    g.add_argument("--max-taps", type=int, default=64)
    o = p.add_argument_group("OFDM grid")
    o.add_argument("--n-sc", type=int, default=1024)
    o.add_argument("--block-size", type=int, default=32)
    o.add_argument("--snr", type=float, default=10.0, help="mean linear SNR (default 10)")
    c = p.add_argument_group("transmit diversity")
    c.add_argument("--n-tx", type=int, default=2)
    c.add_argument("--kappa", type=float, default=0.9)
    c.add_argument("--k-c", type=float, default=None, help="coherence constant (default 2*pi/n_sc)")


def _channel(args):
    if args.pdp:
        return load_pdp(args.pdp)
    if args.gains:
        return parse_pdp_text(args.gains)
    if args.tau_o is not None:
        return make_exponential_pdp(args.tau_o, args.max_taps)
    if args.eff_paths is not None:
        return exponential_pdp_for_eff_paths(args.eff_paths, args.max_taps)
    return parse_pdp_text("1")


def _ofdm(args) -> OfdmConfig:
    return OfdmConfig(args.n_sc, args.block_size, args.snr)


def _dump(obj, as_json: bool) -> None:
    if as_json:
        print(json.dumps(obj, indent=2, sort_keys=False))
    else:
        print(format_report(obj), end="")


def cmd_analyze(args) -> int:
    rep = channel_report(_channel(args), _ofdm(args), args.n_tx, args.cdd_delay, args.kappa,
                         args.k_c)
    _dump(rep, args.json)
    return EXIT_OK


def cmd_optimize_delay(args) -> int:
    from .cdd import closed_form_delay_for_pdp, search_delay

    pdp, cfg = _channel(args), _ofdm(args)
    out = []
    if args.method in ("all", "gaussian"):
        out.append(search_delay(pdp, cfg, args.n_tx, "gaussian", args.max_delay))
    if args.method in ("all", "os"):
        out.append(search_delay(pdp, cfg, args.n_tx, "os", args.max_delay))
    if args.method in ("all", "rms"):
        out.append(closed_form_delay_for_pdp(pdp, cfg, args.n_tx, args.k_c, args.kappa))
    rows = [d.to_dict() for d in out]
    if not args.curves:
        for r in rows:
            r.pop("objective_curve", None)
    _dump({"delay": rows}, args.json)
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .scheduler import ChannelSpec, run_campaign

    pdp, cfg = _channel(args), _ofdm(args)
    spec = ChannelSpec.siso(pdp) if args.cdd_delay is None else ChannelSpec.with_cdd(
        pdp, args.cdd_delay, args.n_tx)

    def progress(done, total):
        if not args.quiet:
            print(f"[simulate] {done}/{total} slots", file=sys.stderr, flush=True)

    st = run_campaign(spec, cfg, args.k_users, args.n_fb, args.t_c, args.n_slots, args.seed,
                      args.outage_policy, progress=progress)
    d = st.to_dict()
    if not args.win_shares:
        d.pop("win_share")
    _dump({"campaign": d}, args.json)
    return EXIT_OK


def cmd_reproduce(args) -> int:
    base = load_config(args.config) if args.config else ExperimentConfig()
    changes = list(args.set or [])
    if args.seed is not None:
        changes.append(f"seed={args.seed}")
    if args.out is not None:
        changes.append(f"output_dir={args.out}")
    if args.workers is not None:
        changes.append(f"workers={args.workers}")
    base = parse_assignments(changes, base)
    paths = reproduce(args.figure, base, quick=args.quick, progress=not args.quiet)
    for p in paths:
        print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ofdma-sel",
        description="Frequency selectivity analytics, cyclic delay selection and PF scheduling "
        "simulation for block OFDMA.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="analytic report for one channel (no randomness)")
    _add_channel(p)
    p.add_argument("--cdd-delay", type=int, default=None,
                   help="report the composed channel for this per-antenna cyclic delay")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("optimize-delay", help="per-user cyclic delay by each selection method")
    _add_channel(p)
    p.add_argument("--method", choices=("all", "gaussian", "os", "rms"), default="all")
    p.add_argument("--max-delay", type=int, default=None)
    p.add_argument("--curves", action="store_true", help="include objective curves")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_optimize_delay)

    p = sub.add_parser("simulate", help="Monte Carlo PF scheduling campaign")
    _add_channel(p)
    p.add_argument("--cdd-delay", type=int, default=None)
    p.add_argument("--k-users", type=int, default=32)
    p.add_argument("--n-fb", type=int, default=1)
    p.add_argument("--t-c", type=float, default=100.0)
    p.add_argument("--n-slots", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--outage-policy", choices=("skip", "round_robin"), default="skip")
    p.add_argument("--win-shares", action="store_true")
    p.add_argument("--quiet", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_simulate)

    figures = sorted(FIGURES) + sorted(FIGURE_ALIASES)
    p = sub.add_parser(
        "reproduce",
        help="write the data behind one figure family",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="config settings (name, type, default):\n" + defaults_table(),
    )
    p.add_argument("figure", choices=figures)
    p.add_argument("--config", metavar="FILE", help="flat key = value config file")
    p.add_argument("--set", metavar="KEY=VALUE", action="append", help="override one setting")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", metavar="DIR", default=None, help="output directory")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--quick", action="store_true", help="reduced grids and slot counts")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, which already matches the config code
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ConfigError, InvalidParameterError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - last-resort runtime failure
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
