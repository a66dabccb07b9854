"""Write the CSV data behind one or more figure families.

    python scripts/run_figure.py fig6 fig7 --out results --workers 4
    python scripts/run_figure.py all --quick
"""

import argparse
import sys
import time

from ofdma_selectivity.config import ExperimentConfig, parse_assignments
from ofdma_selectivity.experiments import FIGURE_ALIASES, FIGURES, reproduce


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("figures", nargs="+", help=f"figure ids or 'all': {', '.join(sorted(FIGURES))}")
    ap.add_argument("--out", default="results")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--quick", action="store_true")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    args = ap.parse_args(argv)

    ids = sorted(FIGURES) if args.figures == ["all"] else args.figures
    for fid in ids:
        if fid not in FIGURES and fid not in FIGURE_ALIASES:
            ap.error(f"unknown figure {fid!r}")
    base = parse_assignments(args.set + [f"seed={args.seed}", f"output_dir={args.out}",
                                         f"workers={args.workers}"], ExperimentConfig())
    for fid in ids:
        t0 = time.monotonic()
        for path in reproduce(fid, base, quick=args.quick):
            print(path)
        print(f"{fid}: {time.monotonic() - t0:.1f}s", file=sys.stderr)


if __name__ == "__main__":
    main()
