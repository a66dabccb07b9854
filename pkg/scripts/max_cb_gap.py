"""How far the Gaussian and order-statistics approximations of E[max C_b] sit
from Monte Carlo, across SNR and effective path count."""

import argparse

from ofdma_selectivity.analytics import correlation_summary
from ofdma_selectivity.channel import OfdmConfig, exponential_pdp_for_eff_paths
from ofdma_selectivity.scheduler import empirical_max_cb
from ofdma_selectivity.throughput import cb_moments, max_cb_gaussian, max_cb_os_bound


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=20000)
    ap.add_argument("--snr", type=float, nargs="+", default=[1.0, 10.0, 100.0])
    ap.add_argument("--block-size", type=int, default=32)
    args = ap.parse_args(argv)
    print("   snr  eff_paths  eff_blocks        mc  gauss/mc-1     os/mc-1")
    for snr in args.snr:
        cfg = OfdmConfig(1024, args.block_size, snr)
        for eff in (1.25, 2.0, 3.0, 4.0, 8.0, 16.0):
            p = exponential_pdp_for_eff_paths(eff)
            cs = correlation_summary(p, args.block_size, 1024)
            m = cb_moments(snr, cs.s_sc_intra)
            mc, _ = empirical_max_cb(p, cfg, args.trials, seed=1)
            print(f"{snr:6g}  {eff:9.2f}  {cs.eff_blocks:10.2f}  {mc:8.4f}  "
                  f"{max_cb_gaussian(m, phi=cs.phi) / mc - 1:+10.4f}  {max_cb_os_bound(m, cs.phi) / mc - 1:+10.4f}")


if __name__ == "__main__":
    main()
