"""Shared-budget power allocation for Gaussian and BPSK inputs.

Prints the water level and per-input powers over a range of budgets, and
whether the first-decoded input ends up with at least as much power.

Usage: python scripts/power_allocation.py [--config configs/baseline.yaml]
"""

import argparse

from piggyback.immse import BPSK, unit_mmse_fn
from piggyback.network import equivalent_channel
from piggyback.powalloc import water_level_solve
from piggyback.sweep import load_config


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", default="configs/baseline.yaml")
    args = parser.parse_args()
    cfg = load_config(args.config)
    p1, p2 = cfg.point or (1.0, 1.0)
    equiv = equivalent_channel(cfg.topology, cfg.powers(p1, p2), cfg.snr_cfg, cfg.sink)
    bpsk = unit_mmse_fn(BPSK)
    print(f"{'budget':>7} {'inputs':>6} {'1/eta':>9} {'p1':>9} {'p2':>9} p1>=p2")
    for budget in (0.5, 1, 2, 5, 10, 20):
        for name, fns in (("gauss", (None, None)), ("bpsk", (bpsk, bpsk))):
            res = water_level_solve(budget, equiv, cfg.snr_cfg, fns)
            print(f"{budget:7g} {name:>6} {res.water_level:9.4f} {res.p1.p_star:9.4f} {res.p2.p_star:9.4f} {res.ordering_holds}")


if __name__ == "__main__":
    main()
