"""Run every shipped sweep config and write CSV plus gnuplot-ready surfaces.

Usage: python scripts/reproduce_sweeps.py [--out out] [--workers 4]
"""

import argparse
import collections
from pathlib import Path

import numpy as np

from piggyback.sweep import emit_csv, emit_plot_data, load_config, run_sweep

ROOT = Path(__file__).resolve().parents[1]
COLUMNS = ("joint", "cutset", "gap_cutset", "sigma_zeq", "psi_integral")


def summarize(records):
    by_regime = collections.defaultdict(list)
    for rec in records:
        by_regime[rec.regime].append(rec.gap_cutset)
    for regime, gaps in sorted(by_regime.items()):
        print(f"  {regime:>13}: {len(gaps):4d} points, mean gap {np.mean(gaps):.6f} nats")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="out")
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()
    for path in sorted((ROOT / "configs").glob("*.yaml")):
        cfg = load_config(path)
        if cfg.grid_p1 is None or cfg.grid_p2 is None:
            continue
        out = Path(args.out) / path.stem
        records = run_sweep(cfg, workers=args.workers)
        emit_csv(records, out / "sweep.csv")
        for col in COLUMNS:
            emit_plot_data(records, col, out / f"{col}.dat")
        print(f"{path.name}: {len(records)} points -> {out}")
        summarize(records)


if __name__ == "__main__":
    main()
