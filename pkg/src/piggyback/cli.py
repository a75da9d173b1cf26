"""Command-line entry point: ``piggyback <command> --config scenario.yaml ...``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict

from .errors import ConfigInvalid, PiggybackError, StepTooLarge
from .immse import EstimationScheme, Scenario, fd_identity_check
from .network import classify_regime, equivalent_channel
from .powalloc import water_level_fixed_point, water_level_solve, waterfill_p1, waterfill_p2
from .rates import rate_report
from .sweep import emit_csv, emit_plot_data, load_config, run_sweep


def _point(cfg, args):
    p1 = args.p1 if args.p1 is not None else (cfg.point[0] if cfg.point else None)
    p2 = args.p2 if args.p2 is not None else (cfg.point[1] if cfg.point else None)
    if p1 is None or p2 is None:
        raise ConfigInvalid(["point: give --p1/--p2 or a point section in the config"])
    return p1, p2


def _dump(obj):
    print(json.dumps(obj, indent=2, default=str))


def cmd_rates(args):
    cfg = load_config(args.config)
    p1, p2 = _point(cfg, args)
    rep = rate_report(cfg.topology, cfg.powers(p1, p2), cfg.snr_cfg, cfg.sink, cfg.thresholds)
    if args.bits:
        rep = rep.in_bits()
    out = {"p1": p1, "p2": p2, "unit": "bits" if args.bits else "nats"}
    out.update(rep.as_dict())
    _dump(out)
    return 0


def cmd_sweep(args):
    cfg = load_config(args.config)
    out = args.out or cfg.csv_path
    if out is None:
        raise ConfigInvalid(["output.csv: give --out or an output.csv entry"])
    records = run_sweep(cfg, workers=args.workers)
    emit_csv(records, out)
    plot_dir = args.plot_dir or cfg.plot_dir
    if plot_dir:
        for col in ("joint", "cutset", "gap_cutset", "sigma_zeq"):
            emit_plot_data(records, col, f"{plot_dir}/{col}.dat")
    print(f"wrote {len(records)} records to {out}")
    return 0


def cmd_alloc(args):
    cfg = load_config(args.config)
    p1, p2 = _point(cfg, args)
    powers = cfg.powers(p1, p2)
    equiv = equivalent_channel(cfg.topology, powers, cfg.snr_cfg, cfg.sink)
    if args.eta is not None:
        a2 = waterfill_p2(args.eta, equiv, cfg.snr_cfg)
        a1 = waterfill_p1(args.eta, a2.p_star, equiv, cfg.snr_cfg)
        _dump({"eta": args.eta, "p1": asdict(a1), "p2": asdict(a2)})
        return 0
    if args.fixed_point:
        res = water_level_fixed_point(args.budget, cfg.topology, powers, cfg.snr_cfg, cfg.sink)
    else:
        res = water_level_solve(args.budget, equiv, cfg.snr_cfg)
    _dump(
        {
            "budget": args.budget,
            "eta": res.eta,
            "water_level": res.water_level,
            "p1": asdict(res.p1),
            "p2": asdict(res.p2),
            "total": res.total,
            "p1_at_least_p2": res.ordering_holds,
            "iterations": res.iterations,
            "converged": res.converged,
        }
    )
    return 0


def cmd_immse_check(args):
    cfg = load_config(args.config)
    p1, p2 = _point(cfg, args)
    scenario = Scenario(cfg.topology, cfg.powers(p1, p2), cfg.snr_cfg, cfg.sink, cfg.dist1, cfg.dist2, cfg.samples, cfg.seed)
    scheme = EstimationScheme.joint() if args.scheme == "joint" else EstimationScheme.sic(cfg.scheme.first)
    try:
        rep = fd_identity_check(scenario, scheme, args.step, args.tolerance)
    except StepTooLarge as exc:
        print(f"step too large: {exc}", file=sys.stderr)
        return 1
    out = asdict(rep)
    out["scheme"] = str(scheme)
    _dump(out)
    return 0 if rep.passed else 1


def cmd_regime(args):
    cfg = load_config(args.config)
    p1, p2 = _point(cfg, args)
    powers = cfg.powers(p1, p2)
    try:
        sigma = equivalent_channel(cfg.topology, powers, cfg.snr_cfg, cfg.sink).sigma_zeq
    except PiggybackError:
        sigma = float("inf")
    print(classify_regime(powers, sigma, cfg.thresholds))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="piggyback", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def with_point(p, required=False):
        p.add_argument("--p1", type=float, required=required)
        p.add_argument("--p2", type=float, required=required)

    p = sub.add_parser("rates", help="rates and cut-set bound at one power point")
    p.add_argument("--config", required=True)
    with_point(p)
    p.add_argument("--bits", action="store_true", help="report in bits instead of nats")
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("sweep", help="evaluate the (p1, p2) grid and write CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--plot-dir")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("alloc", help="KKT power allocation at a water level or for a budget")
    p.add_argument("--config", required=True)
    with_point(p)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--eta", type=float)
    group.add_argument("--budget", type=float)
    p.add_argument("--fixed-point", action="store_true", help="re-derive the channel from the allocation until stable")
    p.set_defaults(func=cmd_alloc)

    p = sub.add_parser("immse-check", help="finite-difference check of the I-MMSE identity")
    p.add_argument("--config", required=True)
    with_point(p)
    p.add_argument("--scheme", choices=("joint", "sic"), required=True)
    p.add_argument("--step", type=float, required=True)
    p.add_argument("--tolerance", type=float, default=1e-8, help="used for Gaussian inputs only")
    p.set_defaults(func=cmd_immse_check)

    p = sub.add_parser("regime", help="classify the operating point")
    p.add_argument("--config", required=True)
    with_point(p, required=True)
    p.set_defaults(func=cmd_regime)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "fixed_point", False) and args.budget is None:
        print("--fixed-point needs --budget", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except ConfigInvalid as exc:
        print(exc, file=sys.stderr)
        return 2
    except PiggybackError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
