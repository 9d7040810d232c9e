"""Command-line entry point: ``polaruep {sweep,diagnostics,calibrate,construct}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .polar import construct_code, write_reliability_file
from .sim import (
    ConfigError,
    SweepConfig,
    calibrate,
    read_config_file,
    run_diagnostics,
    run_sweep,
)

# flag dest -> config key; every flag defaults to None so only given flags override
_FLAGS = {
    "n": "n", "rinf": "r_inf", "krep": "k_rep", "systematic": "systematic",
    "rep_mode": "rep_mode", "design_snr_db": "design_snr_db", "ebn0": "ebn0",
    "seed": "seed", "max_trials": "max_trials", "min_errors": "min_errors",
    "scale_file": "scale_file", "out": "out", "workers": "workers",
    "block_size": "block_size", "construction": "construction",
    "calibration_trials": "calibration_trials", "ebn0_rate": "ebn0_rate",
    "channels": "diag_channels",
}


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value configuration file")
    common.add_argument("--n", type=int, help="code length exponent (N = 2^n)")
    common.add_argument("--rinf", type=float, help="effective information rate K/N")
    common.add_argument("--krep", help="repetition lengths, comma separated (odd)")
    common.add_argument("--systematic", action=argparse.BooleanOptionalAction, default=None)
    common.add_argument("--rep-mode", choices=("soft", "scaled", "hard"))
    common.add_argument("--design-snr-db", type=float, help="construction Es/N0 in dB")
    common.add_argument("--construction", choices=("ga", "bhattacharyya"))
    common.add_argument("--ebn0", help="Eb/N0 grid start:stop:step in dB")
    common.add_argument("--ebn0-rate", choices=("r_inf", "r"),
                        help="rate used to normalise Eb/N0")
    common.add_argument("--seed", type=int)
    common.add_argument("--max-trials", type=int)
    common.add_argument("--min-errors", type=int)
    common.add_argument("--scale-file", help="mean |LLR| file for scaled soft decoding")
    common.add_argument("--calibration-trials", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--block-size", type=int)
    common.add_argument("--channels", help="diagnostic channels, comma separated")
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="polaruep", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("sweep", parents=[common], help="BER versus Eb/N0")
    sub.add_parser("diagnostics", parents=[common],
                   help="correlation, LLR histograms and per-channel BER at the design SNR")
    sub.add_parser("calibrate", parents=[common], help="estimate mean |LLR| per channel")
    sub.add_parser("construct", parents=[common], help="export the reliability order")
    return p


def config_from_args(args: argparse.Namespace) -> SweepConfig:
    values = read_config_file(args.config) if args.config else {}
    for dest, key in _FLAGS.items():
        v = getattr(args, dest, None)
        if v is not None:
            values[key] = v
    return SweepConfig.from_mapping(values).validate()


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(args)
        if args.command == "sweep":
            res = run_sweep(cfg)
            for r in res.rows:
                print(f"k_rep={r['k_rep']:<3d} Eb/N0={r['eb_n0_db']:5.2f} dB  "
                      f"BER_crit={r['ber_crit']:.3e}  BER_avg={r['ber_avg']:.3e}  "
                      f"trials={r['trials']}")
        elif args.command == "diagnostics":
            res = run_diagnostics(cfg)
            print(f"{res.stats.trials} trials at Es/N0 = {cfg.design_snr_db} dB")
        elif args.command == "calibrate":
            for k, means in calibrate(cfg).items():
                print(f"k_rep={k}: {len(means)} channels, mean |L| "
                      f"{means.min():.1f} .. {means.max():.1f}")
        else:
            out = Path(cfg.out or ".")
            out.mkdir(parents=True, exist_ok=True)
            for k in cfg.k_rep:
                code = construct_code(cfg.n, cfg.K - 1 + k, cfg.design_snr_db,
                                      method=cfg.construction)
                path = write_reliability_file(code, out / f"reliability_k{code.K}.txt")
                print(path)
    except ConfigError as exc:
        print(f"polaruep {args.command}: invalid {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
