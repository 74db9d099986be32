"""Command-line experiment runner: one subcommand per experiment kind."""

from __future__ import annotations

import argparse
import sys

from .config import EXPERIMENT_KINDS, load_config
from .experiments import build_system, emit_outputs, run_experiment
from .frame import write_signal_file


def _add_common(parser):
    parser.add_argument("--config", help="TOML config file (defaults are built in)")
    parser.add_argument("--seed", type=int, help="master seed override")
    parser.add_argument("--trials", type=int, help="Monte-Carlo trials per grid point")
    parser.add_argument("--outdir", default="results", help="output directory")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cazacsync",
        description="RGI-CO-OFDM synchronization experiments: CSV and plot emission",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in EXPERIMENT_KINDS:
        p = sub.add_parser(kind.replace("_", "-"), help=f"run the {kind} experiment")
        _add_common(p)

    info = sub.add_parser("info", help="print derived system quantities")
    info.add_argument("--config")

    dump = sub.add_parser("dump-frame", help="write one assembled frame to a signal file")
    dump.add_argument("--config")
    dump.add_argument("--out", required=True)
    dump.add_argument("--algorithm", default="proposed")
    dump.add_argument("--n-ds", type=int, default=10)
    return parser


def _overrides(args):
    out = {}
    if args.seed is not None:
        out["seed"] = args.seed
    if args.trials is not None:
        out["trials"] = args.trials
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "info":
        cfg = load_config(args.config)
        frame = cfg.frame
        print(f"ifft size:            {frame.n}")
        print(f"data subcarriers:     {frame.n_sc}")
        print(f"cp length:            {frame.n_cp} samples")
        print(f"subcarrier spacing:   {frame.subcarrier_spacing / 1e6:.6g} MHz")
        print(f"net data rate:        {frame.net_data_rate() / 1e9:.4f} Gb/s")
        print(f"symbol length:        {frame.symbol_len} samples")
        print(f"qam order:            {frame.qam_order}")
        return 0

    if args.command == "dump-frame":
        cfg = load_config(args.config)
        system = build_system(cfg, n_ds=args.n_ds)
        frame = system.frames.get(args.algorithm)
        if frame is None:
            print(f"error: no frame for algorithm {args.algorithm!r}", file=sys.stderr)
            return 2
        write_signal_file(args.out, frame.samples, cfg.frame, layout=frame.layout)
        print(f"wrote {len(frame.samples)} samples to {args.out}")
        return 0

    kind = args.command.replace("-", "_")
    try:
        cfg = load_config(args.config, **_overrides(args))
        rows, traces = run_experiment(cfg, kind)
        failures = emit_outputs(rows, traces, kind, args.outdir, cfg.assertions)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"{kind}: {len(rows)} result rows -> {args.outdir}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
