"""Command-line entry point.

``dispersim run <config-file> [--experiment NAME] [--out DIR] [--threads N]``
runs one experiment from a YAML config (a preset name is accepted in place of
a file). ``dispersim presets`` lists the built-in configurations; ``--show``
prints one as YAML and ``--write DIR`` emits all of them as files.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import PRESET_DESCRIPTIONS, dump_config, load_config, preset
from .errors import ConfigError, NumericalInstabilityError
from .harness import run_experiment


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dispersim",
        description="1D dispersive electromagnetic solvers and experiment harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment from a config file or preset name")
    run_p.add_argument("config", help="YAML config path, or a preset name")
    run_p.add_argument("--experiment", help="override the experiment field")
    run_p.add_argument("--out", help="override the output directory")
    run_p.add_argument("--threads", type=int, help="worker pool size for sweeps")

    pre_p = sub.add_parser("presets", help="list or export the built-in experiment configs")
    pre_p.add_argument("--show", metavar="NAME", help="print one preset as YAML")
    pre_p.add_argument("--write", metavar="DIR", help="write every preset as a YAML file")
    return parser


def _cmd_run(args) -> int:
    if args.config in PRESET_DESCRIPTIONS and not Path(args.config).exists():
        cfg = preset(args.config)
    else:
        cfg = load_config(args.config)
    if args.experiment:
        cfg.experiment = args.experiment
    if args.threads:
        cfg.threads = args.threads
    from .config import validate_config

    validate_config(cfg)
    out_dir = Path(args.out) if args.out else None
    report = run_experiment(cfg, out_dir=out_dir)
    target = out_dir if out_dir is not None else Path(cfg.output_dir)
    print(f"{cfg.experiment}: ok ({report.wall_time_s:.2f} s stepping); "
          f"results in {target}")
    return 0


def _cmd_presets(args) -> int:
    if args.show:
        print(dump_config(preset(args.show)), end="")
        return 0
    if args.write:
        out = Path(args.write)
        out.mkdir(parents=True, exist_ok=True)
        for name in sorted(PRESET_DESCRIPTIONS):
            path = out / f"{name}.yaml"
            path.write_text(dump_config(preset(name)))
            print(path)
        return 0
    for name in sorted(PRESET_DESCRIPTIONS):
        print(f"{name:18s} {PRESET_DESCRIPTIONS[name]}")
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_presets(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalInstabilityError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
