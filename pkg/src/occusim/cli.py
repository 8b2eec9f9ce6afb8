"""Command-line entry point.

    occusim validate CONFIG
    occusim simulate CONFIG [--seed N] [--out DIR]
    occusim sweep CONFIG --errors 5,10,15,20 [--seed N] [--workers N] [--out DIR]

Exit codes: 0 success, 1 config or input-data error, 2 runtime error,
64 usage error. Diagnostics go to stderr; results go to files, except the
per-level robust table that ``sweep`` prints on stdout.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import SimulationConfig, load_config, validate
from .errors import ConfigError, OccusimError
from .experiment import emit_scatter, run_error_sweep, run_window
from .master import dump_summary, load_inputs, write_report

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_USAGE = 64

log = logging.getLogger("occusim")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _levels(text: str) -> list[float]:
    try:
        levels = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None
    if not levels:
        raise argparse.ArgumentTypeError("no error levels given")
    return levels


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="occusim", description="Building thermal simulation with occupancy-forecast errors.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("validate", help="parse and check a config, run nothing")
    p.add_argument("config")

    for name, text in (("simulate", "one run at the configured occupancy error"),
                       ("sweep", "error sweep with replicates")):
        p = sub.add_parser(name, help=text)
        p.add_argument("config")
        p.add_argument("--seed", type=int, help="override the config's rng seed")
        p.add_argument("--out", metavar="DIR", help="output directory")
        if name == "sweep":
            p.add_argument("--errors", type=_levels, required=True, metavar="L1,L2,...",
                           help="occupancy error levels in percent")
            p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
            p.add_argument("--replicates", type=int, help="override the config's replicate count")
    return parser


def _output_prefix(cfg: SimulationConfig, out_dir: str | None) -> Path:
    stem = Path(cfg.files.output).name if cfg.files.output else "occusim"
    if out_dir is not None:
        directory = Path(out_dir)
    elif cfg.files.output:
        directory = Path(cfg.files.output).parent
    else:
        directory = Path(".")
    directory.mkdir(parents=True, exist_ok=True)
    return directory / stem


def _load(args) -> tuple[SimulationConfig, Path]:
    path = Path(args.config)
    cfg = load_config(path)
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, rng_seed=args.seed)
    validate(cfg)
    return cfg, path


def cmd_validate(args) -> int:
    cfg, path = _load(args)
    print(f"{path}: ok ({cfg.control.name.lower()}, {cfg.rooms} rooms, {cfg.n_steps} steps)", file=sys.stderr)
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg, _ = _load(args)
    inputs = load_inputs(cfg)
    level = cfg.error.occupancy
    result, report, pairs = run_window(inputs, level)
    extra = {
        "error_level": level,
        "seed": cfg.rng_seed,
        "achieved_error": {d.isoformat(): [p.achieved_error for p in ps] for d, ps in pairs.items()},
    }
    steps, summary = write_report(result, report, str(_output_prefix(cfg, args.out)), extra)
    log.info("wrote %s and %s", steps, summary)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg, _ = _load(args)
    if args.workers < 1:
        raise UsageError("--workers must be at least 1")
    report = run_error_sweep(cfg, args.errors, replicates=args.replicates, workers=args.workers)
    prefix = _output_prefix(cfg, args.out)
    scatter = Path(f"{prefix}.scatter.csv")
    emit_scatter(report, scatter)
    summary = {"seed": cfg.rng_seed, **report.summary()}
    dump_summary(f"{prefix}.sweep.json", summary)
    log.info("wrote %s", scatter)
    print("error_level,robust_percent")
    for level in report.levels:
        print(f"{level:g},{report.mean_robust(level):.2f}")
    return EXIT_OK


COMMANDS = {"validate": cmd_validate, "simulate": cmd_simulate, "sweep": cmd_sweep}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"occusim: usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"occusim: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"occusim: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OccusimError, RuntimeError, ValueError) as exc:
        print(f"occusim: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
