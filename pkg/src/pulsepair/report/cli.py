"""Command-line entry point.

Examples
--------
::

    pulsepair run --config run.json --seed 3 --out out/
    pulsepair synth --out out/            # injection scenario, defaults
    pulsepair filter --preset fig3 --preset fig7 --out out/

Exit status is 0 on success, 2 for configuration errors and 3 for data
errors.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import build_config, default_document, load_config
from .errors import ConfigError, DataError
from .pipeline import run_pipeline, run_stage

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3
SUBCOMMANDS = ("synth", "detect", "pair", "filter", "analyze", "report", "run")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pulsepair",
                                     description="Polarized pulse-pair search pipeline")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "synth": "generate stage-1 detections from the scenario",
        "detect": "synthesize IQ and run the FFT energy detector (needs a frontend section)",
        "pair": "stage-2 pulse-pair search over stage-1 files",
        "filter": "stage-3 RFI filters and matched-filter presets",
        "analyze": "likelihood and multiplier analysis per preset",
        "report": "SVG + CSV panels per preset",
        "run": "all stages end to end, with manifest",
    }
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--preset", action="append",
                       help="analysis preset (repeatable; default: all)")
        p.add_argument("--seed", type=int, help="override the configuration seed")
        p.add_argument("--out", help="output directory")
    return parser


def _config(args):
    overrides = dict(seed=args.seed, presets=args.preset, output_dir=args.out)
    if args.config:
        return load_config(args.config, **overrides)
    return build_config(default_document(), **overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        if args.command == "run":
            manifest = run_pipeline(cfg)
            print(f"wrote {len(manifest['outputs'])} files; manifest at "
                  f"{cfg.output_dir / 'manifest.json'}")
        else:
            paths = run_stage(cfg, args.command)
            print(f"{args.command}: wrote {len(paths)} files under {cfg.output_dir}")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
