"""Command-line entry point: ``mongelab <experiment> [--config PATH] [--seed N] [--out DIR]``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from mongelab.config import EXPERIMENTS, TIERS, parse_config
from mongelab.errors import ConfigError

HELP = {
    "pogorelov-solve": "integrate the profile equation and export it",
    "annulus-profile": "dyadic annulus masses of an example at power p",
    "growth-fit": "growth exponent away from the singular set",
    "dichotomy": "calibrate the annulus dichotomy on a corpus",
    "sections": "extract sections and fit sub-level growth",
    "orlicz": "Orlicz divergence verdict and Luxemburg norms",
    "sharpness": "finite/divergent verdicts around the critical exponent",
    "verify-all": "run every acceptance criterion",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mongelab", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=HELP[name])
        p.add_argument("--config", type=Path, help="configuration file (key = value grammar)")
        p.add_argument("--seed", type=int, help="base random seed")
        p.add_argument("--out", help="output directory")
        p.add_argument("--tier", choices=TIERS, help="budget tier for verify-all")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    text, source = "", "<none>"
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as exc:
            print(f"mongelab: cannot read config: {exc}", file=sys.stderr)
            return 2
        source = str(args.config)
    try:
        declared = _file_keys(text).get("experiment")
        if declared is not None and declared != args.command:
            raise ConfigError(f"config declares experiment {declared!r}, command is {args.command!r}")
        cfg = parse_config(text, source, overrides={"experiment": args.command, "seed": args.seed,
                                                    "out": args.out, "tier": args.tier})
    except ConfigError as exc:
        print(f"mongelab: config error: {exc}", file=sys.stderr)
        return 2
    from mongelab.reports import run_experiment

    rep = run_experiment(cfg)
    print(f"{rep.experiment}: {'PASS' if rep.passed else 'FAIL'} -> {cfg.out}")
    if rep.error:
        print(f"error: {rep.error}", file=sys.stderr)
    return rep.exit_code


def _file_keys(text: str) -> dict:
    keys = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0]
        for chunk in line.split(","):
            if "=" in chunk:
                k, _, v = chunk.partition("=")
                keys[k.strip()] = v.strip()
    return keys


if __name__ == "__main__":
    sys.exit(main())
