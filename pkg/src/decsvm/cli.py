"""
Command-line entry point: ``decsvm {converge,simulate,tune,realdata}``.

Any config key can be overridden with ``--set section.key=value``; values are
parsed as YAML scalars, so ``--set admm.tau=0.5`` gives a float and
``--set converge.kernels=[gaussian,uniform]`` a list.
"""

import argparse
import logging
import sys

import yaml

from .experiments import MODES, load_config, run

log = logging.getLogger("decsvm")


def _parse_set(items):
    out = {}
    for item in items or ():
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise SystemExit(f"--set expects key=value, got {item!r}")
        out[key.strip()] = yaml.safe_load(raw)
    return out


def build_parser():
    ap = argparse.ArgumentParser(prog="decsvm", description=__doc__.splitlines()[1])
    sub = ap.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        sp = sub.add_parser(mode)
        sp.add_argument("-c", "--config", help="YAML config file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", default=[],
                        help="override a config key (repeatable)")
        sp.add_argument("-r", "--replications", type=int)
        sp.add_argument("--seed", type=int, dest="base_seed")
        sp.add_argument("-o", "--output-dir")
        sp.add_argument("-j", "--workers", type=int)
        if mode == "realdata":
            sp.add_argument("--data", help="path to communities.data")
        sp.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    overrides = {"mode": args.mode}
    for key in ("replications", "base_seed", "output_dir", "workers"):
        if getattr(args, key) is not None:
            overrides[key] = getattr(args, key)
    if getattr(args, "data", None):
        overrides["realdata.csv_path"] = args.data
    overrides.update(_parse_set(args.set))
    try:
        cfg = load_config(args.config, overrides)
    except (ValueError, TypeError) as exc:
        print(f"decsvm: bad config: {exc}", file=sys.stderr)
        return 2
    log.info("config hash %s, writing to %s", cfg.hash(), cfg.output_dir)
    result = run(cfg)
    if hasattr(result, "to_string"):
        print(result.to_string(index=False))
    return 0


if __name__ == "__main__":
    sys.exit(main())
