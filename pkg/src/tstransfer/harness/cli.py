"""Run time series transfer learning experiments described by a YAML config.

Exit codes: 0 success, 1 some units failed (or a command error), 2 bad config.
"""
import argparse
import json
import logging
import sys

from ..errors import ConfigError, TSTransferError
from .config import load_config
from .report import cmd_report
from .run import (cmd_baseline, cmd_finetune, cmd_pretrain, cmd_run, load_dataset, schedule)

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG = 0, 1, 2


def _parser():
    p = argparse.ArgumentParser(prog="tstransfer", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("config", help="experiment YAML file")
        return sp

    add("validate-config", "check the config and the datasets it references")
    sp = add("pretrain", "pre-train one architecture on one source dataset")
    sp.add_argument("--arch", required=True)
    sp.add_argument("--source", required=True)
    sp.add_argument("--workers", type=int)
    sp = add("baseline", "train from-scratch models on a reduced target variant")
    sp.add_argument("--target", required=True)
    sp.add_argument("--reduction", type=int, required=True)
    sp.add_argument("--arch")
    sp.add_argument("--workers", type=int)
    sp = add("finetune", "fine-tune a pre-trained bundle over the omega grid")
    sp.add_argument("--source", required=True)
    sp.add_argument("--target", required=True)
    sp.add_argument("--reduction", type=int, required=True)
    sp.add_argument("--arch")
    sp.add_argument("--workers", type=int)
    sp = add("run", "run (or resume) the whole experiment, then write the report")
    sp.add_argument("--workers", type=int)
    sp.add_argument("--no-report", action="store_true")
    sp = add("report", "write report tables from the result store")
    sp.add_argument("--out", help="output directory (default <store>/report)")
    return p


def _validate(cfg):
    for name in cfg.datasets:
        ds = load_dataset(cfg, name)
        if name in cfg.targets:
            n_train = len(ds) * 70 // 100
            too_big = [s for s in cfg.reduction_sizes if s > n_train]
            if too_big:
                raise ConfigError(f"{name}: reduction sizes {too_big} exceed the "
                                  f"{n_train}-instance training split")
    return schedule(cfg)


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.command == "validate-config":
            first, second = _validate(cfg)
            print(f"ok: {len(first)} pretrain/baseline units, {len(second)} finetune units")
            return EXIT_OK
        if args.command == "report":
            summary = cmd_report(cfg, args.out)
            for row in summary["win_loss"]:
                print(json.dumps(row))
            return EXIT_OK
        _validate(cfg)
        if args.command == "pretrain":
            runner = cmd_pretrain(cfg, args.source, args.arch, args.workers)
        elif args.command == "baseline":
            runner = cmd_baseline(cfg, args.target, args.reduction, args.arch, args.workers)
        elif args.command == "finetune":
            runner = cmd_finetune(cfg, args.source, args.target, args.reduction, args.arch,
                                  args.workers)
        else:
            runner = cmd_run(cfg, args.workers)
            if not args.no_report:
                cmd_report(cfg)
        print(f"trained {runner.trained} units, {len(runner.failed)} failed")
        for uid in runner.failed:
            print(f"failed: {uid}", file=sys.stderr)
        return EXIT_PARTIAL if runner.failed else EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TSTransferError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
