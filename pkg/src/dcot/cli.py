"""Command-line entry point.

Exit codes: 0 success, 1 configuration or input error, 2 numerical failure.
"""
import argparse
import json
import logging
import os
import sys

from .config import RunConfig, load_config
from .errors import ConfigError, DCOTError, NumericalError
from .evalmetrics import METRIC_COLUMNS
from .model import load_checkpoint
from .runner import (CONFIDENCE_COLUMNS, RunError, confidence_over, confidence_rows,
                     dump_schedules, evaluate, run_experiment, sweep_noise, write_csv)
from .curriculum import VARIANTS
from .synthdata import generate_dataset, load_dataset, save_dataset, split_indices

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value run configuration file")
    common.add_argument("--seed", type=int,
                        help="sets both dataset.seed and run_seed")
    common.add_argument("--out-dir", help="output directory (overrides out_dir)")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key; repeatable")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="dcot", description="Confidence-weighted retrieval training on synthetic tri-view data.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("generate", parents=[common], help="write the synthetic dataset to <out-dir>/dataset.bin")

    tr = sub.add_parser("train", parents=[common], help="train one run and write its outputs")
    tr.add_argument("--data", help="dataset file from `generate` (default: regenerate from config)")

    ev = sub.add_parser("eval", parents=[common], help="retrieval metrics of a saved checkpoint")
    ev.add_argument("--checkpoint", help="default: <out-dir>/checkpoint.bin")
    ev.add_argument("--data")

    sw = sub.add_parser("sweep-noise", parents=[common], help="dcot vs baseline over noise ratios")
    sw.add_argument("--ratios", type=_floats, default=[0.0, 0.2, 0.4, 0.6])
    sw.add_argument("--jobs", type=int, default=1)

    ds = sub.add_parser("dump-schedules", parents=[common], help="write sigma(t) and G(t) tables")
    ds.add_argument("--variants", default="", help="comma-separated extra variants: " + ",".join(VARIANTS))

    dc = sub.add_parser("dump-confidence", parents=[common], help="per-pair confidence of a saved checkpoint")
    dc.add_argument("--checkpoint")
    dc.add_argument("--data")
    dc.add_argument("--t", type=float, default=1.0, help="training progress at which to estimate")
    return p


def resolve_config(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = (x.strip() for x in item.split("=", 1))
        overrides[key] = value
    if args.seed is not None:
        overrides["dataset.seed"] = args.seed
        overrides["run_seed"] = args.seed
    if args.out_dir:
        overrides["out_dir"] = args.out_dir
    return cfg.with_overrides(**overrides) if overrides else cfg


def _dataset(cfg, path):
    return load_dataset(path) if path else generate_dataset(cfg.dataset)


def _checkpoint(cfg, path):
    return load_checkpoint(path or os.path.join(cfg.out_dir, "checkpoint.bin"))


def run(args):
    cfg = resolve_config(args)
    if args.command == "generate":
        os.makedirs(cfg.out_dir, exist_ok=True)
        path = os.path.join(cfg.out_dir, "dataset.bin")
        save_dataset(generate_dataset(cfg.dataset), path)
        print(path)
    elif args.command == "train":
        report = run_experiment(cfg, dataset=_dataset(cfg, args.data))
        print(json.dumps({"run_id": report.run_id, "out_dir": cfg.out_dir,
                          "final": report.evals[-1], "confidence": report.confidence}))
    elif args.command == "eval":
        ds = _dataset(cfg, args.data)
        _, test_idx = split_indices(len(ds), cfg.test_fraction, seed=cfg.dataset.seed)
        m = evaluate(_checkpoint(cfg, args.checkpoint), ds, test_idx)
        print(json.dumps({k: v for k, v in m.as_row().items() if k in METRIC_COLUMNS}))
    elif args.command == "sweep-noise":
        rows = sweep_noise(cfg, args.ratios, jobs=args.jobs)
        for row in rows:
            print(f"{row['noise_ratio']:g} {row['mode']} sumR={row['sumr']:.2f}")
    elif args.command == "dump-schedules":
        variants = [v for v in args.variants.split(",") if v]
        bad = [v for v in variants if v not in VARIANTS]
        if bad:
            raise ConfigError(f"unknown schedule variant(s): {', '.join(bad)}")
        for path in dump_schedules(cfg, variants=variants):
            print(path)
    elif args.command == "dump-confidence":
        ds = _dataset(cfg, args.data)
        train_idx, _ = split_indices(len(ds), cfg.test_fraction, seed=cfg.dataset.seed)
        raw, weight = confidence_over(cfg, _checkpoint(cfg, args.checkpoint), ds, train_idx, t=args.t)
        os.makedirs(cfg.out_dir, exist_ok=True)
        path = os.path.join(cfg.out_dir, "confidence.csv")
        write_csv(path, CONFIDENCE_COLUMNS,
                  confidence_rows(train_idx, raw, weight, ds.noisy_mask[train_idx]))
        print(path)
    return EXIT_OK


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(args)
    except RunError as exc:
        print(f"dcot: {exc}", file=sys.stderr)
        return EXIT_NUMERIC if isinstance(exc.cause, (NumericalError, FloatingPointError)) else EXIT_CONFIG
    except NumericalError as exc:
        print(f"dcot: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DCOTError, ValueError, OSError) as exc:
        print(f"dcot: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
