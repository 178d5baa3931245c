"""Command-line entry point: ``lobmarkov <command> [options]``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import List, Optional

from .config import CONFIG_ENV, RunConfig
from .pipeline import STAGES, PipelineError, run_pipeline

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# (flag, config field, argparse kwargs)
_OVERRIDES = [
    ("--out", "output_dir", {"metavar": "DIR", "help": "output directory"}),
    ("--workers", "workers", {"type": int, "help": "parallel ingest workers"}),
    ("--sides", "sides", {"choices": ["ask", "bid", "both"]}),
    ("--delimiter", "delimiter", {"help": "input field delimiter"}),
    ("--aggregation", "aggregation", {"choices": ["pooled", "averaged"]}),
    ("--smoothing", "smoothing", {"type": float, "help": "additive smoothing pseudo-count"}),
    ("--entropy-base", "entropy_base", {"type": float, "help": "log base for entropy rate (default e)"}),
    ("--jsd-base", "jsd_base", {"type": float}),
    ("--acf-max-lag", "acf_max_lag", {"type": int}),
    ("--pca-k", "pca_k", {"type": int}),
    ("--cluster-space", "cluster_space", {"choices": ["pca", "raw", "tsne"]}),
    ("--ward-k", "ward_k", {"type": int}),
    ("--dbscan-eps", "dbscan_eps", {"type": float, "help": "default: k-distance elbow"}),
    ("--dbscan-min-pts", "dbscan_min_pts", {"type": int}),
]
_SWITCHES = [
    ("--header", "header", "input files start with a header row"),
    ("--gtest-pooled", "gtest_pooled", "also run the G-test on the pooled table"),
    ("--acf-on-states", "acf_on_states", "report ACF of state indices too"),
    ("--seed-with-presession", "seed_with_presession", "prefix each session with the last pre-market quote"),
]
_TSNE = [
    ("--tsne-perplexity", "perplexity", float),
    ("--tsne-iterations", "iterations", int),
    ("--tsne-learning-rate", "learning_rate", float),
    ("--tsne-seed", "seed", int),
]


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help=f"JSON run configuration (default: ${CONFIG_ENV})")
    p.add_argument("--input", "-i", action="append", metavar="PATH",
                   help="tick file or directory of files (repeatable)")
    for flag, dest, kw in _OVERRIDES:
        p.add_argument(flag, dest=dest, default=None, **kw)
    for flag, dest, help_ in _SWITCHES:
        p.add_argument(flag, dest=dest, action="store_const", const=True, default=None, help=help_)
    for flag, dest, typ in _TSNE:
        p.add_argument(flag, dest="tsne_" + dest, type=typ, default=None)
    p.add_argument("--dump-sequences", action="store_true", help="write ingest/sequences.txt")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lobmarkov", description="Markov-chain analysis of limit-order price changes")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True
    for name in ["run", *STAGES]:
        p = sub.add_parser(name, help="all stages" if name == "run" else f"{name} stage only")
        _add_run_options(p)
    sim = sub.add_parser("simulate", help="write a synthetic tick dataset with a planted model")
    sim.add_argument("--preset", choices=["u-shape", "small"], default="small")
    sim.add_argument("--out", required=True, metavar="DIR")
    sim.add_argument("--events-per-run", type=int, default=None)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--days", type=int, default=None, help="number of trading days to write")
    return parser


def resolve_config(args) -> RunConfig:
    path = args.config or os.environ.get(CONFIG_ENV)
    base = RunConfig.load(path) if path else RunConfig()
    d = base.to_dict()
    if args.input:
        d["inputs"] = [str(Path(p)) for p in args.input]
    for _, dest, _ in _OVERRIDES:
        v = getattr(args, dest)
        if v is not None:
            d[dest] = v
    for _, dest, _ in _SWITCHES:
        if getattr(args, dest):
            d[dest] = True
    for _, dest, _ in _TSNE:
        v = getattr(args, "tsne_" + dest)
        if v is not None:
            d["tsne"][dest] = v
    cfg = RunConfig.from_dict(d)
    if not cfg.inputs:
        raise UsageError("no inputs: pass --input or set inputs in the config file")
    return cfg


def _simulate(args) -> int:
    from . import synth
    from .tickstore import DEFAULT_TIER_MAP, DEFAULT_TRADING_DAYS

    out = Path(args.out)
    if args.preset == "u-shape":
        model, tier_map, n_ev = synth.u_shape_model(), dict(DEFAULT_TIER_MAP), 500
        days = list(DEFAULT_TRADING_DAYS)
    else:
        model, n_ev = synth.small_model(), 300
        tier_map = {"AMZN": "HMC", "PEP": "MMC", "NKE": "LMC"}
        days = list(DEFAULT_TRADING_DAYS[:2])
    if args.days is not None:
        if not 1 <= args.days <= len(DEFAULT_TRADING_DAYS):
            raise UsageError(f"--days must be between 1 and {len(DEFAULT_TRADING_DAYS)}")
        days = list(DEFAULT_TRADING_DAYS[: args.days])
    n_ev = args.events_per_run or n_ev
    files = synth.write_fixture(out / "ticks", model, tier_map, days, events_per_run=n_ev, seed=args.seed)
    synth.write_planted(out / "planted.json", model)
    cfg = RunConfig(inputs=["ticks"], output_dir="out", tier_map=tier_map, trading_days=days)
    cfg.save(out / "config.json")
    print(f"wrote {len(files)} tick files, planted.json and config.json to {out}")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "simulate":
            return _simulate(args)
        cfg = resolve_config(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"lobmarkov: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    stages = None if args.command == "run" else [args.command]
    try:
        manifest = run_pipeline(cfg, stages, dump_sequences=args.dump_sequences)
    except PipelineError as exc:
        print(f"lobmarkov: {exc}", file=sys.stderr)
        return exc.exit_code
    for w in manifest.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"{args.command}: {len(manifest.artifacts)} artifacts in {cfg.output_dir} "
          f"(config {manifest.config_digest[:12]})")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
