"""Command line entry point: ``advos run | sweep | table``.

Exit codes: 0 every cell ok, 2 some cell NA or failed, 1 configuration error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..data import Manifest
from ..errors import AdvosError, ConfigurationError
from .config import METHODS, ExperimentConfig
from .runner import parse_grid, run, sweep_fs
from .tables import dumps, read_results, table_csv

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2


def _select(config: ExperimentConfig, args) -> ExperimentConfig:
    kw = {}
    if args.seed is not None:
        kw["seeds"] = [int(s) for s in args.seed.split(",")]
    if args.method is not None:
        kw["methods"] = [m.strip() for m in args.method.split(",")]
    if args.dataset is not None:
        wanted = {d.strip() for d in args.dataset.split(",")}
        keep = [p for p in config.datasets
                if Path(p).stem in wanted or Path(p).name in wanted or Manifest.read(p).name in wanted]
        if not keep:
            raise ConfigurationError(f"no configured dataset matches {sorted(wanted)}")
        kw["datasets"] = keep
    if args.output_dir is not None:
        kw["output_dir"] = args.output_dir
    if getattr(args, "jobs", None) is not None:
        kw["jobs"] = args.jobs
    if not kw:
        return config
    return ExperimentConfig(**{**config.__dict__, **kw})


def _cmd_run(args) -> int:
    config = _select(ExperimentConfig.read(args.config), args)
    table = run(config)
    sys.stdout.write(table_csv(table))
    print(f"results written to {config.output_path()}", file=sys.stderr)
    return EXIT_OK if table.all_ok else EXIT_PARTIAL


def _cmd_sweep(args) -> int:
    config = _select(ExperimentConfig.read(args.config), args)
    tables = sweep_fs(config, parse_grid(args.grid))
    for f, t in sorted(tables.items()):
        for agg in t.aggregates():
            acsa = "NA" if agg["acsa"] is None else f"{agg['acsa']:.2f}"
            print(f"{agg['dataset']},{agg['method']},{f:g},{acsa}")
    print(f"sweep written to {config.output_path()}", file=sys.stderr)
    return EXIT_OK if all(t.all_ok for t in tables.values()) else EXIT_PARTIAL


def _cmd_table(args) -> int:
    table = read_results(args.input)
    if args.format == "json":
        sys.stdout.write(dumps(table.to_dict()))
    else:
        sys.stdout.write(table_csv(table, "final" if args.final else "best"))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="advos", description="Adversarial oversampling experiments")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def cell_args(sp):
        sp.add_argument("--config", required=True, help="experiment config (key = value)")
        sp.add_argument("--seed", help="seed or comma list, overrides config")
        sp.add_argument("--method", help=f"method or comma list from {', '.join(METHODS)}")
        sp.add_argument("--dataset", help="dataset name(s) to keep")
        sp.add_argument("--output-dir", help="overrides output_dir")
        sp.add_argument("--jobs", type=int, help="parallel cells")

    r = sub.add_parser("run", help="run the dataset x method x seed matrix")
    cell_args(r)
    r.set_defaults(fn=_cmd_run)
    s = sub.add_parser("sweep", help="sweep the oversampling fraction f")
    cell_args(s)
    s.add_argument("--grid", default="0.1:1.0:0.1", help="a:b:step or comma list")
    s.set_defaults(fn=_cmd_sweep)
    t = sub.add_parser("table", help="print a results table")
    t.add_argument("--in", dest="input", required=True, help="results dir or results.json")
    t.add_argument("--format", choices=("csv", "json"), default="csv")
    t.add_argument("--final", action="store_true", help="final-epoch instead of best-epoch scores")
    t.set_defaults(fn=_cmd_table)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except ConfigurationError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except AdvosError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
