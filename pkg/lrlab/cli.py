"""
lrlab Command Line
`lrlab run <config.toml>`, `lrlab list`, `lrlab validate <config.toml>`

Exit codes: 0 every rigorous check passed, 2 passed with warnings, 1 a check failed,
64 invalid configuration.
"""

import argparse
import logging
import sys
from pathlib import Path

import pandas as pd

from lrlab import __version__, config
from lrlab.errors import ConfigError, LrlabError
from lrlab.reports import write_frame, write_summary
from lrlab.scenarios import SCENARIOS, ScenarioResult, scenario_table

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_WARN = 2
EXIT_CONFIG = 64

STATUS_MARKS = {"pass": "✓", "warn": "⚠️", "fail": "❌"}


def exit_code(statuses):
    if "fail" in statuses:
        return EXIT_FAIL
    if "warn" in statuses:
        return EXIT_WARN
    return EXIT_OK


def run_scenario(cfg, name, out, jobs=None):
    """Run one configured scenario and write its summary and tables under out/name"""
    scenario = SCENARIOS[name]
    try:
        result = scenario.run(cfg.params[name], seed=cfg.seed, tolerances=cfg.tolerances, jobs=jobs)
    except ConfigError:
        raise
    except LrlabError as exc:
        logger.error(f"{name}: {exc}")
        result = ScenarioResult(name)
        result.fail(f"{type(exc).__name__}: {exc}")
    directory = Path(out) / name
    tables = []
    for table_name, frame in sorted(result.tables.items()):
        write_frame(frame, directory / f"{table_name}.csv")
        tables.append(f"{table_name}.csv")
    write_summary({
        "scenario": name,
        "theorem": scenario.theorem,
        "status": result.status,
        "params": cfg.params[name],
        "seed": cfg.seed,
        "config_hash": cfg.hash,
        "tolerances": cfg.tolerances,
        "warnings": result.warnings,
        "tables": tables,
        "results": result.summary,
    }, directory / "summary.json")
    return result


def run_config(cfg, out, jobs=None):
    """All scenarios of a validated configuration; returns (results, manifest)"""
    results = []
    for i, name in enumerate(cfg.scenarios, 1):
        print(f"\n{i}. {name}: {SCENARIOS[name].theorem}")
        result = run_scenario(cfg, name, out, jobs)
        for message in result.warnings:
            print(f"   {STATUS_MARKS['fail' if result.status == 'fail' else 'warn']} {message}")
        print(f"   {STATUS_MARKS[result.status]} {result.status} ({len(result.tables)} tables)")
        results.append(result)
    statuses = [r.status for r in results]
    manifest = {
        "config_hash": cfg.hash,
        "seed": cfg.seed,
        "tolerances": cfg.tolerances,
        "scenarios": [{"name": r.name, "status": r.status} for r in results],
        "exit_code": exit_code(statuses),
    }
    write_summary(manifest, Path(out) / "manifest.json")
    return results, manifest


def cmd_list(args):
    table = scenario_table()
    print("=" * 60)
    print("lrlab scenarios")
    print("=" * 60)
    for row in table.itertuples(index=False):
        print(f"\n{row.name}")
        print(f"   {row.theorem}")
        print(f"   {row.description}")
        if args.verbose:
            print(f"   defaults: {row.defaults}")
    return EXIT_OK


def cmd_validate(args):
    cfg = config.load_config(args.config)
    print(f"✓ {args.config}: {len(cfg.scenarios)} scenario(s), config hash {cfg.hash[:12]}")
    return EXIT_OK


def cmd_run(args):
    cfg = config.load_config(args.config)
    if args.jobs is not None and args.jobs < 1:
        raise ConfigError(f"--jobs must be positive, got {args.jobs}")
    out = config.output_dir(args.out, cfg.out)
    jobs = config.worker_cap(args.jobs)

    print("=" * 60)
    print(f"lrlab run: {args.config}")
    print("=" * 60)
    print(f"   Output: {out}")
    print(f"   Workers: {jobs}")
    print(f"   Config hash: {cfg.hash[:12]}")

    results, manifest = run_config(cfg, out, jobs)

    print("\n" + "=" * 60)
    counts = pd.Series([r.status for r in results]).value_counts()
    print("   " + ", ".join(f"{counts.get(s, 0)} {s}" for s in ("pass", "warn", "fail")))
    print(f"   Reports in {out}")
    print("=" * 60)
    return manifest["exit_code"]


def build_parser():
    parser = argparse.ArgumentParser(prog="lrlab", description="Numerical checks of Lieb-Robinson bounds")
    parser.add_argument("--version", action="version", version=f"lrlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the scenarios of a TOML configuration")
    run.add_argument("config", type=Path)
    run.add_argument("--jobs", type=int, default=None, help="worker cap (default LRLAB_JOBS or 1)")
    run.add_argument("--out", default=None, help="report directory (overrides LRLAB_OUT and the config)")
    run.add_argument("--verbose", "-v", action="store_true")
    run.set_defaults(handler=cmd_run)

    listing = sub.add_parser("list", help="list the scenarios")
    listing.add_argument("--verbose", "-v", action="store_true", help="show default parameters")
    listing.set_defaults(handler=cmd_list)

    check = sub.add_parser("validate", help="validate a configuration without running it")
    check.add_argument("config", type=Path)
    check.add_argument("--verbose", "-v", action="store_true")
    check.set_defaults(handler=cmd_validate)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = "DEBUG" if args.verbose else config.log_level()
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"❌ Error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LrlabError as exc:
        print(f"❌ Error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
