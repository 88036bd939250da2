"""
lrlab Full Scenario Run
Runs every scenario with the shipped configuration from configs/ and prints a statistics summary
"""

import sys
import time
from pathlib import Path

import pandas as pd

from lrlab import config
from lrlab.cli import exit_code, run_scenario
from lrlab.errors import ConfigError
from lrlab.reports import write_frame, write_summary
from lrlab.scenarios import SCENARIOS

# Paths
OUTPUT_DIR = config.output_dir(None, "reports/all")


def main():
    print("=" * 60)
    print("lrlab Full Scenario Run")
    print("=" * 60)
    print(f"   Output: {OUTPUT_DIR}")

    print("\n1. Validating configurations...")
    configs = {}
    for name in SCENARIOS:
        path = config.CONFIG_DIR / f"{name}.toml"
        try:
            configs[name] = config.load_config(path)
        except ConfigError as e:
            print(f"   ❌ Error: {e}")
            sys.exit(64)
        print(f"   ✓ {path}")

    print("\n2. Running scenarios...")
    rows = []
    for name, cfg in configs.items():
        start = time.perf_counter()
        result = run_scenario(cfg, name, OUTPUT_DIR)
        elapsed = time.perf_counter() - start
        mark = {"pass": "✓", "warn": "⚠️", "fail": "❌"}[result.status]
        print(f"   {mark} {name}: {result.status} in {elapsed:.1f}s")
        for message in result.warnings:
            print(f"      {message}")
        rows.append({
            "scenario": name,
            "status": result.status,
            "seconds": elapsed,
            "tables": len(result.tables),
            "rows": sum(len(t) for t in result.tables.values()),
            "warnings": len(result.warnings),
        })

    stats = pd.DataFrame(rows)
    write_frame(stats.drop(columns="seconds"), Path(OUTPUT_DIR) / "statistics.csv")
    write_summary({"scenarios": stats[["scenario", "status"]].to_dict(orient="records")},
                  Path(OUTPUT_DIR) / "manifest.json")

    print("\n3. Statistics")
    print(f"   Scenarios: {len(stats)}")
    print(f"   Passed: {(stats['status'] == 'pass').sum()}")
    print(f"   Warnings: {(stats['status'] == 'warn').sum()}")
    print(f"   Failed: {(stats['status'] == 'fail').sum()}")
    print(f"   Total time: {stats['seconds'].sum():.1f}s")
    print(f"   Slowest: {stats.loc[stats['seconds'].idxmax(), 'scenario']}")

    print("\n" + "=" * 60)
    print("Run complete!")
    print("=" * 60)
    sys.exit(exit_code(list(stats["status"])))


if __name__ == "__main__":
    main()
