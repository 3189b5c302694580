#!/usr/bin/env python3
"""End-to-end hermetic demo: build synthetic corpora, run the six-size sweep
with stub backends, and print the summary table.

Usage:
    python scripts/run_demo_sweep.py [--out runs/demo] [--seed 13]
"""

import argparse
from pathlib import Path

from ragmt.config import PipelineConfig
from ragmt.generation import RunLog
from ragmt.harness import build_context, format_table1_md, sweep, write_sweep_artifacts
from ragmt.synthetic import make_synthetic_corpora


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/demo")
    parser.add_argument("--seed", type=int, default=13)
    args = parser.parse_args()

    test, kb = make_synthetic_corpora()
    cfg = PipelineConfig(seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ctx = build_context(cfg, cache_path=out / "embeddings.jsonl")
    report = sweep(test, kb, cfg, ctx, run_log=RunLog(out / "runlog.jsonl"))
    paths = write_sweep_artifacts(report, out)
    print(format_table1_md(report))
    print(f"config hash: {report.config_hash}")
    print("artifacts:")
    for name, path in paths.items():
        print(f"  {name}: {path}")


if __name__ == "__main__":
    main()
