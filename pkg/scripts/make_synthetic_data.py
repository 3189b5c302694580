#!/usr/bin/env python3
"""Generate the synthetic test/KB corpora and write them as JSONL files.

The knowledge base plants one near-duplicate per test sentence, so a hermetic
sweep (mock encoder + copy-stub) shows the knowledge-base size effect
mechanically: mean BLEU grows with near-duplicate coverage.

Usage:
    python scripts/make_synthetic_data.py --out data/ [--n-test 50] [--n-kb 2000] [--seed 97]
"""

import argparse
from pathlib import Path

from ragmt.corpus import save_pairs
from ragmt.synthetic import make_synthetic_corpora


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data", help="output directory")
    parser.add_argument("--n-test", type=int, default=50)
    parser.add_argument("--n-kb", type=int, default=2000)
    parser.add_argument("--seed", type=int, default=97)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    test, kb = make_synthetic_corpora(n_test=args.n_test, n_kb=args.n_kb, seed=args.seed)
    save_pairs(test, out / "synthetic_test.jsonl")
    save_pairs(kb, out / "synthetic_kb.jsonl")
    print(f"wrote {len(test)} test pairs -> {out / 'synthetic_test.jsonl'}")
    print(f"wrote {len(kb)} kb pairs   -> {out / 'synthetic_kb.jsonl'}")


if __name__ == "__main__":
    main()
