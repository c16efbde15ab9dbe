#!/usr/bin/env python3
"""Run the triangle demo chain and print the report (optionally caching stage outputs)."""
import argparse
import sys

from swapsens.fixtures import triangle_pipeline_spec
from swapsens.pipeline import run_pipeline


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--out-dir", help="write content-addressed stage outputs here")
    args = ap.parse_args()
    rep = run_pipeline(triangle_pipeline_spec(args.seed), args.out_dir)
    print(rep.to_text())
    return 0 if rep.ok else 2


if __name__ == "__main__":
    sys.exit(main())
