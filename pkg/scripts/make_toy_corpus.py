#!/usr/bin/env python3
"""Regenerate the bundled toy corpus under data/toy (or another directory)."""

import argparse
from pathlib import Path

from entrank.synthetic import write_toy_corpus

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out", nargs="?", default=ROOT / "data" / "toy", type=Path)
    ap.add_argument("-n", type=int, default=100, help="number of entities")
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    for role, path in write_toy_corpus(args.out, n=args.n, seed=args.seed).items():
        print(f"{role:14s} {path}")


if __name__ == "__main__":
    main()
