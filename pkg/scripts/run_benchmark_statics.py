#!/usr/bin/env python3
"""Benchmark comparative statics: solve the single-player benchmark for a
spread of (r, c) pairs and emit one artifact directory per case."""

import sys
from pathlib import Path

from instability.cli import main

CASES = [(7.0, 15.0), (5.0, 6.0), (6.0, 15.0), (10.0, 1.0)]
OUT = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("artifacts/benchmark")


if __name__ == "__main__":
    for r, c in CASES:
        out = OUT / f"r{r:g}_c{c:g}"
        code = main(["benchmark", "--r", str(r), "--c", str(c),
                     "--out-dir", str(out)])
        print(f"({r:g}, {c:g}) -> {out}  exit {code}")
        if code != 0:
            sys.exit(code)
