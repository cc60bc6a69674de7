#!/usr/bin/env python3
"""Comparative statics sweep: r_a^2 c_a from 200 down to 20 (21 log-spaced
points) against the fixed opponent (7, 15)."""

import sys
from pathlib import Path

from instability.cli import main

OUT = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("artifacts/sweep")


if __name__ == "__main__":
    code = main(["sweep", "--rb", "7", "--cb", "15", "--axis-lo", "200",
                 "--axis-hi", "20", "--axis-points", "21",
                 "--out-dir", str(OUT)])
    print(f"sweep  exit {code}")
    sys.exit(code)
