#!/usr/bin/env python3
"""Path simulation under the balanced deterrence equilibrium: 1000 paths from
x0 = 0.1 converging to the stable point 0.5."""

import sys
from pathlib import Path

from instability.cli import main

OUT = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("artifacts/simulation")


if __name__ == "__main__":
    code = main(["simulate", "--ra", "1", "--ca", "2", "--rb", "1", "--cb", "2",
                 "--xbar", "0.5", "--x0", "0.1", "--dt", "1e-4",
                 "--t-max", "50", "--n-paths", "1000", "--seed", "42",
                 "--out-dir", str(OUT)])
    print(f"simulation  exit {code}")
    sys.exit(code)
