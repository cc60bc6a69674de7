#!/usr/bin/env python3
"""Construct and verify the reference equilibria: the symmetric accommodating
pair (7, 15)/(7, 15) and the balanced deterrence pair (1, 2)/(1, 2) at the
midpoint stable point."""

import sys
from pathlib import Path

from instability.cli import main

OUT = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("artifacts/equilibrium")


if __name__ == "__main__":
    worst = 0
    code = main(["equilibrium", "--ra", "7", "--ca", "15", "--rb", "7",
                 "--cb", "15", "--out-dir", str(OUT / "accommodating")])
    print(f"accommodating (7,15)/(7,15)  exit {code}")
    worst = max(worst, code)
    code = main(["equilibrium", "--ra", "1", "--ca", "2", "--rb", "1",
                 "--cb", "2", "--xbar", "0.5",
                 "--out-dir", str(OUT / "deterrence")])
    print(f"deterrence (1,2)/(1,2) xbar=0.5  exit {code}")
    sys.exit(max(worst, code))
