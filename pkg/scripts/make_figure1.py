#!/usr/bin/env python3
"""Regenerate the optimal-fidelity-vs-overlap curves as CSV.

Writes results/figure1.csv by default; pass an output path to override.
"""

import sys
from pathlib import Path

from qteleport.cli import main

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "results/figure1.csv"
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    raise SystemExit(main(["figure1", "--out", out]))
