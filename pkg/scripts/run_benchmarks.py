#!/usr/bin/env python3
"""Run the packaged corpus through both solver paths and print the table.

Thin wrapper over `apc bench`; accepts the same flags, e.g.

    python scripts/run_benchmarks.py --timeout 120 --json results.json
    python scripts/run_benchmarks.py hello hw hwm

Needs a configured solver (APC_SOLVER or --solver-cmd); see scripts/solver/.
"""

import sys

from apc.cli import main

if __name__ == "__main__":
    sys.exit(main(["bench", *sys.argv[1:]]))
