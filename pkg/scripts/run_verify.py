#!/usr/bin/env python3
"""Run the full identity/bound suite at the acceptance resolution and print a table.

Equivalent to `landau-kit verify` with the default config; kept as a script so
the suite can be run piecemeal while iterating on the operators.
"""

import sys
import time

from landau_kit.grid import GridSpec
from landau_kit.verify import GROUPS, run_suite


def main() -> int:
    only = sys.argv[1].split(",") if len(sys.argv) > 1 else None
    grid = GridSpec(nx=4, nv=32, vmax=8.0)
    grid_x = GridSpec(nx=4, nv=64, vmax=8.0)
    t0 = time.time()
    results = run_suite(grid, grid_x=grid_x, only=only)
    failed = 0
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        failed += not r.passed
        print(f"{mark}  {r.identity_name:32s} gamma={r.gamma:<4} rel_err={r.relative_error:.3e} thr={r.threshold:.1e}")
    print(f"\n{len(results) - failed}/{len(results)} identities passed in {time.time() - t0:.0f}s")
    print(f"groups: {', '.join(GROUPS)}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
