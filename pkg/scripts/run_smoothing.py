#!/usr/bin/env python3
"""Full smoothing experiment: simulate, record, fit, and render the figures.

Runs the desk-scale acceptance configuration (gamma=1, eps0=1e-3, nx=16, nv=32,
t in [0,1], 17 samples) by default; pass an output directory and optionally a
config JSON path.  Takes a few minutes at the default resolution.

    python scripts/run_smoothing.py out/ [config.json]
"""

import subprocess
import sys
from pathlib import Path

from landau_kit.cli import main as cli_main


def main() -> int:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("out/smoothing")
    args = ["--out-dir", str(out), "smoothing", "--samples", "16", "--k-max", "2"]
    if len(sys.argv) > 2:
        args += ["--config", sys.argv[2]]
    rc = cli_main(args)
    if rc != 0:
        return rc
    render = Path(__file__).resolve().parents[1] / "plots" / "render.py"
    for kind, src in (("decay", "smoothing.csv"), ("mk_growth", "mk.csv"), ("spectrum", "spectrum.csv")):
        cmd = [sys.executable, str(render), "--kind", kind, "--in", str(out / src),
               "--out", str(out / f"{kind}.svg")]
        if kind == "decay":
            cmd += ["--fit-json", str(out / "fit.json")]
        proc = subprocess.run(cmd)
        if proc.returncode != 0:
            return proc.returncode
    print(f"figures in {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
