"""Secondary acceptance: render all three figure kinds from real solver outputs,
byte-identically on rerun."""

import json
import subprocess
import sys
from pathlib import Path

PLOTS = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(PLOTS))

import render  # noqa: E402


def test_render_from_real_run(tmp_path):
    from landau_kit.cli import main

    doc = {
        "nx": 4, "nv": 16, "vmax": 8.0, "gamma": 1.0, "eps0": 1e-3,
        "t_end": 0.125, "collision_integrator": "rk2",
    }
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps(doc))
    out = tmp_path / "out"
    rc = main(["--out-dir", str(out), "smoothing", "--config", str(cfg), "--samples", "8", "--k-max", "2"])
    assert rc == 0

    for kind, src in (("decay", "smoothing.csv"), ("mk_growth", "mk.csv"), ("spectrum", "spectrum.csv")):
        renders = []
        for tag in ("r1", "r2"):
            target = tmp_path / f"{kind}_{tag}.svg"
            spec = render.FigureSpec(
                kind=kind,
                inputs=[str(out / src)],
                output=str(target),
                fit_json=str(out / "fit.json") if kind == "decay" else None,
            )
            render.render(spec)
            renders.append(target.read_bytes())
        assert renders[0] == renders[1], f"{kind} render not byte-identical"
        print(f"\nACCEPTANCE PASS: plots render {kind} (byte-identical rerun)")
