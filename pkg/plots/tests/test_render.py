import subprocess
import sys
from pathlib import Path

import pytest

PLOTS = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(PLOTS))

import render  # noqa: E402


def write_sample_outputs(tmp_path, config_hash="abc123"):
    (tmp_path / "smoothing.csv").write_text(
        f"# config_hash={config_hash}\n"
        "t,alpha1,alpha2,alpha3,beta1,beta2,beta3,norm,scaled_norm\n"
        "0.25,0,0,0,0,0,0,0.001,0.001\n"
        "0.5,0,0,0,0,0,0,0.0009,0.0009\n"
        "0.25,1,0,0,0,0,0,0.002,0.00025\n"
        "0.5,1,0,0,0,0,0,0.0015,0.00053\n"
    )
    (tmp_path / "mk.csv").write_text(
        f"# config_hash={config_hash}\n"
        "t,k,mk_h20,mk_psi\n"
        "0.25,0,0.001,0.002\n0.25,1,0.0005,0.001\n0.5,0,0.0009,0.0018\n0.5,1,0.0006,0.0011\n"
    )
    (tmp_path / "spectrum.csv").write_text(
        f"# config_hash={config_hash}\n"
        "t,shell,log_max_mod\n"
        "0.25,0,-7\n0.25,1,-7.5\n0.25,2,-8.2\n1,0,-7\n1,1,-9\n1,2,-11\n"
    )
    (tmp_path / "fit.json").write_text(
        '{"C_fit": 0.8, "config_hash": "%s", "degenerate": false, "r2": 0.9, "sigma_fit": 0.4}\n'
        % config_hash
    )


@pytest.mark.parametrize("kind,src", [("decay", "smoothing.csv"), ("mk_growth", "mk.csv"), ("spectrum", "spectrum.csv")])
def test_render_kinds(tmp_path, kind, src):
    write_sample_outputs(tmp_path)
    out = tmp_path / f"{kind}.svg"
    spec = render.FigureSpec(kind=kind, inputs=[str(tmp_path / src)], output=str(out))
    render.render(spec)
    assert out.exists() and out.stat().st_size > 0


def test_render_deterministic(tmp_path):
    write_sample_outputs(tmp_path)
    outs = []
    for name in ("a.svg", "b.svg"):
        spec = render.FigureSpec(
            kind="decay",
            inputs=[str(tmp_path / "smoothing.csv")],
            output=str(tmp_path / name),
            fit_json=str(tmp_path / "fit.json"),
        )
        render.render(spec)
        outs.append((tmp_path / name).read_bytes())
    assert outs[0] == outs[1]


def test_hash_mismatch_refused(tmp_path):
    write_sample_outputs(tmp_path)
    (tmp_path / "fit.json").write_text(
        '{"C_fit": 0.8, "config_hash": "OTHER", "degenerate": false, "r2": 0.9, "sigma_fit": 0.4}\n'
    )
    spec = render.FigureSpec(
        kind="decay",
        inputs=[str(tmp_path / "smoothing.csv")],
        output=str(tmp_path / "x.svg"),
        fit_json=str(tmp_path / "fit.json"),
    )
    with pytest.raises(render.SchemaMismatch):
        render.render(spec)


def test_schema_mismatch_refused(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("wrong,header\n1,2\n")
    spec = render.FigureSpec(kind="decay", inputs=[str(bad)], output=str(tmp_path / "y.svg"))
    with pytest.raises(render.SchemaMismatch):
        render.render(spec)


def test_empty_csv_warning_banner(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text(
        "# config_hash=abc\nt,alpha1,alpha2,alpha3,beta1,beta2,beta3,norm,scaled_norm\n"
    )
    out = tmp_path / "empty.svg"
    spec = render.FigureSpec(kind="decay", inputs=[str(empty)], output=str(out))
    render.render(spec)
    assert b"no data" in out.read_bytes()


def test_unknown_kind_rejected(tmp_path):
    with pytest.raises(render.SchemaMismatch):
        render.FigureSpec(kind="pie", inputs=["x"], output="y")


def test_cli_roundtrip(tmp_path):
    write_sample_outputs(tmp_path)
    script = PLOTS / "render.py"
    out = tmp_path / "cli.svg"
    proc = subprocess.run(
        [sys.executable, str(script), "--kind", "spectrum", "--in",
         str(tmp_path / "spectrum.csv"), "--out", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert out.exists()
    proc2 = subprocess.run(
        [sys.executable, str(script), "--kind", "decay", "--in",
         str(tmp_path / "missing.csv"), "--out", str(out)],
        capture_output=True, text=True,
    )
    assert proc2.returncode == 1
