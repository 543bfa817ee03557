"""Command-line entry point: verify / simulate / smoothing / leibniz-table / report.

One JSON config document is shared by all subcommands (unknown keys are hard
errors).  Every run appends one manifest line to <out-dir>/manifests.jsonl.
Exit codes: 0 pass, 1 check failure, 2 config error, 3 runtime blowup.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .grid import GridSpec, set_fft_workers
from .harness import (
    InsufficientData,
    RecordRequests,
    default_alpha_beta,
    fit_smoothing,
    record,
    spectrum_decay,
    write_fit_json,
    write_mk_csv,
    write_smoothing_csv,
    write_spectrum_csv,
)
from .solver import BlowupDetected, ConfigInvalid, SimConfig, run, write_checkpoint, init
from .timeavg import leibniz_table
from .verify import run_suite

EXIT_PASS = 0
EXIT_CHECK_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_BLOWUP = 3


def _load_config(path: str | None) -> SimConfig:
    if path is None:
        return SimConfig.from_dict({})
    with open(path) as fh:
        doc = json.load(fh)
    return SimConfig.from_dict(doc)


def _write_manifest(out_dir: Path, command: str, config: SimConfig | None, t0: float, summary: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    entry = {
        "command": command,
        "config_hash": config.config_hash() if config else None,
        "config": config.to_dict() if config else None,
        "build": f"landau-kit {__version__}",
        "out_dir": str(out_dir),
        "wall_time_s": round(time.time() - t0, 3),
        "summary": summary,
    }
    with open(out_dir / "manifests.jsonl", "a") as fh:
        fh.write(json.dumps(entry, sort_keys=True) + "\n")


def cmd_verify(args) -> int:
    t0 = time.time()
    try:
        config = _load_config(args.config)
    except ConfigInvalid as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    out_dir = Path(args.out_dir)
    grid_v = config.grid
    only = args.only.split(",") if args.only else None
    try:
        results = run_suite(grid_v, only=only, pairs=args.pairs, seed=config.seed)
    except ValueError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    out_dir.mkdir(parents=True, exist_ok=True)
    report = [r.to_json() for r in results]
    (out_dir / "identity_report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n"
    )
    failed = [r for r in results if not r.passed]
    for r in results:
        print(
            f"{'PASS' if r.passed else 'FAIL'} {r.identity_name} gamma={r.gamma} "
            f"rel_err={r.relative_error:.3e} thr={r.threshold:.1e}"
        )
    _write_manifest(out_dir, "verify", config, t0, {"failed": [r.identity_name for r in failed]})
    if failed:
        print(f"first failing identity: {failed[0].identity_name}", file=sys.stderr)
        return EXIT_CHECK_FAILURE
    return EXIT_PASS


def cmd_simulate(args) -> int:
    t0 = time.time()
    try:
        config = _load_config(args.config)
        if args.t_end is not None:
            config.t_end = args.t_end
            config.__post_init__()
    except ConfigInvalid as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        if config.t_end == 0:
            state = init(config)
            write_checkpoint(out_dir / "checkpoint_t0", config, state)
            _write_manifest(out_dir, "simulate", config, t0, {"t_end": 0.0})
            print("t_end = 0: wrote initial checkpoint only")
            return EXIT_PASS
        state, _ = run(config, checkpoint_dir=out_dir)
    except ConfigInvalid as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except BlowupDetected as e:
        print(f"blowup: {e}", file=sys.stderr)
        _write_manifest(out_dir, "simulate", config, t0, {"blowup": str(e)})
        return EXIT_BLOWUP
    mom = state.diagnostics["moments"]
    summary = {"t_final": state.t, "mass_drift": mom[-1]["mass"] - mom[0]["mass"]}
    _write_manifest(out_dir, "simulate", config, t0, summary)
    print(f"simulated to t={state.t}; checkpoints in {out_dir}")
    return EXIT_PASS


def cmd_smoothing(args) -> int:
    t0 = time.time()
    try:
        config = _load_config(args.config)
    except ConfigInvalid as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    n_samples = args.samples
    times = [config.t_end * (i + 1) / n_samples for i in range(n_samples)]
    requests = RecordRequests(
        alpha_beta=default_alpha_beta(4, config.grid.spatial_dims),
        k_max=min(args.k_max, 4),
        gamma=config.gamma,
    )
    try:
        state, records = run(
            config,
            observer_times=times,
            observer=lambda s: record(s, requests),
            checkpoint_dir=out_dir if args.checkpoints else None,
        )
    except ConfigInvalid as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except BlowupDetected as e:
        print(f"blowup: {e}", file=sys.stderr)
        _write_manifest(out_dir, "smoothing", config, t0, {"blowup": str(e)})
        return EXIT_BLOWUP
    h = config.config_hash()
    write_smoothing_csv(out_dir / "smoothing.csv", records, h)
    write_mk_csv(out_dir / "mk.csv", records, h)
    write_spectrum_csv(out_dir / "spectrum.csv", records, h)
    fit = fit_smoothing(records)
    write_fit_json(out_dir / "fit.json", fit, h)
    try:
        # the velocity-rate weighting is reported alongside; it is not sharp
        fit_rate = fit_smoothing(records, weighting="decayrate")
        write_fit_json(out_dir / "fit_decayrate.json", fit_rate, h)
    except InsufficientData:
        pass
    slopes = {}
    for rec in records:
        try:
            slope, r2 = spectrum_decay(rec)
            slopes[rec.t] = (slope, r2)
        except Exception:
            pass
    (out_dir / "slopes.json").write_text(
        json.dumps({format(k, ".6g"): v for k, v in sorted(slopes.items())}, indent=2)
        + "\n"
    )
    _write_manifest(
        out_dir, "smoothing", config, t0, {"sigma_fit": fit.sigma_fit, "C_fit": fit.C_fit}
    )
    print(f"sigma_fit={fit.sigma_fit:.4f} C_fit={fit.C_fit:.4f} r2={fit.r2:.4f}")
    return EXIT_PASS


def cmd_leibniz_table(args) -> int:
    t0 = time.time()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        table = leibniz_table(args.k_max)
    except Exception as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    path = out_dir / "leibniz_table.csv"
    lines = ["k,j,l,p,q,c"]
    for row in table.csv_rows():
        lines.append(",".join(str(x) for x in row))
    path.write_text("\n".join(lines) + "\n")
    _write_manifest(out_dir, "leibniz-table", None, t0, {"k_max": args.k_max})
    print(f"wrote {path}")
    return EXIT_PASS


def cmd_report(args) -> int:
    """Summarize an existing out-dir (identity report + fit) to stdout."""
    out_dir = Path(args.out_dir)
    ok = True
    rep_path = out_dir / "identity_report.json"
    if rep_path.exists():
        report = json.loads(rep_path.read_text())
        n_fail = sum(1 for r in report if not r["pass"])
        print(f"identities: {len(report) - n_fail}/{len(report)} passed")
        ok = ok and n_fail == 0
    fit_path = out_dir / "fit.json"
    if fit_path.exists():
        fit = json.loads(fit_path.read_text())
        print(
            f"smoothing fit: sigma={fit['sigma_fit']:.4f} C={fit['C_fit']:.4f} "
            f"r2={fit['r2']:.4f} config={fit['config_hash']}"
        )
    if not rep_path.exists() and not fit_path.exists():
        print("nothing to report", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    return EXIT_PASS if ok else EXIT_CHECK_FAILURE


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="landau-kit")
    parser.add_argument("--threads", type=int, default=None, help="intra-op FFT threads")
    parser.add_argument("--out-dir", default="out", help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run the identity/bound suite")
    p.add_argument("--config", default=None)
    p.add_argument("--only", default=None, help="comma-separated group filter")
    p.add_argument("--pairs", type=int, default=20)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="advance the Cauchy problem")
    p.add_argument("--config", default=None)
    p.add_argument("--t-end", type=float, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("smoothing", help="simulate + record + fit smoothing rates")
    p.add_argument("--config", default=None)
    p.add_argument("--samples", type=int, default=16)
    p.add_argument("--k-max", type=int, default=2)
    p.add_argument("--checkpoints", action="store_true")
    p.set_defaults(func=cmd_smoothing)

    p = sub.add_parser("leibniz-table", help="emit the coefficient table as CSV")
    p.add_argument("k_max", type=int)
    p.set_defaults(func=cmd_leibniz_table)

    p = sub.add_parser("report", help="summarize outputs in --out-dir")
    p.set_defaults(func=cmd_report)

    args = parser.parse_args(argv)
    if args.threads is not None:
        set_fft_workers(args.threads)
    try:
        return args.func(args)
    except ConfigInvalid as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except BlowupDetected as e:
        print(f"blowup: {e}", file=sys.stderr)
        return EXIT_BLOWUP


if __name__ == "__main__":
    sys.exit(main())
