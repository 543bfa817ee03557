#!/usr/bin/env python3
"""Turn the solver harness CSV/JSON outputs into figures.

Reads only the documented file schemas (smoothing.csv, mk.csv, spectrum.csv,
fit.json) and never recomputes any norm.  Three figure kinds:

* decay:     scaled derivative norms ttilde^w ||d^a d^b f|| per (alpha, beta) vs t
* mk_growth: ||M^k f||_{(2,0)} growth vs the (2k)!/(2k+1)^3 reference shape
* spectrum:  per-shell log max |fhat| at each recorded time plus the slope trend

Rendering is deterministic: fixed svg hashsalt, no embedded dates, so repeated
runs are byte-identical.

Usage: plots/render.py --kind decay --in smoothing.csv --out fig.svg
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "landau-kit-plots"

KINDS = ("decay", "mk_growth", "spectrum")


class SchemaMismatch(Exception):
    pass


@dataclass
class FigureSpec:
    kind: str
    inputs: list
    output: str
    fit_json: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaMismatch(f"unknown figure kind {self.kind!r}")


def read_csv(path: str | Path, expected_header: str):
    """Rows plus the config_hash comment; raises SchemaMismatch on a bad header."""
    lines = Path(path).read_text().splitlines()
    config_hash = None
    if lines and lines[0].startswith("# config_hash="):
        config_hash = lines[0].split("=", 1)[1]
        lines = lines[1:]
    if not lines or lines[0] != expected_header:
        raise SchemaMismatch(
            f"{path}: expected header {expected_header!r}, got {lines[0] if lines else '<empty>'!r}"
        )
    rows = list(csv.DictReader(lines))
    return rows, config_hash


def check_hashes(hashes: dict) -> None:
    seen = {h for h in hashes.values() if h is not None}
    if len(seen) > 1:
        raise SchemaMismatch(f"config_hash fields disagree: {hashes}")


def _empty_figure(ax, message: str) -> None:
    ax.text(
        0.5, 0.5, f"no data\n{message}", ha="center", va="center",
        transform=ax.transAxes, color="firebrick", fontsize=12,
        bbox=dict(boxstyle="round", facecolor="mistyrose"),
    )


def render_decay(spec: FigureSpec, ax) -> None:
    rows, h = read_csv(spec.inputs[0], "t,alpha1,alpha2,alpha3,beta1,beta2,beta3,norm,scaled_norm")
    hashes = {spec.inputs[0]: h}
    if spec.fit_json:
        fit = json.loads(Path(spec.fit_json).read_text())
        hashes[spec.fit_json] = fit.get("config_hash")
    check_hashes(hashes)
    if not rows:
        _empty_figure(ax, "empty smoothing.csv")
        return
    series = {}
    for r in rows:
        key = tuple(int(r[c]) for c in ("alpha1", "alpha2", "alpha3", "beta1", "beta2", "beta3"))
        series.setdefault(key, []).append((float(r["t"]), float(r["scaled_norm"])))
    for key in sorted(series):
        pts = sorted(series[key])
        n = sum(key)
        ax.semilogy(
            [p[0] for p in pts],
            [max(p[1], 1e-300) for p in pts],
            label=f"a={key[:3]}, b={key[3:]}",
            lw=1.0 + 0.25 * n,
        )
    ax.set_xlabel("t")
    ax.set_ylabel(r"$\tilde t^{\,3|a|/2+|b|/2}\,\|\partial_x^a\partial_v^b f\|$")
    ax.set_title("scaled derivative-norm decay")
    if spec.fit_json:
        fit = json.loads(Path(spec.fit_json).read_text())
        ax.annotate(
            f"sigma_fit={fit['sigma_fit']:.3f}  C_fit={fit['C_fit']:.3f}",
            xy=(0.02, 0.02), xycoords="axes fraction", fontsize=9,
        )
    ax.legend(fontsize=6, ncol=2, loc="upper right")


def render_mk_growth(spec: FigureSpec, ax) -> None:
    rows, h = read_csv(spec.inputs[0], "t,k,mk_h20,mk_psi")
    check_hashes({spec.inputs[0]: h})
    if not rows:
        _empty_figure(ax, "empty mk.csv")
        return
    by_k = {}
    for r in rows:
        by_k.setdefault(int(r["k"]), []).append((float(r["t"]), float(r["mk_h20"])))
    ks = sorted(by_k)
    sup = [max(v for _, v in by_k[k]) for k in ks]
    ax.semilogy(ks, [max(s, 1e-300) for s in sup], "o-", label=r"$\sup_t\|M^k f\|_{(2,0)}$")
    # reference shape (2k)!/(2k+1)^3, normalized to the k=0 value
    if sup[0] > 0:
        ref = [sup[0] * math.factorial(2 * k) / (2 * k + 1) ** 3 for k in ks]
        ax.semilogy(ks, ref, "s--", color="gray", label=r"$(2k)!/(2k+1)^3$ ref")
    ax.set_xlabel("k")
    ax.set_ylabel("sup over t")
    ax.set_xticks(ks)
    ax.set_title(r"$M^k$ norm growth vs factorial reference")
    ax.legend(fontsize=8)


def render_spectrum(spec: FigureSpec, ax) -> None:
    rows, h = read_csv(spec.inputs[0], "t,shell,log_max_mod")
    check_hashes({spec.inputs[0]: h})
    if not rows:
        _empty_figure(ax, "empty spectrum.csv")
        return
    by_t = {}
    for r in rows:
        by_t.setdefault(float(r["t"]), []).append((int(r["shell"]), float(r["log_max_mod"])))
    times = sorted(by_t)
    shown = times[:: max(1, len(times) // 6)]
    cmap = plt.get_cmap("viridis")
    for i, t in enumerate(shown):
        pts = sorted(by_t[t])
        ax.plot(
            [p[0] for p in pts], [p[1] for p in pts],
            color=cmap(i / max(len(shown) - 1, 1)), label=f"t={t:g}", lw=1.2,
        )
    ax.set_xlabel("shell index |m| + |eta|/k0")
    ax.set_ylabel(r"$\log\max|\hat f|$")
    ax.set_title("Fourier shell decay over time")
    ax.legend(fontsize=7)


RENDERERS = {"decay": render_decay, "mk_growth": render_mk_growth, "spectrum": render_spectrum}


def render(spec: FigureSpec) -> str:
    fig, ax = plt.subplots(figsize=(6.0, 4.2), dpi=120)
    try:
        RENDERERS[spec.kind](spec, ax)
        fig.tight_layout()
        fig.savefig(spec.output, metadata={"Date": None} if spec.output.endswith(".svg") else None)
    finally:
        plt.close(fig)
    return spec.output


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--in", dest="inputs", required=True, nargs="+")
    parser.add_argument("--out", required=True)
    parser.add_argument("--fit-json", default=None)
    args = parser.parse_args(argv)
    try:
        spec = FigureSpec(kind=args.kind, inputs=args.inputs, output=args.out, fit_json=args.fit_json)
        render(spec)
    except (SchemaMismatch, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
