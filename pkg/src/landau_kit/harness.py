"""Measures analytic-smoothing structure: weighted derivative norms, M^k growth,
and joint Fourier-shell decay.

The smoothing fit forms S(alpha, beta) = sup_t ttilde^{(3/2)|alpha| + (1/2)|beta|}
||d_x^alpha d_v^beta f(t)|| with ttilde = min(1, t) and regresses

    log S = intercept + (|alpha| + |beta|) log C + sigma log((|alpha| + |beta|)!)

so sigma_fit ~ 1 is the analytic scaling; the shell spectrum uses the joint
index s = |m| + |eta| / k0, and its log-max slope is the exponential-decay
measurement of analyticity.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grid import GridSpec, PhaseField, transform
from .norms import h20_norm, psi_norm
from .timeavg import MSpec, apply_M_power, m_symbol


class ResolutionExceeded(Exception):
    pass


class InsufficientData(Exception):
    pass


@dataclass
class RecordRequests:
    alpha_beta: list  # list of (alpha: tuple3, beta: tuple3)
    k_max: int = 0  # -1 skips the M^k rows entirely
    t0: float = 0.25
    gamma: float = 1.0
    shells: bool = True


@dataclass
class RegularityRecord:
    t: float
    deriv_norms: dict  # (alpha, beta) -> ||d_x^alpha d_v^beta f||_{L2}
    mk_rows: dict  # k -> (h20, psi)
    shell_spectrum: list  # (shell_index, max |fhat|)


def default_alpha_beta(max_order: int = 4, dims: int = 1) -> list:
    """One representative (alpha, beta) per split of each total order <= max_order."""
    out = []
    for n in range(max_order + 1):
        for na in range(n + 1):
            nb = n - na
            alpha = (na, 0, 0)
            beta = (nb, 0, 0)
            out.append((alpha, beta))
    return out


def record(state, requests: RecordRequests) -> RegularityRecord:
    """All requested norms, computed spectrally from one fourier_xv transform."""
    f: PhaseField = state.f
    grid = f.grid
    if requests.k_max > 6:
        raise ResolutionExceeded("k_max must be <= 6")
    for alpha, beta in requests.alpha_beta:
        if sum(alpha) + sum(beta) > 6:
            raise ResolutionExceeded(f"derivative order {alpha},{beta} exceeds 6")
        if any(a > 0 for a in alpha[grid.spatial_dims :]):
            raise ResolutionExceeded(f"alpha {alpha} uses an absent spatial axis")
    F = transform(f, "fourier_xv")
    A2 = np.abs(F.data) ** 2
    meas = (2 * np.pi) ** grid.spatial_dims * (2 * grid.vmax) ** 3

    def axis_weights(values: np.ndarray, axis: int, power: int) -> np.ndarray:
        shape = [1] * A2.ndim
        shape[axis] = len(values)
        return (values.astype(float) ** (2 * power)).reshape(shape)

    deriv_norms = {}
    for alpha, beta in requests.alpha_beta:
        w = np.ones((1,) * A2.ndim)
        for ax in range(grid.spatial_dims):
            if alpha[ax]:
                w = w * axis_weights(np.abs(grid.m1d), ax, alpha[ax])
        for i in range(3):
            if beta[i]:
                w = w * axis_weights(np.abs(grid.eta1d), grid.spatial_dims + i, beta[i])
        deriv_norms[(tuple(alpha), tuple(beta))] = math.sqrt(
            float(np.sum(A2 * w)) * meas
        )

    mk_rows = {}
    if requests.k_max >= 0:
        t = max(state.t, requests.t0)
        t = min(t, 1.0)
        for k in range(requests.k_max + 1):
            g = f if k == 0 else apply_M_power(f, MSpec(t, requests.t0, float(k)))
            mk_rows[k] = (h20_norm(g), psi_norm(g, requests.gamma))

    shells = []
    if requests.shells:
        mod = np.abs(F.data)
        sidx = _shell_indices(grid)
        smax = int(sidx.max())
        cutoff = _shell_cutoff(grid)
        for s in range(0, smax + 1):
            if s > cutoff:
                break
            m = sidx == s
            if np.any(m):
                shells.append((s, float(mod[m].max())))
    return RegularityRecord(state.t, deriv_norms, mk_rows, shells)


def _shell_indices(grid: GridSpec) -> np.ndarray:
    shape = [1] * (grid.spatial_dims + 3)
    mm = 0.0
    for ax in range(grid.spatial_dims):
        s = list(shape)
        s[ax] = grid.nx
        mm = mm + np.abs(grid.m1d.reshape(s)) ** 2
    ee = 0.0
    for i in range(3):
        s = list(shape)
        s[grid.spatial_dims + i] = grid.nv
        ee = ee + (grid.eta1d.reshape(s) / grid.k0) ** 2
    return np.rint(np.sqrt(mm) + np.sqrt(ee)).astype(int)


def _shell_cutoff(grid: GridSpec) -> int:
    return grid.nx // 3 + grid.nv // 3


@dataclass
class SmoothingFit:
    sigma_fit: float
    C_fit: float
    r2: float
    degenerate: bool
    rows: list  # (n, log S)


def fit_smoothing(records: list, alpha_beta_set=None, weighting: str = "decayana") -> SmoothingFit:
    """Fit log sup_t ttilde^w ||d^a d^b f|| against n log C + sigma log n!.

    weighting 'decayana' uses w = (3/2)|alpha| + (1/2)|beta|; 'decayrate' uses
    w = |beta|/2 + 3/2 (pure velocity derivatives).
    """
    if len(records) < 8:
        raise InsufficientData("need at least 8 records")
    keys = alpha_beta_set or list(records[0].deriv_norms.keys())
    if weighting == "decayrate":
        # the short-time velocity rate is stated for pure v-derivatives
        keys = [ab for ab in keys if sum(ab[0]) == 0]
    S = {}
    for ab in keys:
        alpha, beta = ab
        if weighting == "decayana":
            w = 1.5 * sum(alpha) + 0.5 * sum(beta)
        elif weighting == "decayrate":
            w = 0.5 * sum(beta) + 1.5
        else:
            raise ValueError(f"unknown weighting {weighting}")
        best = 0.0
        for rec in records:
            tt = min(1.0, rec.t)
            if tt <= 0:
                continue
            best = max(best, tt**w * rec.deriv_norms[ab])
        S[ab] = best
    if all(v == 0.0 for v in S.values()):
        return SmoothingFit(0.0, 0.0, 0.0, True, [])
    rows = []
    for (alpha, beta), val in S.items():
        if val <= 0:
            continue
        n = sum(alpha) + sum(beta)
        rows.append((n, math.log(val)))
    ns = sorted(set(n for n, _ in rows))
    if len(ns) < 3:
        raise InsufficientData("need at least 3 distinct derivative orders")
    X = np.array([[1.0, n, math.lgamma(n + 1)] for n, _ in rows])
    y = np.array([ls for _, ls in rows])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    pred = X @ coef
    ssr = float(np.sum((y - pred) ** 2))
    sst = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ssr / sst if sst > 0 else 1.0
    return SmoothingFit(float(coef[2]), math.exp(coef[1]), r2, False, rows)


def spectrum_decay(rec: RegularityRecord, floor: float = 1e-13) -> tuple[float, float]:
    """Least-squares slope of log(shell max |fhat|) vs shell index above the floor.

    The fit starts at the peak shell: leading shells below the peak reflect the
    perturbation's x-structure (e.g. an empty mean mode), not spectral decay.
    """
    pts = [(s, v) for s, v in rec.shell_spectrum if v > floor]
    if len(pts) >= 3:
        peak = max(range(len(pts)), key=lambda i: pts[i][1])
        if peak <= len(pts) // 2:
            pts = pts[peak:]
        # a peak in the trailing half means the spectrum is not decaying at
        # all (e.g. white noise); fit the whole range in that case
    if len(pts) < 3:
        raise InsufficientData("fewer than 3 shells above the floor")
    x = np.array([s for s, _ in pts], dtype=float)
    y = np.array([math.log(v) for _, v in pts])
    A = np.stack([np.ones_like(x), x], axis=-1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = A @ coef
    sst = float(np.sum((y - y.mean()) ** 2))
    ssr = float(np.sum((y - pred) ** 2))
    r2 = 1.0 - ssr / sst if sst > 0 else 1.0
    return float(coef[1]), r2


# ---------------------------------------------------------------------------
# synthetic heat-flow oracle
# ---------------------------------------------------------------------------

def heat_flow_field(grid: GridSpec, t: float, x_mode: int = 1) -> PhaseField:
    """f(t) = e^{t Delta_v} f0 with fhat0 = 1 on every v-mode of one x-mode pair."""
    data = np.zeros(grid.shape, dtype=complex)
    eta2 = 0.0
    shape = [1, 1, 1]
    for i in range(3):
        s = list(shape)
        s[i] = grid.nv
        eta2 = eta2 + grid.eta1d.reshape(s) ** 2
    envelope = np.exp(-t * eta2)
    idx_plus = [slice(None)] * grid.spatial_dims
    data[(x_mode,) + (0,) * (grid.spatial_dims - 1)] = envelope
    data[(-x_mode,) + (0,) * (grid.spatial_dims - 1)] = envelope
    return transform(PhaseField(grid, data, "fourier_xv"), "physical")


def heat_flow_norm_closed_form(grid: GridSpec, t: float, beta: tuple) -> float:
    """Exact discrete ||d_v^beta e^{t Delta_v} f0|| for the oracle initial data."""
    eta2 = 0.0
    w = 1.0
    shape = [1, 1, 1]
    for i in range(3):
        s = list(shape)
        s[i] = grid.nv
        e = grid.eta1d.reshape(s)
        eta2 = eta2 + e**2
        if beta[i]:
            w = w * np.abs(e) ** (2 * beta[i])
    meas = (2 * np.pi) ** grid.spatial_dims * (2 * grid.vmax) ** 3
    return math.sqrt(2 * float(np.sum(w * np.exp(-2 * t * eta2))) * meas)


def heat_flow_records(grid: GridSpec, times, requests: RecordRequests) -> list:
    """RegularityRecords of the synthetic heat flow (shares the record pipeline)."""
    from .solver import SimState

    out = []
    for t in times:
        f = heat_flow_field(grid, float(t))
        out.append(record(SimState(float(t), f), requests))
    return out


# ---------------------------------------------------------------------------
# CSV / JSON emission (deterministic: %.17g floats, sorted keys, \n endings)
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_smoothing_csv(path: str | Path, records: list, config_hash: str) -> None:
    lines = [f"# config_hash={config_hash}"]
    lines.append("t,alpha1,alpha2,alpha3,beta1,beta2,beta3,norm,scaled_norm")
    for rec in records:
        tt = min(1.0, rec.t)
        for (alpha, beta), val in sorted(rec.deriv_norms.items()):
            w = 1.5 * sum(alpha) + 0.5 * sum(beta)
            scaled = tt**w * val if tt > 0 else 0.0
            lines.append(
                ",".join(
                    [_fmt(rec.t)]
                    + [str(a) for a in alpha]
                    + [str(b) for b in beta]
                    + [_fmt(val), _fmt(scaled)]
                )
            )
    Path(path).write_text("\n".join(lines) + "\n")


def write_mk_csv(path: str | Path, records: list, config_hash: str) -> None:
    lines = [f"# config_hash={config_hash}", "t,k,mk_h20,mk_psi"]
    for rec in records:
        for k in sorted(rec.mk_rows):
            h20, psi = rec.mk_rows[k]
            lines.append(",".join([_fmt(rec.t), str(k), _fmt(h20), _fmt(psi)]))
    Path(path).write_text("\n".join(lines) + "\n")


def write_spectrum_csv(path: str | Path, records: list, config_hash: str) -> None:
    lines = [f"# config_hash={config_hash}", "t,shell,log_max_mod"]
    for rec in records:
        for s, v in rec.shell_spectrum:
            if v > 0:
                lines.append(",".join([_fmt(rec.t), str(s), _fmt(math.log(v))]))
    Path(path).write_text("\n".join(lines) + "\n")


def write_fit_json(path: str | Path, fit: SmoothingFit, config_hash: str) -> None:
    payload = {
        "sigma_fit": fit.sigma_fit,
        "C_fit": fit.C_fit,
        "r2": fit.r2,
        "degenerate": fit.degenerate,
        "config_hash": config_hash,
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
