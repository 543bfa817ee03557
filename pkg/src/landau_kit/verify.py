"""Aggregated identity and bound suite behind `landau-kit verify`.

Each check returns IdentityResult rows: {identity_name, gamma, grid,
relative_error, threshold, pass}.  Collision identities run with the exact
(zero-padded) convolution engine on band-limited random fields; multiplier and
combinatorial identities are grid-cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from . import collision, norms, timeavg
from .grid import (
    GridSpec,
    PhaseField,
    VelocityField,
    band_limited_phase,
    band_limited_velocity,
    inner,
    norm_l2,
)


@dataclass
class IdentityResult:
    identity_name: str
    gamma: float
    grid: str
    relative_error: float
    threshold: float
    passed: bool

    def to_json(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def _grid_tag(grid: GridSpec) -> str:
    return f"nx{grid.nx}_nv{grid.nv}_R{grid.vmax:g}_d{grid.spatial_dims}"


def _res(name, gamma, grid, err, thr) -> IdentityResult:
    return IdentityResult(name, gamma, _grid_tag(grid), float(err), thr, bool(err <= thr))


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    num = float(np.sqrt(np.mean((a - b) ** 2)))
    den = float(np.sqrt(np.mean(b**2)))
    return num / max(den, 1e-300)


# ---------------------------------------------------------------------------
# collision identities
# ---------------------------------------------------------------------------

def decomposition_suite(
    grid: GridSpec,
    gammas=(0.0, 0.5, 1.0),
    pairs: int = 20,
    seed: int = 0,
    threshold: float = 1e-8,
) -> list:
    """Prop-level checks: direct vs decomposed assembly and the six form equivalences."""
    rng = np.random.default_rng(seed)
    results = []
    fields = [
        (
            band_limited_velocity(grid, rng).data.real,
            band_limited_velocity(grid, rng).data.real,
        )
        for _ in range(pairs)
    ]
    for gamma in gammas:
        op = collision.get_operator(grid, gamma, "exact")
        worst_sum = 0.0
        worst_form = [0.0] * 7
        for g, h in fields:
            cf = op.compute_coefficients(g)
            direct = op.gamma_direct_raw(cf, h)
            terms = [op.L_term(j, cf, h) for j in range(1, 7)]
            worst_sum = max(worst_sum, _rel(sum(terms), direct))
            for j in range(1, 7):
                form = op.L_term_conv_form(j, cf, h)
                worst_form[j] = max(worst_form[j], _rel(terms[j - 1], form))
        results.append(_res("decomposition_sum", gamma, grid, worst_sum, threshold))
        for j in range(1, 7):
            results.append(
                _res(f"L{j}_form_equivalence", gamma, grid, worst_form[j], threshold)
            )
    return results


def cancellation_suite(
    grid: GridSpec,
    gammas=(0.0, 0.5, 1.0),
    n_fields: int = 50,
    seed: int = 1,
    threshold: float = 1e-8,
) -> list:
    """Quadratic-form cancellations of L2, L3+L6 and the lambda/M identity at g = sqrt(mu)."""
    rng = np.random.default_rng(seed)
    results = []
    hs = [band_limited_velocity(grid, rng).data.real for _ in range(n_fields)]
    w = grid.dvol_v
    for gamma in gammas:
        op = collision.get_operator(grid, gamma, "exact")
        cf = op.compute_coefficients(grid.sqrt_maxwellian)
        V = [grid._vaxis(i) for i in range(3)]
        pos1 = sum(V[i] * cf.lam[(i, j)] for i in range(3) for j in range(3) if i != j)
        pos2 = sum(
            V[i] * cf.M_at(i, j) * V[j] for i in range(3) for j in range(3)
        )
        e_l2 = e_l36 = e_pos = 0.0
        for h in hs:
            h2 = float(np.sum(h * h) * w)
            l2 = float(np.sum(op.L_term(2, cf, h) * h) * w)
            l36 = float(
                np.sum((op.L_term(3, cf, h) + op.L_term(6, cf, h)) * h) * w
            )
            p1 = float(np.sum(pos1 * h * h) * w)
            p2 = float(np.sum(pos2 * h * h) * w)
            e_l2 = max(e_l2, abs(l2) / h2)
            e_l36 = max(e_l36, abs(l36) / h2)
            e_pos = max(e_pos, abs(p1 - p2) / max(abs(p2), 1e-300))
        results.append(_res("cancellation_L2", gamma, grid, e_l2, threshold))
        results.append(_res("cancellation_L3_L6", gamma, grid, e_l36, threshold))
        results.append(_res("lambda_M_quadratic_form", gamma, grid, e_pos, threshold))
    return results


# ---------------------------------------------------------------------------
# multiplier identities
# ---------------------------------------------------------------------------

def commutator_suite(
    grid: GridSpec,
    n_fields: int = 20,
    seed: int = 2,
    t0: float = 0.25,
    threshold: float = 1e-9,
) -> list:
    rng = np.random.default_rng(seed)
    results = []
    worst_transport = 0.0
    worst_wedge = 0.0
    times = rng.uniform(t0, 1.0, size=n_fields)
    for t in times:
        g = band_limited_phase(grid, rng, v_band=6, envelope="mu")
        rep = timeavg.commutator_transport_check(lambda _t: g, [t], t0)
        worst_transport = max(worst_transport, rep.max_rel_error)
        rep2 = timeavg.commutator_wedge_check(g, float(t), t0)
        worst_wedge = max(worst_wedge, rep2.max_rel_error)
    results.append(
        _res("commutator_transport", float("nan"), grid, worst_transport, threshold)
    )
    results.append(_res("commutator_wedge", float("nan"), grid, worst_wedge, threshold))
    return results


def mm_interpolation_suite(
    grid: GridSpec, n_fields: int = 20, seed: int = 3, t0: float = 0.25
) -> list:
    """||Lambda g||^2 = <M g, g> (even-power interpolation) and Cauchy-Schwarz."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    cs_ok = 0.0
    for _ in range(n_fields):
        g = band_limited_phase(grid, rng)
        t = float(rng.uniform(t0 + 0.05, 1.0))
        spec = timeavg.MSpec(t, t0, 1.0)
        l1 = timeavg.apply_lambda(g, 1, t, t0)
        l2 = timeavg.apply_lambda(g, 2, t, t0)
        lhs = norm_l2(l1) ** 2 + norm_l2(l2) ** 2
        Mg = timeavg.apply_M_power(g, spec)
        rhs = inner(Mg, g).real
        worst = max(worst, abs(lhs - rhs) / max(abs(rhs), 1e-300))
        cs = rhs - norm_l2(Mg) * norm_l2(g)
        cs_ok = max(cs_ok, cs / max(norm_l2(Mg) * norm_l2(g), 1e-300))
    return [
        _res("lambda_square_sum", float("nan"), grid, worst, 1e-10),
        _res("mm_cauchy_schwarz", float("nan"), grid, max(cs_ok, 0.0), 1e-12),
    ]


def leibniz_suite(grid: GridSpec, k_exact: int = 12, seed: int = 4, t0: float = 0.25) -> list:
    results = []
    table = timeavg.leibniz_table(k_exact)
    bad = 0
    for k in range(k_exact + 1):
        for j in range(2 * k + 1):
            if table.row_sum(k, j) != math.comb(2 * k, j):
                bad += 1
        if table.get(k, 2 * k, 0, k, 0) != 1:
            bad += 1
        if k >= 1 and table.get(k, 2 * k - 1, 1, k - 1, 0) != 2 * k:
            bad += 1
    results.append(
        IdentityResult("leibniz_exact_integers", float("nan"), _grid_tag(grid), float(bad), 0.0, bad == 0)
    )
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in (1, 2, 3):
        g = band_limited_phase(grid, rng)
        h = band_limited_phase(grid, rng)
        t = float(rng.uniform(t0 + 0.1, 1.0))
        worst = max(worst, timeavg.leibniz_expand_check(g, h, k, t, t0))
    results.append(_res("leibniz_expansion", float("nan"), grid, worst, 1e-7))
    return results


def symbol_bound_suite(grid: GridSpec, samples: int = 10_000) -> list:
    worst = -np.inf
    for k in range(0, 7):
        rep = timeavg.symbol_bound_sample(k, samples=samples, raise_on_violation=False)
        worst = max(worst, rep.max_log_ratio)
    err = math.exp(worst) - 1.0 if worst < 1 else float("inf")
    return [_res("symbol_bound", float("nan"), grid, max(err, 0.0), 1e-9)]


def ellipticity_suite(grid: GridSpec, samples: int = 100_000) -> list:
    c0, inv_c0 = timeavg.ellipticity_constant()
    lo, hi = timeavg.ellipticity_sample(samples)
    err = max(c0 - lo, hi - inv_c0, 0.0)
    return [_res("ellipticity_range", float("nan"), grid, err, 1e-12)]


def fougauss_suite(grid: GridSpec) -> list:
    rep = norms.gaussian_derivative_bound_check(grid)
    return [
        _res("gaussian_derivative_bound", float("nan"), grid, max(rep.max_ratio - 1.0, 0.0), 0.0)
    ]


GROUPS = {
    "decomposition": decomposition_suite,
    "cancellation": cancellation_suite,
    "commutator": commutator_suite,
    "mm": mm_interpolation_suite,
    "leibniz": leibniz_suite,
    "symbol": symbol_bound_suite,
    "ellipticity": ellipticity_suite,
    "fougauss": fougauss_suite,
}


def run_suite(
    grid_v: GridSpec,
    grid_x: GridSpec | None = None,
    only: list | None = None,
    pairs: int = 20,
    seed: int = 0,
) -> list:
    """Run the selected groups.

    Collision identities use grid_v; the two-path commutator checks need the
    velocity-box seam and the Maxwellian-envelope spectrum resolved (nv >= 64
    at vmax = 8), so they default to such a grid; the multiplier-exact groups
    (mm, leibniz) run on a cheap grid.
    """
    if grid_x is None:
        grid_x = grid_v if grid_v.nv >= 64 else GridSpec(nx=4, nv=64, vmax=grid_v.vmax)
    grid_cheap = grid_v if grid_v.nv <= 16 else GridSpec(nx=4, nv=16, vmax=grid_v.vmax)
    results = []
    selected = only or list(GROUPS)
    unknown = set(selected) - set(GROUPS)
    if unknown:
        raise ValueError(f"unknown verify groups: {sorted(unknown)}")
    for name in selected:
        fn = GROUPS[name]
        if name == "decomposition":
            results.extend(fn(grid_v, pairs=pairs, seed=seed))
        elif name == "cancellation":
            results.extend(fn(grid_v, seed=seed + 1))
        elif name == "commutator":
            results.extend(fn(grid_x))
        elif name in ("mm", "leibniz"):
            results.extend(fn(grid_cheap))
        else:
            results.extend(fn(grid_v))
    return results
