import math

import numpy as np
import pytest

from landau_kit.grid import GridSpec, PhaseField, band_limited_phase, norm_l2, transform
from landau_kit.harness import (
    InsufficientData,
    RecordRequests,
    RegularityRecord,
    ResolutionExceeded,
    default_alpha_beta,
    fit_smoothing,
    heat_flow_field,
    heat_flow_norm_closed_form,
    heat_flow_records,
    record,
    spectrum_decay,
)
from landau_kit.norms import h20_norm
from landau_kit.solver import SimState
from landau_kit.timeavg import MSpec, apply_lambda, apply_M_power


GRID = GridSpec(nx=8, nv=16, vmax=8.0)


def test_record_single_mode_scaling(rng):
    F = PhaseField(GRID, np.zeros(GRID.shape, complex), "fourier_xv")
    F.data[2, 1, 0, 0] = 1.0
    F.data[-2, -1, 0, 0] = 1.0
    f = transform(F, "physical")
    req = RecordRequests(
        alpha_beta=[((0, 0, 0), (0, 0, 0)), ((1, 0, 0), (0, 0, 0)), ((2, 0, 0), (0, 0, 0))],
        k_max=0,
        shells=False,
    )
    rec = record(SimState(0.5, f), req)
    base = rec.deriv_norms[((0, 0, 0), (0, 0, 0))]
    assert rec.deriv_norms[((1, 0, 0), (0, 0, 0))] == pytest.approx(2 * base, rel=1e-12)
    assert rec.deriv_norms[((2, 0, 0), (0, 0, 0))] == pytest.approx(4 * base, rel=1e-12)


def test_record_k0_equals_h20(rng):
    f = band_limited_phase(GRID, rng)
    req = RecordRequests(alpha_beta=[((0, 0, 0), (0, 0, 0))], k_max=0, shells=False)
    rec = record(SimState(0.5, f), req)
    assert rec.mk_rows[0][0] == pytest.approx(h20_norm(f), rel=1e-12)


def test_record_m1_lambda_cross_check(rng):
    f = band_limited_phase(GRID, rng)
    t, t0 = 0.5, 0.25
    req = RecordRequests(alpha_beta=[((0, 0, 0), (0, 0, 0))], k_max=1, t0=t0, shells=False)
    rec = record(SimState(t, f), req)
    lam_sq = sum(
        norm_l2(apply_lambda(f, w, t, t0)) ** 2 for w in (1, 2)
    )
    from landau_kit.grid import inner

    Mf = apply_M_power(f, MSpec(t, t0, 1.0))
    assert inner(Mf, f).real == pytest.approx(lam_sq, rel=1e-10)
    assert rec.mk_rows[1][0] > 0


def test_record_is_pure(rng):
    f = band_limited_phase(GRID, rng)
    req = RecordRequests(alpha_beta=default_alpha_beta(2, 1), k_max=1, shells=True)
    r1 = record(SimState(0.5, f), req)
    r2 = record(SimState(0.5, f), req)
    assert r1.deriv_norms == r2.deriv_norms
    assert r1.mk_rows == r2.mk_rows
    assert r1.shell_spectrum == r2.shell_spectrum


def test_record_resolution_guard(rng):
    f = band_limited_phase(GRID, rng)
    with pytest.raises(ResolutionExceeded):
        record(SimState(0.5, f), RecordRequests(alpha_beta=[((7, 0, 0), (0, 0, 0))]))
    with pytest.raises(ResolutionExceeded):
        record(SimState(0.5, f), RecordRequests(alpha_beta=[((0, 1, 0), (0, 0, 0))]))


def test_heat_flow_oracle_fit():
    grid = GridSpec(nx=8, nv=32, vmax=8.0)
    times = [j / 16 for j in range(1, 17)]
    req = RecordRequests(alpha_beta=default_alpha_beta(4, 1), k_max=-1, shells=False)
    recs = heat_flow_records(grid, times, req)
    fit = fit_smoothing(recs)
    assert fit.sigma_fit <= 1.05
    # pipeline norms match the closed-form Gaussian-multiplier values exactly
    f = heat_flow_field(grid, 0.25)
    rec = record(SimState(0.25, f), RecordRequests(alpha_beta=default_alpha_beta(4, 1), k_max=-1, shells=False))
    for (alpha, beta), val in rec.deriv_norms.items():
        exact = heat_flow_norm_closed_form(grid, 0.25, beta)  # |m|^{|alpha|} = 1
        assert val == pytest.approx(exact, rel=1e-12)


def test_heat_flow_cfit_stable_across_refinement():
    times = [j / 16 for j in range(1, 17)]
    req = RecordRequests(alpha_beta=default_alpha_beta(4, 1), k_max=-1, shells=False)
    cfits = []
    for nv in (32, 64):
        grid = GridSpec(nx=8, nv=nv, vmax=8.0)
        fit = fit_smoothing(heat_flow_records(grid, times, req))
        cfits.append(fit.C_fit)
    assert abs(cfits[1] - cfits[0]) <= 0.1 * cfits[1]


def test_fit_degenerate_on_zero():
    recs = []
    for j in range(10):
        recs.append(
            RegularityRecord(
                (j + 1) / 10,
                {((0, 0, 0), (0, 0, 0)): 0.0, ((1, 0, 0), (0, 0, 0)): 0.0},
                {},
                [],
            )
        )
    fit = fit_smoothing(recs)
    assert fit.degenerate


def test_fit_insufficient_data():
    recs = [RegularityRecord(0.5, {((0, 0, 0), (0, 0, 0)): 1.0}, {}, [])] * 3
    with pytest.raises(InsufficientData):
        fit_smoothing(recs)


def test_spectrum_decay_gaussian_vs_noise(rng):
    g = GridSpec(nx=8, nv=32, vmax=8.0)
    gauss = PhaseField(
        g, (np.cos(g.x1d).reshape(-1, 1, 1, 1) * np.exp(-g.vsq / 2)).astype(complex), "physical"
    )
    req = RecordRequests(alpha_beta=[((0, 0, 0), (0, 0, 0))], k_max=0, shells=True)
    slope_g, r2_g = spectrum_decay(record(SimState(0.0, gauss), req))
    assert slope_g < 0 and r2_g >= 0.9
    noise = PhaseField(g, rng.standard_normal(g.shape).astype(complex), "physical")
    slope_n, _ = spectrum_decay(record(SimState(0.0, noise), req))
    assert abs(slope_n) <= 0.2  # flat spectrum: flagged non-analytic


def test_spectrum_decay_translation_parity_invariance(rng):
    g = GridSpec(nx=8, nv=16, vmax=8.0)
    f = band_limited_phase(g, rng, envelope="sqrt_mu")
    req = RecordRequests(alpha_beta=[((0, 0, 0), (0, 0, 0))], k_max=0, shells=True)
    s0, _ = spectrum_decay(record(SimState(0.0, f), req))
    shifted = PhaseField(g, np.roll(f.data, 2, axis=0), "physical")
    s1, _ = spectrum_decay(record(SimState(0.0, shifted), req))
    flipped = PhaseField(g, np.flip(f.data, axis=(1, 2, 3)), "physical")
    s2, _ = spectrum_decay(record(SimState(0.0, flipped), req))
    assert s1 == pytest.approx(s0, rel=1e-9, abs=1e-12)
    assert s2 == pytest.approx(s0, rel=1e-9, abs=1e-12)


def test_spectrum_insufficient_data():
    rec = RegularityRecord(0.5, {}, {}, [(0, 1e-20), (1, 1e-20)])
    with pytest.raises(InsufficientData):
        spectrum_decay(rec)
