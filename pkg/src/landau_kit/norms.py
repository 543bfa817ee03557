"""Weighted norms and the angular generator v ^ d_v.

The dissipation (psi) norm is

    psi(g)^2 = ||<v>^{g/2} d_v g||^2 + ||<v>^{g/2} (v ^ d_v) g||^2 + ||<v>^{1+g/2} g||^2,

measured in L^2_v for velocity fields and in the H^{(2,0)} = H^2_x L^2_v sense
(all spatial derivatives |alpha| <= 2) for phase fields.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .grid import (
    Field,
    GridSpec,
    PhaseField,
    VelocityField,
    differentiate,
    multiply_weight,
    norm_l2,
    transform,
)


def cross_generator(g: Field, i: int) -> Field:
    """Component i (1..3) of (v ^ d_v) g via weight multiplications and spectral derivatives."""
    if i not in (1, 2, 3):
        raise ValueError("component index must be 1, 2 or 3")
    a, b = {1: (1, 2), 2: (2, 0), 3: (0, 1)}[i]
    t1 = multiply_weight(differentiate(g, ("v", b), 1), ("v", a))
    t2 = multiply_weight(differentiate(g, ("v", a), 1), ("v", b))
    out = g.copy()
    out.data = t1.data - t2.data
    out.repr = t1.repr
    out.cert = None
    return out


def spatial_multi_indices(dims: int, max_order: int = 2):
    """All alpha in Z_+^dims with |alpha| <= max_order."""
    out = []
    for total in range(max_order + 1):
        for alpha in itertools.product(range(total + 1), repeat=dims):
            if sum(alpha) == total:
                out.append(alpha)
    return out


def _dx_alpha(g: PhaseField, alpha) -> PhaseField:
    out = g
    for axis, order in enumerate(alpha):
        if order:
            out = differentiate(out, ("x", axis), order)
    return out


def h20_norm(g: Field) -> float:
    """||g||_{(2,0)} = (sum_{|alpha|<=2} ||d_x^alpha g||^2)^{1/2}."""
    if isinstance(g, VelocityField):
        return norm_l2(g)
    total = 0.0
    for alpha in spatial_multi_indices(g.grid.spatial_dims):
        total += norm_l2(_dx_alpha(g, alpha)) ** 2
    return math.sqrt(total)


def inner_20(f: PhaseField, g: PhaseField) -> complex:
    """(f, g)_{(2,0)} = sum_{|alpha|<=2} <d_x^alpha f, d_x^alpha g>."""
    from .grid import inner

    total = 0.0 + 0.0j
    for alpha in spatial_multi_indices(f.grid.spatial_dims):
        total += inner(_dx_alpha(f, alpha), _dx_alpha(g, alpha))
    return total


def l1m_l2v_norm(g: PhaseField) -> float:
    """||g||_{L1_m L2_v} = sum_m ||ghat(m, .)||_{L2_v}."""
    gm = transform(g, "fourier_x")
    grid = g.grid
    vax = tuple(range(grid.spatial_dims, grid.spatial_dims + 3))
    per_mode = np.sqrt(np.sum(np.abs(gm.data) ** 2, axis=vax) * grid.dvol_v)
    return float(np.sum(per_mode))


def _psi_sq_velocity(g: VelocityField, gamma: float) -> float:
    grid = g.grid
    total = 0.0
    for i in range(3):
        total += norm_l2(
            multiply_weight(differentiate(g, ("v", i), 1), ("vbracket", gamma / 2))
        ) ** 2
    for i in (1, 2, 3):
        total += norm_l2(
            multiply_weight(cross_generator(g, i), ("vbracket", gamma / 2))
        ) ** 2
    total += norm_l2(multiply_weight(g, ("vbracket", 1 + gamma / 2))) ** 2
    return total


def psi_norm(g: Field, gamma: float) -> float:
    """The dissipation triple norm; (2,0)-version for phase fields."""
    if isinstance(g, VelocityField):
        return math.sqrt(_psi_sq_velocity(g, gamma))
    total = 0.0
    for alpha in spatial_multi_indices(g.grid.spatial_dims):
        ga = _dx_alpha(g, alpha)
        for i in range(3):
            total += norm_l2(
                multiply_weight(differentiate(ga, ("v", i), 1), ("vbracket", gamma / 2))
            ) ** 2
        for i in (1, 2, 3):
            total += norm_l2(
                multiply_weight(cross_generator(ga, i), ("vbracket", gamma / 2))
            ) ** 2
        total += norm_l2(multiply_weight(ga, ("vbracket", 1 + gamma / 2))) ** 2
    return math.sqrt(total)


@dataclass
class GaussianBoundReport:
    max_ratio: float
    worst_beta: tuple
    rows: list  # (beta, lhs, rhs)


def gaussian_derivative_bound_check(grid: GridSpec, bmax: int = 6) -> GaussianBoundReport:
    """Check ||d_v^beta mu^{1/2}|| + ||d_v^beta mu|| <= 16^{|beta|+1} |beta|! for |beta| <= bmax.

    Norms are evaluated by Parseval from a single v-transform of mu^{1/2} and mu.
    """
    from .timeavg import BoundViolation
    from .grid import rfftn

    nv = grid.nv
    meas = (2 * grid.vmax) ** 3
    eta = grid.eta1d

    def spectral_norms(field):
        F = np.fft.fftn(field) / nv**3  # phase factor irrelevant for |.| norms
        A2 = np.abs(F) ** 2
        rows = {}
        for beta in spatial_multi_indices(3, bmax):
            w = 1.0
            for ax, b in enumerate(beta):
                if b:
                    shape = [1, 1, 1]
                    shape[ax] = nv
                    w = w * (eta.reshape(shape) ** (2 * b))
            rows[beta] = math.sqrt(float(np.sum(A2 * w)) * meas)
        return rows

    n_half = spectral_norms(grid.sqrt_maxwellian)
    n_full = spectral_norms(grid.maxwellian)
    worst = (0.0, (0, 0, 0))
    rows = []
    for beta in spatial_multi_indices(3, bmax):
        lhs = n_half[beta] + n_full[beta]
        rhs = 16.0 ** (sum(beta) + 1) * math.factorial(sum(beta))
        rows.append((beta, lhs, rhs))
        ratio = lhs / rhs
        if ratio > worst[0]:
            worst = (ratio, beta)
    if worst[0] > 1.0:
        raise BoundViolation(
            f"Gaussian derivative bound violated at beta={worst[1]}", worst[1]
        )
    return GaussianBoundReport(worst[0], worst[1], rows)
