"""Time-average Fourier multiplier M, its fractional powers and square-root fields.

M acts on f(x, v) through the symbol

    rho_1(m1, eta1) = (t - t0) eta1^2 + (t - t0)^2 m1 eta1 + (t - t0)^3 / 3 m1^2,

a nonnegative quadratic form in (eta1, m1); M^sigma multiplies by rho_1^sigma.
M = Lambda_1^2 + Lambda_2^2 with the self-adjoint fields

    Lambda_1 = (1/2i) (tau^{1/2} d_v1 + tau^{3/2} d_x1),
    Lambda_2 = (sqrt(3)/6i) (3 tau^{1/2} d_v1 + tau^{3/2} d_x1),      tau = t - t0.

Exact commutator identities, the symbolic-calculus derivative bound, the sharp
ellipticity constants of the quadratic form, and the integer Leibniz coefficient
table for M^k(gh) live here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import GridSpec, PhaseField, transform, norm_l2, inner


class BoundViolation(Exception):
    """A proven bound failed numerically; carries the witness point."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class IntegerOverflow(Exception):
    pass


@dataclass(frozen=True)
class MSpec:
    t: float
    t0: float
    sigma: float

    def __post_init__(self):
        if not (0 < self.t0 <= 0.5):
            raise ValueError(f"t0 must lie in (0, 1/2], got {self.t0}")
        if not (self.t0 <= self.t <= 1.0):
            raise ValueError(f"t must lie in [t0, 1], got {self.t}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")

    @property
    def tau(self) -> float:
        return self.t - self.t0


def m_symbol(m1, eta1, t: float, t0: float):
    """rho_1(m1, eta1); nonnegative for t >= t0."""
    tau = t - t0
    if np.any(np.asarray(tau) < 0):
        raise ValueError("t must be >= t0")
    m1 = np.asarray(m1, dtype=float)
    eta1 = np.asarray(eta1, dtype=float)
    return tau * eta1**2 + tau**2 * m1 * eta1 + tau**3 / 3 * m1**2


def lambda_symbols(m1, eta1, t: float, t0: float):
    """Real symbols of (Lambda_1, Lambda_2); their squares sum to m_symbol."""
    tau = t - t0
    s = np.sqrt(tau) * np.asarray(eta1, dtype=float)
    u = tau ** 1.5 * np.asarray(m1, dtype=float)
    return 0.5 * (s + u), (np.sqrt(3.0) / 6.0) * (3.0 * s + u)


def _symbol_grid(grid: GridSpec, func) -> np.ndarray:
    """Evaluate func(m1, eta1) broadcast over the full (x..., v...) fourier grid."""
    m1 = grid.m_broadcast(0)
    shape = [1] * (grid.spatial_dims + 3)
    shape[grid.spatial_dims] = grid.nv
    eta1 = grid.eta1d.reshape(shape)
    return func(m1, eta1)


def apply_multiplier(field: PhaseField, func) -> PhaseField:
    """Apply a (m1, eta1) Fourier multiplier, returning the input representation."""
    start = field.repr
    g = transform(field, "fourier_xv")
    data = g.data * _symbol_grid(field.grid, func)
    return transform(PhaseField(field.grid, data, "fourier_xv"), start)


def apply_M_power(field: PhaseField, spec: MSpec) -> PhaseField:
    """M^sigma via the multiplier rho_sigma = m_symbol^sigma."""
    if spec.sigma == 0:
        return field.copy()
    return apply_multiplier(
        field, lambda m1, e1: m_symbol(m1, e1, spec.t, spec.t0) ** spec.sigma
    )


def apply_lambda(field: PhaseField, which: int, t: float, t0: float) -> PhaseField:
    if which not in (1, 2):
        raise ValueError("which must be 1 or 2")
    return apply_multiplier(
        field, lambda m1, e1: lambda_symbols(m1, e1, t, t0)[which - 1]
    )


# ---------------------------------------------------------------------------
# exact commutator checks
# ---------------------------------------------------------------------------

@dataclass
class CommutatorReport:
    max_rel_error: float
    fd_error: float | None = None
    details: dict | None = None


def _dv1_sq(field: PhaseField) -> PhaseField:
    from .grid import differentiate

    return differentiate(field, ("v", 0), 2)


def commutator_transport_check(
    family: Callable[[float], PhaseField] | PhaseField,
    times,
    t0: float,
    dt_fd: float = 1e-5,
) -> CommutatorReport:
    """Verify [M, d_t + v . d_x] = d_{v1}^2 at the given times.

    Both commutators are evaluated through their exact component identities:
    [M, d_t] g = -(d_t M) g with the analytic t-derivative of the symbol, and
    [M, v . d_x] g = (-2 tau d_x1 d_v1 - tau^2 d_x1^2) g.  Their sum is compared
    with d_{v1}^2 g (max_rel_error).  Two cross-checks ground the identities in
    the actual operators: a centered finite difference of M g(t) at spacing
    dt_fd for the d_t side, and the literal two-path difference
    M(v . d_x g) - v . d_x(M g) for the transport side (reported as
    `two_path_error`; it carries the v-box seam error of the sawtooth v1, so it
    is only small for fields with Gaussian velocity decay).
    """
    from .grid import differentiate, multiply_weight

    def at(t: float) -> PhaseField:
        return family(t) if callable(family) else family

    worst = 0.0
    fd_worst = None
    two_path_worst = 0.0
    for t in np.atleast_1d(np.asarray(times, dtype=float)):
        g = at(float(t))
        tau = float(t) - t0
        # [M, d_t] g = -(d_t M) g = (d_v1^2 + 2 tau d_x1 d_v1 + tau^2 d_x1^2) g,
        # an operator with (m1, eta1)-symbol -(eta1^2 + 2 tau m1 eta1 + tau^2 m1^2)
        comm_t = apply_multiplier(
            g, lambda m1, e1: -(e1**2 + 2 * tau * m1 * e1 + tau**2 * m1**2)
        )
        # [M, v . d_x] g = (-2 tau d_x1 d_v1 - tau^2 d_x1^2) g: symbol
        # 2 tau m1 eta1 + tau^2 m1^2
        comm_x = apply_multiplier(
            g, lambda m1, e1: 2 * tau * m1 * e1 + tau**2 * m1**2
        )
        lhs = comm_t.data + comm_x.data
        rhs = _dv1_sq(g).data
        scale = max(np.max(np.abs(rhs)), 1e-300)
        worst = max(worst, float(np.max(np.abs(lhs - rhs)) / scale))

        # two-path cross-check of the transport component
        Mspec = MSpec(float(t), t0, 1.0)

        def vdx(h: PhaseField) -> PhaseField:
            out = None
            for a in range(h.grid.spatial_dims):
                term = multiply_weight(differentiate(h, ("x", a), 1), ("v", a))
                out = term if out is None else PhaseField(
                    h.grid, out.data + term.data, out.repr
                )
            return out

        Mg = apply_M_power(g, Mspec)
        two_path = apply_M_power(vdx(g), Mspec).data - vdx(Mg).data
        two_path_worst = max(
            two_path_worst, float(np.max(np.abs(two_path - comm_x.data)) / scale)
        )
        if callable(family) and t0 < t - dt_fd and t + dt_fd <= 1.0:
            # finite-difference cross-check of (d_t M) g against the analytic symbol
            gp, gm = at(float(t) + dt_fd), at(float(t) - dt_fd)
            MP = apply_M_power(gp, MSpec(float(t) + dt_fd, t0, 1.0)).data
            MM_ = apply_M_power(gm, MSpec(float(t) - dt_fd, t0, 1.0)).data
            dtg = PhaseField(g.grid, (gp.data - gm.data) / (2 * dt_fd), g.repr)
            fd_comm = (MP - MM_) / (2 * dt_fd) - apply_M_power(dtg, Mspec).data
            ana = apply_multiplier(
                g, lambda m1, e1: e1**2 + 2 * tau * m1 * e1 + tau**2 * m1**2
            ).data
            err = float(np.max(np.abs(fd_comm - ana)) / scale)
            fd_worst = err if fd_worst is None else max(fd_worst, err)
    return CommutatorReport(worst, fd_worst, {"two_path_error": two_path_worst})


def commutator_wedge_check(g: PhaseField, t: float, t0: float) -> CommutatorReport:
    """Verify [M, v ^ d_v] = 2 sum_i ([Lambda_i, v] ^ d_v) Lambda_i componentwise.

    [Lambda_1, v] = (1/2i) tau^{1/2} e_1 and [Lambda_2, v] = (sqrt(3)/2i) tau^{1/2} e_1,
    so the right side is 2 tau^{1/2} (0, -d_v3, d_v2) applied to
    (c_1 Lambda_1 + c_2 Lambda_2) g with c_1 = 1/2i, c_2 = sqrt(3)/2i.
    """
    from .norms import cross_generator
    from .grid import differentiate

    spec = MSpec(t, t0, 1.0)
    tau = t - t0
    worst = 0.0
    details = {}
    Mg = apply_M_power(g, spec)
    # (c1 Lambda_1 + c2 Lambda_2) g as one multiplier: -i (s + u/2) with
    # s = tau^{1/2} eta1, u = tau^{3/2} m1  (a purely imaginary symbol)
    mixed = apply_multiplier(
        g,
        lambda m1, e1: -1j * (np.sqrt(tau) * e1 + 0.5 * tau**1.5 * m1),
    )
    rhs_comp = {
        0: None,
        1: PhaseField(g.grid, -2 * np.sqrt(tau) * differentiate(mixed, ("v", 2), 1).data, g.repr),
        2: PhaseField(g.grid, 2 * np.sqrt(tau) * differentiate(mixed, ("v", 1), 1).data, g.repr),
    }
    scale = max(float(np.max(np.abs(g.data))), 1e-300)
    op_scale = max(1.0, float(np.max(np.abs(Mg.data))) / scale)
    for c in range(3):
        wc_g = cross_generator(g, c + 1)
        lhs = apply_M_power(wc_g, spec).data - cross_generator(Mg, c + 1).data
        rhs = np.zeros_like(lhs) if rhs_comp[c] is None else rhs_comp[c].data
        denom = max(float(np.max(np.abs(rhs))), scale * op_scale * 1e-3)
        err = float(np.max(np.abs(lhs - rhs)) / denom)
        details[f"component_{c + 1}"] = err
        worst = max(worst, err)
    return CommutatorReport(worst, None, details)


# ---------------------------------------------------------------------------
# symbolic calculus bound
# ---------------------------------------------------------------------------

@dataclass
class SymbolBoundReport:
    k: int
    samples: int
    max_log_ratio: float
    max_ratio_by_j: dict


def _rho1_coeffs(m1: np.ndarray, tau: np.ndarray) -> np.ndarray:
    """Coefficient stack [c0, c1, c2] of rho_1 as a polynomial in eta1."""
    c0 = tau**3 / 3 * m1**2
    c1 = tau**2 * m1
    c2 = tau * np.ones_like(m1)
    return np.stack([c0, c1, c2], axis=-1)


def _poly_pow(coeffs: np.ndarray, k: int) -> np.ndarray:
    """(c0 + c1 x + c2 x^2)^k, coefficient stacks along the last axis."""
    out = np.zeros(coeffs.shape[:-1] + (1,))
    out[..., 0] = 1.0
    for _ in range(k):
        deg_out = out.shape[-1]
        new = np.zeros(coeffs.shape[:-1] + (deg_out + 2,))
        for i in range(3):
            new[..., i : i + deg_out] += coeffs[..., i : i + 1] * out
        out = new
    return out


def _poly_deriv(coeffs: np.ndarray, j: int) -> np.ndarray:
    out = coeffs
    for _ in range(j):
        deg = out.shape[-1] - 1
        if deg <= 0:
            return np.zeros(out.shape[:-1] + (1,))
        out = out[..., 1:] * np.arange(1, deg + 1)
    return out


def _poly_eval(coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
    out = np.zeros(coeffs.shape[:-1])
    for c in coeffs[..., ::-1].transpose(-1, *range(coeffs.ndim - 1)):
        out = out * x + c
    return out


def symbol_bound_sample(
    k: int,
    samples: int = 10_000,
    seed: int = 0,
    t0: float = 0.25,
    m_range: int = 32,
    eta_max: float = 16.0,
    raise_on_violation: bool = True,
) -> SymbolBoundReport:
    """Check |d^j_eta1 rho_k| <= 8^j (2k)!/(2k-j)! rho_{k-j/2} on random samples.

    Derivatives are taken by exact polynomial algebra on rho_1^k; the comparison
    is done in log space to avoid overflow for large k.
    """
    if not (0 <= k <= 6):
        raise ValueError("k must be in 0..6 (factorials exact in double precision)")
    rng = np.random.default_rng(seed)
    m1 = rng.integers(-m_range, m_range + 1, size=samples).astype(float)
    eta1 = rng.uniform(-eta_max, eta_max, size=samples)
    t = rng.uniform(t0, 1.0, size=samples)
    tau = t - t0
    rho1 = tau * eta1**2 + tau**2 * m1 * eta1 + tau**3 / 3 * m1**2
    rho1 = np.maximum(rho1, 1e-300)
    coeffs_k = _poly_pow(_rho1_coeffs(m1, tau), k)
    max_log = -np.inf
    by_j = {}
    witness = None
    for j in range(0, 2 * k + 1):
        dcoef = _poly_deriv(coeffs_k, j)
        lhs = np.abs(_poly_eval(dcoef, eta1))
        # rhs in logs: j log 8 + log (2k)!/(2k-j)! + (k - j/2) log rho1
        expo = k - j / 2
        with np.errstate(divide="ignore"):
            log_lhs = np.log(lhs)
            log_rhs = (
                j * math.log(8.0)
                + math.lgamma(2 * k + 1)
                - math.lgamma(2 * k - j + 1)
                + (expo * np.log(rho1) if expo != 0 else 0.0)
            )
        ok_zero = lhs == 0.0
        log_ratio = np.where(ok_zero, -np.inf, log_lhs - log_rhs)
        jmax = float(np.max(log_ratio)) if log_ratio.size else -np.inf
        by_j[j] = math.exp(jmax) if jmax < 700 else float("inf")
        if jmax > max_log:
            max_log = jmax
            idx = int(np.argmax(log_ratio))
            witness = dict(j=j, m1=m1[idx], eta1=eta1[idx], t=t[idx], t0=t0)
    if max_log > 1e-9 and raise_on_violation:
        raise BoundViolation(
            f"symbol bound violated: max log-ratio {max_log:.3e}", witness
        )
    return SymbolBoundReport(k, samples, float(max_log), by_j)


# ---------------------------------------------------------------------------
# ellipticity of the symbol
# ---------------------------------------------------------------------------

def ellipticity_constant() -> tuple[float, float]:
    """Sharp constants (c0, 1/c0) with c0 = (4 - sqrt(13))/6.

    c0 is the smallest generalized eigenvalue of the quadratic-form matrix
    [[1, 1/2], [1/2, 1/3]] in the scaled variables (tau^{1/2} eta1, tau^{3/2} m1);
    computed from the 2x2 eigenproblem rather than hard-coded.
    """
    Q = np.array([[1.0, 0.5], [0.5, 1.0 / 3.0]])
    eig = np.linalg.eigvalsh(Q)
    c0 = float(eig[0])
    return c0, 1.0 / c0


def ellipticity_sample(samples: int = 100_000, seed: int = 0, t0: float = 0.25):
    """Empirical range of rho_1 / (tau eta1^2 + tau^3 m1^2) over random samples."""
    rng = np.random.default_rng(seed)
    m1 = rng.integers(-64, 65, size=samples).astype(float)
    eta1 = rng.uniform(-32, 32, size=samples)
    t = rng.uniform(t0 + 1e-9, 1.0, size=samples)
    tau = t - t0
    num = tau * eta1**2 + tau**2 * m1 * eta1 + tau**3 / 3 * m1**2
    den = tau * eta1**2 + tau**3 * m1**2
    good = den > 0
    ratio = num[good] / den[good]
    return float(ratio.min()), float(ratio.max())


# ---------------------------------------------------------------------------
# Leibniz coefficient table
# ---------------------------------------------------------------------------

@dataclass
class LeibnizTable:
    """Exact integers c^{k,j}_{l,p,q} for M^k(gh) = sum c (Lam^l M^p g).(Lam^l M^q h)."""

    k_max: int
    entries: dict  # (k, j, l, p, q) -> int

    def get(self, k: int, j: int, l: int, p: int, q: int) -> int:
        if j > 2 * k or min(j, l, p, q) < 0:
            return 0
        return self.entries.get((k, j, l, p, q), 0)

    def row(self, k: int, j: int):
        """All (l, p, q, c) with l + 2p = j, l + 2q = 2k - j and c != 0."""
        out = []
        for (kk, jj, l, p, q), c in self.entries.items():
            if kk == k and jj == j:
                out.append((l, p, q, c))
        return sorted(out)

    def row_sum(self, k: int, j: int) -> int:
        return sum(c for _, _, _, c in self.row(k, j))

    def csv_rows(self):
        for (k, j, l, p, q) in sorted(self.entries):
            yield k, j, l, p, q, self.entries[(k, j, l, p, q)]


def leibniz_table(k_max: int) -> LeibnizTable:
    """Build the table from c^{0,0}_{0,0,0} = 1 and the three-term recurrence.

    Python integers are exact at any size; k_max is capped at 20 to keep the
    table small (the 64-bit overflow the cap guards against in fixed-width
    backends cannot occur here, so IntegerOverflow is never raised).
    """
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    if k_max > 20:
        raise IntegerOverflow(f"k_max={k_max} exceeds the supported table size 20")
    entries = {(0, 0, 0, 0, 0): 1}
    for k in range(k_max):
        for j in range(0, 2 * (k + 1) + 1):
            for l in range(0, j + 1):
                if (j - l) % 2:
                    continue
                p = (j - l) // 2
                rem = 2 * (k + 1) - j - l
                if rem < 0 or rem % 2:
                    continue
                q = rem // 2
                c = (
                    entries.get((k, j - 2, l, p - 1, q), 0)
                    + entries.get((k, j, l, p, q - 1), 0)
                    + 2 * entries.get((k, j - 1, l - 1, p, q), 0)
                )
                if c:
                    entries[(k + 1, j, l, p, q)] = c
    return LeibnizTable(k_max, entries)


def leibniz_expand_check(
    g: PhaseField,
    h: PhaseField,
    k: int,
    t: float,
    t0: float,
    table: LeibnizTable | None = None,
) -> float:
    """Relative L2 error between M^k(g h) and the coefficient-table expansion.

    Both sides are dealiased (2/3 rule) before comparison; Lambda^l tensor
    contractions collapse to binomial-weighted sums since Lambda_1, Lambda_2
    commute.
    """
    from .grid import dealias

    if k < 0:
        raise ValueError("k must be >= 0")
    table = table or leibniz_table(k)
    grid = g.grid
    spec1 = MSpec(t, t0, 1.0)

    def Mp(f: PhaseField, p: int) -> PhaseField:
        if p == 0:
            return f
        return apply_M_power(f, MSpec(t, t0, float(p)))

    def Lam(f: PhaseField, which: int, n: int) -> PhaseField:
        out = f
        for _ in range(n):
            out = apply_lambda(out, which, t, t0)
        return out

    gh = PhaseField(grid, transform(g, "physical").data * transform(h, "physical").data, "physical")
    lhs = dealias(Mp(gh, k) if k else gh)

    rhs_data = np.zeros(grid.shape, dtype=complex)
    for j in range(0, 2 * k + 1):
        for (l, p, q, c) in table.row(k, j):
            # Lambda^l tensor contraction: sum over n1 + n2 = l of C(l, n1)
            # (Lam1^n1 Lam2^n2 M^p g) (Lam1^n1 Lam2^n2 M^q h)
            for n1 in range(l + 1):
                n2 = l - n1
                w = math.comb(l, n1)
                tg = transform(Lam(Lam(Mp(g, p), 1, n1), 2, n2), "physical").data
                th = transform(Lam(Lam(Mp(h, q), 1, n1), 2, n2), "physical").data
                rhs_data += c * w * tg * th
    rhs = dealias(PhaseField(grid, rhs_data, "physical"))
    num = norm_l2(PhaseField(grid, lhs.data - rhs.data, "physical"))
    den = norm_l2(lhs)
    return num / max(den, 1e-300)
