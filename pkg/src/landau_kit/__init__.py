"""Spectral toolkit for the perturbative Landau equation with hard potentials."""

__version__ = "0.1.0"

from .grid import (
    GridSpec,
    PhaseField,
    VelocityField,
    GuardViolation,
    transform,
    differentiate,
    multiply_weight,
    dealias,
    inner,
    norm_l2,
)
from .collision import (
    HardPotential,
    ConvCoefficients,
    GammaOutput,
    CollisionOperator,
    kernel_aij,
    compute_coefficients,
    QL_direct,
    gamma_direct,
    gamma_decomposed,
    L_term,
    linearized_L,
)
from .timeavg import (
    MSpec,
    LeibnizTable,
    BoundViolation,
    m_symbol,
    apply_M_power,
    apply_lambda,
    commutator_transport_check,
    commutator_wedge_check,
    symbol_bound_sample,
    leibniz_table,
    leibniz_expand_check,
    ellipticity_constant,
)
from .norms import cross_generator, psi_norm, h20_norm, l1m_l2v_norm, gaussian_derivative_bound_check
from .solver import SimConfig, SimState, ConfigInvalid, BlowupDetected, init, step, run
from .harness import (
    RegularityRecord,
    RecordRequests,
    ResolutionExceeded,
    InsufficientData,
    record,
    fit_smoothing,
    spectrum_decay,
)
