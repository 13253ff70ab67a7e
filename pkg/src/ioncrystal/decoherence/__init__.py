"""Linked-cluster diagrams for the in-plane phonon bath and their references."""

from .diagrams import ModeTable, connected_terms
from .kernels import (
    QuadratureError,
    autocorrelation_transform,
    pair_kernel,
    pair_kernel_quadrature,
    pulse_spectrum,
    second_order_kernel,
    triple_kernel,
)
from .lattice_terms import (
    CouplingScales,
    ErrorBreakdown,
    InPlaneModes,
    ValidationError,
    coupling_scales,
    error_breakdown,
    inplane_modes,
    lattice_couplings,
    structure_factor_F,
    structure_factor_G,
    term_E1,
    term_E2,
    term_E3,
    term_E4,
    total_fidelity,
    validate_e3_sample,
)
from .oracle import ConvergenceError, TruncationError, exact_fidelity_oracle, gaussian_fidelity_oracle
from .scan import ScanResult, summary_stats, temperature_scan, write_scan_csv, write_scan_json
