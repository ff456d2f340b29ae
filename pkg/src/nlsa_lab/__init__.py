"""Pseudospectral toolkit for a Schrodinger-Airy equation with derivative
cubic nonlinearity: weighted-norm fixed-point solver, contour-verified
oscillatory integrals, and space-time estimate sweeps."""

__version__ = "0.1.0"

from .spectral import (
    BandRangeError,
    EquationParams,
    Grid,
    GridFunction,
    bracket_multiplier,
    dealias,
    dft_forward,
    dft_inverse,
    eta,
    fractional_derivative,
    propagator_apply,
    qn_apply,
    qn_m_apply,
    weight_multiply,
)
from .oscillatory import (
    ContourViolationError,
    OscillatoryProbe,
    PhiProfile,
    QuadratureConvergenceError,
    RegionLabel,
    classify_xi,
    osc_integral_contour,
    osc_integral_direct,
    run_probe,
)
from .norms import SpaceTimeField, NormReport, mu_norms, sobolev_norm, xt_norm
from .estimates import (
    BandCoverageWarning,
    EstimateSweepResult,
    SpaceTimePacket,
    WavePacket,
    check_chain_rules,
    check_commutator,
    check_leibniz_band,
    check_leibniz_two_sided,
    check_smoothing,
    check_sup_embedding,
    random_spacetime_packets,
    random_wave_packets,
)
from .picard import (
    BoundaryMassWarning,
    ContractionReport,
    NonContractionError,
    PicardConfig,
    duhamel_apply,
    nonlinearity_eval,
    picard_iterate,
    reduction_preset,
    select_radius_and_horizon,
    semigroup_evolve,
    soliton_oracle,
)

__all__ = [
    "__version__",
    "BandRangeError",
    "EquationParams",
    "Grid",
    "GridFunction",
    "bracket_multiplier",
    "dealias",
    "dft_forward",
    "dft_inverse",
    "eta",
    "fractional_derivative",
    "propagator_apply",
    "qn_apply",
    "qn_m_apply",
    "weight_multiply",
    "ContourViolationError",
    "OscillatoryProbe",
    "PhiProfile",
    "QuadratureConvergenceError",
    "RegionLabel",
    "classify_xi",
    "osc_integral_contour",
    "osc_integral_direct",
    "run_probe",
    "SpaceTimeField",
    "NormReport",
    "mu_norms",
    "sobolev_norm",
    "xt_norm",
    "BandCoverageWarning",
    "EstimateSweepResult",
    "SpaceTimePacket",
    "WavePacket",
    "check_chain_rules",
    "check_commutator",
    "check_leibniz_band",
    "check_leibniz_two_sided",
    "check_smoothing",
    "check_sup_embedding",
    "random_spacetime_packets",
    "random_wave_packets",
    "BoundaryMassWarning",
    "ContractionReport",
    "NonContractionError",
    "PicardConfig",
    "duhamel_apply",
    "nonlinearity_eval",
    "picard_iterate",
    "reduction_preset",
    "select_radius_and_horizon",
    "semigroup_evolve",
    "soliton_oracle",
]
