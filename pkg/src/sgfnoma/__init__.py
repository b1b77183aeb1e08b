"""NOMA-assisted semi-grant-free uplink: scheme simulator and outage analytics."""
from .analytic import (
    DomainError,
    OutageBreakdown,
    QuadratureError,
    g_mu,
    outage_breakdown_quadrature,
    outage_conditional,
    outage_diversity,
    outage_exact,
    outage_highsnr,
    outage_quadrature,
    outage_upper_bound,
    phi,
)
from .model import (
    ChannelRealization,
    DerivedConstants,
    Scheme,
    SicStage,
    SystemParams,
    TransmissionOutcome,
    classify_groups,
    derive_constants,
    run_oma_baseline,
    run_proposed,
    run_scheme_i,
    run_scheme_ii,
    sample_channels,
    threshold_tau,
)
from .montecarlo import (
    AdmissionDistribution,
    Estimate,
    audit_transparency,
    estimate_admission,
    estimate_ergodic_rate,
    estimate_outage,
    simulate,
)

__version__ = "0.1.0"
