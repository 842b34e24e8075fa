"""Joint phase and phase-diffusion estimation for two-mode Fock interferometry.

Pipeline: probe state construction (gHB / HB / N00N families), phase shift
plus Gaussian phase diffusion, photon loss into block-diagonal loss records,
double homodyne outcome statistics, and classical/quantum Fisher analysis
with the trade-off quantity Upsilon, the error bound Sigma^2 and the Holevo
bound.
"""

__version__ = "0.1.0"

from .channels import (
    BlockedDensity,
    apply_loss,
    apply_phase_diffusion,
    diffusion_integral_oracle,
    parameter_derivatives,
)
from .fisher import (
    FisherPair,
    SldOperators,
    classical_fisher,
    commutation_diagnostics,
    compute_fisher_pair,
    hcr_bound,
    qfi_and_slds,
)
from .fock import (
    ProbeState,
    SectorUnitary,
    balanced_bs_unitary,
    ghb_state,
    hb_state,
    kravchuk_coeff,
    kravchuk_matrix,
    noon_state,
)
from .homodyne import (
    JointPdfField,
    QuadGrid,
    default_halfwidth,
    hermite_wavefunction,
    joint_pdf,
    make_grid,
)
from .metrics import (
    ScenarioConfig,
    ScenarioResult,
    SweepRow,
    UndefinedFigureError,
    evaluate_scenario,
    family_state,
    find_delta_cutoff,
    hcr_from_pair,
    parse_state,
    qcr_sum,
    sensitivity_gain,
    sweep_delta,
    sweep_family,
    sweep_photon_number,
    tradeoff_upsilon,
)

__all__ = [
    "__version__",
    "ProbeState", "SectorUnitary", "kravchuk_coeff", "kravchuk_matrix",
    "ghb_state", "hb_state", "noon_state", "balanced_bs_unitary",
    "BlockedDensity", "apply_phase_diffusion", "diffusion_integral_oracle",
    "apply_loss", "parameter_derivatives",
    "QuadGrid", "JointPdfField", "make_grid", "default_halfwidth",
    "hermite_wavefunction", "joint_pdf",
    "FisherPair", "SldOperators", "classical_fisher", "qfi_and_slds",
    "commutation_diagnostics", "hcr_bound", "compute_fisher_pair",
    "UndefinedFigureError", "ScenarioConfig", "ScenarioResult", "SweepRow",
    "parse_state", "family_state", "evaluate_scenario", "tradeoff_upsilon",
    "qcr_sum", "hcr_from_pair", "sensitivity_gain", "find_delta_cutoff",
    "sweep_delta", "sweep_photon_number", "sweep_family",
]
