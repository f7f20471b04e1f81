"""Rate-distortion functions of generalized Gaussian multiterminal systems.

Computes centralized and topology-constrained sum-rate-distortion functions
for up to three jointly Gaussian sources, verifies the achievability
constructions behind them, and extrapolates the high-resolution gap
coefficient for comparison with the predicted (1/2) sum theta_ij^2 form.
"""

from .centralized import WaterFilling, r_centralized
from .closed_form import (
    ClosedFormResult,
    r_triangle,
    r_two_pairs,
    r_two_terminal,
    r_two_terminal_general,
    rtilde_conditional,
    trusted_radius,
)
from .cover import (
    Cover,
    Topology,
    TopologyClass,
    classify_L3,
    dominates,
    equivalent,
    gap_coefficient,
    new_cover,
    reduce,
    uncovered_pairs,
)
from .model import (
    GaussianSource,
    SymMatrix,
    conditional_covariance,
    eigenvalues,
    logdet,
    mmse_cov,
    new_source,
)

__all__ = [
    "ClosedFormResult",
    "Cover",
    "GaussianSource",
    "SymMatrix",
    "Topology",
    "TopologyClass",
    "WaterFilling",
    "classify_L3",
    "conditional_covariance",
    "dominates",
    "eigenvalues",
    "equivalent",
    "gap_coefficient",
    "logdet",
    "mmse_cov",
    "new_cover",
    "new_source",
    "r_centralized",
    "r_triangle",
    "r_two_pairs",
    "r_two_terminal",
    "r_two_terminal_general",
    "reduce",
    "rtilde_conditional",
    "trusted_radius",
    "uncovered_pairs",
]

__version__ = "0.1.0"
