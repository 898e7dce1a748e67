"""Optimal fixed-step first-order methods for smooth strongly convex minimization.

The package runs ITEM and general fixed-step methods, certifies their
worst-case guarantees with potential functions or SDP multipliers, and
designs optimized step sizes by semidefinite programming.
"""

from .certificates import (
    DualCertificate,
    final_bound_check,
    item_dual_certificate,
    potential_decrease_check,
    psi,
    verify_dual_certificate,
    weighted_sum_identity_check,
)
from .design import DesignResult, design_distance, design_function_value, recover_alpha
from .methods import (
    FixedStepMethod,
    Form,
    Trace,
    alpha_from_h,
    extract_h,
    h_from_alpha,
    item_method,
    run_alpha_form,
    run_fixed_step,
    run_item,
    run_ogm,
)
from .oracles import (
    FirstOrderOracle,
    base_quadratics,
    interpolation_check,
    quadratic_oracle,
    random_quadratic,
    shift_to_tilde,
)
from .pep import Criterion, Mode, quadratic_brute_force, worst_case_bound
from .schedules import (
    ClassParams,
    Schedule,
    build_schedule,
    lower_bound_sequence,
    ogm_theta_sequence,
    tmm_limit_params,
)
from .sdp import SdpProblem, SdpSolution, SolverError, Status, solve

__all__ = [
    "ClassParams", "Schedule", "build_schedule", "lower_bound_sequence",
    "ogm_theta_sequence", "tmm_limit_params",
    "FirstOrderOracle", "quadratic_oracle", "random_quadratic", "base_quadratics",
    "shift_to_tilde", "interpolation_check",
    "FixedStepMethod", "Form", "Trace", "run_item", "run_ogm", "run_fixed_step",
    "run_alpha_form", "alpha_from_h", "h_from_alpha", "extract_h", "item_method",
    "DualCertificate", "psi", "potential_decrease_check", "final_bound_check",
    "weighted_sum_identity_check", "item_dual_certificate", "verify_dual_certificate",
    "Criterion", "Mode", "worst_case_bound", "quadratic_brute_force",
    "DesignResult", "design_distance", "design_function_value", "recover_alpha",
    "SdpProblem", "SdpSolution", "SolverError", "Status", "solve",
]
