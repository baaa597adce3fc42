"""Innovation-based secrecy encoding for remote state estimation.

The transmitter sends either the raw state or a masked one-step innovation
according to a pseudo-random schedule shared with the legitimate receiver.
An eavesdropper that cannot tell the two apart, or discards innovations,
ends up with a much larger (often unbounded) estimation error.
"""
from .analytics import (
    OutcomeProbabilities,
    classify_secrecy,
    eaves_expected_cov_at_k,
    legit_expected_cov,
    mc_limiting_expectation,
    outcome_probs_eaves,
    outcome_probs_legit,
    smart_expected_cov,
)
from .design import SecrecyBudget, design_mu_d, evaluate_gap, feasibility_lower_bound, perfect_secrecy_interval
from .estimators import BeliefPolicy, EstimatorState, ReceptionEvent
from .harness import ScenarioConfig, run_monte_carlo, run_trial
from .matlib import solve_scaled_lyapunov, spectral_radius
from .process import SystemModel

__version__ = "0.1.0"

__all__ = [
    "BeliefPolicy",
    "EstimatorState",
    "OutcomeProbabilities",
    "ReceptionEvent",
    "ScenarioConfig",
    "SecrecyBudget",
    "SystemModel",
    "classify_secrecy",
    "design_mu_d",
    "eaves_expected_cov_at_k",
    "evaluate_gap",
    "feasibility_lower_bound",
    "legit_expected_cov",
    "mc_limiting_expectation",
    "outcome_probs_eaves",
    "outcome_probs_legit",
    "perfect_secrecy_interval",
    "run_monte_carlo",
    "run_trial",
    "smart_expected_cov",
    "solve_scaled_lyapunov",
    "spectral_radius",
]
