"""Optimal ancilla states and exact success-probability bounds for
high-fidelity KLM teleportation, with a Fock-space simulation oracle."""

from .analytic import (
    DegenerateOutcomeError,
    FailureOutcomeError,
    OutcomeReport,
    QubitState,
    fidelity_sq,
    full_outcome_table,
    outcome_probability,
    success_probability,
    success_probability_curve,
    teleported_state,
)
from .eigen import (
    CoefficientProfile,
    EigenConvergenceError,
    EigenPair,
    SymTridiagonal,
    build_matrix_A,
    build_matrix_B,
    closed_form_lambda,
    closed_form_mu,
    largest_eigenpair,
    optimal_profile,
    uniform_profile,
)
from .fock import simulate_protocol

__version__ = "0.1.0"
