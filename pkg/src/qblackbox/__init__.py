"""Exact state-vector simulation of black-box quantum algorithms and their communication protocols."""

__version__ = "0.1.0"

from .statevector import GateError, ResourceError, StateVector, get_qubit_cap, set_qubit_cap
from .oracle import AND, OR, XOR, ArityError, CombinerSpec, OracleTable, QueryCounter, classical_predicate, pointwise_combine
from .algorithms import DeciderResult, RunSchedule, deutsch_jozsa, or_decider
from .nested import (
    ApproxParams,
    approx_g_gate,
    build_unitary_decider,
    choose_k,
    double_exp_params,
    pi_d_eval,
    sigma2_eval,
    sigma_d_eval,
    verify_gate_distance,
)
from .protocol import LocalityError, ProtocolError, Transcript, ac0_protocol, disj_protocol, eqprime_protocol, run_protocol
from .baselines import CommMatrix, build_comm_matrix, exact_rank, hamming_distance

__all__ = [
    "AND", "OR", "XOR", "ApproxParams", "ArityError", "CombinerSpec", "CommMatrix", "DeciderResult",
    "GateError", "LocalityError", "OracleTable", "ProtocolError", "QueryCounter", "ResourceError",
    "RunSchedule", "StateVector", "Transcript", "ac0_protocol", "approx_g_gate", "build_comm_matrix",
    "build_unitary_decider", "choose_k", "classical_predicate", "deutsch_jozsa", "disj_protocol",
    "double_exp_params", "eqprime_protocol", "exact_rank", "get_qubit_cap", "hamming_distance",
    "or_decider", "pi_d_eval", "pointwise_combine", "run_protocol", "set_qubit_cap", "sigma2_eval",
    "sigma_d_eval", "verify_gate_distance",
]
