"""Statevector laboratory for variational quantum algorithms (VQE and QAOA)."""

__version__ = "0.1.0"

from .pauli import (  # noqa: E402
    Observable,
    PauliString,
    PauliTerm,
    dense_matrix,
    eval_bitstring,
    exact_expectation,
    multiply,
    parse_observable,
    qubitwise_commutes,
    simplify,
)
from .simulator import Circuit, Gate, NoiseModel, StateVector, run, run_noisy, sample  # noqa: E402

__all__ = [
    "Circuit", "Gate", "NoiseModel", "Observable", "PauliString", "PauliTerm", "StateVector",
    "dense_matrix", "eval_bitstring", "exact_expectation", "multiply", "parse_observable",
    "qubitwise_commutes", "run", "run_noisy", "sample", "simplify",
]
