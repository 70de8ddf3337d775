"""VQE driver: ansatz construction, energy objective wiring and ground-state search."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .measurement import (
    EnergyEstimate,
    allocate_shots,
    estimate_observable,
    group_samples,
    group_terms,
    measure_groups,
)
from .objectives import ObjectiveSpec, SampleSet, evaluate
from .optimizers import OptimizationTrace, OptimizerConfig, minimize
from .pauli import MAX_DENSE_QUBITS, Observable, dense_matrix, diagonal_energies, exact_expectation
from .simulator import CNOT, Circuit, NoiseModel, RY, RZ, run

MAX_DIAGONAL_QUBITS = 22


@dataclass(frozen=True)
class AnsatzSpec:
    """``single_ry``: one RY on qubit 0. ``layered``: per layer RY and RZ on
    every qubit, then a CNOT chain 0->1->...->n-1."""

    kind: str = "single_ry"
    n_qubits: int = 1
    layers: int = 1

    def __post_init__(self):
        if self.kind not in ("single_ry", "layered"):
            raise ValueError(f"unknown ansatz {self.kind!r}")
        if self.n_qubits < 1 or self.layers < 1:
            raise ValueError("n_qubits and layers must be >= 1")

    @property
    def parameter_count(self) -> int:
        return 1 if self.kind == "single_ry" else 2 * self.n_qubits * self.layers


def build_ansatz(spec: AnsatzSpec, params: Sequence[float]) -> Circuit:
    params = [float(p) for p in np.atleast_1d(params)]
    if len(params) != spec.parameter_count:
        raise ValueError(f"{spec.kind} needs {spec.parameter_count} parameters, got {len(params)}")
    n = spec.n_qubits
    if spec.kind == "single_ry":
        return Circuit(n, (RY(params[0], 0),))
    gates = []
    it = iter(params)
    for _ in range(spec.layers):
        gates += [RY(next(it), q) for q in range(n)]
        gates += [RZ(next(it), q) for q in range(n)]
        gates += [CNOT(q, q + 1) for q in range(n - 1)]
    return Circuit(n, tuple(gates))


@dataclass(frozen=True)
class SampledEstimator:
    """Shot-based energy estimation; every evaluation draws fresh shots
    from a stream derived from ``seed`` and the evaluation index."""

    shots: int
    seed: int
    allocation: str = "proportional"
    grouping: str = "qwc_greedy"
    noise: NoiseModel | None = None


class EnergyObjective:
    """Callable ``params -> objective value`` that tracks shots spent."""

    def __init__(self, obs: Observable, spec: AnsatzSpec, estimator, objective: ObjectiveSpec):
        self.obs = obs
        self.spec = spec
        self.estimator = estimator
        self.objective = objective
        self.shots_spent = 0
        self.calls = 0
        if estimator != "exact":
            self.groups = group_terms(obs, estimator.grouping)
            self.plan = allocate_shots(self.groups, estimator.shots, estimator.allocation) if self.groups else None

    def estimate(self, params, seed=None) -> EnergyEstimate:
        circuit = build_ansatz(self.spec, params)
        if self.estimator == "exact":
            value = exact_expectation(self.obs, run(circuit))
            return EnergyEstimate(value, 0.0, ())
        if not self.groups:
            return EnergyEstimate(self.obs.constant, 0.0, ())
        est = self.estimator
        return estimate_observable(circuit, self.obs, self.plan, self.groups, seed, est.noise)

    def __call__(self, params) -> float:
        seed = np.random.SeedSequence(self.estimator.seed, spawn_key=(self.calls,)) \
            if self.estimator != "exact" else None
        self.calls += 1
        if self.estimator == "exact" or not self.groups:
            return self.estimate(params, seed).value
        self.shots_spent += self.estimator.shots
        if self.objective.kind == "expectation":
            return self.estimate(params, seed).value
        circuit = build_ansatz(self.spec, params)
        counts = measure_groups(circuit, self.groups, self.plan, seed, self.estimator.noise)
        value = self.obs.constant
        for g, c in zip(self.groups, counts):
            value += evaluate(self.objective, SampleSet(tuple(group_samples(g, c))))
        return value


@dataclass
class VqeResult:
    best_energy: float
    best_params: np.ndarray
    trace: OptimizationTrace
    best_objective: float
    std_error: float = 0.0
    exact_ground: float | None = None
    gap_to_exact: float | None = None
    initial_energy: float | None = None


def run_vqe(
    obs: Observable,
    spec: AnsatzSpec,
    opt: OptimizerConfig,
    estimator="exact",
    objective: ObjectiveSpec | None = None,
    x0: Sequence[float] | None = None,
    compute_exact: bool = True,
) -> VqeResult:
    """Minimise the objective over ansatz parameters.

    ``best_energy`` is the trace minimum for the exact estimator. For the
    sampled estimator it is a fresh, independent estimate at the best
    parameters, so it is not biased low by picking the luckiest draw.
    """
    objective = objective or ObjectiveSpec()
    if obs.n_qubits != spec.n_qubits:
        raise ValueError(f"observable has {obs.n_qubits} qubits, ansatz {spec.n_qubits}")
    if estimator == "exact" and objective.kind != "expectation":
        raise ValueError(f"{objective.kind} needs sampled energies; the exact estimator has none")
    f = EnergyObjective(obs, spec, estimator, objective)
    if x0 is None:
        x0 = np.zeros(spec.parameter_count)
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    initial = f.estimate(x0, np.random.SeedSequence(0, spawn_key=(2**31,))).value
    trace = minimize(f, x0, opt)
    best_params = trace.best_params
    if estimator == "exact":
        best_energy, std = trace.best_value, 0.0
    else:
        final = f.estimate(best_params, np.random.SeedSequence(estimator.seed, spawn_key=(2**31,)))
        best_energy, std = final.value, final.std_error
    ground = exact_ground_energy(obs) if compute_exact else None
    return VqeResult(
        best_energy=best_energy,
        best_params=best_params,
        trace=trace,
        best_objective=trace.best_value,
        std_error=std,
        exact_ground=ground,
        gap_to_exact=None if ground is None else best_energy - ground,
        initial_energy=initial,
    )


def exact_ground_energy(obs: Observable, tol: float = 1e-10, max_iter: int = 200_000) -> float:
    """Lowest eigenvalue: bitstring scan when diagonal, shifted power iteration otherwise.

    The shift is the one-norm, which bounds the spectral norm, so
    ``one_norm * I - H`` is positive semidefinite and its dominant
    eigenvalue maps back to the ground energy.
    """
    if obs.is_diagonal:
        if obs.n_qubits > MAX_DIAGONAL_QUBITS:
            raise ValueError(f"diagonal scan limited to {MAX_DIAGONAL_QUBITS} qubits")
        return float(diagonal_energies(obs).min())
    if obs.n_qubits > MAX_DENSE_QUBITS:
        raise ValueError(f"power iteration limited to {MAX_DENSE_QUBITS} qubits")
    sigma = obs.one_norm
    a = sigma * np.eye(2**obs.n_qubits) - dense_matrix(obs)
    rng = np.random.default_rng(12345)
    v = rng.normal(size=a.shape[0]) + 1j * rng.normal(size=a.shape[0])
    v /= np.linalg.norm(v)
    lam = float(np.real(np.vdot(v, a @ v)))
    for _ in range(max_iter):
        w = a @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return sigma
        v = w / norm
        new = float(np.real(np.vdot(v, a @ v)))
        if abs(new - lam) < tol:
            lam = new
            break
        lam = new
    return sigma - lam
