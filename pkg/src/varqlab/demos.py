"""Scripted worked examples and oracle spot checks behind ``demo`` and ``verify``."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from . import oracle
from .measurement import allocate_shots, estimate_observable, group_terms, shots_required
from .optimizers import OptimizerConfig
from .pauli import (
    Observable,
    PauliString,
    PauliTerm,
    dense_matrix,
    exact_expectation,
    multiply,
    string_matrix,
)
from .qaoa import (
    WeightedGraph,
    build_qaoa_circuit,
    maxcut_to_ising,
    QaoaParams,
    run_qaoa,
    schedule_params,
    warm_start_mixer_layer,
)
from .simulator import Circuit, Gate, RY, StateVector, run
from .vqe import AnsatzSpec, build_ansatz, exact_ground_energy, run_vqe

WORKED_EXAMPLE = Observable.from_terms(1, [(2.0, "Z0"), (1.0, "X0"), (1.0, "I")])
ALLOCATION_EXAMPLE = Observable.from_terms(2, [(5.0, "Z0"), (3.0, "Z1"), (2.0, "Z0*Z1")])
GROUPING_EXAMPLE = Observable.from_terms(
    4, [(1.0, "Z0*X1"), (1.0, "Y1*X2"), (1.0, "X2*X3"), (1.0, "X0"), (1.0, "Z3")]
)
TRIANGLE = WeightedGraph(3, ((0, 1, 10.0), (0, 2, 10.0), (1, 2, 1.0)))


def allocation_state_circuit() -> Circuit:
    """Prepares cos(pi/6)|00> + sin(pi/6)|10>."""
    return Circuit(2, (RY(math.pi / 3, 0),))


@dataclass
class Check:
    name: str
    expected: Any
    measured: Any
    tolerance: str
    passed: bool

    def __post_init__(self):
        self.passed = bool(self.passed)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.name}: expected {self.expected}, measured {self.measured} ({self.tolerance})"

    def as_dict(self) -> dict:
        return {"name": self.name, "expected": self.expected, "measured": self.measured,
                "tolerance": self.tolerance, "pass": self.passed}


def _close(name, expected, measured, atol) -> Check:
    return Check(name, expected, measured, f"|diff| <= {atol:g}", abs(measured - expected) <= atol)


def demo_measurement_cost(seed: int = 0, repeats: int = 0) -> list[Check]:
    m = shots_required(8000, 5e-4)
    chem = shots_required(8000, 1.6e-3)
    return [
        Check("M = K/eps^2 for K=8000, eps=5e-4", 3.2e10, m, "exact", m == 3.2e10),
        _close("M at chemical accuracy eps=1.6e-3", 3.125e9, chem, 1e-3),
    ]


def shot_allocation_stds(repeats: int, seed: int = 0) -> dict[str, np.ndarray]:
    """Energies from ``repeats`` independent 300-shot experiments per strategy."""
    circuit = allocation_state_circuit()
    groups = group_terms(ALLOCATION_EXAMPLE, "one_per_term")
    out = {}
    for k, strategy in enumerate(("uniform", "proportional")):
        plan = allocate_shots(groups, 300, strategy)
        out[strategy] = np.array([
            estimate_observable(
                circuit, ALLOCATION_EXAMPLE, plan, groups,
                np.random.SeedSequence(seed, spawn_key=(k, r)),
            ).value
            for r in range(repeats)
        ])
    return out


def demo_shot_allocation(seed: int = 0, repeats: int = 10000) -> list[Check]:
    exact = exact_expectation(ALLOCATION_EXAMPLE, run(allocation_state_circuit()))
    vals = shot_allocation_stds(repeats, seed)
    su = float(vals["uniform"].std(ddof=1))
    sp = float(vals["proportional"].std(ddof=1))
    return [
        _close("exact <H> for 5Z0+3Z1+2Z0Z1", 6.5, exact, 1e-12),
        _close(f"uniform 100/100/100 std over {repeats} repeats", 0.469, su, 0.05),
        _close(f"proportional 150/90/60 std over {repeats} repeats", 0.420, sp, 0.05),
        Check("proportional std < uniform std", True, sp < su, "strict", sp < su),
    ]


def demo_vqe_worked_example(seed: int = 0, repeats: int = 0) -> list[Check]:
    spec = AnsatzSpec("single_ry", 1)
    e0 = exact_expectation(WORKED_EXAMPLE, run(build_ansatz(spec, [0.0])))
    epi = exact_expectation(WORKED_EXAMPLE, run(build_ansatz(spec, [math.pi])))
    res = run_vqe(WORKED_EXAMPLE, spec, OptimizerConfig("gradient_descent", max_evaluations=2000), x0=[0.1])
    return [
        _close("<H> at theta=0", 3.0, e0, 1e-12),
        _close("<H> at theta=pi", -1.0, epi, 1e-12),
        _close("gradient-descent VQE energy", 1 - math.sqrt(5), res.best_energy, 1e-4),
    ]


def demo_triangle_maxcut(seed: int = 0, repeats: int = 0) -> list[Check]:
    problem = maxcut_to_ising(TRIANGLE)
    energy, argmins = oracle.brute_force_min(problem.hamiltonian)
    res = run_qaoa(
        problem, 2, schedule_params(2, 0.5),
        OptimizerConfig("nelder_mead", max_evaluations=300, restarts=3, seed=seed),
        shots=2000, seed=seed, graph=TRIANGLE,
    )
    return [
        Check("brute-force optimal partitions", ["011", "100"], argmins, "exact", argmins == ["011", "100"]),
        _close("brute-force maximum cut", 20.0, -energy, 0.0),
        Check("QAOA p=2 solution bitstring", ["011", "100"], res.solution_bitstring, "membership",
              res.solution_bitstring in ("011", "100")),
    ]


DEMOS = {
    "measurement-cost": demo_measurement_cost,
    "shot-allocation": demo_shot_allocation,
    "vqe-worked-example": demo_vqe_worked_example,
    "triangle-maxcut": demo_triangle_maxcut,
}


def _random_observable(rng, n: int, n_terms: int, diagonal: bool = False) -> Observable:
    axes = "IZ" if diagonal else "IXYZ"
    terms = [
        PauliTerm(float(rng.normal()), PauliString(tuple(rng.choice(list(axes), size=n))))
        for _ in range(n_terms)
    ]
    return Observable(n, tuple(terms), float(rng.normal()))


def verify(seed: int = 0) -> list[Check]:
    """Compare fast paths with the brute-force oracle on seeded random inputs."""
    rng = np.random.default_rng(seed)
    checks = []

    worst = 0.0
    for _ in range(20):
        obs = _random_observable(rng, int(rng.integers(1, 4)), 5)
        worst = max(worst, float(np.abs(dense_matrix(obs) - oracle.dense_observable(obs)).max()))
    checks.append(Check("dense_matrix vs entry-wise oracle", 0.0, worst, "<= 1e-12", worst <= 1e-12))

    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(1, 5))
        a = PauliString(tuple(rng.choice(list("IXYZ"), size=n)))
        b = PauliString(tuple(rng.choice(list("IXYZ"), size=n)))
        ref = oracle.dense_observable(Observable(n, (PauliTerm(1.0, a),))) if not a.is_identity else np.eye(2**n)
        refb = oracle.dense_observable(Observable(n, (PauliTerm(1.0, b),))) if not b.is_identity else np.eye(2**n)
        worst = max(worst, float(np.abs(string_matrix(multiply(a, b)) - ref @ refb).max()))
    checks.append(Check("Pauli product vs dense product", 0.0, worst, "<= 1e-12", worst <= 1e-12))

    worst = 0.0
    for _ in range(10):
        obs = _random_observable(rng, int(rng.integers(1, 7)), 6, diagonal=True)
        worst = max(worst, abs(exact_ground_energy(obs) - oracle.brute_force_min(obs)[0]))
    checks.append(Check("diagonal ground energy vs scan", 0.0, worst, "<= 1e-9", worst <= 1e-9))

    worst = 0.0
    for _ in range(10):
        obs = _random_observable(rng, int(rng.integers(1, 4)), 5)
        ref = float(np.linalg.eigvalsh(oracle.dense_observable(obs)).min())
        worst = max(worst, abs(exact_ground_energy(obs) - ref))
    checks.append(Check("power iteration vs eigvalsh", 0.0, worst, "<= 1e-6", worst <= 1e-6))

    worst = 0.0
    kinds = ["H", "X", "Y", "Z", "RX", "RY", "RZ", "PHASE", "CNOT", "CZ", "RZZ"]
    for kind in kinds:
        n = 3
        targets = tuple(int(q) for q in rng.choice(n, size=2 if kind in ("CNOT", "CZ", "RZZ") else 1, replace=False))
        angle = float(rng.uniform(-math.pi, math.pi)) if kind in ("RX", "RY", "RZ", "PHASE", "RZZ") else None
        psi = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
        psi /= np.linalg.norm(psi)
        got = run(Circuit(n, (Gate(kind, targets, angle),)), StateVector(psi)).amplitudes
        ref = oracle.embed(oracle.gate_matrix(kind, angle), targets, n) @ psi
        worst = max(worst, float(np.abs(got - ref).max()))
    checks.append(Check("gate actions vs embedded matrices", 0.0, worst, "<= 1e-12", worst <= 1e-12))

    problem = maxcut_to_ising(TRIANGLE)
    worst = 0.0
    for _ in range(10):
        gamma, beta = rng.uniform(-math.pi, math.pi, size=2)
        got = run(build_qaoa_circuit(problem, QaoaParams((gamma,), (beta,)))).amplitudes
        plus = np.full(8, 1 / math.sqrt(8), dtype=complex)
        mixer = oracle.expm_1q(Observable.from_terms(1, [(1.0, "X0")]), beta)
        ref = np.kron(np.kron(mixer, mixer), mixer) @ oracle.dense_expm_diagonal(problem.hamiltonian, gamma) @ plus
        worst = max(worst, 1 - abs(np.vdot(ref, got)))
    checks.append(Check("QAOA layer vs dense exponentials", 0.0, worst, "1-overlap <= 1e-10", worst <= 1e-10))

    worst = 0.0
    for _ in range(20):
        c = float(rng.uniform(0, 1))
        beta = float(rng.uniform(-math.pi, math.pi))
        t = 2 * math.asin(math.sqrt(c))
        h = Observable.from_terms(1, [(-math.sin(t), "X0"), (-math.cos(t), "Z0")])
        ref = oracle.expm_1q(h, beta)
        got = oracle.circuit_unitary(warm_start_mixer_layer([c], beta))
        worst = max(worst, float(np.abs(got - ref).max()))
    checks.append(Check("warm-start mixer vs closed-form exponential", 0.0, worst, "<= 1e-10", worst <= 1e-10))
    return checks
