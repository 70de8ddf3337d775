"""Energy estimation from shots: grouping, basis rotations, shot allocation."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .pauli import Observable, PauliTerm, qubitwise_commutes
from .simulator import (
    Circuit,
    NoiseModel,
    RX,
    RY,
    SampleCounts,
    run,
    run_noisy,
    sample,
)

GROUPING_STRATEGIES = ("one_per_term", "qwc_greedy")
ALLOCATION_STRATEGIES = ("uniform", "proportional")


@dataclass(frozen=True)
class MeasurementGroup:
    """Qubit-wise commuting terms and the single-qubit basis that reads them all."""

    terms: tuple[PauliTerm, ...]
    basis: tuple[str, ...]

    @classmethod
    def from_terms(cls, terms: Sequence[PauliTerm], n_qubits: int) -> "MeasurementGroup":
        basis = ["I"] * n_qubits
        for t in terms:
            for q, a in enumerate(t.string.axes):
                if a == "I":
                    continue
                if basis[q] not in ("I", a):
                    raise ValueError(f"term {t} conflicts with basis {basis[q]} on qubit {q}")
                basis[q] = a
        return cls(tuple(terms), tuple(basis))

    @property
    def n_qubits(self) -> int:
        return len(self.basis)

    @property
    def weight(self) -> float:
        return sum(abs(t.coefficient) for t in self.terms)

    def accepts(self, term: PauliTerm) -> bool:
        return all(qubitwise_commutes(term.string, t.string) for t in self.terms)


def group_terms(obs: Observable, strategy: str = "qwc_greedy") -> list[MeasurementGroup]:
    """Partition the non-constant terms into co-measurable groups.

    ``qwc_greedy`` is first-fit over terms in descending ``|coefficient|``
    (stable, so equal weights keep input order).
    """
    if strategy == "one_per_term":
        return [MeasurementGroup.from_terms([t], obs.n_qubits) for t in obs.terms]
    if strategy != "qwc_greedy":
        raise ValueError(f"unknown grouping strategy {strategy!r}")
    buckets: list[list[PauliTerm]] = []
    for term in sorted(obs.terms, key=lambda t: -abs(t.coefficient)):
        for bucket in buckets:
            if all(qubitwise_commutes(term.string, t.string) for t in bucket):
                bucket.append(term)
                break
        else:
            buckets.append([term])
    return [MeasurementGroup.from_terms(b, obs.n_qubits) for b in buckets]


def basis_rotation_circuit(group: MeasurementGroup, n_qubits: int | None = None) -> Circuit:
    """Rotate each measured axis onto Z: RY(-pi/2) for X, RX(pi/2) for Y."""
    n = group.n_qubits if n_qubits is None else n_qubits
    gates = []
    for q, a in enumerate(group.basis):
        if a == "X":
            gates.append(RY(-math.pi / 2, q))
        elif a == "Y":
            gates.append(RX(math.pi / 2, q))
    return Circuit(n, tuple(gates))


def _term_signs(group: MeasurementGroup, indices: np.ndarray) -> np.ndarray:
    """(n_terms, len(indices)) matrix of +-1 eigenvalues after rotation."""
    n = group.n_qubits
    out = np.empty((len(group.terms), indices.shape[0]))
    for k, t in enumerate(group.terms):
        parity = np.zeros(indices.shape, dtype=np.int64)
        for q in t.string.support:
            parity ^= (indices >> (n - 1 - q)) & 1
        out[k] = 1.0 - 2.0 * parity
    return out


@dataclass(frozen=True)
class GroupEstimate:
    term_means: tuple[float, ...]
    contribution: float
    variance: float
    shots: int

    @property
    def std_error(self) -> float:
        return math.sqrt(self.variance / self.shots) if self.shots > 0 else 0.0


def estimate_from_counts(group: MeasurementGroup, counts: SampleCounts) -> GroupEstimate:
    """Per-term means of the +-1 readout and the group's weighted contribution.

    ``variance`` is the unbiased per-shot sample variance of the group value.
    """
    if counts.shots < 1 or not counts.counts:
        raise ValueError("empty counts")
    if counts.n_qubits != group.n_qubits:
        raise ValueError("bitstring length does not match the group width")
    indices, weights = counts.as_arrays()
    signs = _term_signs(group, indices)
    freq = weights / counts.shots
    means = signs @ freq
    coeffs = np.array([t.coefficient for t in group.terms])
    values = coeffs @ signs
    contribution = float(values @ freq)
    if counts.shots > 1:
        var = float(weights @ (values - contribution) ** 2) / (counts.shots - 1)
    else:
        var = 0.0
    return GroupEstimate(tuple(float(m) for m in means), contribution, var, counts.shots)


def estimate_from_probabilities(group: MeasurementGroup, probs: np.ndarray) -> GroupEstimate:
    """Infinite-shot limit of :func:`estimate_from_counts`; zero variance."""
    indices = np.arange(probs.shape[0])
    signs = _term_signs(group, indices)
    means = signs @ probs
    coeffs = np.array([t.coefficient for t in group.terms])
    return GroupEstimate(tuple(float(m) for m in means), float(coeffs @ means), 0.0, 0)


def group_samples(group: MeasurementGroup, counts: SampleCounts) -> list[tuple[str, float, int]]:
    """(bitstring, per-shot group value, count) entries for risk objectives."""
    indices, weights = counts.as_arrays()
    coeffs = np.array([t.coefficient for t in group.terms])
    values = coeffs @ _term_signs(group, indices)
    n = group.n_qubits
    return [
        (format(int(i), f"0{n}b"), float(v), int(w))
        for i, v, w in zip(indices, values, weights)
    ]


@dataclass(frozen=True)
class ShotPlan:
    allocations: tuple[tuple[int, int], ...]
    total_budget: int
    strategy: str = "uniform"

    def shots_for(self, group_index: int) -> int:
        for g, s in self.allocations:
            if g == group_index:
                return s
        raise KeyError(group_index)


def largest_remainder(weights: Sequence[float], total: int) -> list[int]:
    """Integer split of ``total`` proportional to ``weights``.

    Floors first, then hands the leftover units to the largest fractional
    parts; ties go to the earlier index.
    """
    w = np.asarray(weights, dtype=float)
    if w.sum() <= 0:
        w = np.ones_like(w)
    exact = w / w.sum() * total
    base = np.floor(exact + 1e-9).astype(int)
    leftover = total - int(base.sum())
    frac = exact - base
    order = sorted(range(len(w)), key=lambda i: (-round(frac[i], 12), i))
    for i in order[:leftover]:
        base[i] += 1
    return [int(b) for b in base]


def allocate_shots(groups: Sequence[MeasurementGroup], budget: int, strategy: str = "uniform") -> ShotPlan:
    if budget < len(groups):
        raise ValueError(f"budget {budget} is smaller than the number of groups ({len(groups)})")
    if strategy == "uniform":
        shots = largest_remainder([1.0] * len(groups), budget)
    elif strategy == "proportional":
        shots = largest_remainder([g.weight for g in groups], budget)
    else:
        raise ValueError(f"unknown allocation strategy {strategy!r}")
    return ShotPlan(tuple(enumerate(shots)), budget, strategy)


@dataclass(frozen=True)
class EnergyEstimate:
    value: float
    std_error: float
    per_group: tuple[tuple[MeasurementGroup, float, int], ...] = ()


def group_seed(seed, index: int) -> np.random.SeedSequence:
    """Independent, reproducible stream for one group of one estimate."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=seed.spawn_key + (index,))
    return np.random.SeedSequence(seed if seed is not None else 0, spawn_key=(index,))


def measure_groups(
    circuit: Circuit,
    groups: Sequence[MeasurementGroup],
    plan: ShotPlan,
    seed=0,
    noise: NoiseModel | None = None,
) -> list[SampleCounts | None]:
    """Run circuit + rotation per group and sample the planned shots.

    Groups given zero shots yield ``None``.
    """
    base = None if noise is not None and noise.has_gate_noise else run(circuit)
    out: list[SampleCounts | None] = []
    for k, g in enumerate(groups):
        shots = plan.shots_for(k)
        if shots == 0:
            out.append(None)
            continue
        rng = np.random.default_rng(group_seed(seed, k))
        rot = basis_rotation_circuit(g, circuit.n_qubits)
        if base is not None:
            state = run(rot, base)
        else:
            state = run_noisy(circuit + rot, noise, rng)
        out.append(sample(state, shots, noise, rng))
    return out


def estimate_observable(
    circuit: Circuit,
    obs: Observable,
    plan: ShotPlan | None,
    groups: Sequence[MeasurementGroup] | None = None,
    seed=0,
    noise: NoiseModel | None = None,
) -> EnergyEstimate:
    """Estimate <H> for the state ``circuit`` prepares.

    With ``plan=None`` the analytic outcome probabilities replace sampling
    (``noise`` is then ignored) and the standard error is zero. Group ``k``
    samples from the stream ``group_seed(seed, k)``.
    """
    if circuit.n_qubits != obs.n_qubits:
        raise ValueError("circuit and observable act on different numbers of qubits")
    if groups is None:
        groups = group_terms(obs)
    if not groups:
        return EnergyEstimate(obs.constant, 0.0, ())
    if plan is None:
        base = run(circuit)
        per_group = []
        value = obs.constant
        for g in groups:
            state = run(basis_rotation_circuit(g, obs.n_qubits), base)
            est = estimate_from_probabilities(g, state.probabilities())
            value += est.contribution
            per_group.append((g, est.contribution, 0))
        return EnergyEstimate(value, 0.0, tuple(per_group))
    if len(plan.allocations) != len(groups):
        raise ValueError("shot plan does not cover every group")
    value = obs.constant
    var = 0.0
    per_group = []
    for g, counts in zip(groups, measure_groups(circuit, groups, plan, seed, noise)):
        if counts is None:
            raise ValueError("a group with non-zero weight was allocated no shots")
        est = estimate_from_counts(g, counts)
        value += est.contribution
        var += est.std_error**2
        per_group.append((g, est.contribution, counts.shots))
    return EnergyEstimate(value, math.sqrt(var), tuple(per_group))


def shots_required(K: float, epsilon: float) -> float:
    """Measurements needed for precision ``epsilon`` given the variance constant K."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return K / epsilon**2


@dataclass(frozen=True)
class Stage:
    shots: int
    evaluations: int
    fraction: float


@dataclass(frozen=True)
class ThreeStageSchedule:
    stages: tuple[Stage, Stage, Stage]

    @property
    def total_evaluations(self) -> int:
        return sum(s.evaluations for s in self.stages)

    @property
    def total_shots(self) -> int:
        return sum(s.shots * s.evaluations for s in self.stages)

    def shots_at(self, evaluation: int) -> int:
        """Shot level for the zero-based ``evaluation``; the last stage absorbs overruns."""
        edge = 0
        for s in self.stages:
            edge += s.evaluations
            if evaluation < edge:
                return s.shots
        return self.stages[-1].shots


def three_stage_plan(
    total_evaluations: int,
    shots_per_stage: Sequence[int] = (100, 1000, 10000),
    ratio: Sequence[float] = (10, 3, 1),
) -> ThreeStageSchedule:
    if len(shots_per_stage) != 3 or len(ratio) != 3:
        raise ValueError("three stages are required")
    evals = largest_remainder(ratio, total_evaluations)
    if min(evals) < 1:
        raise ValueError(f"{total_evaluations} evaluations cannot give every stage at least one")
    return ThreeStageSchedule(
        tuple(
            Stage(int(s), e, e / total_evaluations) for s, e in zip(shots_per_stage, evals)
        )
    )
