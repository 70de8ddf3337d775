"""QAOA for MaxCut-style Ising problems: encoding, circuits, warm starts, initialisation."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .objectives import ObjectiveSpec, SampleSet, evaluate
from .optimizers import OptimizationTrace, OptimizerConfig, minimize
from .pauli import (
    DiagonalityError,
    Observable,
    PauliString,
    PauliTerm,
    diagonal_energies,
    simplify,
)
from .simulator import CNOT, Circuit, Gate, H, RX, RY, RZ, run, sample

MAX_BRUTE_FORCE_NODES = 20


def max_workers() -> int:
    """Thread cap from ``VARQLAB_THREADS`` (default: CPU count)."""
    env = os.environ.get("VARQLAB_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class WeightedGraph:
    n_nodes: int
    edges: tuple[tuple[int, int, float], ...] = ()

    def __post_init__(self):
        seen = set()
        edges = []
        for i, j, w in self.edges:
            i, j, w = int(i), int(j), float(w)
            if i > j:
                i, j = j, i
            if i == j or not 0 <= i < self.n_nodes or j >= self.n_nodes:
                raise ValueError(f"bad edge ({i}, {j}) for {self.n_nodes} nodes")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i}, {j})")
            if not math.isfinite(w):
                raise ValueError(f"edge ({i}, {j}) has a non-finite weight")
            seen.add((i, j))
            edges.append((i, j, w))
        object.__setattr__(self, "edges", tuple(edges))

    def cut_value(self, bits: str) -> float:
        return sum(w for i, j, w in self.edges if bits[i] != bits[j])

    def max_cut(self) -> tuple[float, list[str]]:
        """Exhaustive maximum cut and all bitstrings attaining it."""
        n = self.n_nodes
        if n > MAX_BRUTE_FORCE_NODES:
            raise ValueError(f"brute-force max cut limited to {MAX_BRUTE_FORCE_NODES} nodes")
        cuts = -diagonal_energies(maxcut_to_ising(self).hamiltonian)
        best = float(cuts.max())
        return best, [format(int(i), f"0{n}b") for i in np.flatnonzero(cuts >= best - 1e-9)]


def parse_graph(text: str) -> WeightedGraph:
    """First line ``n_nodes``, then ``i j weight`` per line; ``#`` starts a comment."""
    rows = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    rows = [r for r in rows if r]
    if not rows:
        raise ValueError("empty graph file")
    n = int(rows[0])
    edges = []
    for r in rows[1:]:
        parts = r.split()
        if len(parts) == 2:
            parts.append("1")
        if len(parts) != 3:
            raise ValueError(f"expected 'i j weight', got {r!r}")
        edges.append((int(parts[0]), int(parts[1]), float(parts[2])))
    return WeightedGraph(n, tuple(edges))


def format_graph(g: WeightedGraph) -> str:
    return f"{g.n_nodes}\n" + "".join(f"{i} {j} {w!r}\n" for i, j, w in g.edges)


@dataclass(frozen=True)
class IsingProblem:
    """Diagonal cost Hamiltonian to be minimised; offsets live in the constant."""

    hamiltonian: Observable

    def __post_init__(self):
        if not self.hamiltonian.is_diagonal:
            raise DiagonalityError("Ising problems need a Z/I-only Hamiltonian")

    @property
    def n_qubits(self) -> int:
        return self.hamiltonian.n_qubits

    def energies(self) -> np.ndarray:
        return diagonal_energies(self.hamiltonian)

    def __add__(self, other: Observable) -> "IsingProblem":
        return IsingProblem(simplify(self.hamiltonian + other))


def maxcut_to_ising(g: WeightedGraph) -> IsingProblem:
    """Minimising ``-C`` with ``C = sum w/2 (1 - Z_i Z_j)`` maximises the cut."""
    n = max(g.n_nodes, 1)
    terms = tuple(
        PauliTerm(0.5 * w, PauliString.from_sparse({i: "Z", j: "Z"}, n)) for i, j, w in g.edges
    )
    constant = -0.5 * sum(w for _, _, w in g.edges)
    return IsingProblem(simplify(Observable(n, terms, constant)))


@dataclass(frozen=True)
class LinearConstraint:
    """Penalise ``sum(x_q for q in qubits) != target`` by ``weight * (target - sum)**2``."""

    target: int
    qubits: tuple[int, ...]
    weight: float

    def __post_init__(self):
        if self.weight <= 0:
            raise ValueError("penalty weight must be positive")
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))

    @classmethod
    def parse(cls, text: str) -> "LinearConstraint":
        """``k=2,qubits=0;1;2,weight=5`` (qubits separated by ``;`` or spaces)."""
        fields = {}
        for part in text.split(","):
            key, _, value = part.partition("=")
            fields[key.strip()] = value.strip()
        try:
            qubits = tuple(int(q) for q in fields["qubits"].replace(";", " ").split())
            return cls(int(fields["k"]), qubits, float(fields.get("weight", 1.0)))
        except KeyError as e:
            raise ValueError(f"constraint is missing {e.args[0]!r}") from None


def penalty_observable(c: LinearConstraint, n_qubits: int) -> Observable:
    """Expand ``P (k - sum x_q)**2`` with ``x_q = (1 - Z_q) / 2``."""
    residual = Observable(n_qubits, (), float(c.target))
    for q in c.qubits:
        z = Observable(n_qubits, (PauliTerm(1.0, PauliString.from_sparse({q: "Z"}, n_qubits)),))
        residual = residual - (0.5 - 0.5 * z)
    return simplify(c.weight * (residual * residual))


@dataclass(frozen=True)
class QaoaParams:
    gammas: tuple[float, ...]
    betas: tuple[float, ...]

    def __post_init__(self):
        g = tuple(float(x) for x in self.gammas)
        b = tuple(float(x) for x in self.betas)
        if len(g) != len(b) or not g:
            raise ValueError("gammas and betas must have the same non-zero length")
        object.__setattr__(self, "gammas", g)
        object.__setattr__(self, "betas", b)

    @property
    def p(self) -> int:
        return len(self.gammas)

    def to_vector(self) -> np.ndarray:
        return np.array(self.gammas + self.betas)

    @classmethod
    def from_vector(cls, x: Sequence[float]) -> "QaoaParams":
        x = list(x)
        if len(x) % 2:
            raise ValueError("parameter vector must have even length")
        p = len(x) // 2
        return cls(tuple(x[:p]), tuple(x[p:]))


def _zstring_rotation(qubits: Sequence[int], angle: float) -> list[Gate]:
    """exp(-i angle/2 Z...Z) via a CNOT ladder onto the last qubit."""
    if len(qubits) == 1:
        return [RZ(angle, qubits[0])]
    ladder = [CNOT(a, b) for a, b in zip(qubits, qubits[1:])]
    return ladder + [RZ(angle, qubits[-1])] + ladder[::-1]


def cost_layer(problem: IsingProblem, gamma: float) -> list[Gate]:
    """exp(-i gamma H_C) up to the global phase of the constant."""
    gates: list[Gate] = []
    for t in problem.hamiltonian.terms:
        gates += _zstring_rotation(t.string.support, 2 * t.coefficient * gamma)
    return gates


def warm_start_angles(c_star: Sequence[float]) -> np.ndarray:
    c = np.asarray(c_star, dtype=float)
    if np.any((c < 0) | (c > 1)) or not np.all(np.isfinite(c)):
        raise ValueError("warm-start values must lie in [0, 1]")
    return 2 * np.arcsin(np.sqrt(c))


def warm_start_state_prep(c_star: Sequence[float]) -> Circuit:
    """RY(2 asin sqrt c_i) on each qubit, so qubit i reads 1 with probability c_i."""
    theta = warm_start_angles(c_star)
    return Circuit(len(theta), tuple(RY(t, q) for q, t in enumerate(theta)))


def warm_start_mixer_layer(c_star: Sequence[float], beta: float) -> Circuit:
    """exp(-i beta (-sin t X - cos t Z)) per qubit as RY(-t), RZ(-2 beta), RY(t)."""
    theta = warm_start_angles(c_star)
    gates = []
    for q, t in enumerate(theta):
        gates += [RY(-t, q), RZ(-2 * beta, q), RY(t, q)]
    return Circuit(len(theta), tuple(gates))


def build_qaoa_circuit(
    problem: IsingProblem,
    params: QaoaParams,
    warm_start: Sequence[float] | None = None,
) -> Circuit:
    """Initial layer, then ``p`` rounds of cost rotation and mixer.

    Without a warm start: Hadamards and an RX(2 beta) mixer on every qubit.
    """
    n = problem.n_qubits
    if warm_start is not None:
        if len(warm_start) != n:
            raise ValueError(f"warm start has {len(warm_start)} entries for {n} qubits")
        gates = list(warm_start_state_prep(warm_start).gates)
    else:
        gates = [H(q) for q in range(n)]
    for gamma, beta in zip(params.gammas, params.betas):
        gates += cost_layer(problem, gamma)
        if warm_start is not None:
            gates += warm_start_mixer_layer(warm_start, beta).gates
        else:
            gates += [RX(2 * beta, q) for q in range(n)]
    return Circuit(n, tuple(gates))


# -- parameter initialisation -------------------------------------------------

def schedule_params(p: int, delta: float) -> QaoaParams:
    """Linear schedule gamma_j = delta j/(p+1), beta_j = (1-delta) j/(p+1)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    f = [j / (p + 1) for j in range(1, p + 1)]
    return QaoaParams(tuple(delta * x for x in f), tuple((1 - delta) * x for x in f))


def random_params(p: int, seed) -> QaoaParams:
    if p < 1:
        raise ValueError("p must be >= 1")
    x = np.random.default_rng(seed).uniform(0, 2 * math.pi, size=2 * p)
    return QaoaParams.from_vector(x)


def _resample(values: Sequence[float], p: int) -> list[float]:
    """Piecewise-linear resampling from positions j/(m+1) to j/(p+1).

    Points beyond the ends follow the end segments. A single value is
    taken to lie on a line through the origin.
    """
    m = len(values)
    xs = [j / (m + 1) for j in range(1, m + 1)]
    new = [j / (p + 1) for j in range(1, p + 1)]
    if m == 1:
        return [values[0] * x / xs[0] for x in new]
    out = []
    for x in new:
        k = min(max(int(np.searchsorted(xs, x)) - 1, 0), m - 2)
        slope = (values[k + 1] - values[k]) / (xs[k + 1] - xs[k])
        out.append(values[k] + slope * (x - xs[k]))
    return out


def interp_params(previous: QaoaParams, p: int | None = None) -> QaoaParams:
    """Guess depth-``p`` angles (default previous.p + 1) from optimised shallower ones."""
    p = previous.p + 1 if p is None else p
    return QaoaParams(tuple(_resample(previous.gammas, p)), tuple(_resample(previous.betas, p)))


def lbl_extend(previous: QaoaParams, delta: float) -> QaoaParams:
    """Keep trained layers and append one schedule-initialised layer."""
    p = previous.p + 1
    sched = schedule_params(p, delta)
    return QaoaParams(previous.gammas + sched.gammas[-1:], previous.betas + sched.betas[-1:])


def init_params(strategy: str, p: int, *, seed=0, delta: float = 0.5,
                previous: QaoaParams | None = None) -> QaoaParams:
    """``random``, ``schedule`` or ``interp`` (needs ``previous`` of depth p-1)."""
    if strategy == "random":
        return random_params(p, seed)
    if strategy == "schedule":
        return schedule_params(p, delta)
    if strategy == "interp":
        if previous is None or previous.p != p - 1:
            raise ValueError("interp needs optimised parameters of depth p-1")
        return interp_params(previous, p)
    raise ValueError(f"unknown init strategy {strategy!r}")


# -- driver --------------------------------------------------------------------

class SampledObjective:
    """``params vector -> objective`` from fresh shots at every call.

    Also remembers the lowest-energy bitstring seen across all calls.
    """

    def __init__(self, problem, p, objective, shots, seed, warm_start=None):
        self.problem = problem
        self.p = p
        self.objective = objective
        self.shots = shots
        self.seed = seed
        self.warm_start = warm_start
        self.energies = problem.energies()
        self.calls = 0
        self.shots_spent = 0
        self.best_bitstring: str | None = None
        self.best_energy = math.inf

    def samples(self, x, seed) -> SampleSet:
        circuit = build_qaoa_circuit(self.problem, QaoaParams.from_vector(x), self.warm_start)
        counts = sample(run(circuit), self.shots, None, seed)
        return SampleSet(tuple((b, float(self.energies[int(b, 2)]), c)
                               for b, c in sorted(counts.counts.items())))

    def __call__(self, x) -> float:
        seed = np.random.SeedSequence(self.seed, spawn_key=(self.calls,))
        self.calls += 1
        self.shots_spent += self.shots
        s = self.samples(x, seed)
        b, e = s.best()
        if e < self.best_energy or (e == self.best_energy and b < self.best_bitstring):
            self.best_bitstring, self.best_energy = b, e
        return evaluate(self.objective, s)


@dataclass
class QaoaResult:
    best_params: QaoaParams
    best_objective: float
    solution_bitstring: str
    solution_cost: float
    trace: OptimizationTrace
    cut_value: float | None = None


def run_qaoa(
    problem: IsingProblem,
    p: int,
    init: QaoaParams,
    opt: OptimizerConfig,
    objective: ObjectiveSpec | None = None,
    shots: int = 1000,
    seed: int = 0,
    warm_start: Sequence[float] | None = None,
    graph: WeightedGraph | None = None,
) -> QaoaResult:
    """Optimise angles on sampled objectives; report the best bitstring ever seen."""
    if init.p != p:
        raise ValueError(f"initial parameters have depth {init.p}, expected {p}")
    objective = objective or ObjectiveSpec()
    f = SampledObjective(problem, p, objective, shots, seed, warm_start)
    trace = minimize(f, init.to_vector(), opt)
    bits = f.best_bitstring
    return QaoaResult(
        best_params=QaoaParams.from_vector(trace.best_params),
        best_objective=trace.best_value,
        solution_bitstring=bits,
        solution_cost=f.best_energy,
        trace=trace,
        cut_value=None if graph is None else graph.cut_value(bits),
    )


def run_interp(problem, p_max, opt, objective=None, shots=1000, seed=0, delta=0.5,
               warm_start=None, graph=None) -> list[QaoaResult]:
    """Depth 1 from the schedule, then each deeper run starts from the INTERP guess."""
    results = []
    params = schedule_params(1, delta)
    for p in range(1, p_max + 1):
        if p > 1:
            params = interp_params(results[-1].best_params, p)
        results.append(run_qaoa(problem, p, params, opt, objective, shots, seed + p, warm_start, graph))
    return results


def run_lbl(problem, p_max, opt, objective=None, shots=1000, seed=0, delta=0.5,
            warm_start=None, graph=None) -> list[QaoaResult]:
    """Layer-by-layer: train depth 1, append a schedule layer, retrain all angles."""
    results = []
    params = schedule_params(1, delta)
    for p in range(1, p_max + 1):
        if p > 1:
            params = lbl_extend(results[-1].best_params, delta)
        results.append(run_qaoa(problem, p, params, opt, objective, shots, seed + p, warm_start, graph))
    return results


def expected_cut(graph: WeightedGraph, params: QaoaParams, shots: int | None, seed) -> float:
    problem = maxcut_to_ising(graph)
    state = run(build_qaoa_circuit(problem, params))
    cuts = -problem.energies()
    if shots is None:
        return float(state.probabilities() @ cuts)
    counts = sample(state, shots, None, seed)
    return sum(c * cuts[int(b, 2)] for b, c in counts.counts.items()) / shots


def evaluate_transfer(
    params: QaoaParams,
    graphs: Sequence[WeightedGraph],
    shots: int | None = 1000,
    seed: int = 0,
) -> list[float]:
    """Approximation ratio (expected cut / maximum cut) of fixed angles on each graph.

    A graph with no positive cut has ratio 1 by convention. ``shots=None``
    uses exact outcome probabilities.
    """
    for g in graphs:
        if g.n_nodes > MAX_BRUTE_FORCE_NODES:
            raise ValueError(f"graph with {g.n_nodes} nodes is too large for brute force")

    def ratio(k: int) -> float:
        g = graphs[k]
        best, _ = g.max_cut()
        if best <= 0:
            return 1.0
        return expected_cut(g, params, shots, np.random.SeedSequence(seed, spawn_key=(k,))) / best

    with ThreadPoolExecutor(max_workers=max_workers()) as pool:
        return list(pool.map(ratio, range(len(graphs))))


def random_regular_graph(n: int, degree: int, seed) -> WeightedGraph:
    """Uniform-weight random regular graph by rejection of the pairing model."""
    if (n * degree) % 2 or degree >= n:
        raise ValueError("no such regular graph")
    rng = np.random.default_rng(seed)
    while True:
        stubs = rng.permutation(np.repeat(np.arange(n), degree))
        pairs = stubs.reshape(-1, 2)
        edges = {tuple(sorted((int(a), int(b)))) for a, b in pairs}
        if len(edges) == len(pairs) and all(a != b for a, b in edges):
            return WeightedGraph(n, tuple((a, b, 1.0) for a, b in sorted(edges)))
