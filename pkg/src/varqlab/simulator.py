"""Dense statevector simulation, sampling and a stochastic Pauli noise model.

Randomness comes from :func:`numpy.random.default_rng` (PCG64). Every
``seed`` argument accepts anything ``default_rng`` accepts, including an
existing ``Generator``, which is then consumed in place.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

ONE_QUBIT = {"H", "X", "Y", "Z", "RX", "RY", "RZ", "PHASE"}
TWO_QUBIT = {"CNOT", "CZ", "RZZ"}
PARAMETRIC = {"RX", "RY", "RZ", "PHASE", "RZZ"}
NORM_TOL = 1e-10

_S2 = 1 / math.sqrt(2)
_FIXED = {
    "H": np.array([[_S2, _S2], [_S2, -_S2]], dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
}
_PAULI_1Q = ("X", "Y", "Z")
# the 15 non-identity two-qubit Paulis, in IXYZ x IXYZ order minus II
_PAULI_2Q = tuple((a, b) for a in "IXYZ" for b in "IXYZ")[1:]


def gate_unitary(kind: str, angle: float | None = None) -> np.ndarray:
    """2x2 or 4x4 unitary; the first target is the high-order qubit."""
    if kind in _FIXED:
        return _FIXED[kind].copy()
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    if kind == "RX":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if kind == "RY":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind == "RZ":
        return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])
    if kind == "PHASE":
        return np.diag([1, np.exp(1j * angle)]).astype(complex)
    if kind == "RZZ":
        a, b = np.exp(-0.5j * angle), np.exp(0.5j * angle)
        return np.diag([a, b, b, a])
    raise ValueError(f"unknown gate kind {kind!r}")


@dataclass(frozen=True)
class Gate:
    kind: str
    targets: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self):
        kind = self.kind.upper()
        targets = tuple(int(t) for t in self.targets)
        if kind not in ONE_QUBIT | TWO_QUBIT:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        arity = 1 if kind in ONE_QUBIT else 2
        if len(targets) != arity:
            raise ValueError(f"{kind} takes {arity} target(s), got {targets}")
        if len(set(targets)) != len(targets) or min(targets) < 0:
            raise ValueError(f"invalid targets {targets} for {kind}")
        if kind in PARAMETRIC:
            if self.angle is None or not math.isfinite(self.angle):
                raise ValueError(f"{kind} needs a finite angle")
            angle = float(self.angle)
        else:
            angle = None
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "angle", angle)

    def matrix(self) -> np.ndarray:
        return gate_unitary(self.kind, self.angle)

    def inverse(self) -> "Gate":
        if self.angle is None:
            return self
        return Gate(self.kind, self.targets, -self.angle)

    def __str__(self) -> str:
        qs = " ".join(f"q{t}" for t in self.targets)
        if self.angle is None:
            return f"{self.kind} {qs}"
        return f"{self.kind}({self.angle:.4f}) {qs}"


def H(q: int) -> Gate:
    return Gate("H", (q,))


def RX(theta: float, q: int) -> Gate:
    return Gate("RX", (q,), theta)


def RY(theta: float, q: int) -> Gate:
    return Gate("RY", (q,), theta)


def RZ(theta: float, q: int) -> Gate:
    return Gate("RZ", (q,), theta)


def CNOT(control: int, target: int) -> Gate:
    return Gate("CNOT", (control, target))


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        gates = tuple(self.gates)
        for g in gates:
            if max(g.targets) >= self.n_qubits:
                raise ValueError(f"gate {g} targets a qubit outside 0..{self.n_qubits - 1}")
        object.__setattr__(self, "gates", gates)

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.n_qubits != self.n_qubits:
            raise ValueError("cannot concatenate circuits of different width")
        return Circuit(self.n_qubits, self.gates + other.gates)

    def __len__(self) -> int:
        return len(self.gates)

    def count(self, kind: str) -> int:
        return sum(g.kind == kind for g in self.gates)

    def dump(self) -> str:
        return "".join(f"{g}\n" for g in self.gates)


_LINE_RE = re.compile(r"^([A-Za-z]+)(?:\(\s*([^)]*)\))?\s+(q\d+(?:\s+q\d+)?)$")


def parse_circuit(text: str, n_qubits: int | None = None) -> Circuit:
    """Inverse of :meth:`Circuit.dump`; accepts a ``# qubits: N`` header."""
    gates = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = re.match(r"#\s*qubits\s*[:=]\s*(\d+)", line)
            if m and n_qubits is None:
                n_qubits = int(m.group(1))
            continue
        m = _LINE_RE.match(line)
        if m is None:
            raise ValueError(f"line {lineno}: cannot parse gate {raw!r}")
        angle = float(m.group(2)) if m.group(2) else None
        targets = tuple(int(t[1:]) for t in m.group(3).split())
        gates.append(Gate(m.group(1), targets, angle))
    if n_qubits is None:
        n_qubits = max((max(g.targets) for g in gates), default=0) + 1
    return Circuit(n_qubits, tuple(gates))


@dataclass(frozen=True)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        dim = amps.shape[0] if amps.ndim == 1 else 0
        if dim < 2 or dim & (dim - 1):
            raise ValueError("amplitude vector length must be a power of two >= 2")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def zero(cls, n_qubits: int) -> "StateVector":
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(amps)

    @classmethod
    def from_bitstring(cls, bits: str) -> "StateVector":
        amps = np.zeros(2 ** len(bits), dtype=complex)
        amps[int(bits, 2)] = 1.0
        return cls(amps)

    @property
    def n_qubits(self) -> int:
        return self.amplitudes.shape[0].bit_length() - 1

    def probabilities(self) -> np.ndarray:
        p = np.abs(self.amplitudes) ** 2
        return p / p.sum()

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def overlap(self, other: "StateVector") -> float:
        """|<self|other>|, insensitive to global phase."""
        return float(abs(np.vdot(self.amplitudes, other.amplitudes)))


def _apply_matrix(amps: np.ndarray, n: int, u: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    k = len(targets)
    psi = amps.reshape((2,) * n)
    u = u.reshape((2,) * (2 * k))
    psi = np.tensordot(u, psi, axes=(list(range(k, 2 * k)), list(targets)))
    psi = np.moveaxis(psi, list(range(k)), list(targets))
    return psi.reshape(-1)


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    n = state.n_qubits
    if max(gate.targets) >= n:
        raise ValueError(f"gate {gate} targets a qubit outside 0..{n - 1}")
    return StateVector(_apply_matrix(state.amplitudes, n, gate.matrix(), gate.targets))


def run(circuit: Circuit, initial: StateVector | None = None) -> StateVector:
    state = StateVector.zero(circuit.n_qubits) if initial is None else initial
    if state.n_qubits != circuit.n_qubits:
        raise ValueError(
            f"initial state has {state.n_qubits} qubits, circuit has {circuit.n_qubits}"
        )
    amps = state.amplitudes
    n = circuit.n_qubits
    for g in circuit.gates:
        amps = _apply_matrix(amps, n, g.matrix(), g.targets)
    return StateVector(amps)


@dataclass(frozen=True)
class NoiseModel:
    """Per-gate Pauli fault probabilities plus asymmetric readout flips.

    Defaults are the one- and two-qubit gate errors (0.18%, 1.7%) and the
    3.8% readout error quoted for superconducting devices.
    """

    p1: float = 0.0018
    p2: float = 0.017
    readout_flip0: float = 0.038
    readout_flip1: float = 0.038

    def __post_init__(self):
        for name in ("p1", "p2", "readout_flip0", "readout_flip1"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")

    @classmethod
    def noiseless(cls) -> "NoiseModel":
        return cls(0.0, 0.0, 0.0, 0.0)

    @property
    def has_gate_noise(self) -> bool:
        return self.p1 > 0 or self.p2 > 0

    @property
    def has_readout_noise(self) -> bool:
        return self.readout_flip0 > 0 or self.readout_flip1 > 0


def _fault(rng: np.random.Generator, targets: tuple[int, ...]) -> list[tuple[np.ndarray, int]]:
    if len(targets) == 1:
        axes: Iterable[str] = (_PAULI_1Q[rng.integers(3)],)
    else:
        axes = _PAULI_2Q[rng.integers(15)]
    return [(_FIXED[a], q) for a, q in zip(axes, targets) if a != "I"]


def run_noisy(
    circuit: Circuit,
    noise: NoiseModel,
    seed=None,
    initial: StateVector | None = None,
) -> StateVector:
    """One stochastic trajectory: a random Pauli fault may follow each gate."""
    if not noise.has_gate_noise:
        return run(circuit, initial)
    rng = np.random.default_rng(seed)
    state = StateVector.zero(circuit.n_qubits) if initial is None else initial
    amps = state.amplitudes
    n = circuit.n_qubits
    for g in circuit.gates:
        amps = _apply_matrix(amps, n, g.matrix(), g.targets)
        p = noise.p1 if len(g.targets) == 1 else noise.p2
        if p > 0 and rng.random() < p:
            for u, q in _fault(rng, g.targets):
                amps = _apply_matrix(amps, n, u, (q,))
    return StateVector(amps)


@dataclass(frozen=True)
class SampleCounts:
    shots: int
    counts: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if sum(self.counts.values()) != self.shots:
            raise ValueError("counts do not add up to shots")

    @property
    def n_qubits(self) -> int:
        return len(next(iter(self.counts)))

    def frequency(self, bits: str) -> float:
        return self.counts.get(bits, 0) / self.shots

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(basis indices, counts) for vectorised estimators."""
        keys = list(self.counts)
        return (
            np.array([int(k, 2) for k in keys], dtype=np.int64),
            np.array([self.counts[k] for k in keys], dtype=np.int64),
        )


def _to_counts(indices: np.ndarray, counts: np.ndarray, n: int, shots: int) -> SampleCounts:
    nz = counts > 0
    return SampleCounts(
        shots, {format(int(i), f"0{n}b"): int(c) for i, c in zip(indices[nz], counts[nz])}
    )


def sample(
    state: StateVector,
    shots: int,
    noise: NoiseModel | None = None,
    seed=None,
) -> SampleCounts:
    """Multinomial computational-basis draw, then optional readout flips."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = np.random.default_rng(seed)
    n = state.n_qubits
    probs = state.probabilities()
    counts = rng.multinomial(shots, probs)
    indices = np.arange(probs.shape[0])
    if noise is None or not noise.has_readout_noise:
        return _to_counts(indices, counts, n, shots)
    outcomes = np.repeat(indices, counts)
    shifts = np.arange(n - 1, -1, -1)
    bits = (outcomes[:, None] >> shifts) & 1
    r = rng.random(bits.shape)
    flip = np.where(bits == 0, r < noise.readout_flip0, r < noise.readout_flip1)
    bits ^= flip.astype(bits.dtype)
    read = (bits << shifts).sum(axis=1)
    return _to_counts(indices, np.bincount(read, minlength=probs.shape[0]), n, shots)
