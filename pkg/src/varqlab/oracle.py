"""Brute-force reference computations for tests and the ``verify`` command.

Nothing here calls the fast paths in :mod:`varqlab.pauli` or
:mod:`varqlab.simulator`; matrices are built entry by entry from their
own single-qubit tables so that agreement with those modules means
something.
"""
from __future__ import annotations

import cmath
import itertools
import math
from typing import Iterable, Sequence

import numpy as np

MAX_QUBITS_DENSE = 10
MAX_QUBITS_SCAN = 22

_SIGMA = {
    "I": ((1, 0), (0, 1)),
    "X": ((0, 1), (1, 0)),
    "Y": ((0, -1j), (1j, 0)),
    "Z": ((1, 0), (0, -1)),
}


def _bits(index: int, n: int) -> list[int]:
    return [(index >> (n - 1 - q)) & 1 for q in range(n)]


def _term_items(obs):
    return [(t.coefficient, t.string.axes) for t in obs.terms]


def dense_observable(obs) -> np.ndarray:
    """Entry-wise <r|H|c> = sum_t c_t prod_q sigma_q[r_q][c_q]."""
    n = obs.n_qubits
    if n > MAX_QUBITS_DENSE:
        raise ValueError(f"dense oracle limited to {MAX_QUBITS_DENSE} qubits")
    dim = 2**n
    m = np.zeros((dim, dim), dtype=complex)
    for c in range(dim):
        m[c, c] += obs.constant
        cb = _bits(c, n)
        for coeff, axes in _term_items(obs):
            r = 0
            amp = complex(coeff)
            for q, a in enumerate(axes):
                rb = cb[q] ^ (a in ("X", "Y"))
                amp *= _SIGMA[a][rb][cb[q]]
                r = (r << 1) | rb
            m[r, c] += amp
    return m


def _diagonal(obs) -> np.ndarray:
    n = obs.n_qubits
    for _, axes in _term_items(obs):
        if any(a in ("X", "Y") for a in axes):
            raise ValueError("observable is not diagonal")
    out = np.empty(2**n)
    for i, bits in enumerate(itertools.product((0, 1), repeat=n)):
        e = obs.constant
        for coeff, axes in _term_items(obs):
            s = sum(b for b, a in zip(bits, axes) if a == "Z")
            e += coeff * (-1 if s % 2 else 1)
        out[i] = e
    return out


def brute_force_min(obs, atol: float = 1e-9) -> tuple[float, list[str]]:
    """Minimum energy of a diagonal observable and every bitstring attaining it."""
    n = obs.n_qubits
    if n > MAX_QUBITS_SCAN:
        raise ValueError(f"exhaustive scan limited to {MAX_QUBITS_SCAN} qubits")
    energies = _diagonal(obs)
    best = float(energies.min())
    args = [format(i, f"0{n}b") for i in np.flatnonzero(energies <= best + atol)]
    return best, sorted(args)


def dense_expm_diagonal(obs, angle: float) -> np.ndarray:
    """exp(-i * angle * H) for diagonal H."""
    return np.diag(np.exp(-1j * angle * _diagonal(obs)))


def expm_1q(obs, angle: float) -> np.ndarray:
    """exp(-i * angle * H) for a one-qubit H = a I + b (n . sigma)."""
    if obs.n_qubits != 1:
        raise ValueError("closed-form exponential only for one qubit")
    v = {"X": 0.0, "Y": 0.0, "Z": 0.0}
    for coeff, axes in _term_items(obs):
        v[axes[0]] += coeff
    b = math.sqrt(v["X"] ** 2 + v["Y"] ** 2 + v["Z"] ** 2)
    u = np.eye(2, dtype=complex) * math.cos(angle * b)
    if b > 0:
        for a in "XYZ":
            u = u - 1j * math.sin(angle * b) * (v[a] / b) * np.array(_SIGMA[a], dtype=complex)
    return cmath.exp(-1j * angle * obs.constant) * u


def gate_matrix(kind: str, angle: float | None = None) -> np.ndarray:
    """Unitaries written as exp(-i angle/2 P) = cos I - i sin P, or by table."""
    eye = np.eye(2, dtype=complex)
    sig = {a: np.array(m, dtype=complex) for a, m in _SIGMA.items()}
    if kind in ("X", "Y", "Z"):
        return sig[kind]
    if kind == "H":
        return (sig["X"] + sig["Z"]) / math.sqrt(2)
    if kind in ("RX", "RY", "RZ"):
        return math.cos(angle / 2) * eye - 1j * math.sin(angle / 2) * sig[kind[1]]
    if kind == "PHASE":
        return np.array([[1, 0], [0, cmath.exp(1j * angle)]])
    zz = np.kron(sig["Z"], sig["Z"])
    if kind == "RZZ":
        return math.cos(angle / 2) * np.eye(4) - 1j * math.sin(angle / 2) * zz
    p0 = np.array([[1, 0], [0, 0]], dtype=complex)
    p1 = np.array([[0, 0], [0, 1]], dtype=complex)
    if kind == "CNOT":
        return np.kron(p0, eye) + np.kron(p1, sig["X"])
    if kind == "CZ":
        return np.kron(p0, eye) + np.kron(p1, sig["Z"])
    raise ValueError(f"unknown gate {kind!r}")


def embed(u: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """Full 2**n matrix of ``u`` acting on ``targets`` (first target = high bit of u)."""
    k = len(targets)
    dim = 2**n
    full = np.zeros((dim, dim), dtype=complex)
    for c in range(dim):
        cb = _bits(c, n)
        sub_c = 0
        for t in targets:
            sub_c = (sub_c << 1) | cb[t]
        for sub_r in range(2**k):
            amp = u[sub_r, sub_c]
            if amp == 0:
                continue
            rb = list(cb)
            for j, t in enumerate(targets):
                rb[t] = (sub_r >> (k - 1 - j)) & 1
            r = int("".join(map(str, rb)), 2)
            full[r, c] += amp
    return full


def circuit_unitary(circuit) -> np.ndarray:
    n = circuit.n_qubits
    u = np.eye(2**n, dtype=complex)
    for g in circuit.gates:
        u = embed(gate_matrix(g.kind, g.angle), g.targets, n) @ u
    return u


def pauli_channel_expectation_1q(
    unitaries: Iterable[np.ndarray],
    p: float,
    observable: np.ndarray,
    rho0: np.ndarray | None = None,
) -> float:
    """Tr(O rho) after each unitary is followed by the channel
    rho -> (1 - p) rho + p/3 (X rho X + Y rho Y + Z rho Z)."""
    rho = np.array([[1, 0], [0, 0]], dtype=complex) if rho0 is None else rho0.astype(complex)
    paulis = [np.array(_SIGMA[a], dtype=complex) for a in "XYZ"]
    for u in unitaries:
        rho = u @ rho @ u.conj().T
        rho = (1 - p) * rho + (p / 3) * sum(s @ rho @ s for s in paulis)
    return float(np.real(np.trace(observable @ rho)))


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, atol: float = 1e-10) -> bool:
    """True when a = e^{i phi} b for some global phase phi."""
    k = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(b[k]) < atol:
        return bool(np.allclose(a, b, atol=atol))
    phase = a[k] / b[k]
    if abs(abs(phase) - 1) > atol:
        return False
    return bool(np.max(np.abs(a - phase * b)) < atol)
