"""Pauli strings, weighted observables and their evaluation.

Qubit 0 is the leftmost character of every bitstring and the most
significant bit of a statevector index, so ``"10"`` is index 2 on two
qubits and ``Z0`` reads ``-1`` on it.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

AXES = ("I", "X", "Y", "Z")
MAX_DENSE_QUBITS = 10
SIMPLIFY_TOL = 1e-12

# (a, b) -> (phase exponent k with phase i**k, product axis)
_PRODUCT = {
    ("I", "I"): (0, "I"), ("I", "X"): (0, "X"), ("I", "Y"): (0, "Y"), ("I", "Z"): (0, "Z"),
    ("X", "I"): (0, "X"), ("X", "X"): (0, "I"), ("X", "Y"): (1, "Z"), ("X", "Z"): (3, "Y"),
    ("Y", "I"): (0, "Y"), ("Y", "X"): (3, "Z"), ("Y", "Y"): (0, "I"), ("Y", "Z"): (1, "X"),
    ("Z", "I"): (0, "Z"), ("Z", "X"): (1, "Y"), ("Z", "Y"): (3, "X"), ("Z", "Z"): (0, "I"),
}

_PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

_FACTOR_RE = re.compile(r"^([IXYZ])(\d+)$")


class DimensionError(ValueError):
    """Operands act on different numbers of qubits."""


class SizeLimitError(ValueError):
    """Requested dense object is too large for desk-scale memory."""


class DiagonalityError(ValueError):
    """An operation that needs a Z/I-only observable got X or Y factors."""


def pauli_matrix(axis: str) -> np.ndarray:
    return _PAULI_MATRICES[axis].copy()


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis, one axis per qubit."""

    axes: tuple[str, ...]

    def __post_init__(self):
        axes = tuple(self.axes)
        if not axes:
            raise ValueError("a PauliString needs at least one qubit")
        bad = [a for a in axes if a not in AXES]
        if bad:
            raise ValueError(f"unknown Pauli axes {bad}")
        object.__setattr__(self, "axes", axes)

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls(("I",) * n_qubits)

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Dense label, one character per qubit: ``"XIZ"``."""
        return cls(tuple(label))

    @classmethod
    def from_sparse(cls, factors: Mapping[int, str], n_qubits: int) -> "PauliString":
        axes = ["I"] * n_qubits
        for q, a in factors.items():
            if not 0 <= q < n_qubits:
                raise ValueError(f"qubit {q} out of range for {n_qubits} qubits")
            axes[q] = a
        return cls(tuple(axes))

    @classmethod
    def parse(cls, text: str, n_qubits: int) -> "PauliString":
        """Sparse text form ``"Z0*X1"``; ``"I"`` is the identity."""
        text = text.strip()
        if text == "I":
            return cls.identity(n_qubits)
        factors: dict[int, str] = {}
        for part in text.split("*"):
            m = _FACTOR_RE.match(part.strip())
            if m is None:
                raise ValueError(f"cannot parse Pauli factor {part!r}")
            axis, q = m.group(1), int(m.group(2))
            if q in factors:
                raise ValueError(f"qubit {q} appears twice in {text!r}")
            if axis != "I":
                factors[q] = axis
        return cls.from_sparse(factors, n_qubits)

    @property
    def n_qubits(self) -> int:
        return len(self.axes)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q, a in enumerate(self.axes) if a != "I")

    @property
    def is_identity(self) -> bool:
        return not self.support

    @property
    def is_diagonal(self) -> bool:
        return all(a in ("I", "Z") for a in self.axes)

    @property
    def label(self) -> str:
        return "".join(self.axes)

    def masks(self) -> tuple[int, int, int]:
        """(x mask, z mask, number of Y factors) with qubit 0 as the top bit."""
        n = self.n_qubits
        xmask = zmask = 0
        ny = 0
        for q, a in enumerate(self.axes):
            bit = 1 << (n - 1 - q)
            if a in ("X", "Y"):
                xmask |= bit
            if a in ("Z", "Y"):
                zmask |= bit
            ny += a == "Y"
        return xmask, zmask, ny

    def __str__(self) -> str:
        if self.is_identity:
            return "I"
        return "*".join(f"{self.axes[q]}{q}" for q in self.support)


@dataclass(frozen=True)
class PhasedString:
    """A Pauli string times a fourth root of unity, ``i**phase_exponent``."""

    phase_exponent: int
    string: PauliString

    def __post_init__(self):
        object.__setattr__(self, "phase_exponent", self.phase_exponent % 4)

    @property
    def phase(self) -> complex:
        return (1, 1j, -1, -1j)[self.phase_exponent]


def multiply(a: PauliString, b: PauliString) -> PhasedString:
    """Exact product ``a @ b`` with the phase kept as an exponent of i."""
    if a.n_qubits != b.n_qubits:
        raise DimensionError(f"cannot multiply {a.n_qubits}- and {b.n_qubits}-qubit strings")
    k = 0
    axes = []
    for x, y in zip(a.axes, b.axes):
        dk, axis = _PRODUCT[(x, y)]
        k += dk
        axes.append(axis)
    return PhasedString(k, PauliString(tuple(axes)))


def qubitwise_commutes(a: PauliString, b: PauliString) -> bool:
    if a.n_qubits != b.n_qubits:
        raise DimensionError("strings act on different numbers of qubits")
    return all(x == y or x == "I" or y == "I" for x, y in zip(a.axes, b.axes))


@dataclass(frozen=True)
class PauliTerm:
    coefficient: float
    string: PauliString

    def __post_init__(self):
        c = float(self.coefficient)
        if not math.isfinite(c):
            raise ValueError(f"coefficient must be finite, got {self.coefficient}")
        object.__setattr__(self, "coefficient", c)

    def __str__(self) -> str:
        return f"{self.coefficient!r} {self.string}"


@dataclass(frozen=True)
class Observable:
    """Real-weighted sum of Pauli strings plus a constant (identity weight).

    Construction does not merge like terms; call :func:`simplify` for that.
    """

    n_qubits: int
    terms: tuple[PauliTerm, ...] = ()
    constant: float = 0.0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        terms = tuple(self.terms)
        for t in terms:
            if t.string.n_qubits != self.n_qubits:
                raise DimensionError(
                    f"term {t} acts on {t.string.n_qubits} qubits, observable has {self.n_qubits}"
                )
        c = float(self.constant)
        if not math.isfinite(c):
            raise ValueError("constant must be finite")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "constant", c)

    @classmethod
    def from_terms(cls, n_qubits: int, terms: Iterable[tuple[float, str]], constant: float = 0.0):
        """Build from ``(coefficient, "Z0*X1")`` pairs; ``"I"`` entries go to the constant."""
        out = []
        for coeff, text in terms:
            s = PauliString.parse(text, n_qubits)
            if s.is_identity:
                constant += coeff
            else:
                out.append(PauliTerm(coeff, s))
        return cls(n_qubits, tuple(out), constant)

    @property
    def one_norm(self) -> float:
        return abs(self.constant) + sum(abs(t.coefficient) for t in self.terms)

    @property
    def is_diagonal(self) -> bool:
        return all(t.string.is_diagonal for t in self.terms)

    def __add__(self, other: "Observable | float") -> "Observable":
        if isinstance(other, (int, float)):
            return Observable(self.n_qubits, self.terms, self.constant + other)
        if other.n_qubits != self.n_qubits:
            raise DimensionError("cannot add observables of different size")
        return Observable(self.n_qubits, self.terms + other.terms, self.constant + other.constant)

    __radd__ = __add__

    def __neg__(self) -> "Observable":
        return self * -1.0

    def __sub__(self, other: "Observable | float") -> "Observable":
        return self + (-other)

    def __rsub__(self, other: float) -> "Observable":
        return (-self) + other

    def __mul__(self, other: "Observable | float") -> "Observable":
        if isinstance(other, (int, float)):
            return Observable(
                self.n_qubits,
                tuple(PauliTerm(t.coefficient * other, t.string) for t in self.terms),
                self.constant * other,
            )
        return product(self, other)

    __rmul__ = __mul__


def _all_terms(obs: Observable) -> list[tuple[float, PauliString]]:
    items = [(t.coefficient, t.string) for t in obs.terms]
    if obs.constant != 0.0:
        items.append((obs.constant, PauliString.identity(obs.n_qubits)))
    return items


def product(a: Observable, b: Observable) -> Observable:
    """Operator product ``a @ b``; raises if the result is not Hermitian."""
    if a.n_qubits != b.n_qubits:
        raise DimensionError("cannot multiply observables of different size")
    acc: dict[tuple[str, ...], complex] = {}
    for ca, sa in _all_terms(a):
        for cb, sb in _all_terms(b):
            ps = multiply(sa, sb)
            acc[ps.string.axes] = acc.get(ps.string.axes, 0j) + ca * cb * ps.phase
    constant = 0.0
    terms = []
    for axes, c in acc.items():
        if abs(c.imag) > SIMPLIFY_TOL:
            raise ValueError("product of observables has imaginary weights (non-commuting factors)")
        s = PauliString(axes)
        if s.is_identity:
            constant += c.real
        else:
            terms.append(PauliTerm(c.real, s))
    return simplify(Observable(a.n_qubits, tuple(terms), constant))


def simplify(obs: Observable) -> Observable:
    """Merge like terms, fold identity weight into the constant, drop |c| < 1e-12.

    Surviving terms keep the order of their first appearance.
    """
    acc: dict[tuple[str, ...], float] = {}
    constant = obs.constant
    for t in obs.terms:
        if t.string.is_identity:
            constant += t.coefficient
            continue
        acc[t.string.axes] = acc.get(t.string.axes, 0.0) + t.coefficient
    terms = tuple(
        PauliTerm(c, PauliString(axes)) for axes, c in acc.items() if abs(c) >= SIMPLIFY_TOL
    )
    if abs(constant) < SIMPLIFY_TOL:
        constant = 0.0
    return Observable(obs.n_qubits, terms, constant)


def dense_matrix(obs: Observable) -> np.ndarray:
    n = obs.n_qubits
    if n > MAX_DENSE_QUBITS:
        raise SizeLimitError(f"dense matrix limited to {MAX_DENSE_QUBITS} qubits, got {n}")
    out = obs.constant * np.eye(2**n, dtype=complex)
    for t in obs.terms:
        out += t.coefficient * string_matrix(t.string)
    return out


def string_matrix(s: PauliString | PhasedString) -> np.ndarray:
    phase = 1.0
    if isinstance(s, PhasedString):
        phase, s = s.phase, s.string
    m = np.ones((1, 1), dtype=complex)
    for a in s.axes:
        m = np.kron(m, _PAULI_MATRICES[a])
    return phase * m


def _mask_signs(n_qubits: int, mask: int) -> np.ndarray:
    """+-1 per index: (-1) ** popcount(index & mask)."""
    masked = np.arange(2**n_qubits) & mask
    parity = np.zeros(masked.shape, dtype=np.int64)
    while mask:
        parity ^= masked & 1
        masked >>= 1
        mask >>= 1
    return 1.0 - 2.0 * parity


def _support_mask(n_qubits: int, support: Sequence[int]) -> int:
    mask = 0
    for q in support:
        mask |= 1 << (n_qubits - 1 - q)
    return mask


def diagonal_energies(obs: Observable) -> np.ndarray:
    """Energy of every computational basis state, indexed like a statevector."""
    if not obs.is_diagonal:
        raise DiagonalityError("observable has X or Y factors")
    out = np.full(2**obs.n_qubits, obs.constant, dtype=float)
    for t in obs.terms:
        out += t.coefficient * _mask_signs(obs.n_qubits, _support_mask(obs.n_qubits, t.string.support))
    return out


def eval_bitstring(obs: Observable, bits: str) -> float:
    if not obs.is_diagonal:
        raise DiagonalityError("eval_bitstring needs a Z/I-only observable")
    if len(bits) != obs.n_qubits or set(bits) - {"0", "1"}:
        raise ValueError(f"expected a {obs.n_qubits}-character 0/1 string, got {bits!r}")
    energy = obs.constant
    for t in obs.terms:
        sign = 1
        for q in t.string.support:
            if bits[q] == "1":
                sign = -sign
        energy += t.coefficient * sign
    return energy


def _amplitudes(state) -> np.ndarray:
    return np.asarray(getattr(state, "amplitudes", state), dtype=complex)


def string_expectation(s: PauliString, amplitudes: np.ndarray) -> complex:
    """<psi|P|psi> from index arithmetic: P = i**nY X^xmask Z^zmask."""
    xmask, zmask, ny = s.masks()
    flipped = amplitudes[np.arange(amplitudes.shape[0]) ^ xmask]
    return (1j**ny) * np.vdot(flipped, _mask_signs(s.n_qubits, zmask) * amplitudes)


def exact_expectation(obs: Observable, state) -> float:
    """<psi|H|psi> summed term by term; the imaginary residue is discarded."""
    amps = _amplitudes(state)
    if amps.shape != (2**obs.n_qubits,):
        raise DimensionError(
            f"state has {amps.shape[0]} amplitudes, observable needs {2**obs.n_qubits}"
        )
    value = obs.constant * np.vdot(amps, amps)
    for t in obs.terms:
        value += t.coefficient * string_expectation(t.string, amps)
    return float(np.real(value))


# -- text format -------------------------------------------------------------

def format_term(coefficient: float, string: PauliString) -> str:
    return f"{coefficient!r} {string}"


def format_observable(obs: Observable) -> str:
    lines = [f"# qubits: {obs.n_qubits}"]
    lines += [format_term(t.coefficient, t.string) for t in obs.terms]
    if obs.constant != 0.0 or not obs.terms:
        lines.append(f"{obs.constant!r} I")
    return "\n".join(lines) + "\n"


def parse_observable(text: str, n_qubits: int | None = None) -> Observable:
    """Parse ``<coeff> <axis><qubit>[*...]`` lines.

    ``# qubits: N`` fixes the register size; otherwise it is the largest
    qubit index plus one. Other ``#`` lines are comments. Terms are not merged.
    """
    rows: list[tuple[float, str]] = []
    max_q = -1
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = re.match(r"#\s*qubits\s*[:=]\s*(\d+)", line)
            if m and n_qubits is None:
                n_qubits = int(m.group(1))
            continue
        parts = line.split(None, 1)
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected '<coeff> <pauli>', got {raw!r}")
        try:
            coeff = float(parts[0])
        except ValueError:
            raise ValueError(f"line {lineno}: bad coefficient {parts[0]!r}") from None
        spec = parts[1].replace(" ", "")
        if spec != "I":
            for f in spec.split("*"):
                m = _FACTOR_RE.match(f)
                if m is None:
                    raise ValueError(f"line {lineno}: cannot parse factor {f!r}")
                max_q = max(max_q, int(m.group(2)))
        rows.append((coeff, spec))
    if n_qubits is None:
        n_qubits = max(max_q + 1, 1)
    elif max_q >= n_qubits:
        raise ValueError(f"qubit index {max_q} exceeds declared size {n_qubits}")
    return Observable.from_terms(n_qubits, rows)
