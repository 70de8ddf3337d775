"""Scalar objectives over energy-labelled samples: mean, CVaR and Gibbs."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

import numpy as np


@dataclass(frozen=True)
class SampleSet:
    """Observed bitstrings with their energies and multiplicities."""

    entries: tuple[tuple[str, float, int], ...]

    def __post_init__(self):
        entries = tuple((str(b), float(e), int(c)) for b, e, c in self.entries)
        for b, e, c in entries:
            if not math.isfinite(e):
                raise ValueError(f"energy of {b!r} is not finite")
            if c < 1:
                raise ValueError(f"count of {b!r} must be positive")
        if not entries:
            raise ValueError("empty sample set")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_counts(cls, counts: Mapping[str, int], energy: Callable[[str], float]) -> "SampleSet":
        return cls(tuple((b, energy(b), c) for b, c in counts.items() if c > 0))

    @property
    def total(self) -> int:
        return sum(c for _, _, c in self.entries)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        e = np.array([x[1] for x in self.entries])
        c = np.array([x[2] for x in self.entries], dtype=float)
        return e, c

    def best(self) -> tuple[str, float]:
        """Lowest-energy bitstring; ties go to the earliest entry."""
        b, e, _ = min(self.entries, key=lambda x: x[1])
        return b, e


def expectation_value(s: SampleSet) -> float:
    e, c = s.arrays()
    return float(e @ c / c.sum())


def cvar_value(s: SampleSet, alpha: float) -> float:
    """Mean of the lowest ``ceil(alpha * total)`` shots.

    Equal energies keep their entry order, so the result is deterministic.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    total = s.total
    # round first so that 0.3 * 10 keeps 3 shots, not 4
    keep = math.ceil(round(alpha * total, 9))
    order = sorted(range(len(s.entries)), key=lambda i: (s.entries[i][1], i))
    acc = 0.0
    left = keep
    for i in order:
        _, e, c = s.entries[i]
        take = min(c, left)
        acc += take * e
        left -= take
        if left == 0:
            break
    return acc / keep


def gibbs_value(s: SampleSet, eta: float) -> float:
    """``-log(mean(exp(-eta * E)))`` with a max-shift against underflow."""
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    e, c = s.arrays()
    shift = e.min()
    mean = (c @ np.exp(-eta * (e - shift))) / c.sum()
    return float(eta * shift - math.log(mean))


@dataclass(frozen=True)
class ObjectiveSpec:
    kind: str = "expectation"
    parameter: float | None = None

    def __post_init__(self):
        if self.kind == "expectation":
            object.__setattr__(self, "parameter", None)
        elif self.kind == "cvar":
            if self.parameter is None or not 0.0 < self.parameter <= 1.0:
                raise ValueError("cvar needs alpha in (0, 1]")
        elif self.kind == "gibbs":
            if self.parameter is None:
                object.__setattr__(self, "parameter", 1.0)
            elif self.parameter <= 0:
                raise ValueError("gibbs needs eta > 0")
        else:
            raise ValueError(f"unknown objective {self.kind!r}")

    @classmethod
    def parse(cls, text: str) -> "ObjectiveSpec":
        """``expectation``, ``cvar:0.5`` or ``gibbs:2.0`` (``gibbs`` alone means eta=1)."""
        kind, _, arg = text.strip().partition(":")
        kind = kind.lower()
        if arg:
            try:
                value = float(arg)
            except ValueError:
                raise ValueError(f"bad objective parameter in {text!r}") from None
        else:
            value = None
        if kind == "expectation" and value is not None:
            raise ValueError("expectation takes no parameter")
        return cls(kind, value)

    def __str__(self) -> str:
        return self.kind if self.parameter is None else f"{self.kind}:{self.parameter:g}"

    def __call__(self, s: SampleSet) -> float:
        return evaluate(self, s)


def evaluate(spec: ObjectiveSpec, s: SampleSet) -> float:
    if spec.kind == "expectation":
        return expectation_value(s)
    if spec.kind == "cvar":
        return cvar_value(s, spec.parameter)
    return gibbs_value(s, spec.parameter)


def merge(sets: Iterable[SampleSet]) -> SampleSet:
    return SampleSet(tuple(x for s in sets for x in s.entries))
