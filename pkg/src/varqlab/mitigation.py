"""Zero-noise extrapolation by global gate folding.

Folding scales gate noise only; readout error is left as it is.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .measurement import (
    allocate_shots,
    basis_rotation_circuit,
    estimate_from_counts,
    group_terms,
)
from .pauli import Observable, exact_expectation
from .simulator import Circuit, NoiseModel, run_noisy, sample

FITS = {"linear": 1, "quadratic": 2}


def _check_scale(scale: int) -> int:
    if int(scale) != scale or scale < 1 or scale % 2 == 0:
        raise ValueError(f"noise scale must be an odd positive integer, got {scale}")
    return int(scale)


def fold_circuit(c: Circuit, scale: int) -> Circuit:
    """Replace every gate G by G (G^-1 G)^((scale-1)/2)."""
    scale = _check_scale(scale)
    reps = (scale - 1) // 2
    gates = []
    for g in c.gates:
        gates.append(g)
        inv = g.inverse()
        for _ in range(reps):
            gates += [inv, g]
    return Circuit(c.n_qubits, tuple(gates))


@dataclass(frozen=True)
class ZneConfig:
    scales: tuple[int, ...] = (1, 3, 5)
    fit: str = "linear"
    trajectories: int = 200
    shots: int | None = 100

    def __post_init__(self):
        scales = tuple(_check_scale(s) for s in self.scales)
        if len(set(scales)) != len(scales):
            raise ValueError("noise scales must be distinct")
        if self.fit not in FITS:
            raise ValueError(f"fit must be one of {tuple(FITS)}")
        if len(scales) < FITS[self.fit] + 1:
            raise ValueError(f"a {self.fit} fit needs at least {FITS[self.fit] + 1} scales")
        if self.trajectories < 1:
            raise ValueError("trajectories must be >= 1")
        if self.shots is not None and self.shots < 1:
            raise ValueError("shots must be >= 1 or None")
        object.__setattr__(self, "scales", tuple(sorted(scales)))


@dataclass(frozen=True)
class ZneResult:
    extrapolated: float
    per_scale: tuple[tuple[int, float, float], ...]
    raw: float
    coefficients: tuple[float, ...]


def _trajectory_value(circuit, obs, groups, plan, noise, rng) -> float:
    if plan is None:
        return exact_expectation(obs, run_noisy(circuit, noise, rng))
    value = obs.constant
    for k, g in enumerate(groups):
        rot = basis_rotation_circuit(g, circuit.n_qubits)
        state = run_noisy(circuit + rot, noise, rng)
        counts = sample(state, plan.shots_for(k), noise, rng)
        value += estimate_from_counts(g, counts).contribution
    return value


def zne_estimate(
    c: Circuit,
    obs: Observable,
    noise: NoiseModel,
    cfg: ZneConfig | None = None,
    seed: int = 0,
) -> ZneResult:
    """Fit the per-scale means with a polynomial and evaluate it at zero noise.

    With ``cfg.shots=None`` each trajectory contributes its exact
    expectation value (no sampling, no readout error); otherwise every
    measurement group gets ``shots`` per trajectory. Each (scale,
    trajectory) pair has its own seed stream.
    """
    cfg = cfg or ZneConfig()
    if c.n_qubits != obs.n_qubits:
        raise ValueError("circuit and observable act on different numbers of qubits")
    groups = group_terms(obs)
    plan = None
    if cfg.shots is not None and groups:
        plan = allocate_shots(groups, cfg.shots * len(groups), "uniform")
    per_scale = []
    for scale in cfg.scales:
        folded = fold_circuit(c, scale)
        if not groups:
            vals = np.full(cfg.trajectories, obs.constant)
        else:
            vals = np.array([
                _trajectory_value(
                    folded, obs, groups, plan, noise,
                    np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(scale, t))),
                )
                for t in range(cfg.trajectories)
            ])
        std = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
        per_scale.append((scale, float(vals.mean()), std))
    xs = np.array([s for s, _, _ in per_scale], dtype=float)
    ys = np.array([m for _, m, _ in per_scale])
    coeffs = np.polyfit(xs, ys, FITS[cfg.fit])
    extrapolated = float(np.polyval(coeffs, 0.0))
    return ZneResult(extrapolated, tuple(per_scale), float(ys[0]), tuple(float(x) for x in coeffs))
