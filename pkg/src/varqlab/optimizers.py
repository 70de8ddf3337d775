"""Classical outer-loop optimizers over circuit parameters.

Both optimizers treat the objective as a black box and count every call.
The evaluation budget (``max_evaluations``) is never exceeded: a step that
would overrun it is not started.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

Objective = Callable[[np.ndarray], float]
METHODS = ("gradient_descent", "nelder_mead")
STALL_WINDOW = 5


@dataclass(frozen=True)
class OptimizerConfig:
    method: str = "nelder_mead"
    step_size: float = 0.1
    fd_epsilon: float = 1e-3
    max_evaluations: int = 1000
    value_tolerance: float = 1e-8
    restarts: int = 1
    seed: int = 0

    def __post_init__(self):
        errors = []
        if self.method not in METHODS:
            errors.append(f"method must be one of {METHODS}, got {self.method!r}")
        if not self.step_size > 0:
            errors.append("step_size must be positive")
        if not self.fd_epsilon > 0:
            errors.append("fd_epsilon must be positive")
        if self.max_evaluations < 1:
            errors.append("max_evaluations must be >= 1")
        if self.value_tolerance < 0:
            errors.append("value_tolerance must be >= 0")
        if self.restarts < 1:
            errors.append("restarts must be >= 1")
        if errors:
            raise ValueError("; ".join(errors))


@dataclass
class IterationRecord:
    params: np.ndarray
    value: float
    evaluations: int
    shots: int


@dataclass
class OptimizationTrace:
    iterations: list[IterationRecord] = field(default_factory=list)
    best_params: np.ndarray | None = None
    best_value: float = math.inf

    def record(self, params, value: float, evaluations: int, shots: int = 0) -> None:
        params = np.array(params, dtype=float)
        self.iterations.append(IterationRecord(params, float(value), evaluations, shots))
        if value < self.best_value:
            self.best_value = float(value)
            self.best_params = params

    @property
    def evaluations(self) -> int:
        return self.iterations[-1].evaluations if self.iterations else 0

    @property
    def shots(self) -> int:
        return self.iterations[-1].shots if self.iterations else 0

    def best_so_far(self) -> list[float]:
        out, cur = [], math.inf
        for it in self.iterations:
            cur = min(cur, it.value)
            out.append(cur)
        return out

    def to_csv(self, path) -> None:
        dim = len(self.iterations[0].params) if self.iterations else 0
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "value", "evaluations", "shots"] + [f"p{i}" for i in range(dim)])
            for k, it in enumerate(self.iterations):
                w.writerow([k, repr(it.value), it.evaluations, it.shots] + [repr(float(x)) for x in it.params])


class BudgetExhausted(Exception):
    pass


class _Counted:
    """Wraps the objective; raises once the evaluation budget is spent."""

    def __init__(self, f: Objective, budget: int):
        self.f = f
        self.budget = budget
        self.calls = 0

    def __call__(self, x: np.ndarray) -> float:
        if self.calls >= self.budget:
            raise BudgetExhausted
        self.calls += 1
        return float(self.f(np.array(x, dtype=float)))

    def remaining(self) -> int:
        return self.budget - self.calls

    @property
    def shots(self) -> int:
        return int(getattr(self.f, "shots_spent", 0))


def finite_diff_gradient(f: Objective, x: Sequence[float], epsilon: float = 1e-3) -> np.ndarray:
    """Central differences, two calls per coordinate."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = epsilon
        g[i] = (f(x + e) - f(x - e)) / (2 * epsilon)
    return g


def _stalled(history: list[float], tol: float) -> bool:
    if len(history) <= STALL_WINDOW:
        return False
    recent = history[-STALL_WINDOW - 1:]
    return all(
        abs(a - b) < tol * max(1.0, abs(a)) for a, b in zip(recent, recent[1:])
    )


def _gd_run(fc: _Counted, x0: np.ndarray, cfg: OptimizerConfig, trace: OptimizationTrace) -> None:
    x = x0.copy()
    value = fc(x)
    trace.record(x, value, fc.calls, fc.shots)
    history = [value]
    while fc.remaining() >= 2 * x.size + 1:
        g = finite_diff_gradient(fc, x, cfg.fd_epsilon)
        x = x - cfg.step_size * g
        value = fc(x)
        trace.record(x, value, fc.calls, fc.shots)
        history.append(value)
        if _stalled(history, cfg.value_tolerance):
            break


def _nm_run(fc: _Counted, x0: np.ndarray, cfg: OptimizerConfig, trace: OptimizationTrace) -> None:
    n = x0.size
    simplex = [x0.copy()]
    for i in range(n):
        v = x0.copy()
        v[i] += 0.25
        simplex.append(v)
    values = []
    try:
        for v in simplex:
            values.append(fc(v))
    except BudgetExhausted:
        pass
    if not values:
        return
    if len(values) < len(simplex):
        k = int(np.argmin(values))
        trace.record(simplex[k], values[k], fc.calls, fc.shots)
        return
    pts = np.array(simplex)
    vals = np.array(values)

    def snapshot():
        k = int(np.argmin(vals))
        trace.record(pts[k], vals[k], fc.calls, fc.shots)

    # value spread alone can vanish on a simplex straddling the minimum
    xtol = math.sqrt(cfg.value_tolerance)

    def converged() -> bool:
        return vals.max() - vals.min() < cfg.value_tolerance and np.abs(pts - pts[0]).max() <= xtol

    snapshot()
    try:
        while not converged():
            order = np.argsort(vals, kind="stable")
            pts, vals = pts[order], vals[order]
            centroid = pts[:-1].mean(axis=0)
            xr = centroid + (centroid - pts[-1])
            fr = fc(xr)
            if fr < vals[0]:
                xe = centroid + 2.0 * (centroid - pts[-1])
                fe = fc(xe)
                if fe < fr:
                    pts[-1], vals[-1] = xe, fe
                else:
                    pts[-1], vals[-1] = xr, fr
            elif fr < vals[-2]:
                pts[-1], vals[-1] = xr, fr
            else:
                if fr < vals[-1]:
                    xc = centroid + 0.5 * (xr - centroid)
                    fcv = fc(xc)
                    accept = fcv <= fr
                else:
                    xc = centroid + 0.5 * (pts[-1] - centroid)
                    fcv = fc(xc)
                    accept = fcv < vals[-1]
                if accept:
                    pts[-1], vals[-1] = xc, fcv
                else:
                    for i in range(1, n + 1):
                        shrunk = pts[0] + 0.5 * (pts[i] - pts[0])
                        vals[i] = fc(shrunk)
                        pts[i] = shrunk
            snapshot()
    except BudgetExhausted:
        snapshot()


def _start_points(x0: np.ndarray, cfg: OptimizerConfig) -> list[np.ndarray]:
    rng = np.random.default_rng(cfg.seed)
    pts = [x0]
    for _ in range(cfg.restarts - 1):
        pts.append(rng.uniform(0.0, 2 * math.pi, size=x0.size))
    return pts


def _optimize(runner, f: Objective, x0, cfg: OptimizerConfig) -> OptimizationTrace:
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if not np.all(np.isfinite(x0)):
        raise ValueError("initial parameters must be finite")
    fc = _Counted(f, cfg.max_evaluations)
    trace = OptimizationTrace()
    for start in _start_points(x0, cfg):
        if fc.remaining() < 1:
            break
        runner(fc, start, cfg, trace)
    return trace


def gradient_descent(f: Objective, x0, config: OptimizerConfig | None = None) -> OptimizationTrace:
    """Fixed-step descent along the central-difference gradient.

    Stops when the budget cannot pay for another step or when the value
    has moved less than ``value_tolerance`` (relative to max(1, |value|))
    for five consecutive steps. Extra restarts begin at seeded uniform
    points in [0, 2*pi).
    """
    cfg = config or OptimizerConfig(method="gradient_descent")
    return _optimize(_gd_run, f, x0, cfg)


def nelder_mead(f: Objective, x0, config: OptimizerConfig | None = None) -> OptimizationTrace:
    """Downhill simplex with coefficients 1, 2, 0.5, 0.5.

    The initial simplex offsets each coordinate of ``x0`` by 0.25. Stops
    when the vertex values differ by less than ``value_tolerance`` and all
    vertices lie within ``sqrt(value_tolerance)`` of the best one, or when
    the budget runs out.
    """
    cfg = config or OptimizerConfig(method="nelder_mead")
    return _optimize(_nm_run, f, x0, cfg)


def minimize(f: Objective, x0, config: OptimizerConfig) -> OptimizationTrace:
    if config.method == "gradient_descent":
        return gradient_descent(f, x0, config)
    return nelder_mead(f, x0, config)
