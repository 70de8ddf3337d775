import csv
import math

import numpy as np
import pytest
from scipy.optimize import minimize as scipy_minimize

from varqlab.optimizers import (
    OptimizerConfig,
    OptimizationTrace,
    finite_diff_gradient,
    gradient_descent,
    minimize,
    nelder_mead,
)
from varqlab.pauli import Observable, exact_expectation
from varqlab.qaoa import QaoaParams, SampledObjective, maxcut_to_ising, parse_graph, schedule_params
from varqlab.objectives import ObjectiveSpec
from varqlab.simulator import Circuit, RY, run

WORKED = Observable.from_terms(1, [(2.0, "Z0"), (1.0, "X0"), (1.0, "I")])


def rosenbrock(x):
    return (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2


def shifted_square(x):
    return float((x[0] - 2) ** 2)


class CallCounter:
    def __init__(self, f):
        self.f = f
        self.calls = 0

    def __call__(self, x):
        self.calls += 1
        return self.f(x)


class TestFiniteDiff:
    def test_square(self):
        g = finite_diff_gradient(lambda x: x[0] ** 2, [1.0], 1e-4)
        assert abs(g[0] - 2.0) < 1e-6

    def test_constant(self):
        assert np.array_equal(finite_diff_gradient(lambda x: 3.0, [0.2, 0.5]), [0.0, 0.0])

    def test_linear(self):
        g = finite_diff_gradient(lambda x: x[0] + 3 * x[1], [0.7, -2.0])
        assert np.allclose(g, [1, 3], atol=1e-6)

    def test_polynomial_error_bound(self, rng):
        eps = 1e-2
        for _ in range(20):
            c = rng.normal(size=4)
            x = rng.normal(size=2)
            f = lambda v: c[0] * v[0] ** 3 + c[1] * v[0] * v[1] ** 2 + c[2] * v[1] ** 4 + c[3] * v[0]
            exact = np.array([
                3 * c[0] * x[0] ** 2 + c[1] * x[1] ** 2 + c[3],
                2 * c[1] * x[0] * x[1] + 4 * c[2] * x[1] ** 3,
            ])
            scale = max(1.0, float(np.abs(c).max()) * (1 + float(np.abs(x).max())) ** 2)
            err = np.abs(finite_diff_gradient(f, x, eps) - exact).max()
            assert err <= 10 * eps**2 * scale + 1e-9

    def test_two_calls_per_coordinate(self):
        f = CallCounter(lambda x: float(np.sum(x)))
        finite_diff_gradient(f, np.zeros(3))
        assert f.calls == 6

    def test_bad_epsilon(self):
        with pytest.raises(ValueError):
            finite_diff_gradient(shifted_square, [0.0], 0.0)


class TestGradientDescent:
    def test_quadratic(self):
        trace = gradient_descent(shifted_square, [0.0], OptimizerConfig("gradient_descent", step_size=0.1))
        assert abs(trace.best_params[0] - 2) < 1e-3

    def test_budget_of_one(self):
        trace = gradient_descent(shifted_square, [0.0], OptimizerConfig("gradient_descent", max_evaluations=1))
        assert len(trace.iterations) == 1
        assert trace.evaluations == 1
        assert trace.best_value == 4.0

    def test_vqe_worked_example(self):
        def energy(x):
            return exact_expectation(WORKED, run(Circuit(1, (RY(x[0], 0),))))
        trace = gradient_descent(energy, [0.1], OptimizerConfig("gradient_descent", max_evaluations=2000))
        assert abs(trace.best_value - (1 - math.sqrt(5))) < 1e-4


class TestNelderMead:
    def test_quadratic(self):
        trace = nelder_mead(shifted_square, [0.0])
        assert abs(trace.best_params[0] - 2) < 1e-3

    def test_rosenbrock_against_reference(self):
        ref = scipy_minimize(rosenbrock, [-1.0, 1.0], method="Nelder-Mead",
                             options={"maxfev": 2000, "xatol": 1e-10, "fatol": 1e-12})
        assert ref.fun < 1e-2
        trace = nelder_mead(rosenbrock, [-1.0, 1.0], OptimizerConfig(max_evaluations=2000, value_tolerance=1e-12))
        assert trace.best_value < 1e-2
        assert trace.evaluations <= 2000

    def test_qaoa_never_worse_than_start(self):
        g = parse_graph("3\n0 1 10\n0 2 10\n1 2 1\n")
        f = SampledObjective(maxcut_to_ising(g), 1, ObjectiveSpec(), 500, 4)
        x0 = schedule_params(1, 0.5).to_vector()
        trace = nelder_mead(f, x0, OptimizerConfig(max_evaluations=80))
        assert trace.best_value <= trace.iterations[0].value

    def test_initial_simplex_offset(self):
        seen = []
        nelder_mead(lambda x: seen.append(np.array(x)) or float(x @ x), [1.0, 2.0], OptimizerConfig(max_evaluations=3))
        assert np.allclose(seen, [[1.0, 2.0], [1.25, 2.0], [1.0, 2.25]])


class TestTraceAccounting:
    @pytest.mark.parametrize("method", ["gradient_descent", "nelder_mead"])
    @pytest.mark.parametrize("budget", [1, 2, 7, 50, 333])
    def test_calls_equal_counter(self, method, budget):
        f = CallCounter(rosenbrock)
        trace = minimize(f, [-1.0, 1.0], OptimizerConfig(method, max_evaluations=budget, restarts=2))
        assert f.calls == trace.evaluations <= budget

    @pytest.mark.parametrize("method", ["gradient_descent", "nelder_mead"])
    def test_best_so_far_nonincreasing(self, method):
        trace = minimize(rosenbrock, [-1.0, 1.0], OptimizerConfig(method, max_evaluations=300, step_size=1e-3))
        best = trace.best_so_far()
        assert all(b2 <= b1 for b1, b2 in zip(best, best[1:]))
        assert trace.best_value == min(it.value for it in trace.iterations)

    @pytest.mark.parametrize("method", ["gradient_descent", "nelder_mead"])
    def test_deterministic(self, method):
        cfg = OptimizerConfig(method, max_evaluations=200, restarts=3, seed=5, step_size=1e-3)
        a = minimize(rosenbrock, [0.3, -0.2], cfg)
        b = minimize(rosenbrock, [0.3, -0.2], cfg)
        assert [(it.value, tuple(it.params)) for it in a.iterations] == \
            [(it.value, tuple(it.params)) for it in b.iterations]

    def test_restarts_are_seeded(self):
        cfg = OptimizerConfig(max_evaluations=600, restarts=3, seed=1)
        seen = []
        minimize(lambda x: seen.append(tuple(x)) or rosenbrock(x), [0.0, 0.0], cfg)
        starts = [s for s in seen if s != (0.0, 0.0)]
        assert all(0 <= v < 2 * math.pi for v in starts[-1])

    def test_shots_recorded(self):
        class Shotty:
            shots_spent = 0

            def __call__(self, x):
                self.shots_spent += 100
                return shifted_square(x)

        trace = nelder_mead(Shotty(), [0.0], OptimizerConfig(max_evaluations=10))
        assert trace.shots == 100 * trace.evaluations

    def test_csv(self, tmp_path):
        trace = nelder_mead(shifted_square, [0.0], OptimizerConfig(max_evaluations=20))
        path = tmp_path / "t.csv"
        trace.to_csv(path)
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["iteration", "value", "evaluations", "shots", "p0"]
        assert len(rows) == len(trace.iterations) + 1

    def test_empty_trace(self):
        t = OptimizationTrace()
        assert t.evaluations == 0 and t.best_value == math.inf


class TestConfig:
    @pytest.mark.parametrize("kwargs", [
        {"method": "bfgs"}, {"step_size": 0}, {"fd_epsilon": -1}, {"max_evaluations": 0}, {"restarts": 0},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            OptimizerConfig(**kwargs)

    def test_nonfinite_start(self):
        with pytest.raises(ValueError):
            nelder_mead(shifted_square, [math.nan])

    def test_params_roundtrip(self):
        p = QaoaParams((0.1, 0.2), (0.3, 0.4))
        assert QaoaParams.from_vector(p.to_vector()) == p
