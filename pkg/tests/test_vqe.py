import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varqlab import oracle
from varqlab.objectives import ObjectiveSpec
from varqlab.optimizers import OptimizerConfig
from varqlab.pauli import Observable, PauliString, PauliTerm, exact_expectation
from varqlab.simulator import NoiseModel, run
from varqlab.vqe import (
    AnsatzSpec,
    EnergyObjective,
    SampledEstimator,
    build_ansatz,
    exact_ground_energy,
    run_vqe,
)

from conftest import observables

WORKED = Observable.from_terms(1, [(2.0, "Z0"), (1.0, "X0"), (1.0, "I")])
ALLOC = Observable.from_terms(2, [(5.0, "Z0"), (3.0, "Z1"), (2.0, "Z0*Z1")])
GROUND = 1 - math.sqrt(5)
GD = OptimizerConfig("gradient_descent", max_evaluations=2000)


class TestAnsatz:
    def test_single_ry_zero(self):
        assert np.allclose(run(build_ansatz(AnsatzSpec(), [0.0])).amplitudes, [1, 0])

    def test_single_ry_pi(self):
        assert np.allclose(run(build_ansatz(AnsatzSpec(), [math.pi])).amplitudes, [0, 1], atol=1e-15)

    def test_layered_structure(self):
        c = build_ansatz(AnsatzSpec("layered", 2, 1), [0.1, 0.2, 0.3, 0.4])
        assert [(g.kind, g.targets) for g in c.gates] == [
            ("RY", (0,)), ("RY", (1,)), ("RZ", (0,)), ("RZ", (1,)), ("CNOT", (0, 1)),
        ]
        assert [g.angle for g in c.gates[:4]] == [0.1, 0.2, 0.3, 0.4]

    @pytest.mark.parametrize("n,layers", [(1, 1), (2, 3), (4, 2)])
    def test_parameter_count(self, n, layers):
        assert AnsatzSpec("layered", n, layers).parameter_count == 2 * n * layers
        assert AnsatzSpec("single_ry", n).parameter_count == 1

    def test_wrong_length(self):
        with pytest.raises(ValueError):
            build_ansatz(AnsatzSpec("layered", 2, 1), [0.0])

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            AnsatzSpec("uccsd")


class TestExactGround:
    def test_worked_example(self):
        assert abs(exact_ground_energy(WORKED) - GROUND) < 1e-9

    def test_z(self):
        assert exact_ground_energy(Observable.from_terms(1, [(1.0, "Z0")])) == -1.0

    def test_allocation_example(self):
        # brute force: 00 -> 10, 10 -> -4, 01 -> 0, 11 -> -6
        assert oracle.brute_force_min(ALLOC) == (-6.0, ["11"])
        assert exact_ground_energy(ALLOC) == -6.0

    @given(observables(max_qubits=6, max_terms=6, axes="IZ"))
    @settings(max_examples=40, deadline=None)
    def test_diagonal_matches_scan(self, obs):
        assert abs(exact_ground_energy(obs) - oracle.brute_force_min(obs)[0]) <= 1e-8

    def test_power_iteration_matches_eigvalsh(self, rng):
        for _ in range(10):
            n = int(rng.integers(1, 4))
            obs = Observable(n, tuple(
                PauliTerm(float(rng.normal()), PauliString(tuple(rng.choice(list("XYZ"), size=n))))
                for _ in range(4)
            ))
            ref = float(np.linalg.eigvalsh(oracle.dense_observable(obs)).min())
            assert abs(exact_ground_energy(obs) - ref) < 1e-6


class TestVariationalBound:
    @given(observables(max_qubits=3, max_terms=6), st.integers(0, 2**32 - 1))
    @settings(max_examples=100, deadline=None)
    def test_bound(self, obs, seed):
        n = obs.n_qubits
        spec = AnsatzSpec("layered", n, 2)
        params = np.random.default_rng(seed).uniform(-math.pi, math.pi, spec.parameter_count)
        e0 = float(np.linalg.eigvalsh(oracle.dense_observable(obs)).min())
        assert exact_expectation(obs, run(build_ansatz(spec, params))) >= e0 - 1e-9


class TestRunVqe:
    def test_initial_energy(self):
        res = run_vqe(WORKED, AnsatzSpec(), OptimizerConfig(max_evaluations=5), x0=[0.0])
        assert res.initial_energy == pytest.approx(3.0, abs=1e-12)

    def test_gradient_descent_converges(self):
        res = run_vqe(WORKED, AnsatzSpec(), GD, x0=[0.1])
        assert abs(res.best_energy - GROUND) < 1e-4
        assert res.best_energy >= res.exact_ground - 1e-9
        assert res.gap_to_exact == pytest.approx(res.best_energy - res.exact_ground)

    def test_constant_only(self):
        obs = Observable(1, (), 0.75)
        res = run_vqe(obs, AnsatzSpec(), GD)
        assert res.trace.iterations[0].value == 0.75
        assert res.best_energy == 0.75

    def test_reachability_real_one_qubit(self, rng):
        for _ in range(5):
            a, b = rng.normal(size=2)
            c = abs(float(rng.normal()))
            obs = Observable.from_terms(1, [(float(a), "Z0"), (c, "X0")], float(b))
            res = run_vqe(obs, AnsatzSpec(), OptimizerConfig(max_evaluations=400, value_tolerance=1e-14),
                          x0=[0.3])
            assert abs(res.best_energy - exact_ground_energy(obs)) < 1e-6

    def test_sampled_close_to_exact(self):
        est = SampledEstimator(10000, 3)
        res = run_vqe(WORKED, AnsatzSpec(), OptimizerConfig(max_evaluations=150), est, x0=[0.1])
        assert res.std_error > 0
        assert abs(res.best_energy - GROUND) <= 5 * res.std_error
        assert res.trace.shots == 10000 * res.trace.evaluations

    def test_sampled_reproducible(self):
        est = SampledEstimator(1000, 9)
        cfg = OptimizerConfig(max_evaluations=30)
        a = run_vqe(WORKED, AnsatzSpec(), cfg, est, x0=[0.1])
        b = run_vqe(WORKED, AnsatzSpec(), cfg, est, x0=[0.1])
        assert a.best_energy == b.best_energy
        assert [it.value for it in a.trace.iterations] == [it.value for it in b.trace.iterations]

    def test_cvar_sampled(self):
        est = SampledEstimator(2000, 1)
        res = run_vqe(WORKED, AnsatzSpec(), OptimizerConfig(max_evaluations=60), est,
                      ObjectiveSpec("cvar", 0.5), x0=[0.1])
        assert math.isfinite(res.best_objective)

    def test_cvar_needs_samples(self):
        with pytest.raises(ValueError):
            run_vqe(WORKED, AnsatzSpec(), GD, objective=ObjectiveSpec("cvar", 0.5))

    def test_width_mismatch(self):
        with pytest.raises(ValueError):
            run_vqe(ALLOC, AnsatzSpec(), GD)

    def test_noisy_estimator_runs(self):
        est = SampledEstimator(500, 2, noise=NoiseModel())
        f = EnergyObjective(WORKED, AnsatzSpec(), est, ObjectiveSpec())
        assert abs(f([0.0]) - 3.0) < 0.5
        assert f.shots_spent == 500
