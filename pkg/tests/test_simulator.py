import math
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from varqlab import oracle
from varqlab.pauli import Observable, exact_expectation
from varqlab.qaoa import QaoaParams, build_qaoa_circuit, maxcut_to_ising, parse_graph
from varqlab.simulator import (
    CNOT,
    Circuit,
    Gate,
    H,
    NoiseModel,
    RY,
    StateVector,
    apply_gate,
    parse_circuit,
    run,
    run_noisy,
    sample,
)

from conftest import random_state

GOLDEN = Path(__file__).parent / "golden"
ONE_Q = ["H", "X", "Y", "Z", "RX", "RY", "RZ", "PHASE"]
TWO_Q = ["CNOT", "CZ", "RZZ"]
Z0 = Observable.from_terms(1, [(1.0, "Z0")])


def _random_gate(rng, n):
    kind = rng.choice(ONE_Q + (TWO_Q if n > 1 else []))
    k = 2 if kind in TWO_Q else 1
    targets = tuple(int(q) for q in rng.choice(n, size=k, replace=False))
    angle = float(rng.uniform(-4, 4)) if kind in ("RX", "RY", "RZ", "PHASE", "RZZ") else None
    return Gate(str(kind), targets, angle)


class TestGates:
    def test_ry_pi_flips(self):
        out = run(Circuit(1, (RY(math.pi, 0),)))
        assert np.allclose(out.amplitudes, [0, 1], atol=1e-15)

    def test_half_angle_convention(self):
        out = run(Circuit(1, (RY(0.8, 0),)))
        assert np.allclose(out.amplitudes, [math.cos(0.4), math.sin(0.4)])

    def test_hadamard(self):
        out = run(Circuit(1, (H(0),)))
        assert np.allclose(out.amplitudes, [1 / math.sqrt(2)] * 2)

    def test_ry_minus_half_pi_maps_plus_to_zero(self):
        # oracle: RY(-pi/2) applied to (1,1)/sqrt2 by hand
        out = run(Circuit(1, (H(0), RY(-math.pi / 2, 0))))
        assert np.allclose(np.abs(out.amplitudes), [1, 0], atol=1e-12)

    def test_phase_gate(self):
        assert np.allclose(Gate("PHASE", (0,), 0.3).matrix(), np.diag([1, np.exp(0.3j)]))

    def test_every_kind_matches_dense_oracle(self, rng):
        for kind in ONE_Q + TWO_Q:
            for _ in range(5):
                n = 3
                k = 2 if kind in TWO_Q else 1
                targets = tuple(int(q) for q in rng.choice(n, size=k, replace=False))
                angle = float(rng.uniform(-4, 4)) if kind in ("RX", "RY", "RZ", "PHASE", "RZZ") else None
                psi = random_state(rng, n)
                got = apply_gate(StateVector(psi), Gate(kind, targets, angle)).amplitudes
                ref = oracle.embed(oracle.gate_matrix(kind, angle), targets, n) @ psi
                assert np.abs(got - ref).max() <= 1e-12, kind

    def test_inverse(self, rng):
        for _ in range(20):
            g = _random_gate(rng, 2)
            u = g.matrix() @ g.inverse().matrix()
            assert np.allclose(u, np.eye(u.shape[0]), atol=1e-12)

    @pytest.mark.parametrize("args", [("FOO", (0,)), ("RX", (0,)), ("CNOT", (0, 0)), ("H", (0, 1))])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            Gate(*args)

    def test_target_out_of_range(self):
        with pytest.raises(ValueError):
            Circuit(1, (CNOT(0, 1),))


class TestRun:
    def test_empty_circuit(self, rng):
        psi = StateVector(random_state(rng, 2))
        assert np.array_equal(run(Circuit(2), psi).amplitudes, psi.amplitudes)

    def test_uniform_superposition(self):
        out = run(Circuit(3, tuple(H(q) for q in range(3))))
        assert np.allclose(out.amplitudes, 1 / math.sqrt(8))

    def test_ry_zero(self):
        assert np.allclose(run(Circuit(1, (RY(0.0, 0),))).amplitudes, [1, 0])

    def test_qubit0_is_leftmost(self):
        out = run(Circuit(2, (Gate("X", (0,)),)))
        assert out.probabilities()[0b10] == pytest.approx(1.0)

    def test_unitarity_random_circuits(self, rng):
        for _ in range(10):
            n = int(rng.integers(1, 7))
            c = Circuit(n, tuple(_random_gate(rng, n) for _ in range(200)))
            assert abs(run(c).norm() - 1) < 1e-10

    def test_matches_full_unitary(self, rng):
        for _ in range(5):
            c = Circuit(3, tuple(_random_gate(rng, 3) for _ in range(30)))
            ref = oracle.circuit_unitary(c)[:, 0]
            assert np.allclose(run(c).amplitudes, ref, atol=1e-12)

    def test_width_mismatch(self):
        with pytest.raises(ValueError):
            run(Circuit(2), StateVector.zero(1))


class TestCircuitText:
    def test_golden_dump(self):
        g = parse_graph("3\n0 1 10\n0 2 10\n1 2 1\n")
        c = build_qaoa_circuit(maxcut_to_ising(g), QaoaParams((0.5,), (0.25,)))
        assert c.dump() == (GOLDEN / "triangle_p1.circ").read_text()

    def test_format(self):
        assert str(RY(math.pi / 2, 0)) == "RY(1.5708) q0"
        assert str(CNOT(0, 1)) == "CNOT q0 q1"

    def test_parse_round_trip(self):
        c = parse_circuit((GOLDEN / "triangle_p1.circ").read_text())
        assert c.n_qubits == 3
        assert parse_circuit(c.dump()).dump() == c.dump()

    def test_header(self):
        assert parse_circuit("# qubits: 4\nX q0\n").n_qubits == 4

    def test_bad_line(self):
        with pytest.raises(ValueError):
            parse_circuit("RY q0 q1 q2\n")


class TestNoise:
    def test_noiseless_equals_run(self, rng):
        c = Circuit(3, tuple(_random_gate(rng, 3) for _ in range(40)))
        got = run_noisy(c, NoiseModel.noiseless(), 5)
        assert np.array_equal(got.amplitudes, run(c).amplitudes)

    def test_defaults(self):
        m = NoiseModel()
        assert (m.p1, m.p2, m.readout_flip0, m.readout_flip1) == (0.0018, 0.017, 0.038, 0.038)

    def test_invalid_probability(self):
        with pytest.raises(ValueError):
            NoiseModel(p1=1.5)

    def test_certain_fault(self):
        # p1=1: a fault after the single X gate; oracle says <Z> = (1 - 4/3) * (-1) = 1/3
        noise = NoiseModel(1.0, 0.0, 0.0, 0.0)
        c = Circuit(1, (Gate("X", (0,)),))
        vals = [exact_expectation(Z0, run_noisy(c, noise, s)) for s in range(3000)]
        ref = oracle.pauli_channel_expectation_1q([oracle.gate_matrix("X")], 1.0, np.diag([1.0, -1.0]))
        assert ref == pytest.approx(1 / 3)
        assert abs(np.mean(vals) - ref) < 4 * np.std(vals) / math.sqrt(3000)

    def test_decay_matches_density_matrix(self):
        p, k, n_traj = 0.05, 6, 20000
        noise = NoiseModel(p, 0.0, 0.0, 0.0)
        c = Circuit(1, tuple(Gate("Z", (0,)) for _ in range(k)))
        vals = np.array([exact_expectation(Z0, run_noisy(c, noise, s)) for s in range(n_traj)])
        ref = oracle.pauli_channel_expectation_1q([oracle.gate_matrix("Z")] * k, p, np.diag([1.0, -1.0]))
        assert ref == pytest.approx((1 - 4 * p / 3) ** k)
        assert abs(vals.mean() - ref) < 3 * vals.std() / math.sqrt(n_traj)

    def test_trajectory_reproducible(self, rng):
        c = Circuit(2, tuple(_random_gate(rng, 2) for _ in range(30)))
        noise = NoiseModel(0.2, 0.3)
        a = run_noisy(c, noise, 11).amplitudes
        assert np.array_equal(a, run_noisy(c, noise, 11).amplitudes)


class TestSample:
    def test_deterministic_state(self):
        counts = sample(StateVector.from_bitstring("1"), 100, seed=0)
        assert counts.counts == {"1": 100}

    def test_total(self, rng):
        counts = sample(StateVector(random_state(rng, 3)), 777, seed=1)
        assert sum(counts.counts.values()) == 777

    def test_same_seed_same_counts(self, rng):
        s = StateVector(random_state(rng, 3))
        assert sample(s, 500, NoiseModel(), 4) == sample(s, 500, NoiseModel(), 4)

    def test_allocation_state_frequency(self):
        c = Circuit(2, (RY(math.pi / 3, 0),))
        counts = sample(run(c), 100000, seed=2)
        sigma = math.sqrt(0.25 * 0.75 / 100000)
        assert abs(counts.frequency("10") - 0.25) < 3 * sigma

    def test_readout_flip_rate(self):
        counts = sample(StateVector.zero(1), 100000, NoiseModel(0, 0, 0.038, 0.0), seed=3)
        sigma = math.sqrt(0.038 * 0.962 / 100000)
        assert abs(counts.frequency("1") - 0.038) < 3 * sigma

    def test_chi_square(self):
        rng = np.random.default_rng(99)
        for k in range(5):
            psi = random_state(rng, 3)
            counts = sample(StateVector(psi), 20000, seed=k)
            observed = np.array([counts.counts.get(format(i, "03b"), 0) for i in range(8)])
            expected = np.abs(psi) ** 2 * 20000
            assert stats.chisquare(observed, expected).pvalue > 0.001

    def test_zero_shots(self):
        with pytest.raises(ValueError):
            sample(StateVector.zero(1), 0)
