import math

import numpy as np
import pytest

from varqlab import oracle
from varqlab.pauli import Observable
from varqlab.simulator import CNOT, Circuit, H


class TestOracle:
    def test_dense_observable_worked_example(self):
        obs = Observable.from_terms(1, [(2.0, "Z0"), (1.0, "X0"), (1.0, "I")])
        assert np.array_equal(oracle.dense_observable(obs), [[3, 1], [1, -1]])

    def test_eigenvalues_worked_example(self):
        ev = np.linalg.eigvalsh(np.array([[3.0, 1.0], [1.0, -1.0]]))
        assert np.allclose(ev, [1 - math.sqrt(5), 1 + math.sqrt(5)])

    def test_brute_force_ties(self):
        obs = Observable.from_terms(2, [(1.0, "Z0*Z1")])
        assert oracle.brute_force_min(obs) == (-1.0, ["01", "10"])

    def test_brute_force_rejects_non_diagonal(self):
        with pytest.raises(ValueError):
            oracle.brute_force_min(Observable.from_terms(1, [(1.0, "X0")]))

    def test_expm_1q_matches_eig(self, rng):
        for _ in range(10):
            a, b, c = rng.normal(size=3)
            obs = Observable.from_terms(1, [(a, "X0"), (b, "Y0"), (c, "Z0")])
            w, v = np.linalg.eigh(oracle.dense_observable(obs))
            t = float(rng.normal())
            ref = v @ np.diag(np.exp(-1j * t * w)) @ v.conj().T
            assert np.allclose(oracle.expm_1q(obs, t), ref, atol=1e-12)

    def test_dense_expm_diagonal(self):
        obs = Observable.from_terms(2, [(0.5, "Z0*Z1")], 1.0)
        got = oracle.dense_expm_diagonal(obs, 0.3)
        ref = np.diag(np.exp(-0.3j * np.array([1.5, 0.5, 0.5, 1.5])))
        assert np.allclose(got, ref)

    def test_embed_bell(self):
        u = oracle.circuit_unitary(Circuit(2, (H(0), CNOT(0, 1))))
        assert np.allclose(u[:, 0], [1 / math.sqrt(2), 0, 0, 1 / math.sqrt(2)])

    def test_embed_reversed_targets(self):
        # CNOT with control 1, target 0 flips the left bit when the right bit is 1
        u = oracle.embed(oracle.gate_matrix("CNOT"), (1, 0), 2)
        assert u[0b11, 0b01] == 1 and u[0b01, 0b11] == 1

    def test_channel_identity(self):
        z = np.diag([1.0, -1.0])
        assert oracle.pauli_channel_expectation_1q([], 0.3, z) == 1.0
        assert oracle.pauli_channel_expectation_1q([np.eye(2)] * 3, 0.1, z) == pytest.approx((1 - 0.4 / 3) ** 3)

    def test_equal_up_to_phase(self):
        a = np.array([1, 1j]) / math.sqrt(2)
        assert oracle.equal_up_to_phase(np.exp(0.7j) * a, a)
        assert not oracle.equal_up_to_phase(np.array([1, -1j]) / math.sqrt(2), a)
