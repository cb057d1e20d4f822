import numpy as np
import pytest

from dhmodel import oracle
from dhmodel.dynamics import GateOp
from dhmodel.errors import ContractViolation, UsageError
from dhmodel.oracle import DenseOperator
from dhmodel.pauli import PauliSum


class TestDenseLimit:
    def test_default(self, monkeypatch):
        monkeypatch.delenv(oracle.DENSE_LIMIT_ENV, raising=False)
        assert oracle.dense_limit() == oracle.DEFAULT_DENSE_LIMIT

    def test_env_override(self, monkeypatch):
        monkeypatch.setenv(oracle.DENSE_LIMIT_ENV, "3")
        assert oracle.dense_limit() == 3
        with pytest.raises(UsageError):
            oracle.zero_state(4)

    def test_bad_env(self, monkeypatch):
        monkeypatch.setenv(oracle.DENSE_LIMIT_ENV, "many")
        with pytest.raises(UsageError):
            oracle.dense_limit()


class TestStates:
    def test_qubit_zero_is_most_significant(self):
        v = oracle.evolve(oracle.zero_state(2), [GateOp("X", (0,))])
        assert np.allclose(v, [0, 0, 1, 0])

    def test_bell(self):
        v = oracle.evolve(oracle.zero_state(2), [GateOp("H", (0,)), GateOp("CNOT", (0, 1))])
        assert np.allclose(v, np.array([1, 0, 0, 1]) / np.sqrt(2))

    def test_unitary_matches_evolve(self):
        gates = [GateOp("H", (1,)), GateOp("RY", (0,), theta=0.4), GateOp("CZ", (1, 2)), GateOp("T", (2,))]
        u = oracle.circuit_unitary(gates, 3)
        assert np.allclose(u @ oracle.zero_state(3), oracle.evolve(oracle.zero_state(3), gates))
        assert np.allclose(u.conj().T @ u, np.eye(8))

    def test_rz_convention(self):
        u = oracle.gate_matrix(GateOp("RZ", (0,), theta=np.pi / 2))
        assert np.allclose(u, np.diag([np.exp(-1j * np.pi / 4), np.exp(1j * np.pi / 4)]))


class TestPauliConversion:
    def test_coefficients(self):
        m = 0.5 * oracle.pauli_matrix("XZ") - 2j * oracle.pauli_matrix("YY")
        assert oracle.matrix_to_pauli_sum(m) == PauliSum.from_labels({"XZ": 0.5, "YY": -2j})

    def test_conjugate_dense(self):
        out = oracle.conjugate_dense(PauliSum.from_label("XI"), [GateOp("CNOT", (0, 1))])
        assert out.allclose(PauliSum.from_label("XX"), atol=1e-12)

    def test_fig2_descriptors(self):
        h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        d = oracle.descriptors_dense([GateOp("GENERAL", (0,), matrix=h), GateOp("CNOT", (0, 1))], 2)
        assert d[0][2].allclose(PauliSum.from_label("XI"), atol=1e-12)
        assert d[1][1].allclose(PauliSum.from_label("XY"), atol=1e-12)


class TestBorn:
    def test_incomplete_povm(self):
        with pytest.raises(UsageError):
            oracle.born_probabilities(oracle.zero_state(1), {"0": DenseOperator(np.diag([1, 0]), (0,))})

    def test_non_physical_probability(self):
        povm = {"a": DenseOperator(np.diag([2, 0]), (0,)), "b": DenseOperator(np.diag([-1, 1]), (0,))}
        with pytest.raises(ContractViolation):
            oracle.born_probabilities(oracle.zero_state(1), povm)

    def test_embedded_operator(self):
        v = oracle.evolve(oracle.zero_state(3), [GateOp("X", (2,))])
        povm = {"0": DenseOperator(np.diag([1, 0]), (2,)), "1": DenseOperator(np.diag([0, 1]), (2,))}
        assert oracle.born_probabilities(v, povm) == pytest.approx({"0": 0.0, "1": 1.0})
