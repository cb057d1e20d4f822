"""Dense Schrödinger-picture reference simulator.

Everything here is built from explicit matrices and state vectors and shares
no arithmetic with :mod:`dhmodel.pauli` or :mod:`dhmodel.dynamics`; Pauli sums
are only used as containers on the way in and out.  Qubit 0 is the most
significant tensor factor, matching the leftmost letter of a Pauli label.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from itertools import product as cartesian
from typing import Mapping, Sequence

import numpy as np

from .errors import ContractViolation, UsageError
from .pauli import PauliSum

DEFAULT_DENSE_LIMIT = 12
DENSE_LIMIT_ENV = "DHMODEL_DENSE_LIMIT"
COMPLETENESS_TOL = 1e-10
PROB_TOL = 1e-9

_S2 = 1 / np.sqrt(2)
_MATS = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}
_FIXED = {
    "X": _MATS["X"],
    "Y": _MATS["Y"],
    "Z": _MATS["Z"],
    "H": np.array([[_S2, _S2], [_S2, -_S2]], dtype=np.complex128),
    "S": np.diag([1, 1j]).astype(np.complex128),
    "SDG": np.diag([1, -1j]).astype(np.complex128),
    "T": np.diag([1, np.exp(1j * np.pi / 4)]),
    "TDG": np.diag([1, np.exp(-1j * np.pi / 4)]),
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128),
    "CZ": np.diag([1, 1, 1, -1]).astype(np.complex128),
    "SWAP": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=np.complex128),
}
# Stacked I, X, Y, Z for the Pauli transform.
_SIGMA = np.stack([_MATS[c] for c in "IXYZ"])


def dense_limit() -> int:
    raw = os.environ.get(DENSE_LIMIT_ENV)
    if raw is None:
        return DEFAULT_DENSE_LIMIT
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"{DENSE_LIMIT_ENV} must be an integer, got {raw!r}") from None
    if value < 1:
        raise UsageError(f"{DENSE_LIMIT_ENV} must be positive")
    return value


def _check_size(n: int) -> None:
    limit = dense_limit()
    if n > limit:
        raise UsageError(f"{n} qubits exceeds the dense limit of {limit}")


def gate_matrix(gate) -> np.ndarray:
    """Unitary of a :class:`~dhmodel.dynamics.GateOp` on its own qubits."""
    kind = gate.kind
    if kind in _FIXED:
        return _FIXED[kind]
    if kind in ("RX", "RY", "RZ"):
        half = gate.theta / 2
        return np.cos(half) * _MATS["I"] - 1j * np.sin(half) * _MATS[kind[1]]
    if kind == "GENERAL":
        return np.asarray(gate.matrix, dtype=np.complex128)
    raise UsageError(f"oracle has no matrix for {kind}")


def zero_state(n: int) -> np.ndarray:
    _check_size(n)
    v = np.zeros(1 << n, dtype=np.complex128)
    v[0] = 1.0
    return v


def _n_from_dim(dim: int) -> int:
    n = dim.bit_length() - 1
    if dim != 1 << n or n < 1:
        raise UsageError(f"dimension {dim} is not a power of two")
    return n


def _apply(tensor: np.ndarray, matrix: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    """Apply ``matrix`` to the first ``n`` axes of ``tensor`` (shape [2]*n + extra)."""
    k = len(qubits)
    m = matrix.reshape([2] * (2 * k))
    out = np.tensordot(m, tensor, axes=(list(range(k, 2 * k)), list(qubits)))
    return np.moveaxis(out, list(range(k)), list(qubits))


def evolve(v: np.ndarray, gates: Sequence) -> np.ndarray:
    """Apply ``gates`` in order to the state vector ``v``."""
    v = np.asarray(v, dtype=np.complex128)
    n = _n_from_dim(v.shape[0])
    _check_size(n)
    psi = v.reshape([2] * n)
    for g in gates:
        if max(g.qubits) >= n:
            raise UsageError(f"gate on qubit {max(g.qubits)} outside {n}-qubit register")
        psi = _apply(psi, gate_matrix(g), g.qubits, n)
    return psi.reshape(-1)


def embed(matrix: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    _check_size(n)
    dim = 1 << n
    eye = np.eye(dim, dtype=np.complex128).reshape([2] * n + [dim])
    return _apply(eye, np.asarray(matrix, dtype=np.complex128), qubits, n).reshape(dim, dim)


def circuit_unitary(gates: Sequence, n: int) -> np.ndarray:
    _check_size(n)
    dim = 1 << n
    u = np.eye(dim, dtype=np.complex128).reshape([2] * n + [dim])
    for g in gates:
        u = _apply(u, gate_matrix(g), g.qubits, n)
    return u.reshape(dim, dim)


@dataclass(frozen=True, eq=False)
class DenseOperator:
    """A ``2**k`` square matrix acting on the listed qubits."""

    matrix: np.ndarray
    qubits: tuple[int, ...]

    def __post_init__(self):
        qubits = tuple(int(q) for q in self.qubits)
        if len(set(qubits)) != len(qubits) or any(q < 0 for q in qubits):
            raise UsageError("embedding indices must be distinct and non-negative")
        m = np.asarray(self.matrix, dtype=np.complex128)
        if m.shape != (1 << len(qubits),) * 2:
            raise UsageError(f"matrix shape {m.shape} does not fit qubits {qubits}")
        object.__setattr__(self, "qubits", qubits)
        object.__setattr__(self, "matrix", m)

    def full(self, n: int) -> np.ndarray:
        if self.qubits and max(self.qubits) >= n:
            raise UsageError(f"operator qubits {self.qubits} outside {n}-qubit register")
        return embed(self.matrix, self.qubits, n)


def pauli_matrix(label: str) -> np.ndarray:
    m = np.ones((1, 1), dtype=np.complex128)
    for ch in label:
        m = np.kron(m, _MATS[ch])
    return m


def pauli_sum_to_matrix(p: PauliSum) -> np.ndarray:
    _check_size(p.n_qubits)
    dim = 1 << p.n_qubits
    out = np.zeros((dim, dim), dtype=np.complex128)
    for label, c in p.to_labels().items():
        out += c * pauli_matrix(label)
    return out


def pauli_coefficients(matrix: np.ndarray) -> dict[str, complex]:
    """All ``tr(P M) / 2**n`` in label order, via a qubit-by-qubit transform."""
    m = np.asarray(matrix, dtype=np.complex128)
    n = _n_from_dim(m.shape[0])
    t = m.reshape(1, 1 << n, 1 << n)
    for i in range(n):
        rest = 1 << (n - i - 1)
        t = t.reshape(t.shape[0], 2, rest, 2, rest)
        # tr(P M) = sum_{r,c} P[c, r] M[r, c]
        t = np.einsum("bcr,ArRcC->AbRC", _SIGMA, t).reshape(t.shape[0] * 4, rest, rest)
    coeffs = t.reshape(-1) / (1 << n)
    labels = ("".join(x) for x in cartesian("IXYZ", repeat=n))
    return dict(zip(labels, coeffs.tolist()))


def matrix_to_pauli_sum(matrix: np.ndarray) -> PauliSum:
    m = np.asarray(matrix)
    return PauliSum(_n_from_dim(m.shape[0]), pauli_coefficients(m))


def conjugate_dense(p: PauliSum, gates: Sequence) -> PauliSum:
    """``U^dag p U`` for the circuit ``U = U_k ... U_1``, re-expanded."""
    u = circuit_unitary(gates, p.n_qubits)
    return matrix_to_pauli_sum(u.conj().T @ pauli_sum_to_matrix(p) @ u)


def descriptors_dense(gates: Sequence, n: int) -> dict[int, tuple[PauliSum, PauliSum, PauliSum]]:
    """Heisenberg triples ``U^dag {X_i, Y_i, Z_i} U`` for every qubit."""
    u = circuit_unitary(gates, n)
    ud = u.conj().T
    out = {}
    for q in range(n):
        triple = []
        for letter in "XYZ":
            label = "I" * q + letter + "I" * (n - q - 1)
            triple.append(matrix_to_pauli_sum(ud @ pauli_matrix(label) @ u))
        out[q] = tuple(triple)
    return out


def born_probabilities(v: np.ndarray, povm: Mapping[object, DenseOperator]) -> dict:
    """``p_m = <v|O_m|v>`` for a complete POVM."""
    v = np.asarray(v, dtype=np.complex128)
    n = _n_from_dim(v.shape[0])
    fulls = {m: op.full(n) for m, op in povm.items()}
    total = sum(fulls.values())
    if not np.allclose(total, np.eye(1 << n), atol=COMPLETENESS_TOL, rtol=0):
        raise UsageError("POVM elements do not sum to the identity")
    probs = {}
    for m, op in fulls.items():
        p = float(np.real(np.vdot(v, op @ v)))
        if p < -PROB_TOL or p > 1 + PROB_TOL:
            raise ContractViolation(f"Born probability {p} for outcome {m!r} outside [0, 1]")
        probs[m] = min(max(p, 0.0), 1.0)
    if abs(sum(probs.values()) - 1) > PROB_TOL:
        raise ContractViolation("Born probabilities do not sum to one")
    return probs


def spec_operators(spec) -> dict[str, DenseOperator]:
    """Dense POVM elements rebuilt from a measurement spec's coefficient tables."""
    region = tuple(spec.region)
    out = {}
    for m in spec.outcomes:
        mat = np.zeros((1 << len(region),) * 2, dtype=np.complex128)
        for label, c in spec.tables[m].items():
            mat += c * pauli_matrix(label)
        out[m] = DenseOperator(mat, region)
    return out


def joint_operators(spec_a, spec_b) -> dict[tuple[str, str], DenseOperator]:
    ops_a = spec_operators(spec_a)
    ops_b = spec_operators(spec_b)
    out = {}
    for a, oa in ops_a.items():
        for b, ob in ops_b.items():
            out[(a, b)] = DenseOperator(np.kron(oa.matrix, ob.matrix), oa.qubits + ob.qubits)
    return out
