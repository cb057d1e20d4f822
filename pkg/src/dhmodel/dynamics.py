"""Heisenberg-picture evolution of ontic states.

A gate ``U`` on qubits ``q_0..q_{k-1}`` is first described by how it acts on
fixed local letters, ``U^dag L_j U = sum_Q c_Q Q``.  The new descriptor of
``q_j`` is then that expansion with every local letter ``Q_m`` replaced by the
*current* descriptor element of ``q_m``.  This is the conjugation
``lambda(t) = U(t)^dag lambda U(t)`` for the whole circuit ``U(t)`` so far,
evaluated one gate at a time in the right order.  Descriptors of qubits the
gate does not touch commute with the gate and are left exactly as they were.

Rotation convention: ``RZ(theta) = exp(-i theta Z / 2)`` (likewise RX, RY),
so ``RZ(theta)^dag X RZ(theta) = cos(theta) X - sin(theta) Y``.  ``T`` is
``RZ(pi/4)`` up to a global phase.

Matrices given to ``GENERAL`` gates use ``qubits[0]`` as the most
significant (leftmost) tensor factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product as cartesian
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import UsageError
from .ontic import EpistemicState, OnticState, QubitDescriptor
from .pauli import PRUNE_TOL, PauliString, PauliSum, linear_combination, multiply, product

UNITARY_TOL = 1e-10
BRANCH_TOL = 1e-12
MAX_GENERAL_QUBITS = 3

_ALIASES = {
    "CX": "CNOT",
    "S†": "SDG",
    "SDAG": "SDG",
    "S_DAG": "SDG",
    "T†": "TDG",
    "TDAG": "TDG",
    "T_DAG": "TDG",
    "U": "GENERAL",
}
CLIFFORD_KINDS = frozenset({"X", "Y", "Z", "H", "S", "SDG", "CNOT", "CZ", "SWAP"})
ROTATION_KINDS = frozenset({"RX", "RY", "RZ"})
NON_CLIFFORD_KINDS = frozenset({"T", "TDG", "GENERAL"}) | ROTATION_KINDS
ALL_KINDS = CLIFFORD_KINDS | NON_CLIFFORD_KINDS
_ARITY = {k: 1 for k in ("X", "Y", "Z", "H", "S", "SDG", "T", "TDG", "RX", "RY", "RZ")}
_ARITY.update({"CNOT": 2, "CZ": 2, "SWAP": 2})

# (local position, letter) -> (sign, local letters) for U^dag L U.
CLIFFORD_TABLE: dict[str, dict[tuple[int, str], tuple[int, str]]] = {
    "X": {(0, "X"): (1, "X"), (0, "Y"): (-1, "Y"), (0, "Z"): (-1, "Z")},
    "Y": {(0, "X"): (-1, "X"), (0, "Y"): (1, "Y"), (0, "Z"): (-1, "Z")},
    "Z": {(0, "X"): (-1, "X"), (0, "Y"): (-1, "Y"), (0, "Z"): (1, "Z")},
    "H": {(0, "X"): (1, "Z"), (0, "Y"): (-1, "Y"), (0, "Z"): (1, "X")},
    "S": {(0, "X"): (-1, "Y"), (0, "Y"): (1, "X"), (0, "Z"): (1, "Z")},
    "SDG": {(0, "X"): (1, "Y"), (0, "Y"): (-1, "X"), (0, "Z"): (1, "Z")},
    "CNOT": {
        (0, "X"): (1, "XX"),
        (0, "Y"): (1, "YX"),
        (0, "Z"): (1, "ZI"),
        (1, "X"): (1, "IX"),
        (1, "Y"): (1, "ZY"),
        (1, "Z"): (1, "ZZ"),
    },
    "CZ": {
        (0, "X"): (1, "XZ"),
        (0, "Y"): (1, "YZ"),
        (0, "Z"): (1, "ZI"),
        (1, "X"): (1, "ZX"),
        (1, "Y"): (1, "ZY"),
        (1, "Z"): (1, "IZ"),
    },
    "SWAP": {
        (0, "X"): (1, "IX"),
        (0, "Y"): (1, "IY"),
        (0, "Z"): (1, "IZ"),
        (1, "X"): (1, "XI"),
        (1, "Y"): (1, "YI"),
        (1, "Z"): (1, "ZI"),
    },
}

_PAULI = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}

Expansion = dict[tuple[int, str], list[tuple[complex, str]]]


def normalize_kind(kind: str) -> str:
    k = str(kind).strip().upper()
    k = _ALIASES.get(k, k)
    if k not in ALL_KINDS:
        raise UsageError(f"unknown gate kind {kind!r}")
    return k


@dataclass(frozen=True, eq=False)
class GateOp:
    """One gate in a circuit.

    ``param`` names a tunable angle so the information-flow tracer can vary it;
    ``theta`` is the value used when the gate is applied.
    """

    kind: str
    qubits: tuple[int, ...]
    theta: float | None = None
    matrix: np.ndarray | None = field(default=None, repr=False)
    param: str | None = None

    def __post_init__(self):
        kind = normalize_kind(self.kind)
        object.__setattr__(self, "kind", kind)
        qubits = tuple(int(q) for q in self.qubits)
        object.__setattr__(self, "qubits", qubits)
        if len(set(qubits)) != len(qubits) or any(q < 0 for q in qubits):
            raise UsageError(f"{kind}: target qubits must be distinct non-negative indices")
        if kind == "GENERAL":
            if self.matrix is None:
                raise UsageError("GENERAL gate needs a matrix")
            m = np.array(self.matrix, dtype=np.complex128)
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)
            dim = 1 << len(qubits)
            if m.shape != (dim, dim):
                raise UsageError(f"GENERAL matrix shape {m.shape} does not fit {len(qubits)} qubits")
            if not 1 <= len(qubits) <= MAX_GENERAL_QUBITS:
                raise UsageError(f"GENERAL gates act on 1..{MAX_GENERAL_QUBITS} qubits")
            if not np.allclose(m.conj().T @ m, np.eye(dim), atol=UNITARY_TOL, rtol=0):
                raise UsageError("GENERAL matrix is not unitary")
        else:
            if self.matrix is not None:
                raise UsageError(f"{kind} gate does not take a matrix")
            if len(qubits) != _ARITY[kind]:
                raise UsageError(f"{kind} acts on {_ARITY[kind]} qubit(s), got {len(qubits)}")
        if kind in ROTATION_KINDS:
            if self.theta is None:
                raise UsageError(f"{kind} needs an angle")
            object.__setattr__(self, "theta", float(self.theta))
        elif self.theta is not None:
            raise UsageError(f"{kind} does not take an angle")

    @property
    def is_clifford(self) -> bool:
        return self.kind in CLIFFORD_KINDS

    def bind(self, values: Mapping[str, float]) -> "GateOp":
        if self.param is None or self.param not in values:
            return self
        return GateOp(self.kind, self.qubits, float(values[self.param]), self.matrix, self.param)

    def to_record(self) -> dict:
        rec: dict = {"gate": self.kind, "qubits": list(self.qubits)}
        if self.theta is not None:
            rec["theta"] = self.theta
        if self.param is not None:
            rec["param"] = self.param
        if self.matrix is not None:
            rec["matrix"] = [[[v.real, v.imag] for v in row] for row in self.matrix.tolist()]
        return rec

    def __repr__(self) -> str:
        extra = f", theta={self.theta:g}" if self.theta is not None else ""
        return f"GateOp({self.kind}, {self.qubits}{extra})"


def _clifford_expansion(kind: str) -> Expansion:
    return {key: [(complex(sign), label)] for key, (sign, label) in CLIFFORD_TABLE[kind].items()}


def _rotation_expansion(axis: str, theta: float) -> Expansion:
    """``U^dag L U`` for ``U = exp(-i theta G / 2)``: ``L`` if it commutes with
    ``G``, else ``cos(theta) L + i sin(theta) G L``."""
    gen = PauliString.from_label(axis)
    c, s = math.cos(theta), math.sin(theta)
    out: Expansion = {}
    for letter in "XYZ":
        if letter == axis:
            out[(0, letter)] = [(1.0 + 0j, letter)]
            continue
        gl = multiply(gen, PauliString.from_label(letter))
        out[(0, letter)] = [(complex(c), letter), (1j * s * gl.coefficient, gl.letters)]
    return out


def local_pauli_matrix(label: str) -> np.ndarray:
    m = np.ones((1, 1), dtype=np.complex128)
    for ch in label:
        m = np.kron(m, _PAULI[ch])
    return m


def dense_expansion(matrix: np.ndarray) -> Expansion:
    """Pauli-basis expansion of ``U^dag L_j U`` for every local letter.

    Coefficients are ``tr(Q U^dag L_j U) / 2**k``; a lone coefficient within
    ``UNITARY_TOL`` of +-1 is snapped so Clifford matrices stay exact.
    """
    u = np.asarray(matrix, dtype=np.complex128)
    k = int(round(math.log2(u.shape[0])))
    labels = ["".join(t) for t in cartesian("IXYZ", repeat=k)]
    basis = {lab: local_pauli_matrix(lab) for lab in labels}
    out: Expansion = {}
    for j in range(k):
        for letter in "XYZ":
            lab = "I" * j + letter + "I" * (k - j - 1)
            conj = u.conj().T @ basis[lab] @ u
            terms = []
            for q in labels:
                c = np.trace(basis[q] @ conj) / (1 << k)
                if abs(c) >= PRUNE_TOL:
                    terms.append((complex(c.real, 0.0) if abs(c.imag) < PRUNE_TOL else complex(c), q))
            if len(terms) == 1 and abs(abs(terms[0][0]) - 1) < UNITARY_TOL:
                sign = 1.0 if terms[0][0].real > 0 else -1.0
                terms = [(complex(sign), terms[0][1])]
            out[(j, letter)] = terms
    return out


def gate_expansion(gate: GateOp) -> Expansion:
    if gate.kind in CLIFFORD_KINDS:
        return _clifford_expansion(gate.kind)
    if gate.kind in ROTATION_KINDS:
        return _rotation_expansion(gate.kind[1], gate.theta)
    if gate.kind == "T":
        return _rotation_expansion("Z", math.pi / 4)
    if gate.kind == "TDG":
        return _rotation_expansion("Z", -math.pi / 4)
    return dense_expansion(gate.matrix)


def _check_targets(state: OnticState, gate: GateOp) -> None:
    for q in gate.qubits:
        if q >= state.n_qubits:
            raise UsageError(f"{gate.kind} targets qubit {q} outside universe of size {state.n_qubits}")
        if q not in state.qubits:
            raise UsageError(f"{gate.kind} targets qubit {q} which is missing from this fragment")


def _substitute(state: OnticState, gate: GateOp, expansion: Expansion) -> OnticState:
    n = state.n_qubits
    qubits = gate.qubits
    cache: dict[str, PauliSum] = {}

    def local_product(label: str) -> PauliSum:
        if label not in cache:
            factors = [state[q].element(ch) for q, ch in zip(qubits, label) if ch != "I"]
            cache[label] = product(factors, n)
        return cache[label]

    updates = {}
    for j, q in enumerate(qubits):
        elements = []
        for letter in "XYZ":
            terms = expansion[(j, letter)]
            if len(terms) == 1 and terms[0][0] == 1:
                elements.append(local_product(terms[0][1]))
            else:
                elements.append(
                    linear_combination(((c, local_product(lab)) for c, lab in terms), n)
                )
        updates[q] = QubitDescriptor(*elements)
    return state.replace(updates)


def conjugate_clifford(state: OnticState, gate: GateOp) -> OnticState:
    """Evolve ``state`` through a Clifford gate; single strings stay single."""
    if not gate.is_clifford:
        raise UsageError(f"{gate.kind} is not a Clifford gate")
    _check_targets(state, gate)
    return _substitute(state, gate, _clifford_expansion(gate.kind))


def conjugate_general(state: OnticState, gate: GateOp) -> OnticState:
    """Evolve ``state`` through a T, rotation, or GENERAL gate."""
    if gate.is_clifford:
        raise UsageError(f"{gate.kind} is Clifford; use conjugate_clifford")
    _check_targets(state, gate)
    return _substitute(state, gate, gate_expansion(gate))


def apply_gate(state: OnticState, gate: GateOp) -> OnticState:
    if gate.is_clifford:
        return conjugate_clifford(state, gate)
    return conjugate_general(state, gate)


def apply_circuit(state: OnticState, gates: Iterable[GateOp]) -> OnticState:
    for g in gates:
        state = apply_gate(state, g)
    return state


@dataclass(frozen=True)
class TransformationContext:
    """A transformation as probability-weighted alternative gate lists.

    ``ancillas`` records which qubits the chosen purification uses; two
    contexts with the same reduced channel but different ancillas lead to
    different ontic states.
    """

    alternatives: tuple[tuple[float, tuple[GateOp, ...]], ...]
    ancillas: frozenset[int] = frozenset()

    def __post_init__(self):
        alts = tuple((float(p), tuple(gates)) for p, gates in self.alternatives)
        if not alts:
            raise UsageError("a transformation needs at least one alternative")
        if any(p < 0 or p > 1 + BRANCH_TOL for p, _ in alts):
            raise UsageError("alternative probabilities must lie in [0, 1]")
        total = sum(p for p, _ in alts)
        if abs(total - 1.0) > BRANCH_TOL:
            raise UsageError(f"alternative probabilities sum to {total}, not 1")
        object.__setattr__(self, "alternatives", alts)
        object.__setattr__(self, "ancillas", frozenset(int(a) for a in self.ancillas))

    @classmethod
    def deterministic(cls, gates: Sequence[GateOp], ancillas: Iterable[int] = ()) -> "TransformationContext":
        return cls(((1.0, tuple(gates)),), frozenset(ancillas))

    @classmethod
    def stochastic(
        cls, alternatives: Sequence[tuple[float, Sequence[GateOp]]], ancillas: Iterable[int] = ()
    ) -> "TransformationContext":
        return cls(tuple((p, tuple(g)) for p, g in alternatives), frozenset(ancillas))

    @classmethod
    def identity(cls) -> "TransformationContext":
        return cls.deterministic(())

    @property
    def gates(self) -> tuple[GateOp, ...]:
        """Gate list of a deterministic context."""
        if len(self.alternatives) != 1:
            raise UsageError("stochastic context has no single gate list")
        return self.alternatives[0][1]


def apply_transformation(state: EpistemicState, t: TransformationContext) -> EpistemicState:
    n = state.n_qubits
    bad = [a for a in t.ancillas if a >= n]
    if bad:
        raise UsageError(f"ancillas {bad} outside universe of size {n}")
    branches = []
    for w, s in state.branches:
        for p, gates in t.alternatives:
            weight = w * p
            if weight < BRANCH_TOL:
                continue
            branches.append((weight, apply_circuit(s, gates)))
    total = sum(w for w, _ in branches)
    return EpistemicState([(w / total, s) for w, s in branches])
