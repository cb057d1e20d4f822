"""Seeded random circuits, unitaries and POVMs for sweeps and property tests."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .dynamics import GateOp
from .measurement import MeasurementSpec, trivial_measurement

ONE_QUBIT_CLIFFORD = ("X", "Y", "Z", "H", "S", "SDG")
TWO_QUBIT_CLIFFORD = ("CNOT", "CZ", "SWAP")
ONE_QUBIT_OTHER = ("T", "TDG", "RX", "RY", "RZ")


def random_gate(qubits: Sequence[int], rng: np.random.Generator, clifford_only: bool = False) -> GateOp:
    qubits = list(qubits)
    kinds = list(ONE_QUBIT_CLIFFORD)
    if not clifford_only:
        kinds += ONE_QUBIT_OTHER
    if len(qubits) >= 2:
        kinds += TWO_QUBIT_CLIFFORD
    kind = kinds[rng.integers(len(kinds))]
    if kind in TWO_QUBIT_CLIFFORD:
        a, b = rng.choice(len(qubits), size=2, replace=False)
        return GateOp(kind, (qubits[a], qubits[b]))
    q = qubits[rng.integers(len(qubits))]
    if kind in ("RX", "RY", "RZ"):
        return GateOp(kind, (q,), theta=float(rng.uniform(-np.pi, np.pi)))
    return GateOp(kind, (q,))


def random_circuit(
    n_qubits: int, depth: int, rng: np.random.Generator, clifford_only: bool = False
) -> list[GateOp]:
    """``depth`` gates drawn uniformly from the gate set on random targets."""
    return [random_gate(range(n_qubits), rng, clifford_only) for _ in range(depth)]


def random_layered_clifford(n_qubits: int, layers: int, rng: np.random.Generator) -> list[GateOp]:
    """Brickwork of random single-qubit Cliffords and CNOT/CZ on neighbour pairs."""
    gates = []
    for layer in range(layers):
        for q in range(n_qubits):
            gates.append(GateOp(ONE_QUBIT_CLIFFORD[rng.integers(6)], (q,)))
        for q in range(layer % 2, n_qubits - 1, 2):
            kind = TWO_QUBIT_CLIFFORD[rng.integers(2)]
            pair = (q, q + 1) if rng.integers(2) else (q + 1, q)
            gates.append(GateOp(kind, pair))
    return gates


def random_local_circuit(region: Sequence[int], rng: np.random.Generator, max_depth: int = 6) -> list[GateOp]:
    """A circuit of random depth in ``1..max_depth`` acting only on ``region``."""
    depth = int(rng.integers(1, max_depth + 1))
    return [random_gate(sorted(region), rng) for _ in range(depth)]


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_povm(region: Sequence[int], rng: np.random.Generator, n_outcomes: int = 2) -> MeasurementSpec:
    """Random 1- or 2-outcome POVM: ``{I}`` or ``{E, I - E}`` with ``0 <= E <= I``."""
    region = tuple(region)
    if n_outcomes == 1:
        return trivial_measurement(region)
    if n_outcomes != 2:
        raise ValueError("only 1- and 2-outcome POVMs are generated")
    dim = 1 << len(region)
    v = random_unitary(dim, rng)
    e = v @ np.diag(rng.uniform(0, 1, dim)) @ v.conj().T
    e = (e + e.conj().T) / 2
    return MeasurementSpec.from_povm(region, {"0": e, "1": np.eye(dim) - e}, name="random")
