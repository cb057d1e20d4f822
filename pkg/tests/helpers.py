"""Shared builders for the test suite."""

from dhmodel.ontic import QubitDescriptor
from dhmodel.pauli import PauliSum


def descriptor(x: dict, y: dict, z: dict) -> QubitDescriptor:
    return QubitDescriptor(PauliSum.from_labels(x), PauliSum.from_labels(y), PauliSum.from_labels(z))


# The cnot-fig2 circuit (|x+>|z+>, then CNOT 0->1); values from the dense oracle.
FIG2_Q0 = descriptor({"ZX": 1}, {"YX": -1}, {"XI": 1})
FIG2_Q1 = descriptor({"IX": 1}, {"XY": 1}, {"XZ": 1})
