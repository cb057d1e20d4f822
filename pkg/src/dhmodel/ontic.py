"""Descriptor triples, ontic states, and finite epistemic mixtures."""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import UsageError
from .pauli import PauliSum, sum_multiply

ELEMENTS = ("x", "y", "z")
WEIGHT_TOL = 1e-12

Region = frozenset


def as_region(qubits: Iterable[int]) -> frozenset[int]:
    region = frozenset(int(q) for q in qubits)
    if any(q < 0 for q in region):
        raise UsageError(f"negative qubit index in region {sorted(region)}")
    return region


@dataclass(frozen=True)
class QubitDescriptor:
    """The Heisenberg triple ``(x_bar, y_bar, z_bar)`` carried by one qubit."""

    x: PauliSum
    y: PauliSum
    z: PauliSum

    def __post_init__(self):
        if not (self.x.n_qubits == self.y.n_qubits == self.z.n_qubits):
            raise UsageError("descriptor elements live on different universes")

    @property
    def n_qubits(self) -> int:
        return self.x.n_qubits

    def element(self, letter: str) -> PauliSum:
        """Descriptor element standing in for ``letter``; ``I`` is the identity."""
        if letter == "I":
            return PauliSum.identity(self.n_qubits)
        try:
            return getattr(self, letter.lower())
        except AttributeError:
            raise UsageError(f"unknown Pauli letter {letter!r}") from None

    def elements(self) -> tuple[PauliSum, PauliSum, PauliSum]:
        return (self.x, self.y, self.z)

    def support(self) -> frozenset[int]:
        return self.x.support() | self.y.support() | self.z.support()

    def closure_error(self) -> float:
        """Largest coefficient error in ``xy = iz``, ``yz = ix``, ``zx = iy``."""
        x, y, z = self.x, self.y, self.z
        return max(
            sum_multiply(x, y).max_abs_diff(z * 1j),
            sum_multiply(y, z).max_abs_diff(x * 1j),
            sum_multiply(z, x).max_abs_diff(y * 1j),
        )

    def term_count(self) -> int:
        return len(self.x) + len(self.y) + len(self.z)

    @classmethod
    def fresh(cls, n_qubits: int, qubit: int) -> "QubitDescriptor":
        bit = 1 << qubit
        return cls(
            PauliSum.single(n_qubits, bit, 0),
            PauliSum.single(n_qubits, bit, bit),
            PauliSum.single(n_qubits, 0, bit),
        )

    def to_record(self) -> dict[str, dict[str, list[float]]]:
        return {name: _sum_record(el) for name, el in zip(ELEMENTS, self.elements())}


def _sum_record(p: PauliSum) -> dict[str, list[float]]:
    return {label: [c.real, c.imag] for label, c in p.to_labels().items()}


class OnticState:
    """Mapping from qubit index to :class:`QubitDescriptor` over ``n_qubits``.

    A state whose mapping does not cover every qubit is a *fragment*, the
    result of :func:`restrict`.  Fragments recombine with :func:`compose`.
    """

    __slots__ = ("n_qubits", "_descriptors")

    def __init__(self, n_qubits: int, descriptors: Mapping[int, QubitDescriptor]):
        if n_qubits < 1:
            raise UsageError("universe needs at least one qubit")
        for q, d in descriptors.items():
            if not 0 <= q < n_qubits:
                raise UsageError(f"qubit {q} outside universe of size {n_qubits}")
            if d.n_qubits != n_qubits:
                raise UsageError(f"descriptor of qubit {q} has wrong universe size")
        self.n_qubits = n_qubits
        self._descriptors = MappingProxyType(dict(sorted(descriptors.items())))

    @property
    def descriptors(self) -> Mapping[int, QubitDescriptor]:
        return self._descriptors

    @property
    def qubits(self) -> frozenset[int]:
        return frozenset(self._descriptors)

    @property
    def is_complete(self) -> bool:
        return len(self._descriptors) == self.n_qubits

    def __getitem__(self, qubit: int) -> QubitDescriptor:
        try:
            return self._descriptors[qubit]
        except KeyError:
            raise UsageError(f"qubit {qubit} not present in this state") from None

    def __iter__(self) -> Iterator[int]:
        return iter(self._descriptors)

    def __len__(self) -> int:
        return len(self._descriptors)

    def replace(self, updates: Mapping[int, QubitDescriptor]) -> "OnticState":
        merged = dict(self._descriptors)
        merged.update(updates)
        return OnticState(self.n_qubits, merged)

    def __eq__(self, other) -> bool:
        if not isinstance(other, OnticState):
            return NotImplemented
        return self.n_qubits == other.n_qubits and dict(self._descriptors) == dict(
            other._descriptors
        )

    def __hash__(self) -> int:
        return hash((self.n_qubits, tuple(self._descriptors.items())))

    def __repr__(self) -> str:
        return f"OnticState(n_qubits={self.n_qubits}, qubits={sorted(self._descriptors)})"

    def max_abs_diff(self, other: "OnticState") -> float:
        if self.qubits != other.qubits or self.n_qubits != other.n_qubits:
            return float("inf")
        return max(
            (
                a.max_abs_diff(b)
                for q in self._descriptors
                for a, b in zip(self[q].elements(), other[q].elements())
            ),
            default=0.0,
        )

    def term_counts(self) -> dict[int, int]:
        return {q: d.term_count() for q, d in self._descriptors.items()}

    def to_record(self) -> dict[str, dict]:
        return {str(q): d.to_record() for q, d in self._descriptors.items()}


def fresh_universe(n: int) -> OnticState:
    """Every qubit in ``|z+>``: qubit ``i`` carries ``{X_i, Y_i, Z_i}``."""
    if n < 1:
        raise UsageError("universe size must be a positive integer")
    return OnticState(n, {i: QubitDescriptor.fresh(n, i) for i in range(n)})


def is_fresh(state: OnticState, qubit: int) -> bool:
    return state[qubit] == QubitDescriptor.fresh(state.n_qubits, qubit)


def prepare_pure(state: OnticState, qubit: int, u_psi) -> OnticState:
    """Put ``qubit`` into ``U_psi |z+>`` by conjugating its descriptor.

    The qubit must still be unentangled, i.e. its descriptor acts only on its
    own site; any such qubit can be re-prepared.  Other qubits are untouched.
    """
    from .dynamics import GateOp, apply_gate

    if qubit not in state.qubits:
        raise UsageError(f"qubit {qubit} not present in this state")
    if state[qubit].support() - {qubit}:
        raise UsageError(f"qubit {qubit} is entangled; prepare_pure needs a local descriptor")
    u = np.asarray(u_psi, dtype=np.complex128)
    if u.shape != (2, 2):
        raise UsageError("prepare_pure expects a 2x2 unitary")
    return apply_gate(state, GateOp("GENERAL", (qubit,), matrix=u))


def restrict(state: OnticState, region: Iterable[int]) -> OnticState:
    """The descriptors of ``region``'s qubits, unmodified."""
    region = as_region(region)
    missing = region - state.qubits
    if missing:
        raise UsageError(f"qubits {sorted(missing)} not in state")
    return OnticState(state.n_qubits, {q: state[q] for q in region})


def compose(fragments: Sequence[OnticState]) -> OnticState:
    """Union of fragments over disjoint regions of a common universe."""
    if not fragments:
        raise UsageError("compose needs at least one fragment")
    n = fragments[0].n_qubits
    merged: dict[int, QubitDescriptor] = {}
    for frag in fragments:
        if frag.n_qubits != n:
            raise UsageError("fragments come from universes of different sizes")
        overlap = merged.keys() & frag.qubits
        if overlap:
            raise UsageError(f"fragments overlap on qubits {sorted(overlap)}")
        merged.update(frag.descriptors)
    return OnticState(n, merged)


class EpistemicState:
    """Finite-support probability distribution over ontic states."""

    __slots__ = ("branches",)

    def __init__(self, branches: Iterable[tuple[float, OnticState]]):
        branches = tuple((float(w), s) for w, s in branches)
        if not branches:
            raise UsageError("an epistemic state needs at least one branch")
        if any(w < 0 or w > 1 + WEIGHT_TOL for w, _ in branches):
            raise UsageError("branch weights must lie in [0, 1]")
        total = sum(w for w, _ in branches)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise UsageError(f"branch weights sum to {total}, not 1")
        if len({s.n_qubits for _, s in branches}) != 1:
            raise UsageError("branches live on different universes")
        self.branches = branches

    @classmethod
    def delta(cls, state: OnticState) -> "EpistemicState":
        return cls([(1.0, state)])

    @property
    def n_qubits(self) -> int:
        return self.branches[0][1].n_qubits

    def __len__(self) -> int:
        return len(self.branches)

    def __iter__(self):
        return iter(self.branches)

    def __repr__(self) -> str:
        weights = ", ".join(f"{w:g}" for w, _ in self.branches)
        return f"EpistemicState(n_qubits={self.n_qubits}, weights=[{weights}])"
