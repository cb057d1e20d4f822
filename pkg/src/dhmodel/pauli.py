"""Exact algebra of N-qubit Pauli strings and sparse Pauli sums.

Letters are bit-packed into two Python integers: bit ``i`` of ``x`` / ``z``
describes qubit ``i``, with ``I=(0,0)``, ``X=(1,0)``, ``Y=(1,1)``, ``Z=(0,1)``.
In a text label qubit 0 is the leftmost character, so ``"XI"`` is X on qubit 0.

Phase convention is the usual right-handed one: ``XY = iZ``, ``YZ = iX``,
``ZX = iY``.  An unsigned letter string ``P(x, z)`` equals
``i**popcount(x & z) * X**x Z**z``, which is what the phase bookkeeping in
:func:`multiply` relies on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Union

import numpy as np

from .errors import ContractViolation, UsageError

PRUNE_TOL = 1e-12
HERMITIAN_TOL = 1e-9

_PHASES = (1, 1j, -1, -1j)
_NP_PHASES = np.array(_PHASES, dtype=np.complex128)
_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_LETTER = {v: k for k, v in _LETTER_BITS.items()}
_MASK64 = (1 << 64) - 1

# Products with more pairs than this go through numpy.
_VECTOR_THRESHOLD = 256


def label_to_masks(label: str) -> tuple[int, int]:
    x = z = 0
    for i, ch in enumerate(label):
        try:
            bx, bz = _LETTER_BITS[ch]
        except KeyError:
            raise UsageError(f"invalid Pauli letter {ch!r} in {label!r}") from None
        x |= bx << i
        z |= bz << i
    return x, z


def masks_to_label(x: int, z: int, n_qubits: int) -> str:
    return "".join(_BITS_LETTER[((x >> i) & 1, (z >> i) & 1)] for i in range(n_qubits))


def _product_phase(x1: int, z1: int, x2: int, z2: int) -> int:
    """Power of i picked up by ``P(x1,z1) P(x2,z2) = i**e P(x1^x2, z1^z2)``."""
    x3 = x1 ^ x2
    z3 = z1 ^ z2
    return (
        (x1 & z1).bit_count()
        + (x2 & z2).bit_count()
        + 2 * (z1 & x2).bit_count()
        - (x3 & z3).bit_count()
    ) & 3


@dataclass(frozen=True)
class PauliString:
    """A phased tensor product of single-qubit Pauli letters.

    ``phase`` is an exponent of ``i`` modulo 4, so the operator is
    ``i**phase * letters``.
    """

    n_qubits: int
    x: int
    z: int
    phase: int = 0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise UsageError("a Pauli string needs at least one qubit")
        limit = 1 << self.n_qubits
        if not (0 <= self.x < limit and 0 <= self.z < limit):
            raise UsageError("letter masks exceed n_qubits")
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def from_label(cls, label: str, phase: int = 0) -> "PauliString":
        x, z = label_to_masks(label)
        return cls(len(label), x, z, phase)

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls(n_qubits, 0, 0, 0)

    @property
    def letters(self) -> str:
        return masks_to_label(self.x, self.z, self.n_qubits)

    @property
    def coefficient(self) -> complex:
        return _PHASES[self.phase]

    def __mul__(self, other: "PauliString") -> "PauliString":
        return multiply(self, other)

    def __str__(self) -> str:
        return ("+", "+i", "-", "-i")[self.phase] + self.letters


def _check_same_size(a, b) -> None:
    if a.n_qubits != b.n_qubits:
        raise UsageError(f"qubit count mismatch: {a.n_qubits} vs {b.n_qubits}")


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Product ``a · b`` with the phase accumulated exactly."""
    _check_same_size(a, b)
    e = _product_phase(a.x, a.z, b.x, b.z)
    return PauliString(a.n_qubits, a.x ^ b.x, a.z ^ b.z, a.phase + b.phase + e)


def commutes(a: PauliString, b: PauliString) -> bool:
    """True iff an even number of sites carry anticommuting letters."""
    _check_same_size(a, b)
    return ((a.x & b.z) ^ (a.z & b.x)).bit_count() % 2 == 0


TermKey = tuple[int, int]
TermsLike = Union[Mapping[str, complex], Mapping[TermKey, complex], Iterable]


class PauliSum:
    """Sparse complex combination of unsigned Pauli letter strings.

    Instances are immutable.  Terms are kept sorted by ``(x, z)`` and every
    coefficient below ``PRUNE_TOL`` in magnitude is dropped, so two sums that
    went through the same arithmetic compare equal bit for bit.

    >>> PauliSum.from_labels({"Z": 0.5, "I": 0.5}).to_labels()
    {'I': (0.5+0j), 'Z': (0.5+0j)}
    """

    __slots__ = ("n_qubits", "_terms", "_hash")

    def __init__(self, n_qubits: int, terms: TermsLike | None = None):
        if n_qubits < 1:
            raise UsageError("a Pauli sum needs at least one qubit")
        acc: dict[TermKey, complex] = {}
        limit = 1 << n_qubits
        items = terms.items() if isinstance(terms, Mapping) else (terms or ())
        for key, coeff in items:
            coeff = complex(coeff)
            if isinstance(key, str):
                if len(key) != n_qubits:
                    raise UsageError(f"label {key!r} does not have {n_qubits} letters")
                key = label_to_masks(key)
            elif isinstance(key, PauliString):
                if key.n_qubits != n_qubits:
                    raise UsageError(f"qubit count mismatch: {key.n_qubits} vs {n_qubits}")
                coeff *= key.coefficient
                key = (key.x, key.z)
            x, z = key
            if not (0 <= x < limit and 0 <= z < limit):
                raise UsageError("letter masks exceed n_qubits")
            acc[(x, z)] = acc.get((x, z), 0) + coeff
        self.n_qubits = n_qubits
        self._terms = _canonical(acc)
        self._hash = None

    @classmethod
    def _wrap(cls, n_qubits: int, acc: dict[TermKey, complex]) -> "PauliSum":
        out = object.__new__(cls)
        out.n_qubits = n_qubits
        out._terms = _canonical(acc)
        out._hash = None
        return out

    @classmethod
    def from_labels(cls, terms: Mapping[str, complex]) -> "PauliSum":
        if not terms:
            raise UsageError("cannot infer qubit count from an empty mapping")
        return cls(len(next(iter(terms))), terms)

    @classmethod
    def from_label(cls, label: str, coeff: complex = 1.0) -> "PauliSum":
        return cls(len(label), {label: coeff})

    @classmethod
    def from_string(cls, s: PauliString, coeff: complex = 1.0) -> "PauliSum":
        return cls._wrap(s.n_qubits, {(s.x, s.z): complex(coeff) * s.coefficient})

    @classmethod
    def single(cls, n_qubits: int, x: int, z: int, coeff: complex = 1.0) -> "PauliSum":
        return cls._wrap(n_qubits, {(x, z): complex(coeff)})

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliSum":
        return cls._wrap(n_qubits, {(0, 0): 1.0 + 0j})

    @classmethod
    def zero(cls, n_qubits: int) -> "PauliSum":
        return cls._wrap(n_qubits, {})

    # -- views -------------------------------------------------------------

    def items(self):
        """``((x, z), coeff)`` pairs in canonical order."""
        return self._terms.items()

    def to_labels(self) -> dict[str, complex]:
        return {masks_to_label(x, z, self.n_qubits): c for (x, z), c in self._terms.items()}

    def strings(self) -> list[PauliString]:
        return [PauliString(self.n_qubits, x, z) for (x, z) in self._terms]

    def coefficient(self, label: str) -> complex:
        return self._terms.get(label_to_masks(label), 0j)

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self):
        return iter(self.to_labels().items())

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other: "PauliSum") -> "PauliSum":
        _check_same_size(self, other)
        acc = dict(self._terms)
        for k, c in other._terms.items():
            acc[k] = acc.get(k, 0) + c
        return PauliSum._wrap(self.n_qubits, acc)

    def __neg__(self) -> "PauliSum":
        return PauliSum._wrap(self.n_qubits, {k: -c for k, c in self._terms.items()})

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        return self + (-other)

    def __mul__(self, scalar: complex) -> "PauliSum":
        if isinstance(scalar, (PauliSum, PauliString)):
            return NotImplemented
        s = complex(scalar)
        return PauliSum._wrap(self.n_qubits, {k: c * s for k, c in self._terms.items()})

    __rmul__ = __mul__

    def __matmul__(self, other: "PauliSum") -> "PauliSum":
        return sum_multiply(self, other)

    def adjoint(self) -> "PauliSum":
        return PauliSum._wrap(self.n_qubits, {k: c.conjugate() for k, c in self._terms.items()})

    # -- comparison --------------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self.n_qubits == other.n_qubits and self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.n_qubits, tuple(self._terms.items())))
        return self._hash

    def max_abs_diff(self, other: "PauliSum") -> float:
        _check_same_size(self, other)
        keys = self._terms.keys() | other._terms.keys()
        return max(
            (abs(self._terms.get(k, 0) - other._terms.get(k, 0)) for k in keys),
            default=0.0,
        )

    def allclose(self, other: "PauliSum", atol: float = 1e-9) -> bool:
        return self.max_abs_diff(other) <= atol

    # -- properties --------------------------------------------------------

    def is_hermitian(self, atol: float = HERMITIAN_TOL) -> bool:
        return all(abs(c.imag) <= atol for c in self._terms.values())

    def support(self) -> frozenset[int]:
        mask = 0
        for x, z in self._terms:
            mask |= x | z
        return frozenset(i for i in range(self.n_qubits) if (mask >> i) & 1)

    def is_single_string(self) -> bool:
        return len(self._terms) == 1

    def expectation_reference(self) -> float:
        return expectation_reference(self)

    def __repr__(self) -> str:
        body = ", ".join(f"{lab!r}: {_fmt(c)}" for lab, c in self.to_labels().items())
        return f"PauliSum({self.n_qubits}, {{{body}}})"


def _fmt(c: complex) -> str:
    if c.imag == 0:
        return repr(c.real)
    if c.real == 0:
        return f"{c.imag!r}j"
    return repr(c)


def _canonical(acc: dict[TermKey, complex]) -> dict[TermKey, complex]:
    return {k: complex(acc[k]) for k in sorted(acc) if abs(acc[k]) >= PRUNE_TOL}


def _to_words(values: list[int], n_words: int) -> np.ndarray:
    if n_words == 1:
        return np.array(values, dtype=np.uint64).reshape(-1, 1)
    return np.array(
        [[(v >> (64 * w)) & _MASK64 for w in range(n_words)] for v in values],
        dtype=np.uint64,
    )


def _from_words(rows: np.ndarray) -> list[int]:
    if rows.shape[1] == 1:
        return rows[:, 0].tolist()
    out = []
    for row in rows.tolist():
        v = 0
        for w, word in enumerate(row):
            v |= word << (64 * w)
        out.append(v)
    return out


def _popcount(words: np.ndarray) -> np.ndarray:
    return np.bitwise_count(words).sum(axis=-1, dtype=np.int64)


def _multiply_python(a: PauliSum, b: PauliSum) -> dict[TermKey, complex]:
    acc: dict[TermKey, complex] = {}
    b_items = [(x2, z2, (x2 & z2).bit_count(), c2) for (x2, z2), c2 in b._terms.items()]
    for (x1, z1), c1 in a._terms.items():
        s1 = (x1 & z1).bit_count()
        for x2, z2, s2, c2 in b_items:
            x3 = x1 ^ x2
            z3 = z1 ^ z2
            e = (s1 + s2 + 2 * (z1 & x2).bit_count() - (x3 & z3).bit_count()) & 3
            key = (x3, z3)
            acc[key] = acc.get(key, 0) + c1 * c2 * _PHASES[e]
    return acc


def _multiply_numpy(a: PauliSum, b: PauliSum) -> dict[TermKey, complex]:
    n_words = (a.n_qubits + 63) // 64
    ka = list(a._terms)
    kb = list(b._terms)
    xa = _to_words([k[0] for k in ka], n_words)
    za = _to_words([k[1] for k in ka], n_words)
    xb = _to_words([k[0] for k in kb], n_words)
    zb = _to_words([k[1] for k in kb], n_words)
    ca = np.fromiter(a._terms.values(), dtype=np.complex128, count=len(ka))
    cb = np.fromiter(b._terms.values(), dtype=np.complex128, count=len(kb))

    x3 = xa[:, None, :] ^ xb[None, :, :]
    z3 = za[:, None, :] ^ zb[None, :, :]
    e = (
        _popcount(xa & za)[:, None]
        + _popcount(xb & zb)[None, :]
        + 2 * _popcount(za[:, None, :] & xb[None, :, :])
        - _popcount(x3 & z3)
    )
    coeff = (ca[:, None] * cb[None, :] * _NP_PHASES[e & 3]).ravel()
    keys = np.concatenate([x3, z3], axis=-1).reshape(-1, 2 * n_words)

    # Stable sort keeps the a-major accumulation order of the Python path.
    order = np.lexsort(keys.T[::-1])
    keys = keys[order]
    coeff = coeff[order]
    fresh = np.ones(len(keys), dtype=bool)
    fresh[1:] = np.any(keys[1:] != keys[:-1], axis=1)
    starts = np.flatnonzero(fresh)
    sums = np.add.reduceat(coeff, starts)
    uniq = keys[starts]
    xs = _from_words(uniq[:, :n_words])
    zs = _from_words(uniq[:, n_words:])
    return dict(zip(zip(xs, zs), sums.tolist()))


def sum_multiply(a: PauliSum, b: PauliSum) -> PauliSum:
    """Operator product of two Pauli sums, merged and pruned."""
    _check_same_size(a, b)
    if not a._terms or not b._terms:
        return PauliSum.zero(a.n_qubits)
    if len(a) * len(b) <= _VECTOR_THRESHOLD:
        acc = _multiply_python(a, b)
    else:
        acc = _multiply_numpy(a, b)
    return PauliSum._wrap(a.n_qubits, acc)


def product(factors: Iterable[PauliSum], n_qubits: int) -> PauliSum:
    """Left-to-right product; the empty product is the identity."""
    out = None
    for f in factors:
        out = f if out is None else sum_multiply(out, f)
    return PauliSum.identity(n_qubits) if out is None else out


def support(p: PauliSum) -> frozenset[int]:
    return p.support()


def hermitian(p: PauliSum, atol: float = HERMITIAN_TOL) -> bool:
    return p.is_hermitian(atol)


def expectation_reference(p: PauliSum) -> float:
    """``<0...0| p |0...0>``: the sum of coefficients of I/Z-only strings."""
    if not p.is_hermitian():
        raise ContractViolation("expectation_reference needs a Hermitian sum")
    total = 0.0
    for (x, _z), c in p._terms.items():
        if x == 0:
            total += c.real
    return total


def linear_combination(terms: Iterable[tuple[complex, PauliSum]], n_qubits: int) -> PauliSum:
    """``sum_k c_k p_k`` merged in a single pass."""
    acc: dict[TermKey, complex] = {}
    for coeff, p in terms:
        if p.n_qubits != n_qubits:
            raise UsageError(f"qubit count mismatch: {p.n_qubits} vs {n_qubits}")
        for k, c in p._terms.items():
            acc[k] = acc.get(k, 0) + coeff * c
    return PauliSum._wrap(n_qubits, acc)
