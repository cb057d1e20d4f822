"""Indicator functions built from Pauli decompositions of POVM elements.

A measurement on a region of ``n`` qubits is stored as, per outcome, the
coefficients ``alpha(j)`` of its POVM element in the ``4**n`` Pauli letter
assignments ``j``.  Evaluating it on an ontic state swaps every letter for the
matching descriptor element and takes the expectation in ``|0...0>``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product as cartesian
from typing import Mapping, Sequence

import numpy as np

from .dynamics import TransformationContext, apply_transformation, local_pauli_matrix
from .errors import ContractViolation, UsageError
from .ontic import EpistemicState, OnticState
from .pauli import PRUNE_TOL, PauliSum, expectation_reference, linear_combination, sum_multiply

PROB_TOL = 1e-9
COMPLETENESS_TOL = 1e-10
DEFAULT_DENSE_LIMIT = 4

OutcomeDistribution = dict


def decompose_povm(matrix, dense_limit: int = DEFAULT_DENSE_LIMIT) -> dict[str, float]:
    """``alpha(j) = tr(P_j O) / 2**n`` for every nonzero Pauli assignment.

    >>> decompose_povm([[1, 0], [0, 0]])
    {'I': 0.5, 'Z': 0.5}
    """
    o = np.asarray(matrix, dtype=np.complex128)
    dim = o.shape[0]
    n = dim.bit_length() - 1
    if o.shape != (dim, dim) or dim != 1 << n or n < 1:
        raise UsageError(f"POVM element of shape {o.shape} is not a 2**n square matrix")
    if n > dense_limit:
        raise UsageError(f"{n}-qubit POVM element exceeds the dense limit of {dense_limit}")
    if not np.allclose(o, o.conj().T, atol=COMPLETENESS_TOL, rtol=0):
        raise UsageError("POVM element is not Hermitian")
    out = {}
    for letters in cartesian("IXYZ", repeat=n):
        label = "".join(letters)
        alpha = float(np.real(np.trace(local_pauli_matrix(label) @ o))) / dim
        if abs(alpha) >= PRUNE_TOL:
            out[label] = alpha
    return out


def reconstruct(table: Mapping[str, complex], n: int) -> np.ndarray:
    out = np.zeros((1 << n, 1 << n), dtype=np.complex128)
    for label, alpha in table.items():
        out += alpha * local_pauli_matrix(label)
    return out


@dataclass(frozen=True, eq=False)
class MeasurementSpec:
    """Outcome-indexed Pauli coefficient tables over ``region``.

    ``region`` is ordered: letter ``k`` of every table key refers to
    ``region[k]``.  Completeness and positivity are checked densely when the
    region has at most ``dense_limit`` qubits.
    """

    region: tuple[int, ...]
    outcomes: tuple[str, ...]
    tables: Mapping[str, Mapping[str, float]]
    name: str = ""
    dense_limit: int = DEFAULT_DENSE_LIMIT

    def __post_init__(self):
        region = tuple(int(q) for q in self.region)
        if not region or len(set(region)) != len(region) or any(q < 0 for q in region):
            raise UsageError(f"measurement region {region} must be distinct non-negative qubits")
        outcomes = tuple(str(m) for m in self.outcomes)
        if len(set(outcomes)) != len(outcomes) or not outcomes:
            raise UsageError("outcome labels must be unique and non-empty")
        if set(self.tables) != set(outcomes):
            raise UsageError("every outcome needs exactly one coefficient table")
        tables = {}
        for m in outcomes:
            row = {}
            for label, alpha in self.tables[m].items():
                if len(label) != len(region) or set(label) - set("IXYZ"):
                    raise UsageError(f"bad Pauli assignment {label!r} for region {region}")
                row[label] = float(np.real(alpha)) if np.imag(alpha) == 0 else complex(alpha)
            tables[m] = row
        object.__setattr__(self, "region", region)
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "tables", tables)
        if len(region) <= self.dense_limit:
            self._check_povm()

    def _check_povm(self) -> None:
        n = len(self.region)
        ops = [reconstruct(self.tables[m], n) for m in self.outcomes]
        if not np.allclose(sum(ops), np.eye(1 << n), atol=COMPLETENESS_TOL, rtol=0):
            raise UsageError(f"measurement {self.name or self.region}: elements do not sum to I")
        for m, op in zip(self.outcomes, ops):
            if not np.allclose(op, op.conj().T, atol=COMPLETENESS_TOL, rtol=0):
                raise UsageError(f"element for outcome {m!r} is not Hermitian")
            if np.linalg.eigvalsh(op).min() < -COMPLETENESS_TOL:
                raise UsageError(f"element for outcome {m!r} is not positive semidefinite")

    def element(self, outcome: str) -> np.ndarray:
        """Dense POVM element on the region's own qubits."""
        return reconstruct(self.tables[outcome], len(self.region))

    @classmethod
    def from_povm(
        cls,
        region: Sequence[int],
        elements: Mapping[str, object],
        name: str = "",
        dense_limit: int = DEFAULT_DENSE_LIMIT,
    ) -> "MeasurementSpec":
        tables = {str(m): decompose_povm(e, dense_limit) for m, e in elements.items()}
        return cls(tuple(region), tuple(tables), tables, name, dense_limit)

    def to_record(self) -> dict:
        return {
            "name": self.name,
            "region": list(self.region),
            "outcomes": list(self.outcomes),
            "tables": {m: dict(t) for m, t in self.tables.items()},
        }


def pauli_measurement(qubit: int, axis: str, name: str | None = None) -> MeasurementSpec:
    """Projective measurement of X, Y or Z with outcomes ``+`` / ``-``."""
    axis = axis.upper()
    if axis not in ("X", "Y", "Z"):
        raise UsageError(f"unknown Pauli axis {axis!r}")
    tables = {"+": {"I": 0.5, axis: 0.5}, "-": {"I": 0.5, axis: -0.5}}
    return MeasurementSpec((qubit,), ("+", "-"), tables, name or axis)


def axis_measurement(qubit: int, direction: Sequence[float], name: str = "") -> MeasurementSpec:
    """Projective measurement of ``n . sigma`` along a Bloch vector."""
    n = np.asarray(direction, dtype=float)
    norm = np.linalg.norm(n)
    if n.shape != (3,) or norm == 0:
        raise UsageError("axis direction must be a nonzero 3-vector")
    n = n / norm
    plus = {"I": 0.5}
    minus = {"I": 0.5}
    for letter, comp in zip("XYZ", n):
        if abs(comp) >= PRUNE_TOL:
            plus[letter] = 0.5 * comp
            minus[letter] = -0.5 * comp
    return MeasurementSpec((qubit,), ("+", "-"), {"+": plus, "-": minus}, name)


def product_measurement(region: Sequence[int], axes: str, name: str = "") -> MeasurementSpec:
    """Simultaneous local Pauli measurements; outcomes like ``"+-"``."""
    region = tuple(region)
    axes = axes.upper()
    if len(axes) != len(region):
        raise UsageError("need one axis per qubit")
    tables = {}
    for signs in cartesian("+-", repeat=len(region)):
        row: dict[str, float] = {}
        for mask in cartesian((0, 1), repeat=len(region)):
            label = "".join(a if bit else "I" for a, bit in zip(axes, mask))
            sign = 1
            for s, bit in zip(signs, mask):
                if bit and s == "-":
                    sign = -sign
            row[label] = row.get(label, 0.0) + sign / (1 << len(region))
        tables["".join(signs)] = row
    return MeasurementSpec(region, tuple(tables), tables, name or axes)


def trivial_measurement(region: Sequence[int], name: str = "trivial") -> MeasurementSpec:
    """The one-outcome POVM ``{I}``."""
    region = tuple(region)
    return MeasurementSpec(region, ("1",), {"1": {"I" * len(region): 1.0}}, name)


def _check_region(spec: MeasurementSpec, state: OnticState) -> None:
    for q in spec.region:
        if q >= state.n_qubits or q not in state.qubits:
            raise UsageError(f"measurement qubit {q} not available in a {state.n_qubits}-qubit state")


def build_observable(spec: MeasurementSpec, outcome: str, state: OnticState) -> PauliSum:
    """The POVM element with each letter replaced by the matching descriptor."""
    _check_region(spec, state)
    if outcome not in spec.tables:
        raise UsageError(f"unknown outcome {outcome!r}")
    n = state.n_qubits
    region = spec.region
    cache: dict[str, PauliSum] = {"": PauliSum.identity(n)}

    def monomial(label: str) -> PauliSum:
        if label not in cache:
            head = monomial(label[:-1])
            ch = label[-1]
            if ch == "I":
                cache[label] = head
            else:
                cache[label] = sum_multiply(head, state[region[len(label) - 1]].element(ch))
        return cache[label]

    return linear_combination(
        ((alpha, monomial(label)) for label, alpha in spec.tables[outcome].items()), n
    )


def _clamp(p: float, what: str) -> float:
    if p < -PROB_TOL or p > 1 + PROB_TOL:
        raise ContractViolation(f"{what} evaluated to {p}, outside [0, 1]")
    return min(max(p, 0.0), 1.0)


def indicator(spec: MeasurementSpec, outcome: str, state: OnticState) -> float:
    return _clamp(expectation_reference(build_observable(spec, outcome, state)), f"outcome {outcome!r}")


def _check_disjoint(spec_a: MeasurementSpec, spec_b: MeasurementSpec) -> None:
    overlap = set(spec_a.region) & set(spec_b.region)
    if overlap:
        raise UsageError(f"joint measurement regions overlap on {sorted(overlap)}")


def joint_indicator(
    spec_a: MeasurementSpec, a: str, spec_b: MeasurementSpec, b: str, state: OnticState
) -> float:
    """Probability of ``(a, b)`` from the product of the two observables.

    Not in general equal to ``indicator(a) * indicator(b)``.
    """
    _check_disjoint(spec_a, spec_b)
    joint = sum_multiply(build_observable(spec_a, a, state), build_observable(spec_b, b, state))
    return _clamp(expectation_reference(joint), f"joint outcome {(a, b)!r}")


def _normalized(dist: dict) -> dict:
    total = sum(dist.values())
    if abs(total - 1) > PROB_TOL:
        raise ContractViolation(f"outcome probabilities sum to {total}")
    return dist


def outcome_distribution(spec: MeasurementSpec, state: OnticState) -> OutcomeDistribution:
    return _normalized({m: indicator(spec, m, state) for m in spec.outcomes})


def joint_distribution(
    spec_a: MeasurementSpec, spec_b: MeasurementSpec, state: OnticState
) -> OutcomeDistribution:
    _check_disjoint(spec_a, spec_b)
    obs_a = {a: build_observable(spec_a, a, state) for a in spec_a.outcomes}
    obs_b = {b: build_observable(spec_b, b, state) for b in spec_b.outcomes}
    dist = {}
    for a, oa in obs_a.items():
        for b, ob in obs_b.items():
            dist[(a, b)] = _clamp(
                expectation_reference(sum_multiply(oa, ob)), f"joint outcome {(a, b)!r}"
            )
    return _normalized(dist)


def _mix(prep: EpistemicState, evaluate) -> OutcomeDistribution:
    total: dict = {}
    for w, s in prep.branches:
        for m, p in evaluate(s).items():
            total[m] = total.get(m, 0.0) + w * p
    return _normalized({m: _clamp(p, f"outcome {m!r}") for m, p in total.items()})


def probability_pipeline(
    prep: EpistemicState, t: TransformationContext, spec: MeasurementSpec
) -> OutcomeDistribution:
    """``p(m|P,T,M)``: branch-weighted indicators after the transformation."""
    evolved = apply_transformation(prep, t)
    return _mix(evolved, lambda s: outcome_distribution(spec, s))


def joint_pipeline(
    prep: EpistemicState,
    t: TransformationContext,
    spec_a: MeasurementSpec,
    spec_b: MeasurementSpec,
) -> OutcomeDistribution:
    evolved = apply_transformation(prep, t)
    return _mix(evolved, lambda s: joint_distribution(spec_a, spec_b, s))


def condition_on_outcome(
    prep: EpistemicState, spec: MeasurementSpec, outcome: str
) -> EpistemicState:
    """Bayesian update of branch weights given an observed outcome.

    The ontic states themselves are left alone; only the weights change.
    """
    weighted = [(w * indicator(spec, outcome, s), s) for w, s in prep.branches]
    total = sum(w for w, _ in weighted)
    if total < 1e-12:
        raise UsageError(f"outcome {outcome!r} has zero probability")
    return EpistemicState([(w / total, s) for w, s in weighted if w > 0])
