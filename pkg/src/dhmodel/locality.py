"""Executable locality checks: S, DL, SL, PI, F, LC, plus CHSH and tracing.

"Conditioned on the ontic state" is read as evaluating indicator functions
at one known :class:`OnticState`.  Settings grids map a setting label to a
:class:`MeasurementSpec` on one side's region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .dynamics import GateOp, TransformationContext, apply_circuit
from .errors import UsageError
from .measurement import (
    MeasurementSpec,
    axis_measurement,
    indicator,
    joint_distribution,
    joint_pipeline,
    pauli_measurement,
    probability_pipeline,
    product_measurement,
)
from .ontic import ELEMENTS, EpistemicState, OnticState, as_region, compose, restrict
from .randomized import random_local_circuit

DEFAULT_TOL = 1e-9
MIN_CONDITIONING_PROB = 1e-12
HOLDS = "holds"
FAILS = "fails"

Settings = Mapping[str, MeasurementSpec]
# (setting A, setting B) -> (outcome a, outcome b) -> probability
JointTable = dict[tuple[str, str], dict[tuple[str, str], float]]


@dataclass
class LocalityReport:
    property: str
    verdict: str
    witness: dict | None = None
    trials: int = 1
    tolerance: float = DEFAULT_TOL
    seed: int | None = None
    details: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.verdict == HOLDS

    def to_record(self) -> dict:
        rec = {
            "property": self.property,
            "verdict": self.verdict,
            "trials": self.trials,
            "tolerance": self.tolerance,
        }
        if self.seed is not None:
            rec["seed"] = self.seed
        if self.witness is not None:
            rec["witness"] = self.witness
        if self.details:
            rec["details"] = self.details
        return rec


def _report(prop, violations, **kw) -> LocalityReport:
    return LocalityReport(prop, FAILS if violations else HOLDS, violations[0] if violations else None, **kw)


# -- separability -----------------------------------------------------------


def _check_partition(n: int, partition: Sequence[Iterable[int]]) -> list[frozenset[int]]:
    regions = [as_region(r) for r in partition]
    seen: set[int] = set()
    for r in regions:
        if seen & r:
            raise UsageError(f"partition regions overlap on {sorted(seen & r)}")
        seen |= r
    if seen != set(range(n)):
        raise UsageError(f"partition does not cover qubits 0..{n - 1} exactly")
    return regions


def check_separability(state: OnticState, partition: Sequence[Iterable[int]]) -> LocalityReport:
    regions = _check_partition(state.n_qubits, partition)
    rebuilt = compose([restrict(state, r) for r in regions])
    violations = []
    if rebuilt != state:
        bad = [q for q in range(state.n_qubits) if rebuilt[q] != state[q]]
        violations.append({"qubits": bad})
    return _report("S", violations, details={"partition": [sorted(r) for r in regions]})


# -- dynamical locality -----------------------------------------------------


def _disjoint(region_a, region_b, n: int) -> tuple[frozenset[int], frozenset[int]]:
    a, b = as_region(region_a), as_region(region_b)
    if not a or not b:
        raise UsageError("regions must be non-empty")
    if a & b:
        raise UsageError(f"regions overlap on {sorted(a & b)}")
    if max(a | b) >= n:
        raise UsageError(f"region qubits exceed universe of size {n}")
    return a, b


def check_dynamical_locality(
    base: OnticState,
    region_a: Iterable[int],
    region_b: Iterable[int],
    trials: int = 100,
    seed: int = 0,
    max_depth: int = 6,
) -> LocalityReport:
    """Vary one side's random local circuit and require the other side's
    descriptors to stay bit-identical, in both directions and both orders."""
    a, b = _disjoint(region_a, region_b, base.n_qubits)
    violations = []
    for trial in range(trials):
        rng = np.random.default_rng([seed, trial])
        u_a, u_a2 = random_local_circuit(a, rng, max_depth), random_local_circuit(a, rng, max_depth)
        u_b, u_b2 = random_local_circuit(b, rng, max_depth), random_local_circuit(b, rng, max_depth)
        ab = apply_circuit(apply_circuit(base, u_a), u_b)
        checks = (
            ("B", b, apply_circuit(apply_circuit(base, u_b), u_a2)),
            ("A", a, apply_circuit(apply_circuit(base, u_b2), u_a)),
        )
        for side, region, other in checks:
            if restrict(ab, region) != restrict(other, region):
                violations.append(
                    {
                        "trial": trial,
                        "seed": seed,
                        "side": side,
                        "max_abs_diff": restrict(ab, region).max_abs_diff(restrict(other, region)),
                        "circuits": {
                            "u_a": [g.to_record() for g in u_a],
                            "u_a_alt": [g.to_record() for g in u_a2],
                            "u_b": [g.to_record() for g in u_b],
                            "u_b_alt": [g.to_record() for g in u_b2],
                        },
                    }
                )
    return _report(
        "DL",
        violations,
        trials=trials,
        tolerance=0.0,
        seed=seed,
        details={"region_a": sorted(a), "region_b": sorted(b)},
    )


# -- probability tables -----------------------------------------------------


def ontic_table(state: OnticState, settings_a: Settings, settings_b: Settings) -> JointTable:
    """Joint indicator tables for every setting pair at one ontic state."""
    return {
        (sa, sb): joint_distribution(ma, mb, state)
        for sa, ma in settings_a.items()
        for sb, mb in settings_b.items()
    }


def pipeline_table(
    prep: EpistemicState,
    settings_a: Settings,
    settings_b: Settings,
    t: TransformationContext | None = None,
) -> JointTable:
    """Operational joint statistics ``p(a,b|A,B)`` averaged over ``prep``."""
    t = t or TransformationContext.identity()
    return {
        (sa, sb): joint_pipeline(prep, t, ma, mb)
        for sa, ma in settings_a.items()
        for sb, mb in settings_b.items()
    }


def _marginals(cell: Mapping[tuple[str, str], float], side: int) -> dict[str, float]:
    out: dict[str, float] = {}
    for outcome, p in cell.items():
        out[outcome[side]] = out.get(outcome[side], 0.0) + p
    return out


def _remote_independence(table: JointTable, tol: float) -> tuple[list[dict], float]:
    """Violations of "my marginal does not depend on the remote setting"."""
    settings_a = list(dict.fromkeys(k[0] for k in table))
    settings_b = list(dict.fromkeys(k[1] for k in table))
    violations = []
    worst = 0.0
    for side, mine, remote in ((0, settings_a, settings_b), (1, settings_b, settings_a)):
        for s in mine:
            per_remote = {}
            for r in remote:
                key = (s, r) if side == 0 else (r, s)
                per_remote[r] = _marginals(table[key], side)
            outcomes = sorted({o for m in per_remote.values() for o in m})
            for o in outcomes:
                values = {r: m.get(o, 0.0) for r, m in per_remote.items()}
                dev = max(values.values()) - min(values.values())
                worst = max(worst, dev)
                if dev > tol:
                    violations.append(
                        {
                            "side": "A" if side == 0 else "B",
                            "setting": s,
                            "outcome": o,
                            "marginal_by_remote_setting": values,
                            "deviation": dev,
                        }
                    )
    return violations, worst


def signal_locality_from_table(table: JointTable, tol: float = DEFAULT_TOL) -> LocalityReport:
    violations, worst = _remote_independence(table, tol)
    return _report("SL", violations, trials=len(table), tolerance=tol, details={"max_deviation": worst})


def parameter_independence_from_table(table: JointTable, tol: float = DEFAULT_TOL) -> LocalityReport:
    violations, worst = _remote_independence(table, tol)
    return _report("PI", violations, trials=len(table), tolerance=tol, details={"max_deviation": worst})


def check_signal_locality(
    prep: Union[EpistemicState, OnticState],
    settings_a: Settings,
    settings_b: Settings,
    tol: float = DEFAULT_TOL,
) -> LocalityReport:
    if isinstance(prep, OnticState):
        prep = EpistemicState.delta(prep)
    return signal_locality_from_table(pipeline_table(prep, settings_a, settings_b), tol)


def check_parameter_independence(
    state: OnticState, settings_a: Settings, settings_b: Settings, tol: float = DEFAULT_TOL
) -> LocalityReport:
    return parameter_independence_from_table(ontic_table(state, settings_a, settings_b), tol)


def local_causality_from_table(table: JointTable, tol: float = DEFAULT_TOL) -> LocalityReport:
    """Compare ``p(a|b,A,B)`` with ``p(a|A)`` in both directions."""
    violations = []
    worst = 0.0
    skipped = 0
    for (sa, sb), cell in table.items():
        for side in (0, 1):
            mine = _marginals(cell, side)
            remote = _marginals(cell, 1 - side)
            for r_out, p_r in remote.items():
                if p_r < MIN_CONDITIONING_PROB:
                    skipped += 1
                    continue
                for o, p_o in mine.items():
                    key = (o, r_out) if side == 0 else (r_out, o)
                    cond = cell.get(key, 0.0) / p_r
                    dev = abs(cond - p_o)
                    worst = max(worst, dev)
                    if dev > tol:
                        violations.append(
                            {
                                "settings": [sa, sb],
                                "side": "A" if side == 0 else "B",
                                "outcome": o,
                                "conditioned_on_remote_outcome": r_out,
                                "conditional": cond,
                                "marginal": p_o,
                                "deviation": dev,
                            }
                        )
    return _report(
        "LC",
        violations,
        trials=len(table),
        tolerance=tol,
        details={"max_deviation": worst, "skipped_conditionals": skipped},
    )


def check_local_causality(
    state: OnticState, settings_a: Settings, settings_b: Settings, tol: float = DEFAULT_TOL
) -> LocalityReport:
    return local_causality_from_table(ontic_table(state, settings_a, settings_b), tol)


def factorization_gap(state: OnticState, spec_a: MeasurementSpec, spec_b: MeasurementSpec) -> tuple[float, tuple[str, str]]:
    """Largest ``|xi(a,b) - xi(a) xi(b)|`` and the outcome pair attaining it."""
    joint = joint_distribution(spec_a, spec_b, state)
    pa = {a: indicator(spec_a, a, state) for a in spec_a.outcomes}
    pb = {b: indicator(spec_b, b, state) for b in spec_b.outcomes}
    best, where = -1.0, None
    for (a, b), p in joint.items():
        gap = abs(p - pa[a] * pb[b])
        if gap > best:
            best, where = gap, (a, b)
    return best, where


def check_factorization(
    state: OnticState,
    spec_a: MeasurementSpec | Settings,
    spec_b: MeasurementSpec | Settings,
    tol: float = DEFAULT_TOL,
) -> LocalityReport:
    """F for one setting pair, or for every pair of two settings grids."""
    grid_a = spec_a if isinstance(spec_a, Mapping) else {spec_a.name or "A": spec_a}
    grid_b = spec_b if isinstance(spec_b, Mapping) else {spec_b.name or "B": spec_b}
    gaps = {}
    violations = []
    for sa, ma in grid_a.items():
        for sb, mb in grid_b.items():
            gap, where = factorization_gap(state, ma, mb)
            gaps[f"{sa}|{sb}"] = gap
            if gap > tol:
                violations.append({"settings": [sa, sb], "outcomes": list(where), "gap": gap})
    return _report(
        "F",
        violations,
        trials=len(gaps),
        tolerance=tol,
        details={"gaps": gaps, "max_gap": max(gaps.values())},
    )


# -- CHSH -------------------------------------------------------------------


def chsh_settings(qubit_a: int, qubit_b: int) -> tuple[dict[str, MeasurementSpec], dict[str, MeasurementSpec]]:
    """A in {Z, X}; B in {(Z+X)/sqrt2, (Z-X)/sqrt2}."""
    r = 1 / math.sqrt(2)
    a = {"Z": pauli_measurement(qubit_a, "Z"), "X": pauli_measurement(qubit_a, "X")}
    b = {
        "Z+X": axis_measurement(qubit_b, (r, 0.0, r), "Z+X"),
        "Z-X": axis_measurement(qubit_b, (-r, 0.0, r), "Z-X"),
    }
    return a, b


def _sign(label: str) -> int:
    if label in ("+", "0"):
        return 1
    if label in ("-", "1"):
        return -1
    raise UsageError(f"outcome {label!r} has no +-1 value for a correlator")


def correlator(cell: Mapping[tuple[str, str], float]) -> float:
    return sum(_sign(a) * _sign(b) * p for (a, b), p in cell.items())


def chsh_value(table: JointTable, a0: str, a1: str, b0: str, b1: str) -> float:
    """``S = E(a0,b0) + E(a0,b1) + E(a1,b0) - E(a1,b1)``."""
    e = lambda sa, sb: correlator(table[(sa, sb)])  # noqa: E731
    return e(a0, b0) + e(a0, b1) + e(a1, b0) - e(a1, b1)


# -- information flow -------------------------------------------------------


@dataclass
class DependencyMap:
    """Which descriptors and which regions' statistics depend on each parameter."""

    descriptor: dict[str, list[tuple[int, str]]]
    statistics_gap: dict[str, dict[str, float]]
    tolerance: float = DEFAULT_TOL

    def statistics_dependent(self, param: str) -> list[str]:
        return [r for r, gap in self.statistics_gap[param].items() if gap > self.tolerance]

    def descriptor_qubits(self, param: str) -> set[int]:
        return {q for q, _ in self.descriptor[param]}

    def locally_inaccessible(self, param: str) -> list[int]:
        """Qubits whose descriptors carry the parameter while their own
        statistics do not reveal it."""
        gaps = self.statistics_gap[param]
        return sorted(
            q for q in self.descriptor_qubits(param) if gaps.get(str(q), 0.0) <= self.tolerance
        )

    def is_consistent(self) -> bool:
        """Statistics dependence only where some descriptor in the region depends."""
        for param in self.descriptor:
            dq = self.descriptor_qubits(param)
            for region in self.statistics_dependent(param):
                if not dq & {int(q) for q in region.split(",")}:
                    return False
        return True

    def to_record(self) -> dict:
        return {
            param: {
                "descriptor_dependence": [[q, e] for q, e in self.descriptor[param]],
                "statistics_gap": self.statistics_gap[param],
                "statistics_dependent": self.statistics_dependent(param),
                "locally_inaccessible": self.locally_inaccessible(param),
            }
            for param in self.descriptor
        } | {"tolerance": self.tolerance}


def _region_label(region: Iterable[int]) -> str:
    return ",".join(str(q) for q in sorted(region))


def region_probes(region: Sequence[int]) -> list[MeasurementSpec]:
    """Every product-Pauli measurement on ``region`` (tomographically complete)."""
    from itertools import product as cartesian

    region = tuple(sorted(region))
    return [product_measurement(region, "".join(ax)) for ax in cartesian("XYZ", repeat=len(region))]


def trace_information_flow(
    base: Union[OnticState, EpistemicState],
    circuit: Sequence[GateOp],
    probes: Mapping[str, Sequence[float]],
    regions: Sequence[Iterable[int]] | None = None,
    tol: float = DEFAULT_TOL,
) -> DependencyMap:
    """Vary each parameter over its probe values and record what changes.

    Other parameters stay at their first probe value.  ``regions`` defaults
    to every single qubit plus the whole universe.
    """
    if isinstance(base, OnticState):
        base = EpistemicState.delta(base)
    n = base.n_qubits
    used = {g.param for g in circuit if g.param is not None}
    missing = used - set(probes)
    if missing:
        raise UsageError(f"no probe values for parameters {sorted(missing)}")
    for p, values in probes.items():
        if len(values) < 2:
            raise UsageError(f"parameter {p!r} needs at least two probe values")
    if regions is None:
        regions = [[q] for q in range(n)] + ([list(range(n))] if n > 1 else [])
    regions = [tuple(sorted(as_region(r))) for r in regions]
    single = {(q,) for q in range(n)}
    eval_regions = list(dict.fromkeys(regions + sorted(single)))
    baseline = {p: float(v[0]) for p, v in probes.items()}
    identity = TransformationContext.identity()
    probe_specs = {r: region_probes(r) for r in eval_regions}

    descriptor: dict[str, list[tuple[int, str]]] = {}
    stats: dict[str, dict[str, float]] = {}
    for param, values in probes.items():
        finals = []
        for v in values:
            bound = [g.bind(baseline | {param: float(v)}) for g in circuit]
            finals.append([(w, apply_circuit(s, bound)) for w, s in base.branches])
        ref = finals[0]
        dep = set()
        for other in finals[1:]:
            for (_, s0), (_, s1) in zip(ref, other):
                for q in range(n):
                    for name, e0, e1 in zip(ELEMENTS, s0[q].elements(), s1[q].elements()):
                        if e0 != e1:
                            dep.add((q, name))
        descriptor[param] = sorted(dep)
        gaps = {}
        dists = [EpistemicState(f) for f in finals]
        for r in eval_regions:
            worst = 0.0
            for spec in probe_specs[r]:
                p0 = probability_pipeline(dists[0], identity, spec)
                for d in dists[1:]:
                    p1 = probability_pipeline(d, identity, spec)
                    worst = max(worst, max(abs(p1[m] - p0[m]) for m in spec.outcomes))
            gaps[_region_label(r)] = worst
        stats[param] = gaps
    return DependencyMap(descriptor, stats, tol)
