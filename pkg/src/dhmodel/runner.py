"""Execute a :class:`Scenario` and assemble a deterministic run report."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import oracle
from .dynamics import GateOp, TransformationContext, apply_gate, apply_transformation
from .errors import ScenarioError
from .locality import (
    LocalityReport,
    check_dynamical_locality,
    check_factorization,
    check_local_causality,
    check_parameter_independence,
    check_separability,
    check_signal_locality,
    chsh_value,
    pipeline_table,
    region_probes,
    trace_information_flow,
)
from .measurement import MeasurementSpec, pauli_measurement, probability_pipeline, product_measurement
from .ontic import EpistemicState, OnticState, fresh_universe, prepare_pure, restrict
from .scenario import MixtureDirective, PrepareDirective, Scenario

_R2 = 1 / math.sqrt(2)
_H = np.array([[1, 1], [1, -1]]) * _R2
_X = np.array([[0, 1], [1, 0]])
_S = np.diag([1, 1j])
# U with U|0> equal to the named state
NAMED_UNITARIES = {
    "z+": np.eye(2),
    "z-": _X,
    "x+": _H,
    "x-": _H @ _X,
    "y+": _S @ _H,
    "y-": _S @ _H @ _X,
}
IDENTITY = TransformationContext.identity()


@dataclass
class Branch:
    weight: float
    state: OnticState
    gates: list[GateOp]  # the same preparation as a gate list, for the oracle


@dataclass
class RunResult:
    report: dict
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def _local_only(state: OnticState, qubit: int) -> None:
    if state[qubit].support() - {qubit}:
        raise ScenarioError(f"qubit {qubit} is entangled and cannot be re-prepared")


def prepare(n: int, directives: Sequence) -> list[Branch]:
    branches = [Branch(1.0, fresh_universe(n), [])]
    for d in directives:
        if isinstance(d, PrepareDirective):
            for b in branches:
                _local_only(b.state, d.qubit)
                if d.gates is not None:
                    for g in (spec.to_gate() for spec in d.gates):
                        b.state = apply_gate(b.state, g)
                        b.gates.append(g)
                    continue
                u = NAMED_UNITARIES[d.state] if d.state else np.array(d.matrix)
                b.state = prepare_pure(b.state, d.qubit, u)
                b.gates.append(GateOp("GENERAL", (d.qubit,), matrix=np.asarray(u, dtype=complex)))
        elif isinstance(d, MixtureDirective):
            out = []
            for b in branches:
                for mb in d.branches:
                    if mb.weight == 0:
                        continue
                    state, gates = b.state, list(b.gates)
                    for g in (spec.to_gate() for spec in mb.gates):
                        state = apply_gate(state, g)
                        gates.append(g)
                    out.append(Branch(b.weight * mb.weight, state, gates))
            branches = out
    return branches


def _aggregate(reports: list[LocalityReport]) -> dict:
    if len(reports) == 1:
        return reports[0].to_record()
    return {
        "property": reports[0].property,
        "verdict": "holds" if all(r.holds for r in reports) else "fails",
        "trials": min(r.trials for r in reports),
        "tolerance": reports[0].tolerance,
        "branches": [r.to_record() for r in reports],
    }


def _settings(sc: Scenario, side: str) -> dict[str, MeasurementSpec]:
    grid = sc.settings.get(side)
    if grid:
        return {label: m.to_spec(label) for label, m in grid.items()}
    region = sc.regions[side]
    k = len(region)
    return {"Z": product_measurement(region, "Z" * k, "Z"), "X": product_measurement(region, "X" * k, "X")}


def _partition(sc: Scenario) -> list[list[int]]:
    parts = [sc.regions[k] for k in ("A", "B") if k in sc.regions]
    covered = {q for p in parts for q in p}
    return parts + [[q] for q in range(sc.n_qubits) if q not in covered]


def _bound_circuit(sc: Scenario, gates: Sequence[GateOp]) -> list[GateOp]:
    baseline = {p: float(v[0]) for p, v in sc.probes.items()}
    return [g.bind(baseline) for g in gates]


def _oracle_deviation(
    sc: Scenario,
    branches: list[Branch],
    circuit: list[GateOp],
    final: EpistemicState,
    specs: dict[str, MeasurementSpec],
    tables: dict,
) -> float:
    n = sc.n_qubits
    worst = 0.0
    vectors = []
    for b, (_, state) in zip(branches, final.branches):
        gates = b.gates + circuit
        dense = oracle.descriptors_dense(gates, n)
        for q in range(n):
            for mine, ref in zip(state[q].elements(), dense[q]):
                worst = max(worst, mine.max_abs_diff(ref))
        vectors.append((b.weight, oracle.evolve(oracle.zero_state(n), gates)))

    def mixed(ops):
        total: dict = {}
        for w, v in vectors:
            for k, p in oracle.born_probabilities(v, ops).items():
                total[k] = total.get(k, 0.0) + w * p
        return total

    for name, spec in specs.items():
        ref = mixed(oracle.spec_operators(spec))
        worst = max(worst, max(abs(ref[m] - p) for m, p in probability_pipeline(final, IDENTITY, spec).items()))
    if tables:
        grid_a, grid_b, table = tables["A"], tables["B"], tables["table"]
        for (sa, sb), cell in table.items():
            ref = mixed(oracle.joint_operators(grid_a[sa], grid_b[sb]))
            worst = max(worst, max(abs(ref[k] - p) for k, p in cell.items()))
    return worst


def _run_one(
    sc: Scenario,
    directives: Sequence,
    circuit_specs: Sequence,
    ancillas: Sequence[int],
    tol: float,
    use_oracle: bool,
    failures: list[str],
    label: str = "",
) -> tuple[dict, EpistemicState]:
    where = f"{label}: " if label else ""
    branches = prepare(sc.n_qubits, directives)
    prep = EpistemicState([(b.weight, b.state) for b in branches])
    raw_circuit = [g.to_gate() for g in circuit_specs]
    circuit = _bound_circuit(sc, raw_circuit)
    final = apply_transformation(prep, TransformationContext.deterministic(circuit, ancillas))

    out: dict = {
        "branches": [{"weight": w, "descriptors": s.to_record()} for w, s in final.branches],
    }
    specs = {m.name or f"m{i}": m.to_spec(m.name or f"m{i}") for i, m in enumerate(sc.measurements)}
    out["distributions"] = {name: probability_pipeline(final, IDENTITY, s) for name, s in specs.items()}

    checks: dict = {}
    states = [s for _, s in final.branches]
    has_ab = {"A", "B"} <= set(sc.regions)
    tables: dict = {}
    if has_ab and ({"SL", "PI", "F", "LC"} & set(sc.checks) or sc.chsh):
        grid_a, grid_b = _settings(sc, "A"), _settings(sc, "B")
        tables = {"A": grid_a, "B": grid_b, "table": pipeline_table(final, grid_a, grid_b)}
    for name in sc.checks:
        if name == "S":
            rec = _aggregate([check_separability(s, _partition(sc)) for s in states])
        elif name == "DL":
            rec = _aggregate(
                [
                    check_dynamical_locality(s, sc.regions["A"], sc.regions["B"], sc.dl_trials, sc.seed)
                    for s in states
                ]
            )
            if sc.dl_trials == 0:
                rec["warning"] = "zero trials: vacuous pass"
        elif name == "SL":
            rec = check_signal_locality(final, tables["A"], tables["B"], tol).to_record()
        elif name == "PI":
            rec = _aggregate([check_parameter_independence(s, tables["A"], tables["B"], tol) for s in states])
        elif name == "F":
            rec = _aggregate([check_factorization(s, tables["A"], tables["B"], tol) for s in states])
        elif name == "LC":
            rec = _aggregate([check_local_causality(s, tables["A"], tables["B"], tol) for s in states])
        else:
            dmap = trace_information_flow(prep, raw_circuit, sc.probes, sc.trace_regions, tol)
            rec = {"verdict": "holds" if dmap.is_consistent() else "fails", "map": dmap.to_record()}
        checks[name] = rec
        if name in ("S", "DL", "SL", "PI", "trace") and rec["verdict"] != "holds":
            failures.append(f"{where}{name} check failed")
    out["checks"] = checks

    if sc.chsh:
        a0, a1 = sc.chsh["A"]
        b0, b1 = sc.chsh["B"]
        out["chsh"] = chsh_value(tables["table"], a0, a1, b0, b1)

    if sc.transfer is not None:
        gap = 0.0
        for axis in "XYZ":
            before = probability_pipeline(prep, IDENTITY, pauli_measurement(sc.transfer.source, axis))
            after = probability_pipeline(final, IDENTITY, pauli_measurement(sc.transfer.target, axis))
            gap = max(gap, max(abs(before[m] - after[m]) for m in before))
        out["transfer"] = {"source": sc.transfer.source, "target": sc.transfer.target, "max_gap": gap}
        if gap > tol:
            failures.append(f"{where}transfer gap {gap:.3g} exceeds tolerance")

    counts = [c for s in states for c in s.term_counts().values()]
    out["term_counts"] = {"max_per_qubit": max(counts), "total": sum(counts)}

    if use_oracle:
        if sc.n_qubits > oracle.dense_limit():
            out["oracle"] = {"checked": False, "reason": f"n_qubits above dense limit {oracle.dense_limit()}"}
        else:
            dev = _oracle_deviation(sc, branches, circuit, final, specs, tables)
            out["oracle"] = {"checked": True, "max_deviation": dev}
            if dev > tol:
                failures.append(f"{where}oracle deviation {dev:.3g} exceeds tolerance")
    return out, final


def _compare_variants(sc: Scenario, finals: dict[str, EpistemicState]) -> dict:
    system = sc.regions["system"]
    names = list(finals)
    restricted = {
        k: [(w, restrict(s, system)) for w, s in e.branches] for k, e in finals.items()
    }
    ref = restricted[names[0]]
    differ = any(restricted[k] != ref for k in names[1:])
    gap = 0.0
    for spec in region_probes(system):
        dists = [probability_pipeline(finals[k], IDENTITY, spec) for k in names]
        for d in dists[1:]:
            gap = max(gap, max(abs(d[m] - dists[0][m]) for m in spec.outcomes))
    return {"system": list(system), "ontic_states_differ": differ, "max_statistics_gap": gap}


def run(scenario: Scenario, tolerance: float | None = None, use_oracle: bool | None = None) -> RunResult:
    """Run every variant (or the single configuration) and all requested checks."""
    start = time.perf_counter()
    sc = scenario
    tol = sc.tolerance if tolerance is None else tolerance
    use_oracle = sc.oracle_check if use_oracle is None else use_oracle
    failures: list[str] = []
    report: dict = {
        "scenario": sc.name,
        "description": sc.description,
        "n_qubits": sc.n_qubits,
        "seed": sc.seed,
        "tolerance": tol,
    }
    if sc.variants:
        finals = {}
        report["variants"] = {}
        for v in sc.variants:
            sub, finals[v.name] = _run_one(
                sc,
                list(sc.preparation) + list(v.preparation),
                list(sc.circuit) + list(v.circuit),
                list(sc.ancillas) + list(v.ancillas),
                tol,
                use_oracle,
                failures,
                v.name,
            )
            report["variants"][v.name] = sub
        report["contextuality"] = _compare_variants(sc, finals)
    else:
        sub, _ = _run_one(sc, sc.preparation, sc.circuit, sc.ancillas, tol, use_oracle, failures)
        report.update(sub)
    report["failures"] = failures
    report["timing"] = {"wall_clock_s": time.perf_counter() - start}
    return RunResult(report, failures)


def deterministic_view(report: dict) -> dict:
    """The report minus wall-clock timing."""
    return {k: v for k, v in report.items() if k != "timing"}
