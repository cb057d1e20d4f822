"""Randomized self-verification sweeps with witness minimization."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import oracle
from .dynamics import GateOp, apply_circuit
from .errors import UsageError
from .locality import check_dynamical_locality, check_separability
from .measurement import MeasurementSpec, probability_pipeline
from .dynamics import TransformationContext
from .ontic import EpistemicState, OnticState, fresh_universe
from .randomized import random_circuit, random_povm

TOL = 1e-9
SWEEPS = ("oracle", "closure", "separability", "dl")

Check = Callable[[Sequence[GateOp]], float | None]


@dataclass
class VerifySummary:
    trials: int
    seed: int
    counts: dict[str, int] = field(default_factory=dict)
    failures: list[dict] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_record(self) -> dict:
        return {
            "trials": self.trials,
            "seed": self.seed,
            "passed": self.passed,
            "sweeps": self.counts,
            "failures": self.failures,
            "warnings": self.warnings,
        }


def descriptor_deviation(state: OnticState, gates: Sequence[GateOp]) -> float:
    dense = oracle.descriptors_dense(gates, state.n_qubits)
    return max(
        mine.max_abs_diff(ref)
        for q in range(state.n_qubits)
        for mine, ref in zip(state[q].elements(), dense[q])
    )


def pipeline_deviation(n: int, gates: Sequence[GateOp], spec: MeasurementSpec) -> float:
    ours = probability_pipeline(
        EpistemicState.delta(fresh_universe(n)), TransformationContext.deterministic(gates), spec
    )
    ref = oracle.born_probabilities(oracle.evolve(oracle.zero_state(n), gates), oracle.spec_operators(spec))
    return max(abs(ours[m] - ref[m]) for m in spec.outcomes)


def closure_deviation(state: OnticState) -> float:
    return max(state[q].closure_error() for q in state.qubits)


def _checks(n: int, rng: np.random.Generator, trial_seed: int) -> dict[str, Check]:
    """One check per sweep; random auxiliary choices are frozen here so the
    same check can be replayed on shrunken circuits."""
    size = int(rng.integers(1, min(2, n) + 1))
    region = sorted(rng.choice(n, size=size, replace=False).tolist())
    spec = random_povm(region, rng, n_outcomes=int(rng.integers(1, 3)))
    perm = rng.permutation(n).tolist()
    cut = int(rng.integers(1, n)) if n > 1 else 1
    partition = [perm[:cut], perm[cut:]] if n > 1 else [perm]
    region_a, region_b = partition if n > 1 else ([], [])

    def check_oracle(gates):
        state = apply_circuit(fresh_universe(n), gates)
        return max(descriptor_deviation(state, gates), pipeline_deviation(n, gates, spec))

    def check_closure(gates):
        return closure_deviation(apply_circuit(fresh_universe(n), gates))

    def check_separability_(gates):
        report = check_separability(apply_circuit(fresh_universe(n), gates), partition)
        return 0.0 if report.holds else 1.0

    def check_dl(gates):
        if n < 2:
            return None
        base = apply_circuit(fresh_universe(n), gates)
        report = check_dynamical_locality(base, region_a, region_b, trials=1, seed=trial_seed)
        return 0.0 if report.holds else 1.0

    return {
        "oracle": check_oracle,
        "closure": check_closure,
        "separability": check_separability_,
        "dl": check_dl,
    }


def minimize(gates: Sequence[GateOp], fails: Callable[[Sequence[GateOp]], bool]) -> list[GateOp]:
    """Greedily drop gates while the failure persists."""
    current = list(gates)
    changed = True
    while changed:
        changed = False
        for i in range(len(current)):
            candidate = current[:i] + current[i + 1 :]
            if fails(candidate):
                current = candidate
                changed = True
                break
    return current


def witness_scenario(name: str, n: int, gates: Sequence[GateOp], seed: int) -> dict:
    return {
        "name": name,
        "description": "minimized failing circuit from the verify sweep",
        "n_qubits": n,
        "seed": seed,
        "oracle_check": True,
        "circuit": [g.to_record() for g in gates],
        "checks": ["S"],
    }


def verify_suite(
    max_qubits: int = 5,
    depth: int = 20,
    trials: int = 200,
    seed: int = 42,
    witness_dir: str | Path = "verify-witnesses",
) -> VerifySummary:
    """Random circuits of 1..max_qubits qubits and 1..depth gates, each run
    through the oracle, closure, separability and DL sweeps."""
    if max_qubits < 1 or depth < 1 or trials < 0:
        raise UsageError("max_qubits and depth must be positive, trials non-negative")
    if max_qubits > oracle.dense_limit():
        raise UsageError(f"max_qubits {max_qubits} exceeds the dense oracle limit {oracle.dense_limit()}")
    summary = VerifySummary(trials, seed, {s: 0 for s in SWEEPS})
    if trials == 0:
        msg = "zero trials requested: vacuous pass"
        summary.warnings.append(msg)
        warnings.warn(msg, stacklevel=2)
        return summary
    for trial in range(trials):
        rng = np.random.default_rng([seed, trial])
        n = int(rng.integers(1, max_qubits + 1))
        gates = random_circuit(n, int(rng.integers(1, depth + 1)), rng)
        for sweep, check in _checks(n, rng, seed + trial).items():
            dev = check(gates)
            if dev is None:
                continue
            summary.counts[sweep] += 1
            if dev <= TOL:
                continue
            small = minimize(gates, lambda g: (check(g) or 0.0) > TOL)
            path = Path(witness_dir) / f"witness-{sweep}-seed{seed}-trial{trial}.json"
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps(witness_scenario(path.stem, n, small, seed), indent=2) + "\n")
            summary.failures.append(
                {
                    "sweep": sweep,
                    "trial": trial,
                    "n_qubits": n,
                    "deviation": dev,
                    "gates": len(gates),
                    "minimized_gates": len(small),
                    "witness": str(path),
                }
            )
    return summary
