import math

import numpy as np
import pytest

from dhmodel import locality
from dhmodel.dynamics import GateOp, apply_circuit
from dhmodel.errors import UsageError
from dhmodel.locality import (
    check_dynamical_locality,
    check_factorization,
    check_local_causality,
    check_parameter_independence,
    check_separability,
    check_signal_locality,
    chsh_settings,
    chsh_value,
    local_causality_from_table,
    ontic_table,
    parameter_independence_from_table,
    region_probes,
    signal_locality_from_table,
    trace_information_flow,
)
from dhmodel.measurement import pauli_measurement
from dhmodel.ontic import EpistemicState, fresh_universe
from dhmodel.randomized import random_circuit

BELL = [GateOp("H", (0,)), GateOp("CNOT", (0, 1))]


@pytest.fixture
def bell():
    return apply_circuit(fresh_universe(2), BELL)


def signaling_table():
    """Bob's marginal depends on Alice's setting."""
    return {
        ("0", "0"): {("+", "+"): 0.5, ("+", "-"): 0.0, ("-", "+"): 0.0, ("-", "-"): 0.5},
        ("1", "0"): {("+", "+"): 1.0, ("+", "-"): 0.0, ("-", "+"): 0.0, ("-", "-"): 0.0},
    }


class TestSeparability:
    def test_entangled_state_separable(self, bell):
        assert check_separability(bell, [[0], [1]]).holds

    def test_random_partitions(self):
        rng = np.random.default_rng(5)
        s = apply_circuit(fresh_universe(5), random_circuit(5, 20, rng))
        assert check_separability(s, [[3, 0], [1], [4, 2]]).holds

    def test_partition_must_cover(self, bell):
        with pytest.raises(UsageError):
            check_separability(bell, [[0]])

    def test_partition_overlap(self, bell):
        with pytest.raises(UsageError):
            check_separability(bell, [[0, 1], [1]])


class TestDynamicalLocality:
    def test_holds(self, bell):
        report = check_dynamical_locality(bell, [0], [1], trials=50, seed=3)
        assert report.holds and report.trials == 50 and report.tolerance == 0.0

    def test_overlap_rejected(self, bell):
        with pytest.raises(UsageError):
            check_dynamical_locality(bell, [0, 1], [1])

    def test_detects_nonlocal_rule(self, bell, monkeypatch):
        real = locality.apply_circuit

        def leaky(state, gates):
            out = real(state, gates)
            # corrupt qubit 1 whenever a gate touches qubit 0
            if any(0 in g.qubits for g in gates):
                out = real(out, [GateOp("X", (1,))])
            return out

        monkeypatch.setattr(locality, "apply_circuit", leaky)
        report = check_dynamical_locality(bell, [0], [1], trials=5)
        assert not report.holds
        assert report.witness["side"] == "B" and "circuits" in report.witness


class TestBell:
    def test_chsh_tsirelson(self, bell):
        a, b = chsh_settings(0, 1)
        table = ontic_table(bell, a, b)
        assert chsh_value(table, "Z", "X", "Z+X", "Z-X") == pytest.approx(2 * math.sqrt(2), abs=1e-9)

    def test_factorization_fails_at_zz(self, bell):
        report = check_factorization(bell, pauli_measurement(0, "Z"), pauli_measurement(1, "Z"))
        assert not report.holds
        assert report.details["max_gap"] == pytest.approx(0.25, abs=1e-9)

    def test_local_causality_fails(self, bell):
        a, b = chsh_settings(0, 1)
        report = check_local_causality(bell, a, b)
        assert not report.holds and report.witness is not None

    def test_pi_and_sl_hold(self, bell):
        a, b = chsh_settings(0, 1)
        assert check_parameter_independence(bell, a, b).holds
        assert check_signal_locality(bell, a, b).holds
        assert check_signal_locality(EpistemicState.delta(bell), a, b).holds

    def test_product_state_factorizes(self):
        s = apply_circuit(fresh_universe(2), [GateOp("H", (0,)), GateOp("H", (1,))])
        a, b = chsh_settings(0, 1)
        assert check_factorization(s, a, b).holds
        assert check_local_causality(s, a, b).holds


class TestCorruptedTables:
    def test_signaling_detected(self):
        report = signal_locality_from_table(signaling_table())
        assert not report.holds and report.witness["side"] == "B"

    def test_pi_violation_detected(self):
        assert not parameter_independence_from_table(signaling_table()).holds

    def test_lc_on_correlated_table(self):
        table = {("0", "0"): {("+", "+"): 0.5, ("+", "-"): 0.0, ("-", "+"): 0.0, ("-", "-"): 0.5}}
        report = local_causality_from_table(table)
        assert report.witness["conditional"] == 1.0 and report.witness["marginal"] == 0.5


class TestTracer:
    def circuit(self):
        return BELL + [GateOp("RZ", (0,), theta=0.0, param="th")]

    def test_bell_phase_is_locally_inaccessible(self):
        probes = {"th": [k * math.pi / 8 for k in range(8)]}
        dmap = trace_information_flow(fresh_universe(2), self.circuit(), probes)
        assert dmap.descriptor["th"] == [(0, "x"), (0, "y")]
        assert dmap.statistics_gap["th"]["0"] < 1e-9
        assert dmap.statistics_gap["th"]["1"] < 1e-9
        assert dmap.statistics_dependent("th") == ["0,1"]
        assert dmap.locally_inaccessible("th") == [0]
        assert dmap.is_consistent()

    def test_local_phase_is_visible(self):
        circuit = [GateOp("H", (0,)), GateOp("RZ", (0,), theta=0.0, param="th")]
        dmap = trace_information_flow(fresh_universe(1), circuit, {"th": [0.0, 1.0]})
        assert dmap.statistics_dependent("th") == ["0"]
        assert dmap.locally_inaccessible("th") == []

    def test_unused_parameter(self):
        dmap = trace_information_flow(fresh_universe(2), BELL, {"unused": [0.0, 1.0]})
        assert dmap.descriptor["unused"] == [] and dmap.statistics_dependent("unused") == []

    def test_missing_probe(self):
        with pytest.raises(UsageError):
            trace_information_flow(fresh_universe(2), self.circuit(), {})

    def test_single_probe_value(self):
        with pytest.raises(UsageError):
            trace_information_flow(fresh_universe(2), self.circuit(), {"th": [0.0]})

    def test_region_probes(self):
        assert len(region_probes([0, 2])) == 9
