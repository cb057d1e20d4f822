import json
import math

import pytest

from dhmodel import cli, dynamics, runner
from dhmodel.cli import main
from dhmodel.errors import ContractViolation, ScenarioError
from dhmodel.ontic import QubitDescriptor
from dhmodel.pauli import PauliSum
from dhmodel.runner import deterministic_view, run
from dhmodel.scenario import BUILTINS, load_scenario, parse_scenario
from dhmodel.verify import verify_suite

from helpers import FIG2_Q0, FIG2_Q1

NAMES = [
    "cnot-fig2",
    "bell-chsh",
    "teleportation",
    "entanglement-swap",
    "mixed-prep-contextuality",
    "transformation-contextuality",
    "locally-inaccessible-phase",
]


def descriptor_from_record(rec, n):
    def el(d):
        return PauliSum(n, {label: complex(re, im) for label, (re, im) in d.items()})

    return QubitDescriptor(el(rec["x"]), el(rec["y"]), el(rec["z"]))


def sign_flip_h(monkeypatch):
    table = {k: dict(v) for k, v in dynamics.CLIFFORD_TABLE.items()}
    table["H"][(0, "X")] = (-1, "Z")
    monkeypatch.setattr(dynamics, "CLIFFORD_TABLE", table)


class TestSchema:
    def test_registry(self):
        assert list(BUILTINS) == NAMES

    def test_complex_entry_forms(self):
        sc = parse_scenario(
            {
                "name": "c",
                "n_qubits": 1,
                "preparation": [{"op": "prepare", "qubit": 0, "matrix": [[0, 1], ["1", [0, 0]]]}],
                "measurements": [{"preset": "povm", "qubits": [0], "povm": {"a": [[1, 0], [0, 0]], "b": [[0, 0], [0, "1+0j"]]}}],
            }
        )
        assert run(sc).report["distributions"]["m0"] == {"a": 0.0, "b": 1.0}

    def test_out_of_range(self):
        with pytest.raises(ScenarioError, match="outside"):
            parse_scenario({"name": "x", "n_qubits": 2, "circuit": [{"gate": "H", "qubits": [2]}]})

    def test_unknown_gate(self):
        with pytest.raises(ScenarioError):
            parse_scenario({"name": "x", "n_qubits": 1, "circuit": [{"gate": "FOO", "qubits": [0]}]})

    def test_unknown_field(self):
        with pytest.raises(ScenarioError):
            parse_scenario({"name": "x", "n_qubits": 1, "shots": 10})

    def test_checks_need_regions(self):
        with pytest.raises(ScenarioError, match="regions"):
            parse_scenario({"name": "x", "n_qubits": 2, "checks": ["DL"]})

    def test_mixture_weights(self):
        with pytest.raises(ScenarioError):
            parse_scenario({"name": "x", "n_qubits": 1, "preparation": [{"op": "mixture", "branches": [{"weight": 0.4}]}]})

    def test_yaml(self, tmp_path):
        path = tmp_path / "s.yaml"
        path.write_text("name: y\nn_qubits: 1\ncircuit:\n  - {gate: X, qubits: [0]}\nmeasurements:\n  - {preset: Z, qubits: [0]}\n")
        assert run(load_scenario(path)).report["distributions"]["m0"] == {"+": 0.0, "-": 1.0}

    def test_unknown_source(self):
        with pytest.raises(ScenarioError):
            load_scenario("no-such-scenario")


class TestBuiltins:
    @pytest.mark.parametrize("name", NAMES)
    def test_runs_clean(self, name):
        result = run(load_scenario(name))
        assert result.ok, result.failures
        json.dumps(result.report)

    def test_cnot_fig2_descriptors(self):
        rep = run(load_scenario("cnot-fig2")).report
        d = rep["branches"][0]["descriptors"]
        assert descriptor_from_record(d["0"], 2) == FIG2_Q0
        assert descriptor_from_record(d["1"], 2) == FIG2_Q1
        assert rep["checks"]["S"]["verdict"] == "holds"
        assert rep["checks"]["DL"]["verdict"] == "holds"

    def test_bell_chsh(self):
        rep = run(load_scenario("bell-chsh")).report
        assert rep["checks"]["F"]["verdict"] == "fails"
        assert rep["checks"]["F"]["details"]["gaps"]["Z|Z"] == pytest.approx(0.25, abs=1e-9)
        assert rep["chsh"] == pytest.approx(2 * math.sqrt(2), abs=1e-9)

    def test_teleportation(self):
        rep = run(load_scenario("teleportation")).report
        assert rep["transfer"]["max_gap"] <= 1e-9
        assert rep["checks"]["DL"]["verdict"] == "holds"

    def test_entanglement_swap(self):
        rep = run(load_scenario("entanglement-swap")).report
        assert rep["checks"]["F"]["verdict"] == "fails"
        assert rep["checks"]["DL"]["verdict"] == "holds"
        assert rep["distributions"]["Z0Z3"] == pytest.approx({"++": 0.5, "+-": 0.0, "-+": 0.0, "--": 0.5})

    def test_determinism(self):
        a = run(load_scenario("bell-chsh")).report
        b = run(load_scenario("bell-chsh")).report
        assert json.dumps(deterministic_view(a)) == json.dumps(deterministic_view(b))

    def test_oracle_mismatch_is_failure(self, monkeypatch):
        sign_flip_h(monkeypatch)
        sc = parse_scenario(BUILTINS["bell-chsh"])
        assert any("oracle" in f for f in run(sc).failures)


class TestCommandLine:
    def test_list(self, capsys):
        assert main(["list-scenarios"]) == 0
        out = capsys.readouterr().out
        assert all(name in out for name in NAMES)

    def test_list_json(self, capsys):
        assert main(["list-scenarios", "--json"]) == 0
        entries = json.loads(capsys.readouterr().out)
        assert len(entries) >= 7 and {"name", "description"} <= set(entries[0])

    def test_unknown_subcommand(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2
        assert "usage" in capsys.readouterr().err

    def test_run_writes_report(self, tmp_path):
        out = tmp_path / "r.json"
        assert main(["run", "cnot-fig2", "--output", str(out)]) == 0
        assert json.loads(out.read_text())["scenario"] == "cnot-fig2"

    def test_global_flags_before_subcommand(self, tmp_path):
        out = tmp_path / "r.txt"
        assert main(["--format", "table", "--output", str(out), "run", "bell-chsh"]) == 0
        assert "chsh\t2.82842712474619" in out.read_text()

    def test_schema_error_exit_2_without_report(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"name": "b", "n_qubits": 2, "circuit": [{"gate": "CNOT", "qubits": [0, 5]}]}))
        out = tmp_path / "r.json"
        assert main(["run", str(bad), "--output", str(out)]) == 2
        assert not out.exists()

    def test_unparseable_file(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["run", str(bad)]) == 2

    def test_contract_violation_exit_3(self, monkeypatch, capsys):
        def boom(*a, **k):
            raise ContractViolation("probability 1.5")

        monkeypatch.setattr(runner, "run", boom)
        assert main(["run", "cnot-fig2"]) == 3

    def test_invariant_failure_exit_4(self, monkeypatch, tmp_path):
        sign_flip_h(monkeypatch)
        out = tmp_path / "r.json"
        assert main(["--oracle", "run", "bell-chsh", "--output", str(out)]) == 4
        assert json.loads(out.read_text())["failures"]

    def test_tolerance_override(self, tmp_path):
        out = tmp_path / "r.json"
        assert main(["--tolerance", "1e-6", "run", "cnot-fig2", "--output", str(out)]) == 0
        assert json.loads(out.read_text())["tolerance"] == 1e-6

    def test_flatten(self):
        assert cli.flatten({"a": {"b": 1}, "c": [{"d": 2}]}) == [("a.b", 1), ("c[0].d", 2)]


class TestVerify:
    def test_passes(self):
        summary = verify_suite(max_qubits=3, depth=8, trials=20, seed=1)
        assert summary.passed and summary.counts["oracle"] == 20

    def test_zero_trials_warns(self):
        with pytest.warns(UserWarning, match="vacuous"):
            summary = verify_suite(trials=0)
        assert summary.passed and summary.warnings

    def test_limit(self):
        with pytest.raises(Exception):
            verify_suite(max_qubits=99)

    def test_sign_flip_fault_caught(self, monkeypatch, tmp_path):
        sign_flip_h(monkeypatch)
        summary = verify_suite(max_qubits=3, depth=10, trials=10, seed=0, witness_dir=tmp_path)
        assert not summary.passed
        failure = summary.failures[0]
        assert failure["minimized_gates"] <= failure["gates"]
        witness = load_scenario(failure["witness"])
        assert any(g.gate == "H" for g in witness.circuit)

    def test_cli_exit_codes(self, monkeypatch, tmp_path, capsys):
        assert main(["verify", "--trials", "5", "--max-qubits", "2", "--witness-dir", str(tmp_path)]) == 0
        sign_flip_h(monkeypatch)
        assert main(["verify", "--trials", "5", "--max-qubits", "2", "--witness-dir", str(tmp_path)]) == 4
        assert list(tmp_path.glob("witness-*.json"))
