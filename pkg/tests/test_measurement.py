import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dhmodel import oracle
from dhmodel.dynamics import GateOp, TransformationContext, apply_circuit
from dhmodel.errors import ContractViolation, UsageError
from dhmodel.measurement import (
    MeasurementSpec,
    axis_measurement,
    build_observable,
    condition_on_outcome,
    decompose_povm,
    indicator,
    joint_distribution,
    joint_indicator,
    outcome_distribution,
    pauli_measurement,
    probability_pipeline,
    product_measurement,
    reconstruct,
    trivial_measurement,
)
from dhmodel.ontic import EpistemicState, fresh_universe, prepare_pure
from dhmodel.pauli import PauliSum
from dhmodel.randomized import random_circuit, random_povm

H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
BELL = [GateOp("H", (0,)), GateOp("CNOT", (0, 1))]


def fig2_state():
    return apply_circuit(prepare_pure(fresh_universe(2), 0, H), [GateOp("CNOT", (0, 1))])


class TestDecompose:
    def test_projector_zero(self):
        assert decompose_povm([[1, 0], [0, 0]]) == {"I": 0.5, "Z": 0.5}

    def test_identity(self):
        assert decompose_povm(np.eye(4)) == {"II": 1.0}

    def test_non_hermitian(self):
        with pytest.raises(UsageError):
            decompose_povm([[0, 1], [0, 0]])

    def test_dense_limit(self):
        with pytest.raises(UsageError):
            decompose_povm(np.eye(8), dense_limit=2)

    def test_reconstruct(self):
        rng = np.random.default_rng(0)
        spec = random_povm([0, 1], rng)
        e = spec.element("0")
        assert np.allclose(reconstruct(decompose_povm(e), 2), e)


class TestSpec:
    def test_incomplete_rejected(self):
        with pytest.raises(UsageError):
            MeasurementSpec.from_povm([0], {"0": np.diag([1, 0])})

    def test_not_psd_rejected(self):
        with pytest.raises(UsageError):
            MeasurementSpec.from_povm([0], {"a": np.diag([1.5, 0]), "b": np.diag([-0.5, 1])})

    def test_bad_label(self):
        with pytest.raises(UsageError):
            MeasurementSpec((0,), ("1",), {"1": {"II": 1.0}})

    def test_outcome_labels(self):
        assert pauli_measurement(0, "Z").outcomes == ("+", "-")
        assert product_measurement([0, 1], "XZ").outcomes == ("++", "+-", "-+", "--")
        assert trivial_measurement([2]).outcomes == ("1",)

    def test_axis_normalizes(self):
        spec = axis_measurement(0, (0, 0, 2))
        assert spec.tables["+"] == {"I": 0.5, "Z": 0.5}

    def test_unknown_axis(self):
        with pytest.raises(UsageError):
            pauli_measurement(0, "W")


class TestIndicators:
    def test_fresh_z(self):
        assert outcome_distribution(pauli_measurement(0, "Z"), fresh_universe(1)) == {"+": 1.0, "-": 0.0}

    def test_fig2_observable(self):
        obs = build_observable(pauli_measurement(0, "Z"), "+", fig2_state())
        assert obs == PauliSum.from_labels({"II": 0.5, "XI": 0.5})

    def test_fig2_marginals(self):
        s = fig2_state()
        for q in (0, 1):
            assert outcome_distribution(pauli_measurement(q, "Z"), s) == pytest.approx({"+": 0.5, "-": 0.5})

    def test_bell_joint_is_not_product(self):
        s = apply_circuit(fresh_universe(2), BELL)
        za, zb = pauli_measurement(0, "Z"), pauli_measurement(1, "Z")
        joint = joint_distribution(za, zb, s)
        assert joint == pytest.approx({("+", "+"): 0.5, ("+", "-"): 0.0, ("-", "+"): 0.0, ("-", "-"): 0.5})
        gap = abs(joint_indicator(za, "+", zb, "+", s) - indicator(za, "+", s) * indicator(zb, "+", s))
        assert gap == pytest.approx(0.25, abs=1e-9)

    def test_overlapping_joint_rejected(self):
        with pytest.raises(UsageError):
            joint_distribution(pauli_measurement(0, "Z"), pauli_measurement(0, "X"), fresh_universe(1))

    def test_region_outside_state(self):
        with pytest.raises(UsageError):
            indicator(pauli_measurement(3, "Z"), "+", fresh_universe(2))

    def test_out_of_range_probability_raises(self):
        bad = MeasurementSpec((0,), ("+", "-"), {"+": {"I": 0.5, "Z": 2.0}, "-": {"I": 0.5, "Z": -2.0}}, dense_limit=0)
        with pytest.raises(ContractViolation):
            indicator(bad, "+", fresh_universe(1))


class TestPipeline:
    def test_mixture_average(self):
        s0 = fresh_universe(1)
        s1 = apply_circuit(s0, [GateOp("X", (0,))])
        prep = EpistemicState([(0.3, s0), (0.7, s1)])
        dist = probability_pipeline(prep, TransformationContext.identity(), pauli_measurement(0, "Z"))
        assert dist == pytest.approx({"+": 0.3, "-": 0.7})

    def test_conditioning_updates_weights_only(self):
        s0 = fresh_universe(1)
        s1 = apply_circuit(s0, [GateOp("H", (0,))])
        prep = EpistemicState([(0.5, s0), (0.5, s1)])
        post = condition_on_outcome(prep, pauli_measurement(0, "Z"), "-")
        assert len(post) == 1 and post.branches[0][1] is s1

    def test_zero_probability_conditioning(self):
        prep = EpistemicState.delta(fresh_universe(1))
        with pytest.raises(UsageError):
            condition_on_outcome(prep, pauli_measurement(0, "Z"), "-")

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 4), st.integers(1, 15), st.integers(0, 2**32 - 1))
    def test_matches_born_rule(self, n, depth, seed):
        rng = np.random.default_rng(seed)
        gates = random_circuit(n, depth, rng)
        region = sorted(rng.choice(n, size=min(n, 2), replace=False).tolist())
        spec = random_povm(region, rng)
        ours = probability_pipeline(
            EpistemicState.delta(fresh_universe(n)), TransformationContext.deterministic(gates), spec
        )
        ref = oracle.born_probabilities(oracle.evolve(oracle.zero_state(n), gates), oracle.spec_operators(spec))
        assert max(abs(ours[m] - ref[m]) for m in spec.outcomes) <= 1e-9
