"""Heisenberg-picture simulator of local ontic qubit descriptors."""

from .dynamics import GateOp, TransformationContext, apply_circuit, apply_gate, apply_transformation
from .errors import ContractViolation, DHModelError, InvariantFailure, ScenarioError, UsageError
from .measurement import MeasurementSpec, outcome_distribution, probability_pipeline
from .ontic import EpistemicState, OnticState, QubitDescriptor, fresh_universe, prepare_pure
from .pauli import PauliString, PauliSum

__version__ = "0.1.0"

__all__ = [
    "ContractViolation",
    "DHModelError",
    "EpistemicState",
    "GateOp",
    "InvariantFailure",
    "MeasurementSpec",
    "OnticState",
    "PauliString",
    "PauliSum",
    "QubitDescriptor",
    "ScenarioError",
    "TransformationContext",
    "UsageError",
    "apply_circuit",
    "apply_gate",
    "apply_transformation",
    "fresh_universe",
    "outcome_distribution",
    "prepare_pure",
    "probability_pipeline",
]
