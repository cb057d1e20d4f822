"""Scenario file schema, loading, and the built-in scenario registry.

Scenario files are JSON (or YAML when the suffix is ``.yaml``/``.yml``).
Complex matrix entries may be numbers, ``[re, im]`` pairs, or strings such
as ``"0.5-0.5j"``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Annotated, Any, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .dynamics import GateOp, normalize_kind
from .errors import ScenarioError, UsageError
from .measurement import (
    MeasurementSpec,
    axis_measurement,
    pauli_measurement,
    product_measurement,
)

CHECK_NAMES = ("S", "SL", "DL", "PI", "F", "LC", "trace")
NAMED_STATES = ("z+", "z-", "x+", "x-", "y+", "y-")


def _complex(entry: Any) -> complex:
    if isinstance(entry, (list, tuple)):
        if len(entry) != 2:
            raise ValueError("complex pairs must be [re, im]")
        return complex(float(entry[0]), float(entry[1]))
    if isinstance(entry, str):
        return complex(entry.replace(" ", "").replace("i", "j"))
    return complex(entry)


def _matrix(rows: Any) -> list[list[complex]]:
    out = [[_complex(v) for v in row] for row in rows]
    if not out or any(len(r) != len(out) for r in out):
        raise ValueError("matrix must be square and non-empty")
    return out


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GateSpec(_Strict):
    gate: str
    qubits: list[int]
    theta: float | None = None
    param: str | None = None
    matrix: list[list[complex]] | None = None

    _coerce_matrix = field_validator("matrix", mode="before")(
        lambda v: None if v is None else _matrix(v)
    )

    @field_validator("gate")
    @classmethod
    def _known(cls, v: str) -> str:
        try:
            return normalize_kind(v)
        except UsageError as exc:
            raise ValueError(str(exc)) from None

    def to_gate(self) -> GateOp:
        theta = self.theta
        if theta is None and self.param is not None:
            theta = 0.0
        matrix = None if self.matrix is None else np.array(self.matrix, dtype=np.complex128)
        return GateOp(self.gate, tuple(self.qubits), theta, matrix, self.param)


class PrepareDirective(_Strict):
    op: Literal["prepare"]
    qubit: int
    state: Literal["z+", "z-", "x+", "x-", "y+", "y-"] | None = None
    matrix: list[list[complex]] | None = None
    gates: list[GateSpec] | None = None

    _coerce_matrix = field_validator("matrix", mode="before")(
        lambda v: None if v is None else _matrix(v)
    )

    @model_validator(mode="after")
    def _one_source(self):
        given = [x is not None for x in (self.state, self.matrix, self.gates)]
        if sum(given) != 1:
            raise ValueError("prepare needs exactly one of state, matrix, gates")
        if self.gates is not None and any(g.qubits != [self.qubit] for g in self.gates):
            raise ValueError("prepare gates must act on the prepared qubit only")
        return self


class MixtureBranch(_Strict):
    weight: float = Field(ge=0, le=1)
    gates: list[GateSpec] = []


class MixtureDirective(_Strict):
    op: Literal["mixture"]
    branches: list[MixtureBranch]

    @model_validator(mode="after")
    def _normalized(self):
        total = sum(b.weight for b in self.branches)
        if not self.branches or abs(total - 1) > 1e-12:
            raise ValueError(f"mixture weights sum to {total}, not 1")
        return self


Directive = Annotated[Union[PrepareDirective, MixtureDirective], Field(discriminator="op")]


class MeasurementDesc(_Strict):
    """``preset`` is one of Z, X, Y (single qubit), axis (Bloch vector),
    product (one Pauli letter per qubit), projectors (list) or povm (mapping)."""

    name: str | None = None
    preset: Literal["Z", "X", "Y", "axis", "product", "projectors", "povm"]
    qubits: list[int]
    axis: list[float] | None = None
    axes: str | None = None
    projectors: list[list[list[complex]]] | None = None
    povm: dict[str, list[list[complex]]] | None = None

    @field_validator("projectors", mode="before")
    @classmethod
    def _proj(cls, v):
        return None if v is None else [_matrix(m) for m in v]

    @field_validator("povm", mode="before")
    @classmethod
    def _povm(cls, v):
        return None if v is None else {str(k): _matrix(m) for k, m in v.items()}

    @model_validator(mode="after")
    def _fields(self):
        if self.preset in ("Z", "X", "Y", "axis") and len(self.qubits) != 1:
            raise ValueError(f"preset {self.preset} measures exactly one qubit")
        if self.preset == "axis" and (self.axis is None or len(self.axis) != 3):
            raise ValueError("axis preset needs a 3-component axis")
        if self.preset == "product" and (self.axes is None or len(self.axes) != len(self.qubits)):
            raise ValueError("product preset needs one axis letter per qubit")
        if self.preset == "projectors" and not self.projectors:
            raise ValueError("projectors preset needs a projector list")
        if self.preset == "povm" and not self.povm:
            raise ValueError("povm preset needs element matrices")
        return self

    def to_spec(self, default_name: str = "") -> MeasurementSpec:
        name = self.name or default_name
        q = self.qubits
        if self.preset in ("Z", "X", "Y"):
            spec = pauli_measurement(q[0], self.preset, name)
        elif self.preset == "axis":
            spec = axis_measurement(q[0], self.axis, name)
        elif self.preset == "product":
            spec = product_measurement(q, self.axes, name)
        elif self.preset == "projectors":
            elements = {str(i): np.array(m) for i, m in enumerate(self.projectors)}
            spec = MeasurementSpec.from_povm(q, elements, name)
        else:
            elements = {k: np.array(m) for k, m in self.povm.items()}
            spec = MeasurementSpec.from_povm(q, elements, name)
        return spec


class Variant(_Strict):
    name: str
    preparation: list[Directive] = []
    circuit: list[GateSpec] = []
    ancillas: list[int] = []


class TransferCheck(_Strict):
    source: int
    target: int


class Scenario(_Strict):
    name: str
    description: str = ""
    n_qubits: int = Field(ge=1)
    seed: int = 0
    oracle_check: bool = False
    tolerance: float = Field(default=1e-9, gt=0)
    preparation: list[Directive] = []
    circuit: list[GateSpec] = []
    ancillas: list[int] = []
    variants: list[Variant] = []
    measurements: list[MeasurementDesc] = []
    regions: dict[str, list[int]] = {}
    settings: dict[Literal["A", "B"], dict[str, MeasurementDesc]] = {}
    chsh: dict[Literal["A", "B"], list[str]] | None = None
    checks: list[Literal["S", "SL", "DL", "PI", "F", "LC", "trace"]] = []
    dl_trials: int = Field(default=100, ge=0)
    probes: dict[str, list[float]] = {}
    trace_regions: list[list[int]] | None = None
    transfer: TransferCheck | None = None

    @model_validator(mode="after")
    def _ranges(self):
        n = self.n_qubits

        def check(qs, where):
            bad = [q for q in qs if not 0 <= q < n]
            if bad:
                raise ValueError(f"{where}: qubit indices {bad} outside 0..{n - 1}")

        def check_gates(gates, where):
            for i, g in enumerate(gates):
                check(g.qubits, f"{where}[{i}] ({g.gate})")

        def check_prep(directives, where):
            for i, d in enumerate(directives):
                if isinstance(d, PrepareDirective):
                    check([d.qubit], f"{where}[{i}]")
                    check_gates(d.gates or [], f"{where}[{i}].gates")
                else:
                    for j, b in enumerate(d.branches):
                        check_gates(b.gates, f"{where}[{i}].branches[{j}]")

        check_prep(self.preparation, "preparation")
        check_gates(self.circuit, "circuit")
        check(self.ancillas, "ancillas")
        for v in self.variants:
            check_prep(v.preparation, f"variant {v.name} preparation")
            check_gates(v.circuit, f"variant {v.name} circuit")
            check(v.ancillas, f"variant {v.name} ancillas")
        for m in self.measurements:
            check(m.qubits, f"measurement {m.name}")
        for name, r in self.regions.items():
            check(r, f"region {name}")
        for side, grid in self.settings.items():
            for label, m in grid.items():
                check(m.qubits, f"setting {side}.{label}")
        for name in ("A", "B"):
            if self.settings.get(name) and name not in self.regions:
                raise ValueError(f"settings for {name} need regions.{name}")
        needs_ab = {"DL", "SL", "PI", "F", "LC"} & set(self.checks)
        if needs_ab and not {"A", "B"} <= set(self.regions):
            raise ValueError(f"checks {sorted(needs_ab)} need regions A and B")
        if {"A", "B"} <= set(self.regions) and set(self.regions["A"]) & set(self.regions["B"]):
            raise ValueError("regions A and B overlap")
        if self.chsh is not None:
            for side in ("A", "B"):
                labels = self.chsh.get(side, [])
                if len(labels) != 2 or any(l not in self.settings.get(side, {}) for l in labels):
                    raise ValueError(f"chsh.{side} must name two settings of side {side}")
        if "trace" in self.checks and not self.probes:
            raise ValueError("trace check needs probe values")
        if self.variants and "system" not in self.regions:
            raise ValueError("variants need regions.system for the comparison")
        if self.transfer is not None:
            check([self.transfer.source, self.transfer.target], "transfer")
        if self.trace_regions is not None:
            for r in self.trace_regions:
                check(r, "trace_regions")
        return self


def parse_scenario(data: dict) -> Scenario:
    try:
        return Scenario.model_validate(data)
    except ValidationError as exc:
        raise ScenarioError(f"invalid scenario: {exc}") from None


def load_scenario(source: str | Path) -> Scenario:
    """Load a scenario file, or a built-in by name."""
    path = Path(source)
    if path.is_file():
        text = path.read_text()
        try:
            if path.suffix.lower() in (".yaml", ".yml"):
                import yaml

                data = yaml.safe_load(text)
            else:
                data = json.loads(text)
        except Exception as exc:  # parse errors of either format
            raise ScenarioError(f"cannot parse {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ScenarioError(f"{path}: top level must be a mapping")
        return parse_scenario(data)
    if str(source) in BUILTINS:
        return parse_scenario(BUILTINS[str(source)])
    raise ScenarioError(f"no scenario file or built-in named {source!r}")


def scenario_schema() -> dict:
    return Scenario.model_json_schema()


# -- built-ins --------------------------------------------------------------

_R2 = 1 / math.sqrt(2)


def _g(kind, *qubits, **kw):
    return {"gate": kind, "qubits": list(qubits), **kw}


def _pauli(q, axis):
    return {"preset": axis, "qubits": [q]}


_BELL = [_g("H", 0), _g("CNOT", 0, 1)]

BUILTINS: dict[str, dict] = {
    "cnot-fig2": {
        "name": "cnot-fig2",
        "description": "CNOT on |x+>|z+>: entangled descriptors, still separable",
        "n_qubits": 2,
        "oracle_check": True,
        "preparation": [{"op": "prepare", "qubit": 0, "state": "x+"}],
        "circuit": [_g("CNOT", 0, 1)],
        "measurements": [
            {"name": "Z0", **_pauli(0, "Z")},
            {"name": "Z1", **_pauli(1, "Z")},
            {"name": "ZZ", "preset": "product", "qubits": [0, 1], "axes": "ZZ"},
        ],
        "regions": {"A": [0], "B": [1]},
        "checks": ["S", "DL", "SL", "PI", "F", "LC"],
    },
    "bell-chsh": {
        "name": "bell-chsh",
        "description": "Bell pair with Tsirelson-optimal CHSH settings; F and LC fail",
        "n_qubits": 2,
        "oracle_check": True,
        "circuit": _BELL,
        "measurements": [{"name": "ZZ", "preset": "product", "qubits": [0, 1], "axes": "ZZ"}],
        "regions": {"A": [0], "B": [1]},
        "settings": {
            "A": {"Z": _pauli(0, "Z"), "X": _pauli(0, "X")},
            "B": {
                "Z": _pauli(1, "Z"),
                "Z+X": {"preset": "axis", "qubits": [1], "axis": [_R2, 0.0, _R2]},
                "Z-X": {"preset": "axis", "qubits": [1], "axis": [-_R2, 0.0, _R2]},
            },
        },
        "chsh": {"A": ["Z", "X"], "B": ["Z+X", "Z-X"]},
        "checks": ["S", "DL", "SL", "PI", "F", "LC"],
    },
    "teleportation": {
        "name": "teleportation",
        "description": "Deferred-measurement teleportation of qubit 0 onto qubit 2",
        "n_qubits": 3,
        "oracle_check": True,
        "preparation": [
            {
                "op": "prepare",
                "qubit": 0,
                "gates": [_g("RY", 0, theta=1.1), _g("RZ", 0, theta=0.7)],
            }
        ],
        "circuit": [
            _g("H", 1),
            _g("CNOT", 1, 2),
            _g("CNOT", 0, 1),
            _g("H", 0),
            _g("CNOT", 1, 2),
            _g("CZ", 0, 2),
        ],
        "measurements": [_pauli(2, "X") | {"name": "X2"}, _pauli(2, "Y") | {"name": "Y2"}, _pauli(2, "Z") | {"name": "Z2"}],
        "regions": {"A": [0, 1], "B": [2]},
        "transfer": {"source": 0, "target": 2},
        "checks": ["S", "DL", "SL", "PI", "F", "LC"],
    },
    "entanglement-swap": {
        "name": "entanglement-swap",
        "description": "Bell pairs (0,1),(2,3); Bell measurement on 1,2 entangles 0 with 3",
        "n_qubits": 4,
        "oracle_check": True,
        "circuit": [
            _g("H", 0),
            _g("CNOT", 0, 1),
            _g("H", 2),
            _g("CNOT", 2, 3),
            _g("CNOT", 1, 2),
            _g("H", 1),
            _g("CNOT", 2, 3),
            _g("CZ", 1, 3),
        ],
        "measurements": [{"name": "Z0Z3", "preset": "product", "qubits": [0, 3], "axes": "ZZ"}],
        "regions": {"A": [0], "B": [3]},
        "settings": {
            "A": {"Z": _pauli(0, "Z"), "X": _pauli(0, "X")},
            "B": {"Z": _pauli(3, "Z"), "X": _pauli(3, "X")},
        },
        "checks": ["S", "DL", "SL", "PI", "F", "LC"],
    },
    "mixed-prep-contextuality": {
        "name": "mixed-prep-contextuality",
        "description": "Maximally mixed qubit 0 by coin flip vs by entangling with qubit 1",
        "n_qubits": 2,
        "oracle_check": True,
        "variants": [
            {
                "name": "epistemic",
                "preparation": [
                    {
                        "op": "mixture",
                        "branches": [
                            {"weight": 0.5, "gates": [_g("X", 0)]},
                            {"weight": 0.5, "gates": []},
                        ],
                    }
                ],
            },
            {"name": "entangled", "circuit": _BELL, "ancillas": [1]},
        ],
        "measurements": [_pauli(0, "Z") | {"name": "Z0"}],
        "regions": {"system": [0], "A": [0], "B": [1]},
        "checks": ["S", "DL", "SL", "PI", "F", "LC"],
    },
    "transformation-contextuality": {
        "name": "transformation-contextuality",
        "description": "Full dephasing of qubit 0 purified with one vs two ancillas",
        "n_qubits": 3,
        "oracle_check": True,
        "preparation": [{"op": "prepare", "qubit": 0, "state": "x+"}],
        "variants": [
            {"name": "one-ancilla", "circuit": [_g("CNOT", 0, 1)], "ancillas": [1]},
            {
                "name": "two-ancillas",
                "circuit": [_g("CNOT", 0, 1), _g("CNOT", 0, 2)],
                "ancillas": [1, 2],
            },
        ],
        "measurements": [_pauli(0, "X") | {"name": "X0"}, _pauli(0, "Z") | {"name": "Z0"}],
        "regions": {"system": [0], "A": [0], "B": [1, 2]},
        "checks": ["S", "DL", "SL", "PI", "F", "LC"],
    },
    "locally-inaccessible-phase": {
        "name": "locally-inaccessible-phase",
        "description": "Phase on one half of a Bell pair: in qubit 0's descriptor, invisible locally",
        "n_qubits": 2,
        "oracle_check": True,
        "circuit": _BELL + [_g("RZ", 0, theta=0.0, param="theta")],
        "probes": {"theta": [k * math.pi / 8 for k in range(8)]},
        "measurements": [{"name": "XX", "preset": "product", "qubits": [0, 1], "axes": "XX"}],
        "regions": {"A": [0], "B": [1]},
        "checks": ["S", "DL", "SL", "PI", "F", "LC", "trace"],
    },
}

DESCRIPTIONS = {name: data["description"] for name, data in BUILTINS.items()}
