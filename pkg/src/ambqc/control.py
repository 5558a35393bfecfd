"""Classical control side: registers, gate programs, instances.

The controller owns a width-w Boolean register bank laid out as named
regions:

    x      n input bits
    y      1 output bit
    k      ceil(log2(q+1)) bits; holds the step counter on entry and is
           read back as the next qubit index
    m      q * outcome_bits bits; outcome i of the history sits at slot i
    alpha  index into the POVM table (at least 1 bit)
    a      scratch workspace, any width

All multi-bit regions are little-endian: the bit at region offset + j
carries weight 2^j. Before each control run the bank is rebuilt from
scratch: x from the instance input, k from the step count, m from the
outcomes seen so far, everything else zero. The gate list (each gate a
truth table on at most 3 wires) then runs once, after which the controller
reads k as the next qubit to measure and alpha as the measurement index,
or y as the accept bit once count == q.
"""
from __future__ import annotations

import dataclasses
import json
import math
from typing import Sequence

import numpy as np

from . import _backend, povm as povm_mod
from .errors import (
    IncompleteModelError,
    InvalidPovmIndexError,
    InvalidQubitIndexError,
    ValidationError,
)

INSTANCE_VERSION = "ambqc-instance/1"
MAX_GATE_WIRES = 3
# Cap on exhaustive history enumeration (product of POVM arities).
MAX_HISTORIES = 1 << 20


@dataclasses.dataclass(frozen=True)
class Region:
    offset: int
    width: int

    def wires(self) -> range:
        return range(self.offset, self.offset + self.width)


@dataclasses.dataclass(frozen=True)
class RegisterLayout:
    width: int
    x: Region
    y: Region
    k: Region
    m: Region
    alpha: Region
    a: Region

    def regions(self) -> dict[str, Region]:
        return {"x": self.x, "y": self.y, "k": self.k, "m": self.m, "alpha": self.alpha, "a": self.a}

    def validate(self, num_inputs: int, num_qubits: int, outcome_bits: int) -> None:
        if num_qubits < 1:
            raise ValidationError(f"q={num_qubits} must be at least 1")
        if outcome_bits < 1:
            raise ValidationError(f"outcome_bits={outcome_bits} must be at least 1")
        if self.x.width != num_inputs:
            raise ValidationError(f"x region width {self.x.width} != n={num_inputs}")
        if self.y.width != 1:
            raise ValidationError(f"y region width {self.y.width} != 1")
        counter_bits = num_qubits.bit_length()
        if self.k.width != counter_bits:
            raise ValidationError(
                f"k region width {self.k.width} != ceil(log2(q+1)) = {counter_bits}"
            )
        if self.m.width != num_qubits * outcome_bits:
            raise ValidationError(
                f"m region width {self.m.width} != q*outcome_bits = {num_qubits * outcome_bits}"
            )
        if self.alpha.width < 1:
            raise ValidationError("alpha region needs at least 1 bit")
        if self.a.width < 0:
            raise ValidationError("workspace width cannot be negative")
        used = np.zeros(self.width, dtype=bool)
        for name, region in self.regions().items():
            if region.width == 0:
                continue
            if region.offset < 0 or region.offset + region.width > self.width:
                raise ValidationError(f"region {name} {region} falls outside width {self.width}")
            span = used[region.offset : region.offset + region.width]
            if span.any():
                raise ValidationError(f"region {name} overlaps another region")
            span[:] = True

    @classmethod
    def standard(
        cls,
        num_inputs: int,
        num_qubits: int,
        outcome_bits: int,
        alpha_bits: int = 1,
        workspace: int = 0,
    ) -> "RegisterLayout":
        """Pack the regions back to back in the order x, y, k, m, alpha, a."""
        off = 0
        parts = {}
        for name, width in (
            ("x", num_inputs),
            ("y", 1),
            ("k", num_qubits.bit_length()),
            ("m", num_qubits * outcome_bits),
            ("alpha", max(1, alpha_bits)),
            ("a", workspace),
        ):
            parts[name] = Region(off, width)
            off += width
        return cls(off, **parts)


@dataclasses.dataclass(frozen=True)
class Gate:
    """Truth table on up to 3 wires; output bit j is written back to wire j."""

    wires: tuple[int, ...]
    table: tuple[int, ...]

    def __post_init__(self):
        arity = len(self.wires)
        if not 1 <= arity <= MAX_GATE_WIRES:
            raise ValidationError(f"gate touches {arity} wires, allowed 1..{MAX_GATE_WIRES}")
        if len(set(self.wires)) != arity:
            raise ValidationError(f"gate wires {self.wires} repeat a wire")
        if len(self.table) != 1 << arity:
            raise ValidationError(
                f"gate table has {len(self.table)} entries, expected {1 << arity}"
            )
        for value in self.table:
            if not 0 <= value < 1 << arity:
                raise ValidationError(f"table entry {value} outside 0..{(1 << arity) - 1}")

    @property
    def arity(self) -> int:
        return len(self.wires)


class ControlCircuit:
    """A register layout plus an ordered truth-table gate list."""

    def __init__(
        self,
        layout: RegisterLayout,
        gates: Sequence[Gate],
        num_inputs: int,
        num_qubits: int,
        gate_budget: int | None = None,
    ):
        self.layout = layout
        self.gates = tuple(gates)
        self.num_inputs = num_inputs
        self.num_qubits = num_qubits
        self.gate_budget = len(self.gates) if gate_budget is None else gate_budget
        self._compiled = None
        self.validate()

    @property
    def width(self) -> int:
        return self.layout.width

    @property
    def outcome_bits(self) -> int:
        return self.layout.m.width // self.num_qubits

    def validate(self) -> None:
        if self.num_inputs < 0:
            raise ValidationError("n cannot be negative")
        if self.layout.m.width % self.num_qubits:
            raise ValidationError(
                f"m region width {self.layout.m.width} is not a multiple of q={self.num_qubits}"
            )
        self.layout.validate(self.num_inputs, self.num_qubits, self.outcome_bits)
        if self.gate_budget < len(self.gates):
            raise ValidationError(
                f"gate budget v={self.gate_budget} below actual gate count {len(self.gates)}"
            )
        for i, gate in enumerate(self.gates):
            for wire in gate.wires:
                if not 0 <= wire < self.width:
                    raise ValidationError(f"gate {i} touches wire {wire} outside 0..{self.width - 1}")

    def compiled(self):
        """Gate list flattened to the arrays the kernels consume."""
        if self._compiled is None:
            n = len(self.gates)
            wires = np.zeros((n, MAX_GATE_WIRES), dtype=np.int32)
            arities = np.zeros(n, dtype=np.int32)
            tables = np.zeros((n, 1 << MAX_GATE_WIRES), dtype=np.uint8)
            for i, gate in enumerate(self.gates):
                arities[i] = gate.arity
                wires[i, : gate.arity] = gate.wires
                tables[i, : len(gate.table)] = gate.table
            self._compiled = (wires, arities, tables)
        return self._compiled


@dataclasses.dataclass(frozen=True)
class Measure:
    qubit: int
    povm_index: int


@dataclasses.dataclass(frozen=True)
class Output:
    accept: bool


def parse_bits(bits, expected: int) -> np.ndarray:
    """Normalise a '0101' string or 0/1 sequence to a uint8 array."""
    if isinstance(bits, str):
        values = [c for c in bits]
        if any(c not in "01" for c in values):
            raise ValidationError(f"bit string {bits!r} contains non-binary characters")
        arr = np.array([int(c) for c in values], dtype=np.uint8)
    else:
        arr = np.asarray(bits, dtype=np.uint8)
        if arr.ndim != 1 or not np.isin(arr, (0, 1)).all():
            raise ValidationError("bit sequence must be one-dimensional over {0, 1}")
    if arr.shape[0] != expected:
        raise ValidationError(f"expected {expected} bits, got {arr.shape[0]}")
    return arr


def _encode_int(bits: np.ndarray, region: Region, value: int) -> None:
    for j in range(region.width):
        bits[region.offset + j] = (value >> j) & 1


def _decode_int(bits: np.ndarray, region: Region) -> int:
    value = 0
    for j in range(region.width):
        value |= int(bits[region.offset + j]) << j
    return value


def execute_registers(
    circuit: ControlCircuit, x_bits: np.ndarray, count: int, outcomes: Sequence[int]
) -> np.ndarray:
    """Build the register bank for one step and run the gate program on it."""
    layout = circuit.layout
    bits = np.zeros(layout.width, dtype=np.uint8)
    if layout.x.width:
        bits[layout.x.offset : layout.x.offset + layout.x.width] = x_bits
    _encode_int(bits, layout.k, count)
    b = circuit.outcome_bits
    for i, mu in enumerate(outcomes):
        _encode_int(bits, Region(layout.m.offset + i * b, b), mu)
    wires, arities, tables = circuit.compiled()
    _backend.run_gate_program(bits, wires, arities, tables)
    return bits


def decision_from_bits(
    circuit: ControlCircuit, bits: np.ndarray, count: int, povm_count: int | None = None
):
    """Decode a post-run register bank into a Measure or Output decision."""
    q = circuit.num_qubits
    if count == q:
        return Output(bool(bits[circuit.layout.y.offset]))
    qubit = _decode_int(bits, circuit.layout.k)
    if qubit == 0 or qubit > q:
        raise InvalidQubitIndexError(f"control selected qubit {qubit} outside 1..{q}")
    alpha = _decode_int(bits, circuit.layout.alpha)
    if povm_count is not None and alpha >= povm_count:
        raise InvalidPovmIndexError(f"control selected POVM {alpha} outside 0..{povm_count - 1}")
    return Measure(qubit, alpha)


def run_control(
    circuit: ControlCircuit,
    x_bits,
    count: int,
    outcomes: Sequence[int],
    povm_count: int | None = None,
):
    """One controller step: returns Measure(qubit, povm_index) or Output(accept).

    With count < q the k register is read back as the next qubit (1-based;
    0 or > q raises InvalidQubitIndexError) and alpha as the POVM index
    (checked against povm_count when given). At count == q the y bit decides.
    """
    q = circuit.num_qubits
    if not 0 <= count <= q:
        raise ValidationError(f"count {count} outside 0..{q}")
    if len(outcomes) != count:
        raise ValidationError(f"{len(outcomes)} outcomes recorded but count={count}")
    limit = 1 << circuit.outcome_bits
    for mu in outcomes:
        if not 0 <= mu < limit:
            raise ValidationError(f"outcome {mu} does not fit in {circuit.outcome_bits} bits")
    x_arr = parse_bits(x_bits, circuit.num_inputs)
    bits = execute_registers(circuit, x_arr, count, outcomes)
    return decision_from_bits(circuit, bits, count, povm_count)


@dataclasses.dataclass(frozen=True)
class Task:
    kind: str
    t: int = 0

    def __post_init__(self):
        if self.kind not in ("decision", "sampling"):
            raise ValidationError(f"unknown task kind {self.kind!r}")
        if self.kind == "sampling" and self.t < 1:
            raise ValidationError("sampling task needs t >= 1 output bits")
        if self.kind == "decision" and self.t:
            raise ValidationError("decision task takes no t parameter")


class AmbqcInstance:
    """A control circuit paired with its POVM table, input and task."""

    def __init__(
        self,
        circuit: ControlCircuit,
        povm_table: povm_mod.PovmTable,
        input_x: str = "",
        task: Task = Task("decision"),
    ):
        self.circuit = circuit
        self.povm_table = povm_table
        self.input_x = input_x
        self.task = task
        self.validate()

    @property
    def num_qubits(self) -> int:
        return self.circuit.num_qubits

    def validate(self) -> None:
        circuit = self.circuit
        circuit.validate()
        self.povm_table.require_valid()
        parse_bits(self.input_x, circuit.num_inputs)
        if circuit.outcome_bits < self.povm_table.outcome_bits:
            raise ValidationError(
                f"m slots of {circuit.outcome_bits} bits cannot hold outcomes of "
                f"up to {self.povm_table.max_arity} values"
            )
        if circuit.layout.alpha.width < self.povm_table.index_bits:
            raise ValidationError(
                f"alpha region of {circuit.layout.alpha.width} bits cannot address "
                f"{len(self.povm_table)} POVMs"
            )
        if self.task.kind == "sampling" and self.task.t > circuit.layout.m.width:
            raise ValidationError(
                f"sampling task asks for {self.task.t} bits but m holds {circuit.layout.m.width}"
            )

    def run_control(self, count: int, outcomes: Sequence[int]):
        return run_control(
            self.circuit, self.input_x, count, outcomes, povm_count=len(self.povm_table)
        )


@dataclasses.dataclass(frozen=True)
class CompletenessReport:
    complete: bool
    histories_checked: int
    witness: tuple | None
    message: str


def verify_completeness(instance: AmbqcInstance, max_histories: int = MAX_HISTORIES) -> CompletenessReport:
    """Walk every outcome history and check each qubit is measured once.

    Histories always terminate after exactly q steps, so incompleteness can
    only mean some step re-selects an already measured qubit; the first
    offending history is returned as the witness.
    """
    q = instance.num_qubits
    if instance.povm_table.max_arity ** q > max_histories:
        raise ValidationError(
            f"history count {instance.povm_table.max_arity}^{q} exceeds cap {max_histories}"
        )
    checked = 0
    stack = [(0, (), frozenset())]
    while stack:
        count, outcomes, measured = stack.pop()
        decision = instance.run_control(count, outcomes)
        if isinstance(decision, Output):
            checked += 1
            continue
        if decision.qubit in measured:
            steps = _history_steps(instance, outcomes) + (
                (decision.qubit, decision.povm_index, None),
            )
            return CompletenessReport(
                False,
                checked,
                steps,
                f"qubit {decision.qubit} selected twice after outcomes {outcomes}",
            )
        arity = instance.povm_table[decision.povm_index].arity
        for mu in range(arity):
            stack.append((count + 1, outcomes + (mu,), measured | {decision.qubit}))
    return CompletenessReport(True, checked, None, "every history measures each qubit once")


def require_complete(instance: AmbqcInstance, max_histories: int = MAX_HISTORIES) -> None:
    report = verify_completeness(instance, max_histories)
    if not report.complete:
        raise IncompleteModelError(report.message, witness=report.witness)


def _history_steps(instance: AmbqcInstance, outcomes: Sequence[int]) -> tuple:
    """Replay a partial outcome history into (qubit, povm_index, outcome) steps."""
    steps = []
    for i, mu in enumerate(outcomes):
        decision = instance.run_control(i, outcomes[:i])
        steps.append((decision.qubit, decision.povm_index, mu))
    return tuple(steps)


def circuit_count_log(width: int, gate_budget: int) -> tuple[float, float]:
    """Natural logs of the exact and relaxed counts of width-w, v-gate programs.

    Exact: each gate picks one of C(w,3) wire triples and one of 8^8 tables,
    so the count is (8^8 C(w,3))^v. Relaxed: C(w,3) <= w^3/6 gives the
    (1/6)(8^8 w)^(3v) form used by the analytic bounds. The relaxed log
    dominates for every v >= 1; for v = 0 the exact count is 1 while the
    relaxed form still carries the 1/6 factor.
    """
    if gate_budget < 0:
        raise ValidationError("gate budget cannot be negative")
    if gate_budget == 0:
        return 0.0, -math.log(6.0)
    if width < MAX_GATE_WIRES:
        raise ValidationError(f"width {width} cannot host 3-wire gates")
    exact = gate_budget * (24.0 * math.log(2.0) + math.log(math.comb(width, 3)))
    relaxed = 3.0 * gate_budget * (24.0 * math.log(2.0) + math.log(width)) - math.log(6.0)
    return exact, relaxed


def _layout_to_json(layout: RegisterLayout) -> dict:
    return {name: [r.offset, r.width] for name, r in layout.regions().items()}


def _layout_from_json(data, width: int) -> RegisterLayout:
    regions = {}
    for name in ("x", "y", "k", "m", "alpha", "a"):
        try:
            off, wd = data[name]
        except (TypeError, KeyError, ValueError) as exc:
            raise ValidationError(f"layout entry {name!r} malformed: {exc}") from exc
        regions[name] = Region(int(off), int(wd))
    return RegisterLayout(width, **regions)


def instance_to_json(instance: AmbqcInstance) -> dict:
    circuit = instance.circuit
    task: dict = {"kind": instance.task.kind}
    if instance.task.kind == "sampling":
        task["t"] = instance.task.t
    return {
        "version": INSTANCE_VERSION,
        "n": circuit.num_inputs,
        "q": circuit.num_qubits,
        "w": circuit.width,
        "v": circuit.gate_budget,
        "outcome_bits": circuit.outcome_bits,
        "layout": _layout_to_json(circuit.layout),
        "gates": [{"wires": list(g.wires), "table": list(g.table)} for g in circuit.gates],
        "povm_table": povm_mod.table_to_json(instance.povm_table),
        "input_x": instance.input_x,
        "task": task,
    }


def instance_from_json(data) -> AmbqcInstance:
    if not isinstance(data, dict):
        raise ValidationError("instance document must be a JSON object")
    version = data.get("version")
    if version != INSTANCE_VERSION:
        raise ValidationError(f"unsupported instance version {version!r}")
    try:
        layout = _layout_from_json(data["layout"], int(data["w"]))
        gates = [
            Gate(tuple(int(w) for w in g["wires"]), tuple(int(t) for t in g["table"]))
            for g in data["gates"]
        ]
        circuit = ControlCircuit(
            layout,
            gates,
            num_inputs=int(data["n"]),
            num_qubits=int(data["q"]),
            gate_budget=int(data["v"]),
        )
        table = povm_mod.table_from_json(data["povm_table"])
        task_data = data.get("task", {"kind": "decision"})
        task = Task(task_data.get("kind", "decision"), int(task_data.get("t", 0)))
        instance = AmbqcInstance(circuit, table, str(data.get("input_x", "")), task)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed instance document: {exc}") from exc
    if int(data["outcome_bits"]) != circuit.outcome_bits:
        raise ValidationError(
            f"declared outcome_bits {data['outcome_bits']} != layout value {circuit.outcome_bits}"
        )
    return instance


def serialize_instance(instance: AmbqcInstance) -> str:
    """Canonical text form: sorted keys, two-space indent, trailing newline."""
    return json.dumps(instance_to_json(instance), indent=2, sort_keys=True) + "\n"


def parse_instance(text: str) -> AmbqcInstance:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"instance is not valid JSON: {exc}") from exc
    return instance_from_json(data)
