"""Instance generators used by tests, experiments and the bundled data.

Three shapes:

* sweep: measure qubits 1..q in order via a ripple increment on the k
  register, accept on the parity of all recorded outcome bits. Works for
  any q.
* ordered sweep: same accept rule but the measurement order is an explicit
  permutation written by a single truth-table gate on k, so q <= 7.
* random: chaff gates with random tables on the non-k wires plus a final
  permutation gate on k. Complete by construction, adaptive through
  whatever the chaff writes into alpha and y.
"""
from __future__ import annotations

import pathlib
from importlib.resources import files

import numpy as np

from . import povm as povm_mod
from .control import AmbqcInstance, ControlCircuit, Gate, RegisterLayout, Task
from .errors import ValidationError

# (carry, bit) -> (bit AND carry, bit XOR carry): one ripple stage.
_INCREMENT_TABLE = (0, 2, 2, 1)
# (y, m) -> (y XOR m, m): fold one outcome bit into the accept bit.
_PARITY_TABLE = (0, 1, 3, 2)
_NOT_TABLE = (1, 0)


def _default_table(table: povm_mod.PovmTable | None) -> povm_mod.PovmTable:
    return table if table is not None else povm_mod.PovmTable([povm_mod.builtin("z")])


def _accept_gates(layout: RegisterLayout, accept: str) -> list[Gate]:
    if accept == "parity":
        # Fold every m bit into y, then flip: accept even-weight outcome
        # records, so the all-zeros history lands on y = 1.
        gates = [
            Gate((layout.y.offset, wire), _PARITY_TABLE) for wire in layout.m.wires()
        ]
        gates.append(Gate((layout.y.offset,), _NOT_TABLE))
        return gates
    if accept == "one":
        return [Gate((layout.y.offset,), _NOT_TABLE)]
    if accept == "zero":
        return []
    raise ValidationError(f"unknown accept rule {accept!r}")


def sweep_instance(
    num_qubits: int,
    povm_table: povm_mod.PovmTable | None = None,
    accept: str = "parity",
    task: Task = Task("decision"),
) -> AmbqcInstance:
    """Measure 1..q in order; accept on the parity of the m region."""
    table = _default_table(povm_table)
    layout = RegisterLayout.standard(
        0, num_qubits, table.outcome_bits, alpha_bits=table.index_bits, workspace=1
    )
    carry = layout.a.offset
    gates = [Gate((carry,), _NOT_TABLE)]
    for wire in layout.k.wires():
        gates.append(Gate((carry, wire), _INCREMENT_TABLE))
    gates.extend(_accept_gates(layout, accept))
    circuit = ControlCircuit(layout, gates, 0, num_qubits)
    return AmbqcInstance(circuit, table, "", task)


def ordered_sweep_instance(
    order,
    povm_table: povm_mod.PovmTable | None = None,
    accept: str = "parity",
    task: Task = Task("decision"),
) -> AmbqcInstance:
    """Measure the qubits in the given order (a permutation of 1..q, q <= 7)."""
    order = tuple(int(v) for v in order)
    num_qubits = len(order)
    if sorted(order) != list(range(1, num_qubits + 1)):
        raise ValidationError(f"{order} is not a permutation of 1..{num_qubits}")
    table = _default_table(povm_table)
    counter_bits = num_qubits.bit_length()
    if counter_bits > 3:
        raise ValidationError(f"ordered sweep needs q <= 7, got q={num_qubits}")
    layout = RegisterLayout.standard(
        0, num_qubits, table.outcome_bits, alpha_bits=table.index_bits, workspace=0
    )
    k_wires = tuple(layout.k.wires())
    # Pattern c on the k wires is the step count; entries past q-1 are never
    # read because the final run only consults y.
    k_table = tuple(order[c] if c < num_qubits else 0 for c in range(1 << counter_bits))
    gates = [Gate(k_wires, k_table)]
    gates.extend(_accept_gates(layout, accept))
    circuit = ControlCircuit(layout, gates, 0, num_qubits)
    return AmbqcInstance(circuit, table, "", task)


def random_instance(
    num_qubits: int,
    chaff_gates: int,
    rng: np.random.Generator,
    povm_table: povm_mod.PovmTable | None = None,
    num_inputs: int = 0,
    task: Task = Task("decision"),
) -> AmbqcInstance:
    """Random complete instance: chaff on the non-k wires, permutation on k.

    The measurement order is a random permutation written by the final gate,
    so every history measures each qubit exactly once regardless of what the
    chaff computes. Adaptivity enters through chaff writes to alpha and y.
    alpha stays decodable because chaff may only touch it when the table
    size fills its addressing range.
    """
    table = _default_table(povm_table)
    counter_bits = num_qubits.bit_length()
    if counter_bits > 3:
        raise ValidationError(f"random instances need q <= 7, got q={num_qubits}")
    layout = RegisterLayout.standard(
        num_inputs, num_qubits, table.outcome_bits, alpha_bits=table.index_bits, workspace=3
    )
    forbidden = set(layout.k.wires())
    if len(table) != 1 << layout.alpha.width:
        forbidden |= set(layout.alpha.wires())
    pool = [wire for wire in range(layout.width) if wire not in forbidden]
    gates = []
    for _ in range(chaff_gates):
        arity = int(rng.integers(1, 4))
        wires = tuple(int(w) for w in rng.choice(pool, size=arity, replace=False))
        size = 1 << arity
        gate_table = tuple(int(v) for v in rng.integers(0, size, size=size))
        gates.append(Gate(wires, gate_table))
    perm = tuple(int(v) for v in rng.permutation(num_qubits) + 1)
    k_wires = tuple(layout.k.wires())
    k_table = tuple(perm[c] if c < num_qubits else 0 for c in range(1 << counter_bits))
    gates.append(Gate(k_wires, k_table))
    circuit = ControlCircuit(layout, gates, num_inputs, num_qubits)
    input_x = "".join(str(int(b)) for b in rng.integers(0, 2, size=num_inputs))
    return AmbqcInstance(circuit, table, input_x, task)


def bundled_path(name: str) -> pathlib.Path:
    """Path of one of the instance files shipped with the package."""
    return pathlib.Path(str(files("ambqc") / "data" / name))


def incomplete_instance(num_qubits: int = 3) -> AmbqcInstance:
    """A circuit whose k register always selects qubit 1: never complete."""
    table = _default_table(None)
    layout = RegisterLayout.standard(0, num_qubits, table.outcome_bits, alpha_bits=1)
    k_wires = tuple(layout.k.wires())
    size = 1 << len(k_wires)
    # Constant table: every pattern maps to 1, so step 2 re-selects qubit 1.
    gates = [Gate(k_wires, tuple(1 for _ in range(size)))]
    circuit = ControlCircuit(layout, gates, 0, num_qubits)
    return AmbqcInstance(circuit, table, "")
