"""Pure numpy fallback for the compiled kernels.

Same contracts as ambqc._kernels: callers pass contiguous arrays of the
right dtype and 1-based target qubits with qubit 1 the most significant
bit of the basis index. No validation happens at this level.
"""
from __future__ import annotations

import numpy as np


def run_gate_program(bits, wires, arities, tables):
    """Apply a truth-table gate list to a register array, in place.

    bits: uint8[w]; wires: int32[g, 3]; arities: int32[g]; tables: uint8[g, 8].
    Gate g reads its input pattern with wire j contributing bit j, looks up
    tables[g, pattern], and writes output bit j back to wire j.
    """
    for g in range(arities.shape[0]):
        arity = int(arities[g])
        pattern = 0
        for j in range(arity):
            pattern |= int(bits[wires[g, j]]) << j
        out = int(tables[g, pattern])
        for j in range(arity):
            bits[wires[g, j]] = (out >> j) & 1


def apply_one_qubit(amps, num_qubits, target, op):
    """Return a new amplitude array with the 2x2 op applied to one qubit."""
    left = 1 << (target - 1)
    right = 1 << (num_qubits - target)
    a = amps.reshape(left, 2, right)
    out = np.empty_like(a)
    out[:, 0, :] = op[0, 0] * a[:, 0, :] + op[0, 1] * a[:, 1, :]
    out[:, 1, :] = op[1, 0] * a[:, 0, :] + op[1, 1] * a[:, 1, :]
    return out.reshape(-1)


def expect_one_qubit(amps, num_qubits, target, op):
    """Return <psi|op_target|psi> without materialising op|psi>."""
    left = 1 << (target - 1)
    right = 1 << (num_qubits - target)
    a = amps.reshape(left, 2, right)
    a0 = a[:, 0, :].reshape(-1)
    a1 = a[:, 1, :].reshape(-1)
    n0 = np.vdot(a0, a0).real
    n1 = np.vdot(a1, a1).real
    s01 = np.vdot(a0, a1)
    return op[0, 0] * n0 + op[1, 1] * n1 + op[0, 1] * s01 + op[1, 0] * s01.conjugate()
