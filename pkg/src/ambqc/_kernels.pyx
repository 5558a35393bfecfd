# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled inner loops: gate-table programs and single-qubit state updates.

Mirrors ambqc._kernels_py; ambqc._backend picks one implementation at
import time. Contracts are identical (contiguous arrays, 1-based target,
qubit 1 = most significant bit, no validation here).
"""

import numpy as np


def run_gate_program(unsigned char[::1] bits, int[:, ::1] wires,
                     int[::1] arities, unsigned char[:, ::1] tables):
    cdef Py_ssize_t g, j
    cdef Py_ssize_t n_gates = arities.shape[0]
    cdef int arity, pattern, out
    for g in range(n_gates):
        arity = arities[g]
        pattern = 0
        for j in range(arity):
            pattern |= bits[wires[g, j]] << j
        out = tables[g, pattern]
        for j in range(arity):
            bits[wires[g, j]] = (out >> j) & 1


def apply_one_qubit(double complex[::1] amps, int num_qubits, int target,
                    double complex[:, ::1] op):
    cdef Py_ssize_t left = 1 << (target - 1)
    cdef Py_ssize_t right = 1 << (num_qubits - target)
    cdef Py_ssize_t block = right << 1
    out_arr = np.empty(amps.shape[0], dtype=np.complex128)
    cdef double complex[::1] out = out_arr
    cdef double complex m00 = op[0, 0], m01 = op[0, 1]
    cdef double complex m10 = op[1, 0], m11 = op[1, 1]
    cdef double complex a0, a1
    cdef Py_ssize_t l, r, i0, i1
    for l in range(left):
        i0 = l * block
        i1 = i0 + right
        for r in range(right):
            a0 = amps[i0 + r]
            a1 = amps[i1 + r]
            out[i0 + r] = m00 * a0 + m01 * a1
            out[i1 + r] = m10 * a0 + m11 * a1
    return out_arr


def expect_one_qubit(double complex[::1] amps, int num_qubits, int target,
                     double complex[:, ::1] op):
    cdef Py_ssize_t left = 1 << (target - 1)
    cdef Py_ssize_t right = 1 << (num_qubits - target)
    cdef Py_ssize_t block = right << 1
    cdef double n0 = 0.0, n1 = 0.0
    cdef double complex s01 = 0.0, s10 = 0.0
    cdef double complex a0, a1
    cdef Py_ssize_t l, r, i0, i1
    for l in range(left):
        i0 = l * block
        i1 = i0 + right
        for r in range(right):
            a0 = amps[i0 + r]
            a1 = amps[i1 + r]
            n0 += a0.real * a0.real + a0.imag * a0.imag
            n1 += a1.real * a1.real + a1.imag * a1.imag
            s01 += a0.conjugate() * a1
            s10 += a1.conjugate() * a0
    return op[0, 0] * n0 + op[1, 1] * n1 + op[0, 1] * s01 + op[1, 0] * s10
