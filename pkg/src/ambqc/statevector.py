"""Dense pure states on q qubits and single-qubit operator primitives.

Basis convention: amplitude index i encodes qubit 1 as the most significant
bit, i = sum_l b_l 2^(q-l), so |i> = |b_1 b_2 ... b_q>. Qubit indices are
1-based throughout the public API. States are treated as immutable; every
operation returns a fresh array and never writes through its inputs.
"""
from __future__ import annotations

import dataclasses
from typing import Mapping

import numpy as np

from . import _backend
from .errors import ValidationError, ZeroProbabilityError

# Dense operators on the full Hilbert space are kept to at most this many
# qubits; 4^12 complex entries is ~256 MiB per matrix.
DENSE_QUBIT_LIMIT = 12
STATE_QUBIT_LIMIT = 24
NORM_TOL = 1e-10

IDENTITY_2 = np.eye(2, dtype=np.complex128)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)


def _as_operator(op) -> np.ndarray:
    mat = np.ascontiguousarray(op, dtype=np.complex128)
    if mat.shape != (2, 2):
        raise ValidationError(f"single-qubit operator must be 2x2, got {mat.shape}")
    return mat


@dataclasses.dataclass(frozen=True)
class PureState:
    """A normalised state vector; ``amplitudes`` has length 2**num_qubits."""

    num_qubits: int
    amplitudes: np.ndarray

    @classmethod
    def from_amplitudes(cls, amplitudes, *, normalize: bool = False) -> "PureState":
        amps = np.ascontiguousarray(amplitudes, dtype=np.complex128).reshape(-1)
        dim = amps.shape[0]
        q = dim.bit_length() - 1
        if dim != 1 << q or q < 1:
            raise ValidationError(f"amplitude length {dim} is not 2**q for q >= 1")
        if q > STATE_QUBIT_LIMIT:
            raise ValidationError(f"q={q} exceeds the dense state limit {STATE_QUBIT_LIMIT}")
        if normalize:
            nrm = np.linalg.norm(amps)
            if nrm < 1e-150:
                raise ValidationError("cannot normalize a numerically zero vector")
            amps = amps / nrm
        state = cls(q, amps)
        state.require_normalized()
        return state

    @classmethod
    def computational_basis(cls, num_qubits: int, index: int = 0) -> "PureState":
        if num_qubits < 1 or num_qubits > STATE_QUBIT_LIMIT:
            raise ValidationError(f"num_qubits={num_qubits} outside 1..{STATE_QUBIT_LIMIT}")
        dim = 1 << num_qubits
        if not 0 <= index < dim:
            raise ValidationError(f"basis index {index} outside 0..{dim - 1}")
        amps = np.zeros(dim, dtype=np.complex128)
        amps[index] = 1.0
        return cls(num_qubits, amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def require_normalized(self, tol: float = NORM_TOL) -> None:
        nrm = self.norm()
        if abs(nrm - 1.0) > tol:
            raise ValidationError(f"state norm {nrm!r} deviates from 1 by more than {tol}")

    def overlap(self, other: "PureState") -> complex:
        if other.num_qubits != self.num_qubits:
            raise ValidationError("overlap requires equal qubit counts")
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def _check_qubit(state: PureState, qubit: int) -> None:
    if not 1 <= qubit <= state.num_qubits:
        raise ValidationError(f"qubit {qubit} outside 1..{state.num_qubits}")


def apply_single_qubit(state: PureState, qubit: int, op) -> np.ndarray:
    """Return (op on `qubit`) |state> as a raw, possibly unnormalised array."""
    _check_qubit(state, qubit)
    mat = _as_operator(op)
    return _backend.apply_one_qubit(state.amplitudes, state.num_qubits, qubit, mat)


def single_qubit_expectation(state: PureState, qubit: int, op) -> complex:
    """Return <state| op_qubit |state>."""
    _check_qubit(state, qubit)
    mat = _as_operator(op)
    return complex(_backend.expect_one_qubit(state.amplitudes, state.num_qubits, qubit, mat))


def outcome_probabilities(state: PureState, qubit: int, povm) -> np.ndarray:
    """Probabilities <state|E_mu|state> for each effect of a POVM on one qubit.

    Clamps tiny negatives from roundoff; anything below -1e-12, or a total
    off 1 by more than 1e-10, is treated as an invalid POVM/state pair.
    """
    probs = np.empty(len(povm.elements))
    for mu, effect in enumerate(povm.elements):
        p = single_qubit_expectation(state, qubit, effect).real
        if p < -1e-12:
            raise ValidationError(
                f"effect {mu} of '{povm.label}' gave probability {p:.3e} < 0"
            )
        probs[mu] = min(max(p, 0.0), 1.0)
    total = probs.sum()
    if abs(total - 1.0) > 1e-10:
        raise ValidationError(
            f"POVM '{povm.label}' probabilities sum to {total!r}, not 1"
        )
    return probs


def collapse(state: PureState, qubit: int, povm, outcome: int) -> tuple[PureState, float]:
    """Apply the POVM's Kraus operator for `outcome` and renormalise.

    Returns (post-measurement state, outcome probability). Conditioning on an
    outcome with numerically zero probability raises ZeroProbabilityError.
    """
    if not 0 <= outcome < len(povm.elements):
        raise ValidationError(f"outcome {outcome} outside POVM '{povm.label}'")
    raw = apply_single_qubit(state, qubit, povm.kraus[outcome])
    prob = float(np.vdot(raw, raw).real)
    if prob <= 1e-14:
        raise ZeroProbabilityError(
            f"outcome {outcome} of '{povm.label}' on qubit {qubit} has probability {prob:.3e}"
        )
    post = PureState(state.num_qubits, raw / np.sqrt(prob))
    return post, min(prob, 1.0)


def product_expectation(state: PureState, assignment: Mapping[int, np.ndarray]) -> complex:
    """Return <state| tensor product of per-qubit operators |state>.

    `assignment` maps qubit index to a 2x2 operator; unassigned qubits get
    the identity. Applies the operators sequentially, so cost is
    O(len(assignment) * 2^q).
    """
    acc = state.amplitudes
    for qubit, op in assignment.items():
        _check_qubit(state, qubit)
        mat = _as_operator(op)
        acc = _backend.apply_one_qubit(acc, state.num_qubits, qubit, mat)
    return complex(np.vdot(state.amplitudes, acc))


def parity_signs(num_qubits: int) -> np.ndarray:
    """(-1)^popcount(i) over the computational basis, as a float vector."""
    if not 1 <= num_qubits <= STATE_QUBIT_LIMIT:
        raise ValidationError(f"num_qubits={num_qubits} outside 1..{STATE_QUBIT_LIMIT}")
    idx = np.arange(1 << num_qubits, dtype=np.uint64)
    for shift in (32, 16, 8, 4, 2, 1):
        idx ^= idx >> np.uint64(shift)
    return 1.0 - 2.0 * (idx & np.uint64(1)).astype(np.float64)


def even_parity_expectation(state: PureState) -> float:
    """<state|P|state> for P projecting onto even-weight basis states.

    Closed form (1 + <Z...Z>)/2, exact at any q the state itself allows.
    """
    probs = np.abs(state.amplitudes) ** 2
    return float(0.5 * (1.0 + parity_signs(state.num_qubits) @ probs))


def dense_eigenvalues(op) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix, descending; rejects non-Hermitian input."""
    mat = np.asarray(op, dtype=np.complex128)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {mat.shape}")
    if mat.shape[0] > 1 << DENSE_QUBIT_LIMIT:
        raise ValidationError(f"matrix dimension {mat.shape[0]} exceeds dense limit")
    if np.max(np.abs(mat - mat.conj().T)) > 1e-10:
        raise ValidationError("matrix is not Hermitian within 1e-10")
    return np.linalg.eigvalsh(mat)[::-1].copy()


def require_dense_qubits(num_qubits: int) -> None:
    """Guard for code paths that materialise 2^q x 2^q matrices."""
    if num_qubits > DENSE_QUBIT_LIMIT:
        raise ValidationError(
            f"q={num_qubits} exceeds the dense operator limit {DENSE_QUBIT_LIMIT}"
        )
