"""Single-qubit POVMs, their Kraus conventions, and the measurement table.

An effect list (E_0, ..., E_{r-1}) must be Hermitian, positive semidefinite
and sum to the identity. The canonical Kraus operator for outcome mu is the
principal square root sqrt(E_mu); any other valid choice differs by a left
unitary and leaves all outcome statistics unchanged.
"""
from __future__ import annotations

import dataclasses
import math
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError

EFFECT_TOL = 1e-10


def _as_effect(mat) -> np.ndarray:
    arr = np.ascontiguousarray(mat, dtype=np.complex128)
    if arr.shape != (2, 2):
        raise ValidationError(f"effect must be 2x2, got shape {arr.shape}")
    return arr


def _sqrt_psd(mat: np.ndarray) -> np.ndarray:
    # Hermitise first so that sqrt of a slightly asymmetric input stays sane;
    # genuine violations are reported by validate(), not here.
    herm = 0.5 * (mat + mat.conj().T)
    w, u = np.linalg.eigh(herm)
    root = u @ np.diag(np.sqrt(np.clip(w, 0.0, None))) @ u.conj().T
    return np.ascontiguousarray(root)


@dataclasses.dataclass
class Povm:
    """A labelled single-qubit POVM with an explicit Kraus choice."""

    label: str
    elements: tuple[np.ndarray, ...]
    kraus: tuple[np.ndarray, ...] = ()

    def __init__(self, label: str, elements: Iterable, kraus: Iterable | None = None):
        self.label = str(label)
        self.elements = tuple(_as_effect(e) for e in elements)
        if not self.elements:
            raise ValidationError(f"POVM '{label}' has no effects")
        if len(self.elements) > 256:
            raise ValidationError(f"POVM '{label}' has {len(self.elements)} effects (max 256)")
        if kraus is None:
            self.kraus = tuple(_sqrt_psd(e) for e in self.elements)
        else:
            self.kraus = tuple(_as_effect(k) for k in kraus)
            if len(self.kraus) != len(self.elements):
                raise ValidationError("Kraus list length differs from effect list")

    @property
    def arity(self) -> int:
        return len(self.elements)

    def with_rotated_kraus(self, unitaries: Sequence[np.ndarray]) -> "Povm":
        """Replace each Kraus operator K_mu by U_mu K_mu.

        Each U must be unitary to 1e-10; the rotated family induces the same
        probabilities because (U K)^dag (U K) = K^dag K.
        """
        if len(unitaries) != self.arity:
            raise ValidationError("need one unitary per outcome")
        rotated = []
        for mu, u in enumerate(unitaries):
            mat = _as_effect(u)
            if np.max(np.abs(mat.conj().T @ mat - np.eye(2))) > EFFECT_TOL:
                raise ValidationError(f"matrix {mu} is not unitary within {EFFECT_TOL}")
            rotated.append(mat @ self.kraus[mu])
        return Povm(self.label, self.elements, kraus=rotated)


@dataclasses.dataclass(frozen=True)
class PovmValidation:
    passed: bool
    completeness_deficit: float
    hermiticity_deficits: tuple[float, ...]
    min_eigenvalues: tuple[float, ...]
    messages: tuple[str, ...]


def validate(povm: Povm, tol: float = EFFECT_TOL) -> PovmValidation:
    """Check hermiticity, positivity and completeness of a POVM."""
    herm = []
    mins = []
    messages = []
    total = np.zeros((2, 2), dtype=np.complex128)
    for mu, effect in enumerate(povm.elements):
        dev = float(np.max(np.abs(effect - effect.conj().T)))
        herm.append(dev)
        if dev > tol:
            messages.append(f"effect {mu} deviates from Hermitian by {dev:.3e}")
        w = np.linalg.eigvalsh(0.5 * (effect + effect.conj().T))
        mins.append(float(w[0]))
        if w[0] < -tol:
            messages.append(f"effect {mu} has eigenvalue {w[0]:.3e} < 0")
        total += effect
    deficit = float(np.max(np.abs(total - np.eye(2))))
    if deficit > tol:
        messages.append(f"effects sum to identity only within {deficit:.3e}")
    for mu, k in enumerate(povm.kraus):
        dev = float(np.max(np.abs(k.conj().T @ k - povm.elements[mu])))
        if dev > 1e-8:
            messages.append(f"Kraus {mu} does not reproduce its effect (dev {dev:.3e})")
    passed = not messages
    return PovmValidation(passed, deficit, tuple(herm), tuple(mins), tuple(messages))


def require_valid(povm: Povm, tol: float = EFFECT_TOL) -> None:
    report = validate(povm, tol)
    if not report.passed:
        raise ValidationError(
            f"POVM '{povm.label}' failed validation: " + "; ".join(report.messages)
        )


def mixed_outcome_distribution(povm: Povm) -> np.ndarray:
    """Outcome distribution tr(E_mu)/2 seen by the maximally mixed qubit."""
    probs = np.array([float(np.trace(e).real) / 2.0 for e in povm.elements])
    if abs(probs.sum() - 1.0) > 1e-10:
        raise ValidationError(
            f"POVM '{povm.label}' is not complete; mixed-state weights sum to {probs.sum()!r}"
        )
    return probs


def _basis_vector(theta: float, phi: float) -> np.ndarray:
    return np.array(
        [math.cos(theta / 2.0), np.exp(1j * phi) * math.sin(theta / 2.0)],
        dtype=np.complex128,
    )


def basis_povm(theta: float, phi: float, label: str | None = None) -> Povm:
    """Projective measurement along the Bloch direction (theta, phi)."""
    v = _basis_vector(theta, phi)
    p0 = np.outer(v, v.conj())
    return Povm(label or f"basis({theta:g},{phi:g})", [p0, np.eye(2) - p0])


def trine_povm() -> Povm:
    """Three symmetric rank-one effects (2/3)|e_j><e_j| in the x-z plane."""
    effects = []
    for j in range(3):
        v = _basis_vector(2.0 * math.pi * j / 3.0, 0.0)
        effects.append((2.0 / 3.0) * np.outer(v, v.conj()))
    return Povm("trine", effects)


def builtin(name: str, *params: float) -> Povm:
    """Named measurement families: z, x, basis(theta, phi), trine."""
    if name == "z":
        return basis_povm(0.0, 0.0, label="z")
    if name == "x":
        return basis_povm(math.pi / 2.0, 0.0, label="x")
    if name == "basis":
        if len(params) != 2:
            raise ValidationError("basis POVM takes exactly (theta, phi)")
        return basis_povm(float(params[0]), float(params[1]))
    if name == "trine":
        return trine_povm()
    raise ValidationError(f"unknown builtin POVM '{name}'")


class PovmTable:
    """Indexed collection of POVMs addressed by the control circuit."""

    def __init__(self, povms: Iterable[Povm]):
        self.povms = tuple(povms)
        if not self.povms:
            raise ValidationError("POVM table is empty")

    def __len__(self) -> int:
        return len(self.povms)

    def __getitem__(self, index: int) -> Povm:
        return self.povms[index]

    def __iter__(self):
        return iter(self.povms)

    @property
    def max_arity(self) -> int:
        return max(p.arity for p in self.povms)

    @property
    def outcome_bits(self) -> int:
        """Bits needed to store any outcome index from this table."""
        return max(1, (self.max_arity - 1).bit_length())

    @property
    def index_bits(self) -> int:
        """Bits needed to address a table entry (at least 1)."""
        return max(1, (len(self.povms) - 1).bit_length())

    def require_valid(self) -> None:
        for povm in self.povms:
            require_valid(povm)


def _matrix_to_json(mat: np.ndarray) -> list:
    return [[[float(x.real), float(x.imag)] for x in row] for row in mat]


def _matrix_from_json(data) -> np.ndarray:
    arr = np.array([[complex(c[0], c[1]) for c in row] for row in data], dtype=np.complex128)
    if arr.shape != (2, 2):
        raise ValidationError(f"serialised effect has shape {arr.shape}, expected 2x2")
    return arr


def table_to_json(table: PovmTable) -> list:
    out = []
    for povm in table:
        out.append(
            {
                "label": povm.label,
                "dimension": 2,
                "effects": [_matrix_to_json(e) for e in povm.elements],
            }
        )
    return out


def table_from_json(data) -> PovmTable:
    if not isinstance(data, list):
        raise ValidationError("povm_table must be a list")
    povms = []
    for entry in data:
        try:
            label = entry["label"]
            dim = entry.get("dimension", 2)
            effects = entry["effects"]
        except (TypeError, KeyError) as exc:
            raise ValidationError(f"malformed POVM entry: {exc}") from exc
        if dim != 2:
            raise ValidationError(f"only dimension-2 POVMs are supported, got {dim}")
        povms.append(Povm(label, [_matrix_from_json(e) for e in effects]))
    return PovmTable(povms)
