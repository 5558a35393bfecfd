"""Runs instances against states: trajectories, enumeration, operators.

A trajectory interleaves control runs with single-qubit measurements on a
resource state; the maximally mixed surrogate replaces each measurement by
a classical draw with weights tr(E_mu)/2. Histories are the full outcome
records; an instance is complete when every history measures every qubit
exactly once, and trajectory execution re-checks that on the fly.
"""
from __future__ import annotations

import dataclasses
from typing import Sequence

import numpy as np

from . import _backend, control, povm as povm_mod
from .control import Measure, Output
from .errors import (
    IncompleteModelError,
    InvalidPovmIndexError,
    InvalidQubitIndexError,
    ValidationError,
    ZeroProbabilityError,
)
from .statevector import PureState

# Dense accepting operators hold 4^q complex entries; 10 qubits is ~16 MiB.
OPERATOR_QUBIT_LIMIT = 10


class MixedSurrogate:
    """Sentinel source: the maximally mixed state, simulated classically."""

    def __repr__(self):
        return "MIXED"


MIXED = MixedSurrogate()


@dataclasses.dataclass(frozen=True)
class History:
    """One complete run: (qubit, povm_index, outcome) steps plus the output.

    For decision tasks `output` is the accept bit; for sampling tasks it is
    the integer encoded by the first t bits of the m region after the final
    control run. `probability` is the joint probability of the outcome
    sequence under the source that produced it.
    """

    steps: tuple[tuple[int, int, int], ...]
    output: int
    probability: float


class _Prepared:
    """Per-instance caches shared by the trajectory and enumeration loops.

    The register bank is rebuilt per control run from a template (zeros with
    the x region prefilled) plus precomputed little-endian encodings of the
    counter and of each possible outcome, so the per-step Python work is a
    handful of slice assignments.
    """

    def __init__(self, instance: control.AmbqcInstance):
        self.instance = instance
        self.circuit = instance.circuit
        self.x_arr = control.parse_bits(instance.input_x, self.circuit.num_inputs)
        self.povms = instance.povm_table.povms
        self.povm_count = len(self.povms)
        self.elements = [p.elements for p in self.povms]
        self.kraus = [p.kraus for p in self.povms]
        self.mixed = [povm_mod.mixed_outcome_distribution(p) for p in self.povms]
        self.mixed_cum = [np.cumsum(w) for w in self.mixed]
        self.task = instance.task
        self.num_qubits = self.circuit.num_qubits
        layout = self.circuit.layout
        self.outcome_bits = self.circuit.outcome_bits
        self.template = np.zeros(layout.width, dtype=np.uint8)
        if layout.x.width:
            self.template[layout.x.offset : layout.x.offset + layout.x.width] = self.x_arr
        counter_bits = layout.k.width
        self.count_enc = np.zeros((self.num_qubits + 1, counter_bits), dtype=np.uint8)
        for c in range(self.num_qubits + 1):
            for j in range(counter_bits):
                self.count_enc[c, j] = (c >> j) & 1
        max_arity = instance.povm_table.max_arity
        self.outcome_enc = np.zeros((max_arity, self.outcome_bits), dtype=np.uint8)
        for mu in range(max_arity):
            for j in range(self.outcome_bits):
                self.outcome_enc[mu, j] = (mu >> j) & 1
        self.k_off, self.k_width = layout.k.offset, layout.k.width
        self.m_off = layout.m.offset
        self.alpha_off, self.alpha_width = layout.alpha.offset, layout.alpha.width
        self.y_off = layout.y.offset
        self.gate_arrays = self.circuit.compiled()

    def run_bank(self, count: int, m_bits: np.ndarray, filled: int) -> np.ndarray:
        bits = self.template.copy()
        bits[self.k_off : self.k_off + self.k_width] = self.count_enc[count]
        if filled:
            bits[self.m_off : self.m_off + filled] = m_bits[:filled]
        wires, arities, tables = self.gate_arrays
        _backend.run_gate_program(bits, wires, arities, tables)
        return bits

    def decide_bank(self, bits: np.ndarray, count: int):
        if count == self.num_qubits:
            return Output(bool(bits[self.y_off]))
        qubit = 0
        for j in range(self.k_width):
            qubit |= int(bits[self.k_off + j]) << j
        if qubit == 0 or qubit > self.num_qubits:
            raise InvalidQubitIndexError(
                f"control selected qubit {qubit} outside 1..{self.num_qubits}"
            )
        alpha = 0
        for j in range(self.alpha_width):
            alpha |= int(bits[self.alpha_off + j]) << j
        if alpha >= self.povm_count:
            raise InvalidPovmIndexError(
                f"control selected POVM {alpha} outside 0..{self.povm_count - 1}"
            )
        return Measure(qubit, alpha)

    def _m_bits_from(self, outcomes: Sequence[int]) -> tuple[np.ndarray, int]:
        b = self.outcome_bits
        m_bits = np.zeros(self.num_qubits * b, dtype=np.uint8)
        for i, mu in enumerate(outcomes):
            m_bits[i * b : (i + 1) * b] = self.outcome_enc[mu]
        return m_bits, len(outcomes) * b

    def decide(self, count: int, outcomes: Sequence[int]):
        m_bits, filled = self._m_bits_from(outcomes)
        return self.decide_bank(self.run_bank(count, m_bits, filled), count)

    def final_from_bank(self, bits: np.ndarray) -> int:
        if self.task.kind == "decision":
            return int(bits[self.y_off])
        value = 0
        for j in range(self.task.t):
            value |= int(bits[self.m_off + j]) << j
        return value

    def final_output(self, outcomes: Sequence[int]) -> int:
        """Accept bit, or the t-bit m-register value for sampling tasks."""
        m_bits, filled = self._m_bits_from(outcomes)
        return self.final_from_bank(self.run_bank(self.num_qubits, m_bits, filled))


def _require_state(instance: control.AmbqcInstance, state: PureState) -> None:
    if state.num_qubits != instance.num_qubits:
        raise ValidationError(
            f"state has {state.num_qubits} qubits, instance expects {instance.num_qubits}"
        )
    state.require_normalized()


def run_trajectory(instance: control.AmbqcInstance, state: PureState, rng) -> History:
    """Sample one complete run on a pure state. Returns the realised History."""
    _require_state(instance, state)
    prepared = _Prepared(instance)
    return _trajectory(prepared, state.amplitudes, rng)


def _trajectory(prepared: _Prepared, amps: np.ndarray, rng) -> History:
    q = prepared.num_qubits
    b = prepared.outcome_bits
    psi = amps
    m_bits = np.zeros(q * b, dtype=np.uint8)
    steps = []
    measured = 0
    joint = 1.0
    for count in range(q):
        bank = prepared.run_bank(count, m_bits, count * b)
        decision = prepared.decide_bank(bank, count)
        bit = 1 << decision.qubit
        if measured & bit:
            raise IncompleteModelError(
                f"qubit {decision.qubit} measured twice after {count} steps",
                witness=tuple(steps) + ((decision.qubit, decision.povm_index, None),),
            )
        measured |= bit
        elements = prepared.elements[decision.povm_index]
        arity = len(elements)
        # Sample with a running cumulative; the last outcome's probability is
        # whatever mass the others leave, so its expectation is never needed.
        u = rng.random()
        acc = 0.0
        mu = arity - 1
        prob = None
        for j in range(arity - 1):
            p = _backend.expect_one_qubit(psi, q, decision.qubit, elements[j]).real
            p = min(max(p, 0.0), 1.0)
            acc += p
            if u < acc:
                mu = j
                prob = p
                break
        if prob is None:
            prob = max(1.0 - acc, 0.0)
        raw = _backend.apply_one_qubit(psi, q, decision.qubit, prepared.kraus[decision.povm_index][mu])
        nrm2 = float(np.vdot(raw, raw).real)
        if nrm2 <= 1e-300:
            raise ZeroProbabilityError(
                f"sampled outcome {mu} on qubit {decision.qubit} with zero amplitude"
            )
        psi = raw / np.sqrt(nrm2)
        joint *= prob
        m_bits[count * b : (count + 1) * b] = prepared.outcome_enc[mu]
        steps.append((decision.qubit, decision.povm_index, mu))
    bank = prepared.run_bank(q, m_bits, q * b)
    output = prepared.final_from_bank(bank)
    return History(tuple(steps), output, joint)


def run_surrogate_trajectory(instance: control.AmbqcInstance, rng) -> History:
    """Sample one run of the maximally mixed surrogate (no quantum state)."""
    prepared = _Prepared(instance)
    return _surrogate_trajectory(prepared, rng)


def _surrogate_trajectory(prepared: _Prepared, rng) -> History:
    q = prepared.num_qubits
    b = prepared.outcome_bits
    m_bits = np.zeros(q * b, dtype=np.uint8)
    steps = []
    measured = 0
    joint = 1.0
    for count in range(q):
        bank = prepared.run_bank(count, m_bits, count * b)
        decision = prepared.decide_bank(bank, count)
        bit = 1 << decision.qubit
        if measured & bit:
            raise IncompleteModelError(
                f"qubit {decision.qubit} measured twice after {count} steps",
                witness=tuple(steps) + ((decision.qubit, decision.povm_index, None),),
            )
        measured |= bit
        cum = prepared.mixed_cum[decision.povm_index]
        mu = int(np.searchsorted(cum, rng.random(), side="right"))
        mu = min(mu, len(cum) - 1)
        joint *= float(prepared.mixed[decision.povm_index][mu])
        m_bits[count * b : (count + 1) * b] = prepared.outcome_enc[mu]
        steps.append((decision.qubit, decision.povm_index, mu))
    bank = prepared.run_bank(q, m_bits, q * b)
    output = prepared.final_from_bank(bank)
    return History(tuple(steps), output, joint)


@dataclasses.dataclass(frozen=True)
class AcceptanceEstimate:
    estimate: float
    stderr: float
    accepted: int
    trials: int


def estimate_acceptance(instance: control.AmbqcInstance, source, trials: int, rng) -> AcceptanceEstimate:
    """Monte Carlo acceptance probability over `trials` fresh trajectories."""
    if instance.task.kind != "decision":
        raise ValidationError("acceptance estimation needs a decision task")
    if trials < 1:
        raise ValidationError("need at least one trial")
    prepared = _Prepared(instance)
    accepted = 0
    if isinstance(source, MixedSurrogate):
        for _ in range(trials):
            accepted += _surrogate_trajectory(prepared, rng).output
    else:
        _require_state(instance, source)
        amps = source.amplitudes
        for _ in range(trials):
            accepted += _trajectory(prepared, amps, rng).output
    p_hat = accepted / trials
    stderr = float(np.sqrt(p_hat * (1.0 - p_hat) / trials))
    return AcceptanceEstimate(p_hat, stderr, accepted, trials)


@dataclasses.dataclass(frozen=True)
class HistoryEnumeration:
    histories: tuple[History, ...]
    acceptance: float | None
    total_probability: float


def enumerate_histories(instance: control.AmbqcInstance, source) -> HistoryEnumeration:
    """Exhaustively expand every outcome history with its exact probability.

    Branches of exactly zero probability are pruned, so the history list may
    be shorter than the full product of arities; probabilities of the listed
    histories always sum to 1 within 1e-10. `source` is a PureState or MIXED.
    """
    prepared = _Prepared(instance)
    q = prepared.num_qubits
    max_count = instance.povm_table.max_arity ** q
    if max_count > control.MAX_HISTORIES:
        raise ValidationError(
            f"history count {max_count} exceeds enumeration cap {control.MAX_HISTORIES}"
        )
    histories: list[History] = []
    if isinstance(source, MixedSurrogate):
        _enumerate_mixed(prepared, 0, (), (), 0, 1.0, histories)
    else:
        _require_state(instance, source)
        _enumerate_state(prepared, source.amplitudes, 0, (), (), 0, histories)
    total = sum(h.probability for h in histories)
    if abs(total - 1.0) > 1e-10:
        raise ValidationError(f"history probabilities sum to {total!r}, not 1")
    acceptance = None
    if instance.task.kind == "decision":
        acceptance = sum(h.probability for h in histories if h.output)
    return HistoryEnumeration(tuple(histories), acceptance, total)


def _enumerate_state(prepared, psi, count, outcomes, steps, measured, histories):
    q = prepared.num_qubits
    if count == q:
        prob = float(np.vdot(psi, psi).real)
        output = prepared.final_output(outcomes)
        histories.append(History(steps, output, prob))
        return
    decision = prepared.decide(count, outcomes)
    bit = 1 << decision.qubit
    if measured & bit:
        raise IncompleteModelError(
            f"qubit {decision.qubit} measured twice (outcomes {outcomes})",
            witness=steps + ((decision.qubit, decision.povm_index, None),),
        )
    kraus = prepared.kraus[decision.povm_index]
    for mu, k in enumerate(kraus):
        child = _backend.apply_one_qubit(psi, q, decision.qubit, k)
        if float(np.vdot(child, child).real) == 0.0:
            continue
        _enumerate_state(
            prepared,
            child,
            count + 1,
            outcomes + (mu,),
            steps + ((decision.qubit, decision.povm_index, mu),),
            measured | bit,
            histories,
        )


def _enumerate_mixed(prepared, count, outcomes, steps, measured, weight, histories):
    q = prepared.num_qubits
    if count == q:
        output = prepared.final_output(outcomes)
        histories.append(History(steps, output, weight))
        return
    decision = prepared.decide(count, outcomes)
    bit = 1 << decision.qubit
    if measured & bit:
        raise IncompleteModelError(
            f"qubit {decision.qubit} measured twice (outcomes {outcomes})",
            witness=steps + ((decision.qubit, decision.povm_index, None),),
        )
    weights = prepared.mixed[decision.povm_index]
    for mu, w in enumerate(weights):
        if w == 0.0:
            continue
        _enumerate_mixed(
            prepared,
            count + 1,
            outcomes + (mu,),
            steps + ((decision.qubit, decision.povm_index, mu),),
            measured | bit,
            weight * float(w),
            histories,
        )


def _embed_at(op2: np.ndarray, child: np.ndarray, pos: int, child_qubits: int) -> np.ndarray:
    """Tensor a 2x2 operator into a child operator at qubit position `pos`."""
    dl = 1 << pos
    dr = 1 << (child_qubits - pos)
    m4 = child.reshape(dl, dr, dl, dr)
    out = np.einsum("ab,icjd->iacjbd", op2, m4)
    dim = dl * 2 * dr
    return out.reshape(dim, dim)


def build_accepting_operator(instance: control.AmbqcInstance) -> tuple[np.ndarray, np.ndarray]:
    """Dense (P, Q): P sums effect tensor products over accepting histories.

    By construction 0 <= P <= 1 and Q = 1 - P, and <psi|P|psi> equals the
    trajectory acceptance probability for any state psi. Limited to
    q <= OPERATOR_QUBIT_LIMIT.
    """
    if instance.task.kind != "decision":
        raise ValidationError("accepting operators are defined for decision tasks")
    q = instance.num_qubits
    if q > OPERATOR_QUBIT_LIMIT:
        raise ValidationError(f"q={q} exceeds operator limit {OPERATOR_QUBIT_LIMIT}")
    max_count = instance.povm_table.max_arity ** q
    if max_count > control.MAX_HISTORIES:
        raise ValidationError(
            f"history count {max_count} exceeds enumeration cap {control.MAX_HISTORIES}"
        )
    prepared = _Prepared(instance)

    def node(count, outcomes, unmeasured):
        if count == q:
            accept = prepared.final_output(outcomes)
            return np.array([[1.0 + 0.0j]]) if accept else None
        decision = prepared.decide(count, outcomes)
        try:
            pos = unmeasured.index(decision.qubit)
        except ValueError:
            raise IncompleteModelError(
                f"qubit {decision.qubit} measured twice (outcomes {outcomes})"
            ) from None
        rest = unmeasured[:pos] + unmeasured[pos + 1 :]
        acc = None
        for mu, effect in enumerate(prepared.elements[decision.povm_index]):
            child = node(count + 1, outcomes + (mu,), rest)
            if child is None:
                continue
            emb = _embed_at(effect, child, pos, len(rest))
            acc = emb if acc is None else acc + emb
        return acc

    dim = 1 << q
    p_op = node(0, (), tuple(range(1, q + 1)))
    if p_op is None:
        p_op = np.zeros((dim, dim), dtype=np.complex128)
    p_op = 0.5 * (p_op + p_op.conj().T)
    return p_op, np.eye(dim) - p_op


def acceptance_from_operator(p_op: np.ndarray, state: PureState) -> float:
    """<psi|P|psi>, clipped into [0, 1]."""
    if p_op.shape[0] != state.amplitudes.shape[0]:
        raise ValidationError("operator and state dimensions differ")
    value = float(np.vdot(state.amplitudes, p_op @ state.amplitudes).real)
    return min(max(value, 0.0), 1.0)


def mixed_acceptance_from_operator(p_op: np.ndarray) -> float:
    """Surrogate acceptance tr(P) / 2^q."""
    return float(np.trace(p_op).real) / p_op.shape[0]


def output_distribution(
    instance: control.AmbqcInstance, source, trials: int | None = None, rng=None
) -> np.ndarray:
    """Distribution over the 2^t sampler outputs, exact or Monte Carlo."""
    if instance.task.kind != "sampling":
        raise ValidationError("output distributions are defined for sampling tasks")
    dim = 1 << instance.task.t
    dist = np.zeros(dim)
    if trials is None:
        for history in enumerate_histories(instance, source).histories:
            dist[history.output] += history.probability
        return dist
    if rng is None:
        raise ValidationError("Monte Carlo output estimation needs an rng")
    prepared = _Prepared(instance)
    if isinstance(source, MixedSurrogate):
        for _ in range(trials):
            dist[_surrogate_trajectory(prepared, rng).output] += 1.0
    else:
        _require_state(instance, source)
        for _ in range(trials):
            dist[_trajectory(prepared, source.amplitudes, rng).output] += 1.0
    return dist / trials


def l1_distance(dist_a: np.ndarray, dist_b: np.ndarray) -> float:
    a = np.asarray(dist_a, dtype=float)
    b = np.asarray(dist_b, dtype=float)
    if a.shape != b.shape:
        raise ValidationError(f"distribution shapes differ: {a.shape} vs {b.shape}")
    return float(np.abs(a - b).sum())


def total_variation(dist_a: np.ndarray, dist_b: np.ndarray) -> float:
    return 0.5 * l1_distance(dist_a, dist_b)
