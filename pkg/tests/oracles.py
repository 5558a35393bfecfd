"""Independent reference implementations the tests check the package against.

Everything here is deliberately naive and self-contained: explicit kron
chains, per-amplitude loops, an integer-bitmask interpreter for control
circuits, and 50-digit mpmath arithmetic for the tail bounds. Nothing
imports the package's kernels, register machinery, or evaluators, so an
agreement between the two routes is meaningful.
"""
import math

import mpmath
import numpy as np

mpmath.mp.dps = 50

I2 = np.eye(2, dtype=complex)


# ---------------------------------------------------------------------------
# dense single-qubit / product operators (qubit 1 = most significant bit)

def dense_one_qubit(num_qubits, target, op):
    """2^q x 2^q matrix applying `op` to the 1-based qubit `target`."""
    mat = np.eye(1, dtype=complex)
    for pos in range(1, num_qubits + 1):
        factor = np.asarray(op, dtype=complex) if pos == target else I2
        mat = np.kron(mat, factor)
    return mat


def dense_assignment(num_qubits, assignment):
    """Tensor product of per-qubit 2x2 operators, identity where omitted."""
    mat = np.eye(1, dtype=complex)
    for pos in range(1, num_qubits + 1):
        mat = np.kron(mat, np.asarray(assignment.get(pos, I2), dtype=complex))
    return mat


def kron_vector(site_vectors):
    """Statevector of a product state given per-site length-2 vectors."""
    vec = np.ones(1, dtype=complex)
    for v in site_vectors:
        vec = np.kron(vec, np.asarray(v, dtype=complex))
    return vec


# ---------------------------------------------------------------------------
# integer-bitmask control circuit interpreter

class IntRegisterSim:
    """Replays an instance's control circuit on a plain Python int.

    Consumes the serialized JSON document directly: wire w is bit w of the
    integer, every region is little-endian at its declared offset, outcome
    slot i occupies bits [m + i*b, m + (i+1)*b).
    """

    def __init__(self, doc):
        self.doc = doc
        self.q = int(doc["q"])
        self.b = int(doc["outcome_bits"])
        self.layout = {name: tuple(spec) for name, spec in doc["layout"].items()}

    def _decode(self, word, name):
        off, width = self.layout[name]
        return (word >> off) & ((1 << width) - 1)

    def run(self, count, outcomes):
        word = 0
        x_off = self.layout["x"][0]
        for j, ch in enumerate(self.doc.get("input_x", "")):
            if ch == "1":
                word |= 1 << (x_off + j)
        k_off, k_width = self.layout["k"]
        for j in range(k_width):
            if (count >> j) & 1:
                word |= 1 << (k_off + j)
        m_off = self.layout["m"][0]
        for i, mu in enumerate(outcomes):
            for j in range(self.b):
                if (mu >> j) & 1:
                    word |= 1 << (m_off + i * self.b + j)
        for gate in self.doc["gates"]:
            wires = gate["wires"]
            pattern = 0
            for j, wire in enumerate(wires):
                pattern |= ((word >> wire) & 1) << j
            image = gate["table"][pattern]
            for j, wire in enumerate(wires):
                if (image >> j) & 1:
                    word |= 1 << wire
                else:
                    word &= ~(1 << wire)
        return word

    def decision(self, count, outcomes):
        """('output', y) at count == q, else ('measure', qubit, alpha)."""
        word = self.run(count, outcomes)
        if count == self.q:
            return ("output", self._decode(word, "y") & 1)
        return ("measure", self._decode(word, "k"), self._decode(word, "alpha"))

    def final_value(self, outcomes, t=0):
        """Accept bit, or the first t little-endian m bits for samplers."""
        word = self.run(self.q, outcomes)
        if t == 0:
            return self._decode(word, "y") & 1
        return (word >> self.layout["m"][0]) & ((1 << t) - 1)


def effects_from_doc(doc):
    """POVM effect matrices from a serialized instance, one list per entry."""
    table = []
    for entry in doc["povm_table"]:
        effects = []
        for rows in entry["effects"]:
            effects.append(
                np.array([[complex(c[0], c[1]) for c in row] for row in rows])
            )
        table.append(effects)
    return table


def enumerate_product_histories(doc, amps):
    """Every outcome history of a decision/sampling instance, independently.

    Decisions come from the integer simulator; each history's probability is
    a single dense expectation of the tensor product of its chosen effects
    (legal because each effect acts on a distinct qubit). Returns a list of
    (outcomes, final_value, probability) triples, zero-probability included.
    """
    sim = IntRegisterSim(doc)
    effects = effects_from_doc(doc)
    task = doc.get("task", {"kind": "decision"})
    t = int(task.get("t", 0)) if task.get("kind") == "sampling" else 0
    psi = np.asarray(amps, dtype=complex)
    rows = []

    def walk(count, outcomes, assign):
        kind, *rest = sim.decision(count, outcomes)
        if kind == "output":
            op = dense_assignment(sim.q, assign)
            prob = float(np.real(np.vdot(psi, op @ psi)))
            rows.append((outcomes, sim.final_value(outcomes, t), prob))
            return
        qubit, alpha = rest
        assert 1 <= qubit <= sim.q and qubit not in assign, (qubit, outcomes)
        for mu, effect in enumerate(effects[alpha]):
            walk(count + 1, outcomes + (mu,), {**assign, qubit: effect})

    walk(0, (), {})
    return rows


# ---------------------------------------------------------------------------
# Schmidt-rank machinery

def naive_expand(local_vectors, coeffs):
    """sum_j c_j (v_j1 x ... x v_jq) by a per-amplitude triple loop."""
    arr = np.asarray(local_vectors, dtype=complex)
    c = np.asarray(coeffs, dtype=complex)
    rank, q, _ = arr.shape
    out = np.zeros(1 << q, dtype=complex)
    for i in range(1 << q):
        for j in range(rank):
            term = c[j]
            for site in range(q):
                term = term * arr[j, site, (i >> (q - 1 - site)) & 1]
            out[i] += term
    return out


def dense_projector_sum(local_vectors):
    """R = sum_j |phi_j><phi_j| built from explicit kron products."""
    arr = np.asarray(local_vectors, dtype=complex)
    rank, q, _ = arr.shape
    dim = 1 << q
    out = np.zeros((dim, dim), dtype=complex)
    for j in range(rank):
        vec = kron_vector(arr[j])
        out += np.outer(vec, vec.conj())
    return out


# ---------------------------------------------------------------------------
# geometric entanglement of GHZ states

def ghz_state(num_qubits):
    amps = np.zeros(1 << num_qubits, dtype=complex)
    amps[0] = amps[-1] = 1.0 / math.sqrt(2.0)
    return amps


def ghz_grid_overlap(num_qubits, steps=200):
    """Max squared product overlap with GHZ over a theta grid.

    For GHZ the optimum is a symmetric real ansatz, so scanning theta with
    phi = 0 is exhaustive: overlap = (cos^q(t/2) + sin^q(t/2))^2 / 2.
    """
    best = 0.0
    for i in range(steps + 1):
        theta = math.pi * i / steps
        c = math.cos(theta / 2.0) ** num_qubits
        s = math.sin(theta / 2.0) ** num_qubits
        best = max(best, (c + s) ** 2 / 2.0)
    return best


# ---------------------------------------------------------------------------
# Clopper-Pearson closed-form edges

def cp_zero_upper(trials, confidence=0.95):
    """Exact upper limit for 0 successes in n trials: 1 - (alpha/2)^(1/n)."""
    alpha = 1.0 - confidence
    return 1.0 - (alpha / 2.0) ** (1.0 / trials)


def cp_full_lower(trials, confidence=0.95):
    """Exact lower limit for n successes in n trials: (alpha/2)^(1/n)."""
    alpha = 1.0 - confidence
    return (alpha / 2.0) ** (1.0 / trials)


# ---------------------------------------------------------------------------
# 50-digit bound formulas. Inputs pass through mpmath.mpf without a string
# detour, so the oracle evaluates the same binary floats the package sees.

def mp_levy_constant():
    return 1 / (9 * mpmath.pi**3)


def mp_schmidt_constant():
    return 1 / (1296 * mpmath.pi**3)


def _mp_circuit(width, gates):
    if gates == 0:
        return mpmath.mpf(0)
    return 3 * gates * (24 * mpmath.log(2) + mpmath.log(width))


def mp_levy_log(eps, dim, lam):
    eps, lam = mpmath.mpf(eps), mpmath.mpf(lam)
    return mpmath.log(4) - mp_levy_constant() * eps**2 * dim / lam**2


def mp_haar_log(eps, q, w, v):
    eps = mpmath.mpf(eps)
    return _mp_circuit(w, v) - mp_levy_constant() * eps**2 * mpmath.power(2, q)


def mp_sampling_log(eps, q, w, v, t):
    eps = mpmath.mpf(eps)
    tail = mp_levy_constant() * eps**2 * mpmath.power(2, q - 2 * t)
    return t * mpmath.log(2) + _mp_circuit(w, v) - tail


def mp_schmidt_log(eps, q, w, v, rank):
    eps = mpmath.mpf(eps)
    prefactor = mpmath.log(mpmath.power(2, q) + mpmath.exp(_mp_circuit(w, v)))
    return prefactor - mp_schmidt_constant() * eps**2 * mpmath.cbrt(rank)


def mp_operator_norm_log(q, rank, reduced):
    return q * mpmath.log(2) - mpmath.mpf(rank) / (3 * mpmath.power(2, reduced))


def mp_hoeffding_log(eps, rank):
    eps = mpmath.mpf(eps)
    return mpmath.log(2) - 2 * eps**2 * rank


def mp_circuit_counts(width, gates):
    """(exact, relaxed) log counts; the exact one from an exact integer."""
    if gates == 0:
        return mpmath.mpf(0), -mpmath.log(6)
    exact = mpmath.log((8**8 * math.comb(width, 3)) ** gates)
    relaxed = 3 * gates * (24 * mpmath.log(2) + mpmath.log(width)) - mpmath.log(6)
    return exact, relaxed
