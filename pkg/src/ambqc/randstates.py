"""Random resource states: Haar vectors and low Schmidt-rank ensembles.

A rank-K ensemble is K independent product vectors phi_j = v_j1 x ... x v_jq
with each v_jl Haar on the single-qubit sphere. Their unnormalised sum of
projectors R = sum_j |phi_j><phi_j| shares its nonzero spectrum with the
K x K Gram matrix G_ij = prod_l <v_il|v_jl>, which is what everything here
works with: operator norm, purity tr R^2 = sum |G_ij|^2, and state sampling.

A random rank-K state is sqrt(R)|psi_0> renormalised, psi_0 Haar. Writing
G = V diag(lambda) V^dag and drawing complex Gaussian coefficients a_k on
the support eigenbasis, the product-basis coefficients are
d = V a / sqrt(sum_k lambda_k |a_k|^2), which gives <psi|psi> = d^dag G d = 1
exactly without ever expanding the 2^q vector.
"""
from __future__ import annotations

import dataclasses
import json
import math

import numpy as np

from .errors import ValidationError
from .statevector import STATE_QUBIT_LIMIT, PureState

BINARY_STATE_MAGIC = b"AMBQCSV1"
# Relative cutoff for the numerical support of a Gram spectrum.
SUPPORT_RTOL = 1e-12


def _check_qubits(num_qubits: int) -> None:
    if not 1 <= num_qubits <= STATE_QUBIT_LIMIT:
        raise ValidationError(f"num_qubits={num_qubits} outside 1..{STATE_QUBIT_LIMIT}")


def sample_haar_state(num_qubits: int, rng) -> PureState:
    """Haar-random pure state: normalised complex Gaussian vector."""
    _check_qubits(num_qubits)
    dim = 1 << num_qubits
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return PureState.from_amplitudes(z, normalize=True)


def sample_local_vectors(num_qubits: int, rank: int, rng) -> np.ndarray:
    """(rank, num_qubits, 2) array of independent Haar single-qubit vectors."""
    _check_qubits(num_qubits)
    if rank < 1:
        raise ValidationError(f"rank={rank} must be at least 1")
    z = rng.standard_normal((rank, num_qubits, 2)) + 1j * rng.standard_normal(
        (rank, num_qubits, 2)
    )
    norms = np.linalg.norm(z, axis=2, keepdims=True)
    if np.min(norms) < 1e-150:
        raise ValidationError("degenerate zero draw for a local vector")
    return z / norms


def gram_matrix(local_vectors: np.ndarray) -> np.ndarray:
    """G_ij = prod_l <v_il|v_jl> for a (rank, q, 2) stack of local vectors."""
    arr = np.asarray(local_vectors, dtype=np.complex128)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ValidationError(f"expected shape (rank, q, 2), got {arr.shape}")
    rank, num_qubits, _ = arr.shape
    gram = np.ones((rank, rank), dtype=np.complex128)
    for site in range(num_qubits):
        gram *= arr[:, site, :].conj() @ arr[:, site, :].T
    return gram


@dataclasses.dataclass(frozen=True)
class SchmidtEnsemble:
    """K product vectors with the derived Gram spectrum."""

    local_vectors: np.ndarray  # (rank, q, 2)
    gram: np.ndarray  # (rank, rank)
    eigenvalues: np.ndarray  # descending, length rank
    eigenvectors: np.ndarray  # columns match eigenvalues
    support_rank: int

    @property
    def rank(self) -> int:
        return self.local_vectors.shape[0]

    @property
    def num_qubits(self) -> int:
        return self.local_vectors.shape[1]


def ensemble_from_vectors(local_vectors: np.ndarray) -> SchmidtEnsemble:
    gram = gram_matrix(local_vectors)
    w, v = np.linalg.eigh(gram)
    order = np.argsort(w)[::-1]
    w = np.clip(w[order], 0.0, None)
    v = v[:, order]
    cutoff = w[0] * local_vectors.shape[0] * SUPPORT_RTOL if w[0] > 0 else 0.0
    support = int(np.sum(w > cutoff))
    if support < 1:
        raise ValidationError("Gram matrix has empty numerical support")
    return SchmidtEnsemble(local_vectors, gram, w, v, support)


def sample_schmidt_ensemble(num_qubits: int, rank: int, rng) -> SchmidtEnsemble:
    return ensemble_from_vectors(sample_local_vectors(num_qubits, rank, rng))


def ensemble_operator_norm(ensemble: SchmidtEnsemble) -> float:
    """Largest eigenvalue of R (equals the largest Gram eigenvalue)."""
    return float(ensemble.eigenvalues[0])


def gram_operator_norm(local_vectors: np.ndarray) -> float:
    """Largest Gram eigenvalue without the full spectrum (cheap for big K)."""
    gram = gram_matrix(local_vectors)
    rank = gram.shape[0]
    if rank <= 64:
        return float(np.linalg.eigvalsh(gram)[-1])
    from scipy.linalg import eigh as scipy_eigh

    top = scipy_eigh(gram, subset_by_index=[rank - 1, rank - 1], eigvals_only=True)
    return float(top[0])


def ensemble_purity(ensemble: SchmidtEnsemble) -> float:
    """tr R^2 = sum_ij |G_ij|^2."""
    return float(np.sum(np.abs(ensemble.gram) ** 2))


def purity_mean_reference(num_qubits: int, rank: int) -> float:
    """Exact mean of tr R^2 over the ensemble: K + K(K-1) 2^{-q}.

    The diagonal contributes K; each off-diagonal |G_ij|^2 is a product of q
    independent single-qubit overlap squares, each with mean 1/2.
    """
    return rank + rank * (rank - 1) / float(1 << num_qubits)


@dataclasses.dataclass(frozen=True)
class SchmidtStateSample:
    """Coefficients d_j of one draw psi = sum_j d_j phi_j from an ensemble."""

    ensemble: SchmidtEnsemble
    coeffs: np.ndarray  # (rank,)

    def norm_sq(self) -> float:
        return float(np.real(self.coeffs.conj() @ self.ensemble.gram @ self.coeffs))

    def to_state(self) -> PureState:
        return expand_to_statevector(self.ensemble.local_vectors, self.coeffs)


def sample_schmidt_state(ensemble: SchmidtEnsemble, rng) -> SchmidtStateSample:
    """Draw sqrt(R)|Haar> renormalised, in product-basis coefficients."""
    r = ensemble.support_rank
    a = rng.standard_normal(r) + 1j * rng.standard_normal(r)
    scale = math.sqrt(float(np.sum(ensemble.eigenvalues[:r] * np.abs(a) ** 2)))
    if scale < 1e-150:
        raise ValidationError("degenerate zero draw for the Haar seed")
    coeffs = ensemble.eigenvectors[:, :r] @ (a / scale)
    return SchmidtStateSample(ensemble, coeffs)


def draw_schmidt_state(num_qubits: int, rank: int, rng) -> SchmidtStateSample:
    return sample_schmidt_state(sample_schmidt_ensemble(num_qubits, rank, rng), rng)


def expand_to_statevector(local_vectors: np.ndarray, coeffs: np.ndarray) -> PureState:
    """Materialise sum_j c_j phi_j as a dense state (cost rank * 2^q)."""
    arr = np.asarray(local_vectors, dtype=np.complex128)
    c = np.asarray(coeffs, dtype=np.complex128).reshape(-1)
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != c.shape[0]:
        raise ValidationError(
            f"local vectors {arr.shape} and coefficients {c.shape} do not match"
        )
    rank, num_qubits, _ = arr.shape
    _check_qubits(num_qubits)
    if rank << num_qubits > 1 << 28:
        raise ValidationError(f"expansion of rank {rank} at q={num_qubits} is too large")
    vec = c[:, None].copy()
    for site in range(num_qubits):
        vec = (vec[:, :, None] * arr[:, site, None, :]).reshape(rank, -1)
    return PureState.from_amplitudes(vec.sum(axis=0), normalize=True)


@dataclasses.dataclass(frozen=True)
class GeometricEstimate:
    """Best product overlap found and the entanglement it certifies.

    `bits` = -log2(overlap_sq) is an upper bound on the geometric measure;
    the witness product vectors reproduce `overlap_sq` exactly.
    """

    bits: float
    overlap_sq: float
    witness: np.ndarray  # (q, 2) local vectors
    iterations: int
    converged: bool
    # Per-restart overlap values after each full sweep; each sequence is
    # nondecreasing because a sweep only ever replaces a site vector by the
    # overlap-maximising one.
    traces: tuple[tuple[float, ...], ...] = ()


def _site_environment(tensor: np.ndarray, vectors: np.ndarray, site: int) -> np.ndarray:
    """Contract every site except `site` with the conjugated ansatz vectors."""
    num_qubits = tensor.ndim
    work = tensor
    for other in range(num_qubits):
        if other == site:
            continue
        # Sites are consumed in order, so a site before `site` is always at
        # axis 0 and one after it at axis 1 (axis 0 being the kept site).
        pos = 0 if other < site else 1
        work = np.tensordot(vectors[other].conj(), work, axes=([0], [pos]))
    return work


def _mean_field_vectors(tensor: np.ndarray) -> np.ndarray:
    """Per-site dominant eigenvectors of the single-qubit reduced states."""
    num_qubits = tensor.ndim
    out = np.empty((num_qubits, 2), dtype=np.complex128)
    flat = tensor.reshape(-1)
    dim = flat.shape[0]
    for site in range(num_qubits):
        left = 1 << site
        right = dim >> (site + 1)
        a = flat.reshape(left, 2, right)
        rho = np.einsum("aib,ajb->ij", a, a.conj())
        w, v = np.linalg.eigh(rho)
        out[site] = v[:, -1]
    return out


def estimate_geometric_entanglement(
    state: PureState,
    restarts: int = 8,
    max_iters: int = 400,
    tol: float = 1e-12,
    rng=None,
) -> GeometricEstimate:
    """Alternating single-site maximisation of |<product|psi>|^2.

    Each update replaces one site vector by its normalised environment
    vector, which never decreases the overlap. One start is mean-field
    (dominant eigenvectors of the single-site reduced states), the rest are
    random product vectors; the best converged overlap wins.
    """
    if restarts < 1:
        raise ValidationError("need at least one start")
    if rng is None:
        rng = np.random.default_rng(0)
    q = state.num_qubits
    tensor = state.amplitudes.reshape((2,) * q)
    best_sq = -1.0
    best_vecs = None
    best_iters = 0
    best_converged = False
    traces = []
    for start in range(restarts):
        if start == 0:
            vectors = _mean_field_vectors(tensor)
        else:
            z = rng.standard_normal((q, 2)) + 1j * rng.standard_normal((q, 2))
            vectors = z / np.linalg.norm(z, axis=1, keepdims=True)
        overlap_sq = 0.0
        converged = False
        iters = 0
        trace = []
        for iters in range(1, max_iters + 1):
            previous = overlap_sq
            for site in range(q):
                env = _site_environment(tensor, vectors, site)
                nrm = np.linalg.norm(env)
                if nrm < 1e-150:
                    z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
                    vectors[site] = z / np.linalg.norm(z)
                    continue
                vectors[site] = env / nrm
                overlap_sq = float(nrm * nrm)
            trace.append(overlap_sq)
            if overlap_sq - previous <= tol * max(1.0, overlap_sq):
                converged = True
                break
        traces.append(tuple(trace))
        if overlap_sq > best_sq:
            best_sq = overlap_sq
            best_vecs = vectors.copy()
            best_iters = iters
            best_converged = converged
    best_sq = min(max(best_sq, 1e-300), 1.0)
    return GeometricEstimate(
        bits=-math.log2(best_sq),
        overlap_sq=best_sq,
        witness=best_vecs,
        iterations=best_iters,
        converged=best_converged,
        traces=tuple(traces),
    )


def witness_overlap(state: PureState, vectors: np.ndarray) -> float:
    """|<product(vectors)|psi>|^2 for an explicit (q, 2) product ansatz."""
    arr = np.asarray(vectors, dtype=np.complex128)
    if arr.shape != (state.num_qubits, 2):
        raise ValidationError(f"witness shape {arr.shape} != ({state.num_qubits}, 2)")
    work = state.amplitudes.reshape((2,) * state.num_qubits)
    for site in range(state.num_qubits):
        work = np.tensordot(arr[site].conj(), work, axes=([0], [0]))
    return float(np.abs(work) ** 2)


def save_state_binary(state: PureState, path) -> None:
    """Dump amplitudes as little-endian complex128 after an 8-byte magic."""
    with open(path, "wb") as fh:
        fh.write(BINARY_STATE_MAGIC)
        fh.write(np.ascontiguousarray(state.amplitudes, dtype="<c16").tobytes())


def load_state_binary(path) -> PureState:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(BINARY_STATE_MAGIC)] != BINARY_STATE_MAGIC:
        raise ValidationError(f"{path} lacks the {BINARY_STATE_MAGIC!r} header")
    payload = blob[len(BINARY_STATE_MAGIC) :]
    if len(payload) % 16:
        raise ValidationError(f"{path} payload is not a whole number of complex128s")
    amps = np.frombuffer(payload, dtype="<c16").astype(np.complex128)
    return PureState.from_amplitudes(amps)


def _complex_list(values) -> list:
    return [[float(v.real), float(v.imag)] for v in values]


def save_schmidt_json(sample: SchmidtStateSample, path, seed: int | None = None) -> None:
    """Dump a Schmidt draw as {q, K, locals, coeffs, seed}."""
    ensemble = sample.ensemble
    doc = {
        "q": ensemble.num_qubits,
        "K": ensemble.rank,
        "locals": [
            [_complex_list(ensemble.local_vectors[j, site]) for site in range(ensemble.num_qubits)]
            for j in range(ensemble.rank)
        ],
        "coeffs": _complex_list(sample.coeffs),
        "seed": seed,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_schmidt_json(path) -> SchmidtStateSample:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path} is not valid JSON: {exc}") from exc
    try:
        rank = int(doc["K"])
        num_qubits = int(doc["q"])
        locals_ = np.array(
            [[complex(c[0], c[1]) for c in site] for entry in doc["locals"] for site in entry],
            dtype=np.complex128,
        ).reshape(rank, num_qubits, 2)
        coeffs = np.array([complex(c[0], c[1]) for c in doc["coeffs"]], dtype=np.complex128)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ValidationError(f"malformed state dump {path}: {exc}") from exc
    if coeffs.shape[0] != rank:
        raise ValidationError(f"{path} has {coeffs.shape[0]} coefficients for K={rank}")
    ensemble = ensemble_from_vectors(locals_)
    return SchmidtStateSample(ensemble, coeffs)


def load_state_dump(path) -> PureState:
    """Read either dump flavour and return the dense state."""
    with open(path, "rb") as fh:
        head = fh.read(len(BINARY_STATE_MAGIC))
    if head == BINARY_STATE_MAGIC:
        return load_state_binary(path)
    return load_schmidt_json(path).to_state()
