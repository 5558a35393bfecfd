"""Random product ensembles: Gram spectra, purity, draws, entanglement search.

Dual routes used here: dense kron reference operators from tests/oracles.py
versus the rank-space computations in the package.
"""
import math

import numpy as np
import pytest
from scipy import stats

import oracles
from ambqc import randstates as rs
from ambqc.errors import ValidationError
from ambqc.statevector import PureState


class TestHaar:
    def test_unit_norm(self, rng):
        for q in (1, 3, 6):
            state = rs.sample_haar_state(q, rng)
            np.testing.assert_allclose(
                np.linalg.norm(state.amplitudes), 1.0, atol=1e-12
            )

    def test_single_qubit_weight_is_uniform(self, rng):
        """|a_0|^2 of a Haar qubit is Uniform(0, 1); KS on 10^4 draws."""
        weights = np.array(
            [abs(rs.sample_haar_state(1, rng).amplitudes[0]) ** 2 for _ in range(10000)]
        )
        assert stats.kstest(weights, "uniform").pvalue > 0.001

    def test_rejects_bad_qubit_count(self, rng):
        with pytest.raises(ValidationError):
            rs.sample_haar_state(0, rng)


class TestLocalVectors:
    def test_shape_and_norms(self, rng):
        vecs = rs.sample_local_vectors(4, 7, rng)
        assert vecs.shape == (7, 4, 2)
        np.testing.assert_allclose(np.linalg.norm(vecs, axis=2), 1.0, atol=1e-14)

    def test_mean_outer_product_is_maximally_mixed(self, rng):
        vecs = rs.sample_local_vectors(1, 100000, rng)[:, 0, :]
        outer = np.einsum("ja,jb->ab", vecs, vecs.conj()) / vecs.shape[0]
        assert np.max(np.abs(outer - np.eye(2) / 2)) < 0.005

    def test_seeds_differ(self):
        a = rs.sample_local_vectors(3, 4, np.random.default_rng(1))
        b = rs.sample_local_vectors(3, 4, np.random.default_rng(2))
        assert np.max(np.abs(a - b)) > 1e-3

    def test_rank_validation(self, rng):
        with pytest.raises(ValidationError):
            rs.sample_local_vectors(3, 0, rng)


class TestGram:
    def test_rank_one(self, rng):
        vecs = rs.sample_local_vectors(5, 1, rng)
        np.testing.assert_allclose(rs.gram_matrix(vecs), [[1.0]], atol=1e-14)

    def test_identical_vectors_all_ones(self, rng):
        one = rs.sample_local_vectors(4, 1, rng)
        vecs = np.repeat(one, 8, axis=0)
        gram = rs.gram_matrix(vecs)
        np.testing.assert_allclose(gram, np.ones((8, 8)), atol=1e-12)
        ens = rs.ensemble_from_vectors(vecs)
        np.testing.assert_allclose(rs.ensemble_operator_norm(ens), 8.0, atol=1e-10)

    def test_structure(self, rng):
        vecs = rs.sample_local_vectors(6, 9, rng)
        gram = rs.gram_matrix(vecs)
        np.testing.assert_allclose(gram, gram.conj().T, atol=1e-13)
        np.testing.assert_allclose(np.diag(gram).real, np.ones(9), atol=1e-13)
        np.testing.assert_allclose(np.trace(gram).real, 9.0, atol=1e-12)

    def test_bad_shape(self):
        with pytest.raises(ValidationError):
            rs.gram_matrix(np.ones((3, 4)))

    def test_spectrum_matches_dense_operator(self, rng):
        """Nonzero eigenvalues of R = sum |phi><phi| equal the Gram spectrum."""
        for _ in range(5):
            vecs = rs.sample_local_vectors(6, 5, rng)
            ens = rs.ensemble_from_vectors(vecs)
            dense = oracles.dense_projector_sum(vecs)
            top = np.linalg.eigvalsh(dense)[::-1][:5]
            np.testing.assert_allclose(top, ens.eigenvalues, atol=1e-9)

    def test_operator_norm_large_rank_path(self, rng):
        vecs = rs.sample_local_vectors(4, 70, rng)
        cheap = rs.gram_operator_norm(vecs)
        full = float(np.linalg.eigvalsh(rs.gram_matrix(vecs))[-1])
        np.testing.assert_allclose(cheap, full, atol=1e-9)

    def test_operator_norm_small_rank_path(self, rng):
        vecs = rs.sample_local_vectors(4, 6, rng)
        ens = rs.ensemble_from_vectors(vecs)
        np.testing.assert_allclose(
            rs.gram_operator_norm(vecs), rs.ensemble_operator_norm(ens), atol=1e-11
        )


class TestPurity:
    def test_rank_one_is_pure(self, rng):
        ens = rs.sample_schmidt_ensemble(5, 1, rng)
        np.testing.assert_allclose(rs.ensemble_purity(ens), 1.0, atol=1e-12)

    def test_bounds(self, rng):
        for _ in range(10):
            ens = rs.sample_schmidt_ensemble(6, 8, rng)
            purity = rs.ensemble_purity(ens)
            trace = float(np.sum(ens.eigenvalues))
            assert purity >= trace**2 / ens.support_rank - 1e-9
            assert purity <= trace * rs.ensemble_operator_norm(ens) + 1e-9

    def test_mean_reference_value(self):
        assert rs.purity_mean_reference(10, 8) == 8 + 56 / 1024
        assert rs.purity_mean_reference(4, 1) == 1.0

    def test_empirical_mean_tracks_reference(self, rng):
        values = [rs.ensemble_purity(rs.sample_schmidt_ensemble(6, 4, rng)) for _ in range(300)]
        mean = float(np.mean(values))
        stderr = float(np.std(values, ddof=1) / math.sqrt(len(values)))
        assert abs(mean - rs.purity_mean_reference(6, 4)) <= 5 * stderr


class TestSchmidtDraws:
    def test_draw_is_normalized(self, rng):
        sample = rs.draw_schmidt_state(6, 5, rng)
        np.testing.assert_allclose(sample.norm_sq(), 1.0, atol=1e-12)
        state = sample.to_state()
        np.testing.assert_allclose(np.linalg.norm(state.amplitudes), 1.0, atol=1e-12)

    def test_rank_one_draw_is_the_product_vector(self, rng):
        sample = rs.draw_schmidt_state(4, 1, rng)
        fidelity = rs.witness_overlap(
            sample.to_state(), sample.ensemble.local_vectors[0]
        )
        np.testing.assert_allclose(fidelity, 1.0, atol=1e-12)

    def test_expand_rank_one_matches_kron(self, rng):
        vecs = rs.sample_local_vectors(5, 1, rng)
        state = rs.expand_to_statevector(vecs, np.array([1.0 + 0j]))
        expected = oracles.kron_vector(vecs[0])
        np.testing.assert_allclose(state.amplitudes, expected, atol=1e-12)

    def test_expand_matches_naive_oracle(self, rng):
        vecs = rs.sample_local_vectors(5, 3, rng)
        coeffs = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        raw = oracles.naive_expand(vecs, coeffs)
        state = rs.expand_to_statevector(vecs, coeffs)
        np.testing.assert_allclose(
            state.amplitudes, raw / np.linalg.norm(raw), atol=1e-12
        )

    def test_expand_positive_scale_invariance(self, rng):
        vecs = rs.sample_local_vectors(4, 3, rng)
        coeffs = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        a = rs.expand_to_statevector(vecs, coeffs)
        b = rs.expand_to_statevector(vecs, 3.5 * coeffs)
        np.testing.assert_allclose(a.amplitudes, b.amplitudes, atol=1e-12)

    def test_expand_shape_mismatch(self, rng):
        vecs = rs.sample_local_vectors(4, 3, rng)
        with pytest.raises(ValidationError):
            rs.expand_to_statevector(vecs, np.ones(2))

    def test_expectation_via_coefficients(self, rng):
        """c^dag m c with m_ij = <phi_i|M|phi_j> equals the dense expectation."""
        sample = rs.draw_schmidt_state(6, 4, rng)
        vecs = sample.ensemble.local_vectors
        coeffs = sample.coeffs
        state = sample.to_state()
        dense_phis = [oracles.kron_vector(vecs[j]) for j in range(4)]
        for _ in range(10):
            h = rng.standard_normal((64, 64)) + 1j * rng.standard_normal((64, 64))
            op = (h + h.conj().T) / 2
            m = np.array(
                [[np.vdot(dense_phis[i], op @ dense_phis[j]) for j in range(4)] for i in range(4)]
            )
            via_coeffs = float(np.real(coeffs.conj() @ m @ coeffs))
            via_state = float(np.vdot(state.amplitudes, op @ state.amplitudes).real)
            np.testing.assert_allclose(via_coeffs, via_state, atol=1e-10)


class TestGeometricEntanglement:
    def test_product_state_has_no_entanglement(self, rng):
        vecs = rs.sample_local_vectors(4, 1, rng)
        state = rs.expand_to_statevector(vecs, np.array([1.0 + 0j]))
        est = rs.estimate_geometric_entanglement(state, restarts=3, rng=rng)
        assert est.bits <= 1e-6
        assert est.converged

    def test_ghz_matches_grid_oracle(self, rng):
        for q in (3, 4):
            state = PureState.from_amplitudes(oracles.ghz_state(q))
            est = rs.estimate_geometric_entanglement(state, restarts=6, rng=rng)
            oracle_overlap = oracles.ghz_grid_overlap(q)
            assert abs(est.overlap_sq - oracle_overlap) < 1e-3
            assert abs(est.bits - 1.0) < 1e-3

    def test_traces_are_nondecreasing(self, rng):
        state = rs.sample_haar_state(5, rng)
        est = rs.estimate_geometric_entanglement(state, restarts=5, rng=rng)
        assert len(est.traces) == 5
        for trace in est.traces:
            for earlier, later in zip(trace, trace[1:]):
                assert later >= earlier - 1e-12

    def test_witness_reproduces_overlap(self, rng):
        state = rs.sample_haar_state(4, rng)
        est = rs.estimate_geometric_entanglement(state, restarts=4, rng=rng)
        np.testing.assert_allclose(
            rs.witness_overlap(state, est.witness), est.overlap_sq, atol=1e-12
        )

    def test_schmidt_rank_caps_entanglement(self):
        rng = np.random.default_rng(777)
        sample = rs.draw_schmidt_state(8, 4, rng)
        est = rs.estimate_geometric_entanglement(sample.to_state(), restarts=6, rng=rng)
        assert est.bits <= math.log2(4) + 1.0

    def test_witness_shape_guard(self, rng):
        state = rs.sample_haar_state(3, rng)
        with pytest.raises(ValidationError):
            rs.witness_overlap(state, np.ones((2, 2)))

    def test_restart_validation(self, rng):
        state = rs.sample_haar_state(2, rng)
        with pytest.raises(ValidationError):
            rs.estimate_geometric_entanglement(state, restarts=0)


class TestSerialization:
    def test_binary_round_trip(self, tmp_path, rng):
        state = rs.sample_haar_state(5, rng)
        path = tmp_path / "state.bin"
        rs.save_state_binary(state, path)
        loaded = rs.load_state_binary(path)
        np.testing.assert_array_equal(loaded.amplitudes, state.amplitudes)

    def test_binary_magic_guard(self, tmp_path):
        path = tmp_path / "bad.bin"
        path.write_bytes(b"NOTMAGIC" + b"\x00" * 32)
        with pytest.raises(ValidationError):
            rs.load_state_binary(path)

    def test_binary_partial_payload(self, tmp_path, rng):
        state = rs.sample_haar_state(2, rng)
        path = tmp_path / "trunc.bin"
        rs.save_state_binary(state, path)
        path.write_bytes(path.read_bytes()[:-5])
        with pytest.raises(ValidationError):
            rs.load_state_binary(path)

    def test_schmidt_json_round_trip(self, tmp_path, rng):
        sample = rs.draw_schmidt_state(4, 3, rng)
        path = tmp_path / "draw.json"
        rs.save_schmidt_json(sample, path, seed=99)
        loaded = rs.load_schmidt_json(path)
        np.testing.assert_allclose(loaded.coeffs, sample.coeffs, atol=1e-15)
        np.testing.assert_allclose(
            loaded.ensemble.local_vectors, sample.ensemble.local_vectors, atol=1e-15
        )
        overlap = abs(np.vdot(loaded.to_state().amplitudes, sample.to_state().amplitudes)) ** 2
        np.testing.assert_allclose(overlap, 1.0, atol=1e-12)

    def test_schmidt_json_rejects_garbage(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{\"q\": 3}\n")
        with pytest.raises(ValidationError):
            rs.load_schmidt_json(path)
        path.write_text("not json")
        with pytest.raises(ValidationError):
            rs.load_schmidt_json(path)

    def test_dump_dispatch(self, tmp_path, rng):
        state = rs.sample_haar_state(3, rng)
        binary = tmp_path / "a.bin"
        rs.save_state_binary(state, binary)
        assert isinstance(rs.load_state_dump(binary), PureState)
        sample = rs.draw_schmidt_state(3, 2, rng)
        jsonpath = tmp_path / "b.json"
        rs.save_schmidt_json(sample, jsonpath)
        loaded = rs.load_state_dump(jsonpath)
        np.testing.assert_allclose(
            loaded.amplitudes, sample.to_state().amplitudes, atol=1e-10
        )
