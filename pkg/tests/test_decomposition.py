import numpy as np
import pytest

from guas_cert import (
    MatrixPair,
    block_form,
    common_kernel,
    normalize,
    verify_kernel_lemma,
)
from guas_cert.decomposition import nullspace, subspace_distance
from guas_cert.errors import StructureViolation
from guas_cert.gallery import assemble, kdeux, mason

from conftest import block_pair


class TestNullspace:
    def test_rank_deficient(self):
        M = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]])
        basis, complement, margin = nullspace(M)
        assert basis.shape == (3, 1)
        np.testing.assert_allclose(np.abs(basis[:, 0]), [0.0, 0.0, 1.0], atol=1e-14)
        assert complement.shape == (3, 2)
        assert margin > 1e6

    def test_full_rank(self):
        basis, complement, margin = nullspace(np.eye(4))
        assert basis.shape == (4, 0)
        assert complement.shape == (4, 4)
        assert np.isinf(margin)

    def test_zero_matrix(self):
        basis, complement, _ = nullspace(np.zeros((3, 3)))
        assert basis.shape == (3, 3)
        assert complement.shape == (3, 0)

    def test_orthonormal_and_complementary(self):
        rng = np.random.default_rng(5)
        U = rng.standard_normal((5, 2))
        M = U @ U.T  # rank 2 symmetric PSD
        basis, complement, _ = nullspace(M)
        Q = np.hstack([basis, complement])
        np.testing.assert_allclose(Q.T @ Q, np.eye(5), atol=1e-12)
        np.testing.assert_allclose(M @ basis, 0.0, atol=1e-10)


class TestCommonKernel:
    def test_mason_kernel_trivial(self):
        decomp = common_kernel(normalize(mason()))
        assert decomp.k == 0
        assert decomp.k_prime == 2
        assert decomp.certifiable_rank

    def test_kdeux_kernel_dimension(self):
        decomp = common_kernel(normalize(kdeux(1.0, 1.0)))
        assert decomp.k == 2
        assert decomp.k_prime == 1

    def test_kernel_contained_in_both_endpoint_kernels(self, normalized_corpus):
        for name, npair in normalized_corpus.items():
            decomp = common_kernel(npair)
            for S in (npair.S0, npair.S1):
                resid = np.linalg.norm(S @ decomp.K_basis)
                assert resid < 1e-8, name

    def test_frame_is_orthogonal(self, normalized_corpus):
        for name, npair in normalized_corpus.items():
            decomp = common_kernel(npair)
            F = decomp.frame
            np.testing.assert_allclose(
                F.T @ F, np.eye(F.shape[0]), atol=1e-12, err_msg=name
            )

    def test_dimensions_add_up(self, normalized_corpus):
        for npair in normalized_corpus.values():
            decomp = common_kernel(npair)
            assert decomp.k + decomp.k_prime == npair.B0n.shape[0]

    def test_block_constructed_pair_recovers_k(self):
        rng = np.random.default_rng(9)
        for k, kp in [(1, 1), (2, 2), (3, 1), (2, 3)]:
            pair = block_pair(rng, k, kp)
            decomp = common_kernel(normalize(pair, np.eye(k + kp)))
            assert decomp.k == k and decomp.k_prime == kp


class TestBlockForm:
    def test_kdeux_structure(self):
        npair = normalize(kdeux(2.0, 3.0))
        decomp = common_kernel(npair)
        blocks = block_form(npair, decomp)
        # A blocks are skew 2x2 rotations at angular rates +/- the inputs
        np.testing.assert_allclose(blocks.A0 + blocks.A0.T, 0.0, atol=1e-10)
        np.testing.assert_allclose(blocks.A1 + blocks.A1.T, 0.0, atol=1e-10)
        assert abs(blocks.A0[0, 1]) == pytest.approx(2.0, abs=1e-10)
        assert abs(blocks.A1[0, 1]) == pytest.approx(3.0, abs=1e-10)
        # each C_i annihilates a one-dimensional line, distinct between the two
        assert np.linalg.matrix_rank(np.vstack([blocks.C0, blocks.C1])) == 2

    def test_framed_reconstruction(self, normalized_corpus):
        """F^T B(lam) F must reproduce the assembled block family."""
        for name, npair in normalized_corpus.items():
            decomp = common_kernel(npair)
            if decomp.k == 0:
                continue
            blocks = block_form(npair, decomp)
            for lam in (0.0, 0.3, 1.0):
                direct = decomp.frame.T @ npair.B(lam) @ decomp.frame
                np.testing.assert_allclose(
                    direct, blocks.framed(lam), atol=1e-10, err_msg=name
                )

    def test_affine_in_lambda(self, normalized_corpus):
        for npair in normalized_corpus.values():
            decomp = common_kernel(npair)
            if decomp.k == 0:
                continue
            blocks = block_form(npair, decomp)
            lam = 0.37
            np.testing.assert_allclose(
                blocks.A(lam), (1 - lam) * blocks.A0 + lam * blocks.A1, atol=1e-12
            )
            np.testing.assert_allclose(
                blocks.C(lam), (1 - lam) * blocks.C0 + lam * blocks.C1, atol=1e-12
            )

    def test_D_strictly_dissipative_in_interior(self, normalized_corpus):
        for name, npair in normalized_corpus.items():
            decomp = common_kernel(npair)
            if decomp.k_prime == 0:
                continue
            blocks = block_form(npair, decomp)
            for lam in (0.25, 0.5, 0.75):
                D = blocks.D(lam)
                assert np.linalg.eigvalsh(D + D.T)[-1] < 0, name

    def test_structure_violation_detected(self):
        # a pair with no common weak Lyapunov structure in these coordinates:
        # doctor a NormalizedPair by hand so the A block is not skew
        npair = normalize(kdeux(1.0, 1.0))
        decomp = common_kernel(npair)
        bad = type(npair)(
            B0n=npair.B0n + 1e-3 * np.outer(decomp.K_basis[:, 0], decomp.K_basis[:, 1]),
            B1n=npair.B1n,
            provenance=npair.provenance,
        )
        with pytest.raises(StructureViolation):
            block_form(bad, decomp)


class TestSubspaceDistance:
    def test_identical(self):
        U = np.eye(3)[:, :2]
        assert subspace_distance(U, U) == pytest.approx(0.0, abs=1e-15)

    def test_orthogonal_lines(self):
        U = np.array([[1.0], [0.0]])
        V = np.array([[0.0], [1.0]])
        assert subspace_distance(U, V) == pytest.approx(1.0)

    def test_rotation_invariant(self):
        rng = np.random.default_rng(2)
        U = np.linalg.qr(rng.standard_normal((4, 2)))[0]
        W = np.linalg.qr(rng.standard_normal((2, 2)))[0]
        assert subspace_distance(U, U @ W) < 1e-12


class TestKernelLemma:
    def test_interior_kernels_match_K(self, normalized_corpus):
        """ker(B_lam^T + B_lam) equals the common kernel at interior lambda."""
        lams = np.linspace(0.0, 1.0, 101)[1:-1]
        for name, npair in normalized_corpus.items():
            decomp = common_kernel(npair)
            records = verify_kernel_lemma(npair, decomp, lams)
            assert len(records) == 99
            for rec in records:
                assert rec.dimension == decomp.k, name
                assert rec.distance < 1e-8, name
                assert rec.passed

    def test_endpoint_kernels_can_be_larger(self):
        # B0 fully skew: its symmetric part vanishes, so its kernel is the
        # whole space even though the common kernel stays 2-dimensional
        B0 = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
        B1 = assemble(
            np.array([[0.0, -1.0], [1.0, 0.0]]),
            np.array([[0.0, 1.0]]),
            np.array([[-1.0]]),
        )
        npair = normalize(MatrixPair(B0, B1), np.eye(3))
        decomp = common_kernel(npair)
        assert decomp.K0_basis.shape[1] == 3
        assert decomp.K1_basis.shape[1] == 2
        assert decomp.k == 2
