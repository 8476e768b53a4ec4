"""Common-kernel computation and the block form of the convexified pair.

For a normalized pair the quadratic decay rates vanish exactly on
K = ker(B0^T + B0) ∩ ker(B1^T + B1).  In an orthonormal frame adapted to
R^d = K ⊕ K⊥ every convex combination B_lam takes the block form

    [ A_lam   -C_lam^T ]
    [ C_lam    D_lam   ]

with A_lam skew-symmetric and D_lam^T + D_lam negative definite for
lam in (0, 1).  The blocks (A, C) define the reduced bilinear system whose
uniform observability is equivalent to GUAS of the switched pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import StructureViolation
from .matrix_core import NormalizedPair

#: Ratio (smallest kept singular value) / (largest discarded one) below which
#: the numerical rank decision is considered too ambiguous to certify.
RANK_MARGIN_FLOOR = 1e3


def _fix_column_signs(V: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude entry of each column positive."""
    if V.size == 0:
        return V
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def nullspace(M: np.ndarray, tol: float = 1e-9):
    """Orthonormal null-space basis of M by singular value thresholding.

    Singular values below tol * sigma_max * sqrt(n) count as zero.  Returns
    (basis, complement_basis, rank_margin) where rank_margin is the ratio of
    the smallest kept to the largest discarded singular value (inf when one
    of the two groups is empty).
    """
    M = np.atleast_2d(np.asarray(M, float))
    n = M.shape[1]
    if M.shape[0] == 0 or not np.any(M):
        return np.eye(n), np.zeros((n, 0)), np.inf
    _, s, Vh = np.linalg.svd(M)
    s = np.concatenate([s, np.zeros(n - len(s))])
    thresh = tol * s[0] * np.sqrt(n)
    null_mask = s <= thresh
    basis = _fix_column_signs(Vh[null_mask].T)
    comp = _fix_column_signs(Vh[~null_mask].T)
    kept = s[~null_mask]
    disc = s[null_mask]
    if kept.size and disc.size and disc.max() > 0:
        margin = float(kept.min() / disc.max())
    else:
        margin = np.inf
    return basis, comp, margin


@dataclass(frozen=True)
class KernelDecomposition:
    """Orthonormal frame R^d = K ⊕ K⊥ adapted to the common kernel."""

    K_basis: np.ndarray       # d x k, orthonormal columns spanning K
    Kperp_basis: np.ndarray   # d x (d-k)
    k: int
    k_prime: int
    frame: np.ndarray         # [K_basis | Kperp_basis], orthogonal
    rank_margin: float        # kept/discarded singular value ratio
    threshold: float          # absolute singular value cutoff used
    K0_basis: np.ndarray = field(repr=False, default=None)  # diagnostics only
    K1_basis: np.ndarray = field(repr=False, default=None)

    @property
    def certifiable_rank(self) -> bool:
        return self.rank_margin >= RANK_MARGIN_FLOOR


def common_kernel(pair: NormalizedPair, tol: float = 1e-9) -> KernelDecomposition:
    """Compute K = ker S0 ∩ ker S1 as the null space of the stacked [S0; S1].

    k = 0 and k = d are both valid outcomes.  The individual kernels K0, K1
    (which may strictly contain K) are attached for diagnostics.
    """
    S0, S1 = pair.S0, pair.S1
    stacked = np.vstack([S0, S1])
    K, Kperp, margin = nullspace(stacked, tol)
    d = pair.d
    # Re-orthonormalize defensively; SVD columns are orthonormal already.
    if K.shape[1]:
        K = _fix_column_signs(np.linalg.qr(K)[0])
    s = np.linalg.svd(stacked, compute_uv=False)
    thresh = float(tol * (s[0] if s.size else 0.0) * np.sqrt(d))
    frame = np.hstack([K, Kperp])
    K0, _, _ = nullspace(S0, tol)
    K1, _, _ = nullspace(S1, tol)
    return KernelDecomposition(
        K_basis=K,
        Kperp_basis=Kperp,
        k=K.shape[1],
        k_prime=Kperp.shape[1],
        frame=frame,
        rank_margin=margin,
        threshold=thresh,
        K0_basis=K0,
        K1_basis=K1,
    )


@dataclass(frozen=True)
class BlockFamily:
    """The lambda-parametrized blocks (A_lam, C_lam, D_lam) in the K-frame.

    A(lam), C(lam), D(lam) are affine in lam; A0 and A1 are skew-symmetric.
    """

    A0: np.ndarray
    A1: np.ndarray
    C0: np.ndarray
    C1: np.ndarray
    D0: np.ndarray
    D1: np.ndarray
    k: int
    k_prime: int
    frame: np.ndarray

    def A(self, lam: float) -> np.ndarray:
        return (1.0 - lam) * self.A0 + lam * self.A1

    def C(self, lam: float) -> np.ndarray:
        return (1.0 - lam) * self.C0 + lam * self.C1

    def D(self, lam: float) -> np.ndarray:
        return (1.0 - lam) * self.D0 + lam * self.D1

    def framed(self, lam: float) -> np.ndarray:
        """Reassemble the framed B_lam from the blocks."""
        C = self.C(lam)
        top = np.hstack([self.A(lam), -C.T])
        bottom = np.hstack([C, self.D(lam)])
        return np.vstack([top, bottom])


def block_form(
    pair: NormalizedPair,
    decomp: KernelDecomposition,
    tol: float = 1e-9,
) -> BlockFamily:
    """Read the blocks off frame^T B_i frame and validate their structure.

    Raises StructureViolation when the skew-symmetry of A, the -C^T
    top-right identity, or the strict negativity of D_lam on (0, 1) fails by
    more than 10x the tolerance scale, which signals a bad normalization or
    an ambiguous kernel rank.
    """
    k = decomp.k
    F = decomp.frame
    blocks = []
    for B in (pair.B0n, pair.B1n):
        scale = 1.0 + np.linalg.norm(B, "fro")
        limit = 10.0 * tol * scale
        M = F.T @ B @ F
        A = M[:k, :k]
        topright = M[:k, k:]
        C = M[k:, :k]
        D = M[k:, k:]
        if np.max(np.abs(A + A.T), initial=0.0) > limit:
            raise StructureViolation(
                "top-left block is not skew-symmetric; pair not normalized?"
            )
        if np.max(np.abs(topright + C.T), initial=0.0) > limit:
            raise StructureViolation("top-right block does not equal -C^T")
        A = 0.5 * (A - A.T)
        A[np.abs(A) < tol * scale] = 0.0
        C = C.copy()
        C[np.abs(C) < tol * scale] = 0.0
        blocks.append((A, C, D))
        # endpoint: non-strict negativity of D^T + D
        if D.size:
            w = np.linalg.eigvalsh(D + D.T)
            if w[-1] > limit:
                raise StructureViolation(
                    f"D^T + D has positive eigenvalue {w[-1]:.3e} at an endpoint"
                )
    fam = BlockFamily(
        A0=blocks[0][0], A1=blocks[1][0],
        C0=blocks[0][1], C1=blocks[1][1],
        D0=blocks[0][2], D1=blocks[1][2],
        k=k, k_prime=decomp.k_prime, frame=F,
    )
    # strict negativity of D_lam^T + D_lam inside (0, 1)
    if fam.k_prime:
        for lam in (0.25, 0.5, 0.75):
            D = fam.D(lam)
            w = np.linalg.eigvalsh(D + D.T)
            if w[-1] >= -10.0 * tol:
                raise StructureViolation(
                    f"D_lam^T + D_lam not negative definite at lam = {lam} "
                    f"(max eigenvalue {w[-1]:.3e}); kernel rank may be ambiguous"
                )
    return fam


def subspace_distance(U: np.ndarray, V: np.ndarray) -> float:
    """Spectral-norm distance between the orthogonal projectors on span(U), span(V)."""
    PU = U @ U.T if U.size else np.zeros((U.shape[0], U.shape[0]))
    PV = V @ V.T if V.size else np.zeros((V.shape[0], V.shape[0]))
    diff = PU - PV
    return float(np.linalg.norm(diff, 2)) if diff.size else 0.0


@dataclass(frozen=True)
class KernelLemmaRecord:
    lam: float
    dimension: int
    distance: float
    passed: bool


def verify_kernel_lemma(
    pair: NormalizedPair,
    decomp: KernelDecomposition,
    lam_samples,
    tol: float = 1e-8,
) -> list[KernelLemmaRecord]:
    """Check ker(B_lam^T + B_lam) = K at interior lambda samples.

    Failures are reported, not raised: they indicate numerical rank
    ambiguity rather than programming errors.
    """
    records = []
    for lam in lam_samples:
        if not 0.0 < lam < 1.0:
            raise ValueError(f"lambda sample {lam} not strictly inside (0, 1)")
        S = pair.B(lam)
        S = S.T + S
        N, _, _ = nullspace(S, tol=1e-9)
        dist = (
            subspace_distance(N, decomp.K_basis)
            if N.shape[1] == decomp.k
            else np.inf
        )
        records.append(
            KernelLemmaRecord(float(lam), N.shape[1], dist, bool(dist < tol))
        )
    return records
