"""Block decomposition of unitaries over a partition N = n1 + n2 and the
coset parametrization of U(N) / (U(n1) x U(n2)).

Conventions: for a block unitary U = [[A, B], [C, D]] with nonsingular A
and D, the canonical representative U0 has Hermitian positive-definite
diagonal blocks (obtained by polar decomposition of A and D) and the coset
invariant is the n1 x n2 matrix Z = B D^{-1}.  Reconstruction uses

    A0 = G1^{-1/2},  B0 = Z G2^{-1/2},  C0 = -Z^dag G1^{-1/2},  D0 = G2^{-1/2}

with G1 = I + Z Z^dag and G2 = I + Z^dag Z, which satisfy G1 Z = Z G2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matcore
from .errors import ChartBreakdown, NearSingular, NotUnitary
from .matcore import DEFAULT_PROFILE, ToleranceProfile, as_cmat, frobenius


@dataclass(frozen=True)
class Partition:
    """Split of the level count N into n1 upper and n2 lower dimensions."""

    n1: int
    n2: int

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError("partition blocks must have dimension >= 1")

    @property
    def N(self) -> int:
        return self.n1 + self.n2


@dataclass(frozen=True, eq=False)
class BlockUnitary:
    """An N x N unitary stored as named blocks A, B, C, D."""

    partition: Partition
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        n1, n2 = self.partition.n1, self.partition.n2
        object.__setattr__(self, "A", as_cmat(self.A, n1, n1))
        object.__setattr__(self, "B", as_cmat(self.B, n1, n2))
        object.__setattr__(self, "C", as_cmat(self.C, n2, n1))
        object.__setattr__(self, "D", as_cmat(self.D, n2, n2))

    def assemble(self) -> np.ndarray:
        return np.block([[self.A, self.B], [self.C, self.D]])

    def unitarity_residuals(self) -> tuple[float, float, float]:
        """Frobenius residuals of the three block unitarity conditions
        A^dag A + C^dag C = I,  A^dag B + C^dag D = 0,  D^dag D + B^dag B = I.
        """
        n1, n2 = self.partition.n1, self.partition.n2
        r1 = frobenius(self.A.conj().T @ self.A + self.C.conj().T @ self.C - np.eye(n1))
        r2 = frobenius(self.A.conj().T @ self.B + self.C.conj().T @ self.D)
        r3 = frobenius(self.D.conj().T @ self.D + self.B.conj().T @ self.B - np.eye(n2))
        return r1, r2, r3


@dataclass(frozen=True, eq=False)
class CosetPoint:
    """Chart coordinate on the coset space: the n1 x n2 complex matrix Z."""

    partition: Partition
    Z: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "Z", as_cmat(self.Z, self.partition.n1, self.partition.n2))

    @property
    def gamma1(self) -> np.ndarray:
        """I + Z Z^dag (n1 x n1, Hermitian PD)."""
        return np.eye(self.partition.n1) + self.Z @ self.Z.conj().T

    @property
    def gamma2(self) -> np.ndarray:
        """I + Z^dag Z (n2 x n2, Hermitian PD)."""
        return np.eye(self.partition.n2) + self.Z.conj().T @ self.Z

    def intertwining_residual(self) -> float:
        """Frobenius norm of G1 Z - Z G2 (identically zero in exact arithmetic)."""
        return frobenius(self.gamma1 @ self.Z - self.Z @ self.gamma2)


@dataclass(frozen=True, eq=False)
class CosetFactorization:
    """U = U0 * blockdiag(U1, U2) with Hermitian PD diagonal blocks in U0."""

    U0: BlockUnitary
    U1: np.ndarray
    U2: np.ndarray


def block_diag(u1: np.ndarray, u2: np.ndarray) -> np.ndarray:
    n1, n2 = u1.shape[0], u2.shape[0]
    out = np.zeros((n1 + n2, n1 + n2), dtype=complex)
    out[:n1, :n1] = u1
    out[n1:, n1:] = u2
    return out


def split_blocks(
    u: np.ndarray, part: Partition, prof: ToleranceProfile = DEFAULT_PROFILE
) -> BlockUnitary:
    """Slice an N x N unitary into its A, B, C, D blocks."""
    u = as_cmat(u, part.N, part.N)
    defect = matcore.unitarity_defect(u)
    if defect > prof.unitarity_tol:
        raise NotUnitary(f"unitarity defect {defect:.3e} exceeds {prof.unitarity_tol:.1e}")
    n1 = part.n1
    return BlockUnitary(part, u[:n1, :n1], u[:n1, n1:], u[n1:, :n1], u[n1:, n1:])


def coset_factorize(
    bu: BlockUnitary, prof: ToleranceProfile = DEFAULT_PROFILE
) -> CosetFactorization:
    """Factor a block unitary into its coset representative and a
    block-diagonal subgroup element.

    Raises ChartBreakdown if A or D is near-singular (the representative
    only exists on the nonsingular chart).
    """
    try:
        a0, u1 = matcore.polar_decompose(bu.A, prof)
    except NearSingular as exc:
        raise ChartBreakdown(f"A block near-singular: {exc}", sigma_min=exc.sigma_min) from exc
    try:
        d0, u2 = matcore.polar_decompose(bu.D, prof)
    except NearSingular as exc:
        raise ChartBreakdown(f"D block near-singular: {exc}", sigma_min=exc.sigma_min) from exc
    # Right action by blockdiag(U1, U2)^{-1}: A0 = A U1^dag, B0 = B U2^dag, ...
    b0 = bu.B @ u2.conj().T
    c0 = bu.C @ u1.conj().T
    u0 = BlockUnitary(bu.partition, a0, b0, c0, d0)
    return CosetFactorization(u0, u1, u2)


def extract_Z(bu: BlockUnitary, prof: ToleranceProfile = DEFAULT_PROFILE) -> CosetPoint:
    """Coset invariant Z = B D^{-1}, computed by solving against D."""
    sigma_min = float(np.linalg.svd(bu.D, compute_uv=False)[-1])
    if sigma_min <= prof.singularity_tol:
        raise ChartBreakdown(
            f"D block near-singular (sigma_min {sigma_min:.3e})", sigma_min=sigma_min
        )
    z = np.linalg.solve(bu.D.T, bu.B.T).T
    return CosetPoint(bu.partition, z)


def reconstruct_U0(zp: CosetPoint, prof: ToleranceProfile = DEFAULT_PROFILE) -> BlockUnitary:
    """Canonical coset representative from the chart coordinate Z.

    A0 and D0 are computed independently from G1 and G2; the block
    unitarity conditions then double as a built-in consistency check.
    """
    a0 = matcore.hermitian_inv_sqrt(zp.gamma1, prof)
    d0 = matcore.hermitian_inv_sqrt(zp.gamma2, prof)
    b0 = zp.Z @ d0
    c0 = -zp.Z.conj().T @ a0
    return BlockUnitary(zp.partition, a0, b0, c0, d0)


def suggest_chart_rows(u: np.ndarray, part: Partition) -> tuple[int, ...]:
    """Suggest a row permutation that makes the D block well-conditioned.

    Greedy volume maximization: QR with column pivoting on the transpose of
    the last n2 columns picks the n2 rows to move into the D position.
    Returns the full row permutation (apply as u[perm, :]); re-charting is
    left to the caller, it is never done automatically.
    """
    import scipy.linalg

    u = as_cmat(u, part.N, part.N)
    cols = u[:, part.n1 :]
    _, _, piv = scipy.linalg.qr(cols.T, pivoting=True)
    bottom = sorted(int(i) for i in piv[: part.n2])
    top = [i for i in range(part.N) if i not in bottom]
    return tuple(top + bottom)
