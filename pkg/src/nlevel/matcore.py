"""Dense complex-matrix kernel: Hermitian square roots, polar decomposition
and skew-Hermitian exponentials.

All routines work on plain complex128 numpy arrays, treat inputs as
immutable, and enforce Hermiticity by symmetrizing (M + M^dag)/2 after
checking that the asymmetry is within tolerance, so downstream drift cannot
amplify.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NearSingular, NotHermitian, NotPositive


@dataclass(frozen=True)
class ToleranceProfile:
    """Numerical tolerances shared across the package.

    hermiticity_tol and unitarity_tol are absolute Frobenius-norm bounds;
    positivity_floor clamps tiny negative eigenvalues; singularity_tol is
    the smallest acceptable singular value.
    """

    hermiticity_tol: float = 1e-12
    unitarity_tol: float = 1e-12
    positivity_floor: float = 1e-14
    singularity_tol: float = 1e-10

    def __post_init__(self):
        for name in ("hermiticity_tol", "unitarity_tol", "positivity_floor", "singularity_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")


DEFAULT_PROFILE = ToleranceProfile()


def as_cmat(data, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    """Coerce to a finite complex128 2-D array, optionally checking shape."""
    m = np.asarray(data, dtype=complex)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise DimensionMismatch(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    if rows is not None and m.shape != (rows, cols):
        raise DimensionMismatch(f"expected shape ({rows}, {cols}), got {m.shape}")
    return m


def frobenius(m: np.ndarray) -> float:
    return float(np.linalg.norm(m))


def hermiticity_defect(m: np.ndarray) -> float:
    """Frobenius norm of M - M^dag."""
    return frobenius(m - m.conj().T)


def unitarity_defect(m: np.ndarray) -> float:
    """Frobenius norm of M^dag M - I."""
    return frobenius(m.conj().T @ m - np.eye(m.shape[1]))


def require_hermitian(m: np.ndarray, tol: float, what: str = "matrix") -> np.ndarray:
    """Check asymmetry against tol, then return the symmetrized matrix."""
    m = as_cmat(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"{what} must be square, got {m.shape}")
    defect = hermiticity_defect(m)
    if defect > tol:
        raise NotHermitian(f"{what} asymmetry {defect:.3e} exceeds tolerance {tol:.3e}")
    return (m + m.conj().T) / 2


def hermitian_sqrt(m: np.ndarray, prof: ToleranceProfile = DEFAULT_PROFILE) -> np.ndarray:
    """Hermitian square root of a Hermitian positive-semidefinite matrix.

    Eigenvalues below -positivity_floor raise NotPositive; small negative
    ones inside the floor are clamped to zero before the square root.
    """
    h = require_hermitian(m, prof.hermiticity_tol)
    w, v = np.linalg.eigh(h)
    if w[0] < -prof.positivity_floor:
        raise NotPositive(f"eigenvalue {w[0]:.3e} below -{prof.positivity_floor:.1e}")
    s = (v * np.sqrt(np.maximum(w, 0.0))) @ v.conj().T
    return (s + s.conj().T) / 2


def hermitian_inv_sqrt(m: np.ndarray, prof: ToleranceProfile = DEFAULT_PROFILE) -> np.ndarray:
    """Inverse square root of a Hermitian positive-definite matrix."""
    h = require_hermitian(m, prof.hermiticity_tol)
    w, v = np.linalg.eigh(h)
    if w[0] <= prof.singularity_tol:
        raise NearSingular(
            f"eigenvalue {w[0]:.3e} at or below {prof.singularity_tol:.1e}", sigma_min=float(w[0])
        )
    t = (v / np.sqrt(w)) @ v.conj().T
    return (t + t.conj().T) / 2


def polar_decompose(
    a: np.ndarray, prof: ToleranceProfile = DEFAULT_PROFILE
) -> tuple[np.ndarray, np.ndarray]:
    """Left polar decomposition A = P W with P Hermitian PD and W unitary.

    P is the Hermitian square root of A A^dag; W solves P W = A.
    """
    a = as_cmat(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"polar decomposition needs a square matrix, got {a.shape}")
    sigma_min = float(np.linalg.svd(a, compute_uv=False)[-1])
    if sigma_min <= prof.singularity_tol:
        raise NearSingular(
            f"smallest singular value {sigma_min:.3e} at or below {prof.singularity_tol:.1e}",
            sigma_min=sigma_min,
        )
    p = hermitian_sqrt(a @ a.conj().T, prof)
    w = np.linalg.solve(p, a)
    return p, w


def unitary_exp_step(
    h: np.ndarray, dt: float, prof: ToleranceProfile = DEFAULT_PROFILE
) -> np.ndarray:
    """exp(-i H dt) for Hermitian H, via eigendecomposition.

    The result is unitary to machine precision regardless of dt.
    """
    h = require_hermitian(h, prof.hermiticity_tol, what="generator")
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * dt)) @ v.conj().T
