"""Reduced evolution equations on the coset chart and on ray space.

The full unitary dynamics projects onto an autonomous matrix equation for
the chart coordinate Z,

    dZ/dt = -i (V + H1 Z - Z H2 - Z V^dag Z),

quadratic in the unknown.  For the partition (N-1, 1) the same equation
holds for the column vector z together with driven scalar equations

    dgamma/dt = i gamma (V^dag z - z^dag V),
    dalpha/dt = -H2 - (V^dag z + z^dag V)/2,

whose right-hand sides never read alpha.  Integration is classical
fixed-step RK4 with a divergence guard: the chart coordinate escaping to
infinity is reported as breakdown data, never hidden by re-charting.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .coset import CosetPoint, Partition
from .dynamics import BlockHamiltonian, HamiltonianSample
from .errors import DimensionMismatch, NonRealResult

DEFAULT_GUARD = 1e6


@dataclass(frozen=True, eq=False)
class RayPoint:
    """Chart coordinate z in C^(N-1) on ray space, with derived gamma and
    real coordinates q = Re z, p = Im z."""

    z: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z, dtype=complex).reshape(-1)
        if z.shape[0] < 1:
            raise DimensionMismatch("ray point needs at least one component")
        if not np.all(np.isfinite(z)):
            raise ValueError("ray point entries must be finite")
        object.__setattr__(self, "z", z)

    @property
    def gamma(self) -> float:
        return 1.0 + float(np.real(np.vdot(self.z, self.z)))

    @property
    def q(self) -> np.ndarray:
        return self.z.real.copy()

    @property
    def p(self) -> np.ndarray:
        return self.z.imag.copy()

    def projector(self) -> np.ndarray:
        """Rank-one density matrix of the normalized chart state (z, 1)/sqrt(gamma)."""
        psi = np.concatenate([self.z, [1.0 + 0.0j]]) / np.sqrt(self.gamma)
        return np.outer(psi, psi.conj())


def ray_point_from_qp(q: np.ndarray, p: np.ndarray) -> RayPoint:
    return RayPoint(np.asarray(q, dtype=float) + 1j * np.asarray(p, dtype=float))


def chart_state(z: np.ndarray) -> np.ndarray:
    """Normalized representative state (z, 1)/sqrt(1 + z^dag z)."""
    z = np.asarray(z, dtype=complex).reshape(-1)
    gamma = 1.0 + float(np.real(np.vdot(z, z)))
    return np.concatenate([z, [1.0 + 0.0j]]) / np.sqrt(gamma)


@dataclass(frozen=True, eq=False)
class Breakdown:
    """Divergence-guard trip: last valid time and a diagnostic message."""

    time: float
    diagnostic: str


@dataclass(frozen=True, eq=False)
class MatrixRiccatiTrajectory:
    times: np.ndarray
    Zs: np.ndarray  # (n_samples, n1, n2)
    partition: Partition
    breakdown: Breakdown | None = None

    def point(self, index: int) -> CosetPoint:
        return CosetPoint(self.partition, self.Zs[index])


@dataclass(frozen=True, eq=False)
class ReducedTrajectory:
    """Co-integrated (z, gamma, alpha) samples.

    gamma_integrated comes from its own ODE and is stored separately from
    the derived 1 + z^dag z, so the redundancy between the two routes acts
    as a continuous self-test.  alpha is unwrapped (continuous).
    """

    times: np.ndarray
    zs: np.ndarray  # (n_samples, N-1)
    gammas_integrated: np.ndarray
    alphas: np.ndarray
    breakdown: Breakdown | None = None

    def point(self, index: int) -> RayPoint:
        return RayPoint(self.zs[index])

    @property
    def gammas_derived(self) -> np.ndarray:
        return 1.0 + np.sum(np.abs(self.zs) ** 2, axis=1)

    def gamma_consistency_max(self) -> float:
        return float(np.max(np.abs(self.gammas_integrated - self.gammas_derived)))

    def index_of(self, t: float) -> int:
        k = int(np.argmin(np.abs(self.times - t)))
        scale = max(1.0, abs(self.times[-1] - self.times[0]))
        if abs(self.times[k] - t) > 1e-9 * scale:
            raise ValueError(f"t={t} is not on the stored grid")
        return k


def matrix_riccati_rhs(zp: CosetPoint, sample: HamiltonianSample) -> np.ndarray:
    """dZ/dt = -i (V + H1 Z - Z H2 - Z V^dag Z)."""
    n1, n2 = zp.partition.n1, zp.partition.n2
    if sample.n1 != n1 or sample.n2 != n2:
        raise DimensionMismatch(
            f"Hamiltonian blocks ({sample.n1},{sample.n2}) do not match partition ({n1},{n2})"
        )
    z = zp.Z
    return -1j * (sample.V + sample.H1 @ z - z @ sample.H2 - z @ (sample.V.conj().T @ z))


def _raw_matrix_rhs(z: np.ndarray, sample: HamiltonianSample) -> np.ndarray:
    return -1j * (sample.V + sample.H1 @ z - z @ sample.H2 - z @ (sample.V.conj().T @ z))


def integrate_matrix_riccati(
    h: BlockHamiltonian,
    z0: CosetPoint,
    t0: float,
    t1: float,
    steps: int,
    guard: float = DEFAULT_GUARD,
    observer: Callable[[float, np.ndarray], None] | None = None,
) -> MatrixRiccatiTrajectory:
    """RK4 integration of the matrix equation with a divergence guard.

    The guard trips when max |Z_ij| exceeds `guard` or entries stop being
    finite; the trajectory is truncated at the last valid sample and the
    breakdown is attached as data, not raised.
    """
    if t1 <= t0 or steps < 1:
        raise ValueError("need t1 > t0 and steps >= 1")
    if guard <= 0:
        raise ValueError("guard must be positive")
    part = z0.partition
    if part.n1 != h.partition.n1 or part.n2 != h.partition.n2:
        raise DimensionMismatch("initial point partition differs from Hamiltonian partition")
    dt = (t1 - t0) / steps
    z = z0.Z.copy()
    times = [t0]
    zs = [z.copy()]
    if observer is not None:
        observer(t0, z)
    breakdown = None
    for k in range(steps):
        t = t0 + k * dt
        sa = h.blocks(t)
        sm = h.blocks(t + 0.5 * dt)
        sb = h.blocks(t + dt)
        k1 = _raw_matrix_rhs(z, sa)
        k2 = _raw_matrix_rhs(z + 0.5 * dt * k1, sm)
        k3 = _raw_matrix_rhs(z + 0.5 * dt * k2, sm)
        k4 = _raw_matrix_rhs(z + dt * k3, sb)
        z_new = z + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(z_new)) or np.max(np.abs(z_new)) > guard:
            breakdown = Breakdown(
                time=t, diagnostic=f"|Z| exceeded guard {guard:.1e} during step from t={t!r}"
            )
            break
        z = z_new
        times.append(t0 + (k + 1) * dt)
        zs.append(z.copy())
        if observer is not None:
            observer(times[-1], z)
    return MatrixRiccatiTrajectory(np.array(times), np.array(zs), part, breakdown)


def vector_riccati_rhs(pt: RayPoint, sample: HamiltonianSample) -> np.ndarray:
    """dz/dt for the (N-1, 1) partition; the column-matrix view of the
    matrix equation, so the two agree bit for bit."""
    sample.require_vector_form()
    part = Partition(pt.z.shape[0], 1)
    if sample.n1 != part.n1:
        raise DimensionMismatch(f"H1 is {sample.n1} x {sample.n1} but z has length {part.n1}")
    return matrix_riccati_rhs(CosetPoint(part, pt.z[:, None]), sample)[:, 0]


def gamma_rhs(pt: RayPoint, sample: HamiltonianSample) -> float:
    """dgamma/dt = i gamma (V^dag z - z^dag V); real by construction."""
    _, v, _ = sample.require_vector_form()
    a = np.vdot(v, pt.z)  # V^dag z
    val = 1j * pt.gamma * (a - np.conj(a))
    if abs(val.imag) > 1e-12:
        raise NonRealResult(f"gamma rate has imaginary residue {val.imag:.3e}")
    return float(val.real)


def alpha_rhs(pt: RayPoint, sample: HamiltonianSample) -> float:
    """dalpha/dt = -H2 - (V^dag z + z^dag V)/2; independent of alpha."""
    _, v, h2 = sample.require_vector_form()
    a = np.vdot(v, pt.z)
    return -h2 - float(a.real)


def integrate_reduced(
    h: BlockHamiltonian,
    z0: RayPoint,
    alpha0: float,
    t0: float,
    t1: float,
    steps: int,
    guard: float = DEFAULT_GUARD,
    observer: Callable[[float, np.ndarray, float, float], None] | None = None,
) -> ReducedTrajectory:
    """RK4 co-integration of (z, gamma, alpha) for the (N-1, 1) partition.

    gamma is integrated through its own equation of motion in addition to
    being derivable as 1 + z^dag z; both are kept.  alpha accumulates
    without wrapping.
    """
    if t1 <= t0 or steps < 1:
        raise ValueError("need t1 > t0 and steps >= 1")
    if guard <= 0:
        raise ValueError("guard must be positive")
    if h.partition.n2 != 1:
        raise DimensionMismatch("reduced ray-space integration needs partition (N-1, 1)")
    if z0.z.shape[0] != h.partition.n1:
        raise DimensionMismatch("initial z length does not match partition")

    def rhs(z: np.ndarray, gamma: float, sample: HamiltonianSample):
        h1, v, h2s = sample.require_vector_form()
        vz = np.vdot(v, z)  # V^dag z
        dz = -1j * (v + h1 @ z - z * h2s - z * vz)
        dgamma = -2.0 * gamma * float(vz.imag)  # i*gamma*(vz - conj(vz)), exactly real
        dalpha = -h2s - float(vz.real)
        return dz, dgamma, dalpha

    dt = (t1 - t0) / steps
    z = z0.z.copy()
    gamma = z0.gamma
    alpha = float(alpha0)
    times = [t0]
    zs = [z.copy()]
    gammas = [gamma]
    alphas = [alpha]
    if observer is not None:
        observer(t0, z, gamma, alpha)
    breakdown = None
    for k in range(steps):
        t = t0 + k * dt
        sa = h.blocks(t)
        sm = h.blocks(t + 0.5 * dt)
        sb = h.blocks(t + dt)
        dz1, dg1, da1 = rhs(z, gamma, sa)
        dz2, dg2, da2 = rhs(z + 0.5 * dt * dz1, gamma + 0.5 * dt * dg1, sm)
        dz3, dg3, da3 = rhs(z + 0.5 * dt * dz2, gamma + 0.5 * dt * dg2, sm)
        dz4, dg4, da4 = rhs(z + dt * dz3, gamma + dt * dg3, sb)
        z_new = z + (dt / 6.0) * (dz1 + 2 * dz2 + 2 * dz3 + dz4)
        if not np.all(np.isfinite(z_new)) or np.max(np.abs(z_new)) > guard:
            breakdown = Breakdown(
                time=t, diagnostic=f"|z| exceeded guard {guard:.1e} during step from t={t!r}"
            )
            break
        gamma = gamma + (dt / 6.0) * (dg1 + 2 * dg2 + 2 * dg3 + dg4)
        alpha = alpha + (dt / 6.0) * (da1 + 2 * da2 + 2 * da3 + da4)
        z = z_new
        times.append(t0 + (k + 1) * dt)
        zs.append(z.copy())
        gammas.append(gamma)
        alphas.append(alpha)
        if observer is not None:
            observer(times[-1], z, gamma, alpha)
    return ReducedTrajectory(
        np.array(times), np.array(zs), np.array(gammas), np.array(alphas), breakdown
    )
