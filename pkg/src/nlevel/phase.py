"""Total, dynamical and geometric phases.

Two routes are provided and must agree.  Along a reduced Schroedinger
trajectory,

    phi_tot = alpha(t2) - alpha(t1) + arg(1 + z(t1)^dag z(t2)),
    phi_dyn = integral of the classical Hamiltonian over [t1, t2],
    phi_geom = phi_tot - phi_dyn.

Kinematically, for a parametrized curve with lift phase alpha(s),

    phi_dyn = alpha(s2) - alpha(s1) + int_C theta0,
    phi_geom = arg(1 + z(s1)^dag z(s2)) - int_C theta0,

so phi_geom never reads the lift phase at all.  For a closed loop phi_geom
equals minus the enclosed symplectic area.

Conventions: arg uses the principal branch (-pi, pi]; alpha is unwrapped;
increasing parameter is the positive orientation.  All phase arithmetic is
done on unwrapped values; reduce mod 2 pi only for presentation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson, trapezoid

from .dynamics import BlockHamiltonian
from .errors import ConsistencyError, NotClosed, UndefinedPhase
from .riccati import RayPoint, ReducedTrajectory
from .symplectic import classical_hamiltonian

ORTHOGONALITY_TOL = 1e-12
CLOSURE_TOL = 1e-9

BASE_CONVENTION = {
    "arg_branch": "(-pi, pi]",
    "alpha": "unwrapped",
    "orientation": "increasing-parameter",
}


def arg_principal(w: complex) -> float:
    """Principal argument in (-pi, pi]; the -pi signed-zero edge maps to pi."""
    a = float(np.angle(w))
    if a <= -np.pi:
        a = np.pi
    return a


def wrap_two_pi(value: float) -> float:
    """Representative of `value` in [0, 2 pi); presentation helper only."""
    return float(np.mod(value, 2.0 * np.pi))


@dataclass(frozen=True)
class PhaseReport:
    """Total / dynamical / geometric phase triple with convention metadata.

    Exactly one of the three is always defined from the other two, so the
    additivity phi_tot = phi_dyn + phi_geom holds by construction.
    """

    phi_total: float
    phi_dynamical: float
    phi_geometric: float
    convention: dict = field(default_factory=dict)

    def __post_init__(self):
        gap = abs(self.phi_geometric - (self.phi_total - self.phi_dynamical))
        scale = 1.0 + abs(self.phi_total) + abs(self.phi_dynamical)
        if gap > 1e-12 * scale:
            raise ConsistencyError(f"phase additivity violated by {gap:.3e}")

    @classmethod
    def from_total_and_dynamical(cls, total: float, dynamical: float, convention: dict):
        return cls(total, dynamical, total - dynamical, convention)

    @classmethod
    def from_dynamical_and_geometric(cls, dynamical: float, geometric: float, convention: dict):
        return cls(dynamical + geometric, dynamical, geometric, convention)


@dataclass(frozen=True, eq=False)
class KinematicCurve:
    """Sampled parametrized curve in the ray-space chart with an optional
    lift phase per sample (defaults to the zero lift)."""

    params: np.ndarray
    points: np.ndarray  # (n_samples, N-1) complex
    alphas: np.ndarray | None = None

    def __post_init__(self):
        s = np.asarray(self.params, dtype=float).reshape(-1)
        z = np.asarray(self.points, dtype=complex)
        if z.ndim == 1:
            z = z[:, None]
        if s.shape[0] != z.shape[0] or s.shape[0] < 2:
            raise ValueError("need matching params/points with at least 2 samples")
        if np.any(np.diff(s) <= 0):
            raise ValueError("curve parameter grid must be strictly increasing")
        if not (np.all(np.isfinite(s)) and np.all(np.isfinite(z))):
            raise ValueError("curve data must be finite")
        a = self.alphas
        a = np.zeros(s.shape[0]) if a is None else np.asarray(a, dtype=float).reshape(-1)
        if a.shape[0] != s.shape[0]:
            raise ValueError("alphas must match the parameter grid")
        object.__setattr__(self, "params", s)
        object.__setattr__(self, "points", z)
        object.__setattr__(self, "alphas", a)

    @classmethod
    def from_trajectory(cls, traj: ReducedTrajectory) -> "KinematicCurve":
        return cls(traj.times, traj.zs, traj.alphas)

    def gammas(self) -> np.ndarray:
        return 1.0 + np.sum(np.abs(self.points) ** 2, axis=1)


def _overlap_factor(z1: np.ndarray, z2: np.ndarray) -> complex:
    w = 1.0 + complex(np.vdot(z1, z2))
    if abs(w) < ORTHOGONALITY_TOL:
        raise UndefinedPhase("endpoint states are orthogonal; total phase undefined")
    return w


def total_phase_schrodinger(traj: ReducedTrajectory, t1: float, t2: float) -> float:
    """alpha(t2) - alpha(t1) + arg(1 + z(t1)^dag z(t2)), from reduced data only."""
    i1, i2 = traj.index_of(t1), traj.index_of(t2)
    w = _overlap_factor(traj.zs[i1], traj.zs[i2])
    return float(traj.alphas[i2] - traj.alphas[i1]) + arg_principal(w)


def dynamical_phase_schrodinger(
    traj: ReducedTrajectory, h: BlockHamiltonian, t1: float, t2: float
) -> float:
    """Composite-Simpson time integral of the classical Hamiltonian along
    the stored samples between t1 and t2."""
    i1, i2 = traj.index_of(t1), traj.index_of(t2)
    if i2 <= i1:
        raise ValueError("need t1 < t2 on the stored grid")
    times = traj.times[i1 : i2 + 1]
    cached = h.blocks(times[0]) if h.is_constant else None
    values = np.empty(times.shape[0])
    for j, t in enumerate(times):
        sample = cached if cached is not None else h.blocks(t)
        values[j] = classical_hamiltonian(RayPoint(traj.zs[i1 + j]), sample)
    return float(simpson(values, x=times))


def geometric_phase_schrodinger(
    traj: ReducedTrajectory, h: BlockHamiltonian, t1: float, t2: float
) -> PhaseReport:
    """Phase report for the evolution between two grid times.

    When the ray-space curve closes, the total phase must equal the bare
    alpha difference; that simplification is cross-checked here.
    """
    total = total_phase_schrodinger(traj, t1, t2)
    dynamical = dynamical_phase_schrodinger(traj, h, t1, t2)
    i1, i2 = traj.index_of(t1), traj.index_of(t2)
    cyclic = bool(np.linalg.norm(traj.zs[i1] - traj.zs[i2]) < CLOSURE_TOL)
    if cyclic:
        simplified = float(traj.alphas[i2] - traj.alphas[i1])
        if abs(simplified - total) > 1e-8:
            raise ConsistencyError(
                f"cyclic total-phase simplification off by {abs(simplified - total):.3e}"
            )
    convention = dict(BASE_CONVENTION, route="schrodinger", cyclic=str(cyclic).lower())
    return PhaseReport.from_total_and_dynamical(total, dynamical, convention)


def line_integral_theta0(curve: KinematicCurve) -> float:
    """Trapezoid quadrature of theta0 along the curve, with second-order
    centered/one-sided differences for dz/ds on the sample grid."""
    s = curve.params
    z = curve.points
    edge = 2 if s.shape[0] >= 3 else 1
    dz = np.gradient(z, s, axis=0, edge_order=edge)
    integrand = np.imag(np.sum(np.conj(z) * dz, axis=1)) / curve.gammas()
    return float(trapezoid(integrand, s))


def kinematic_phases(curve: KinematicCurve) -> PhaseReport:
    """Phase report for a parametrized curve with its lift phase.

    The geometric part is computed purely from the ray-space samples; the
    lift phase enters only the total and dynamical parts.
    """
    line = line_integral_theta0(curve)
    w = _overlap_factor(curve.points[0], curve.points[-1])
    geometric = arg_principal(w) - line
    dynamical = float(curve.alphas[-1] - curve.alphas[0]) + line
    convention = dict(BASE_CONVENTION, route="kinematic")
    return PhaseReport.from_dynamical_and_geometric(dynamical, geometric, convention)


def surface_integral_omega(curve: KinematicCurve, n_radial: int = 24, n_arc: int = 4) -> float:
    """Integral of omega0 over the fan surface from the chart origin to a
    closed two-level curve (N = 2 only).

    Each fan triangle (0, z_i, z_{i+1}) is integrated with Gauss-Legendre
    quadrature; signed triangle orientation makes the fan exact for
    non-convex and non-star-shaped loops.
    """
    z = curve.points
    if z.shape[1] != 1:
        raise ValueError("surface cross-check is implemented for N = 2 curves only")
    q = z[:, 0].real
    p = z[:, 0].imag
    lam_x, lam_w = np.polynomial.legendre.leggauss(n_radial)
    lam = (lam_x + 1.0) / 2.0
    lam_w = lam_w / 2.0
    mu_x, mu_w = np.polynomial.legendre.leggauss(n_arc)
    mu = (mu_x + 1.0) / 2.0
    mu_w = mu_w / 2.0
    v1q, v1p, v2q, v2p = q[:-1], p[:-1], q[1:], p[1:]
    cross = v1q * v2p - v1p * v2q
    wq = np.outer(v1q, 1.0 - mu) + np.outer(v2q, mu)
    wp = np.outer(v1p, 1.0 - mu) + np.outer(v2p, mu)
    qq = wq[:, :, None] * lam[None, None, :]
    pp = wp[:, :, None] * lam[None, None, :]
    density = 2.0 / (1.0 + qq**2 + pp**2) ** 2  # omega0 = (2/gamma^2) dq ^ dp
    inner = np.einsum("tml,l->tm", density * lam[None, None, :], lam_w)
    per_triangle = np.einsum("tm,m->t", inner, mu_w)
    return float(np.sum(cross * per_triangle))


def loop_symplectic_area(curve: KinematicCurve) -> float:
    """Geometric phase of a closed loop: minus the loop integral of theta0.

    For two-level curves the result is cross-checked against the surface
    integral of omega0 over the fan spanned from the chart origin.
    """
    gap = float(np.linalg.norm(curve.points[0] - curve.points[-1]))
    if gap >= CLOSURE_TOL:
        raise NotClosed(f"endpoint gap {gap:.3e} exceeds {CLOSURE_TOL:.1e}")
    line = line_integral_theta0(curve)
    if curve.points.shape[1] == 1:
        surface = surface_integral_omega(curve)
        if abs(surface - line) > 1e-5:
            raise ConsistencyError(
                f"Stokes cross-check failed: line {line!r} vs surface {surface!r}"
            )
    return -line
