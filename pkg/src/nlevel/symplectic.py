"""Classical phase-space structure on ray space.

In the chart z = q + i p the canonical one-form and two-form are

    theta0 = Im(z^dag dz) / gamma = (q_r dp_r - p_r dq_r) / gamma,
    omega0 = d theta0 = 2 (dq, dp) ^ [[L, M], [-M, L]] (dq, dp)^T,

with L = (q p^T - p q^T)/(2 gamma^2) and
M = I/(2 gamma) - (q q^T + p p^T)/(2 gamma^2).  The block matrix inverts in
closed form to [[X, Y], [-Y, X]] with X = 2 gamma (q p^T - p q^T) and
Y = -2 gamma (I + q q^T + p p^T), giving the fundamental brackets

    {q_r, q_s} = {p_r, p_s} = X_rs / 4,   {q_r, p_s} = Y_rs / 4.

The classical Hamiltonian function is minus the quantum expectation value
of H in the normalized chart state; its bracket flow reproduces the
ray-space Riccati velocity exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dynamics import HamiltonianSample
from .errors import NonRealResult
from .riccati import RayPoint, ray_point_from_qp

GradientFn = Callable[[RayPoint], tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True, eq=False)
class SymplecticMatrices:
    """The L/M blocks of omega0 and their X/Y inverse blocks at one point."""

    L: np.ndarray
    M: np.ndarray
    X: np.ndarray
    Y: np.ndarray

    def omega_matrix(self) -> np.ndarray:
        """Assembled 2(N-1) x 2(N-1) coefficient matrix 2 [[L, M], [-M, L]]
        acting on tangent vectors ordered (dq, dp)."""
        return 2.0 * np.block([[self.L, self.M], [-self.M, self.L]])

    def pb_matrix(self) -> np.ndarray:
        """Poisson matrix J with J[i, j] = {x_i, x_j} for x = (q, p)."""
        return 0.25 * np.block([[self.X, self.Y], [-self.Y, self.X]])

    def inverse_pairing_residual(self) -> float:
        lm = np.block([[self.L, self.M], [-self.M, self.L]])
        xy = np.block([[self.X, self.Y], [-self.Y, self.X]])
        return float(np.linalg.norm(lm @ xy - np.eye(lm.shape[0])))


def theta0(pt: RayPoint, dz: np.ndarray) -> float:
    """Canonical one-form paired with a tangent vector dz.

    Evaluated both as Im(z^dag dz)/gamma and in real coordinates as
    (q . dp - p . dq)/gamma; the two must agree to 1e-14.
    """
    dz = np.asarray(dz, dtype=complex).reshape(-1)
    gamma = pt.gamma
    complex_form = float(np.vdot(pt.z, dz).imag) / gamma
    real_form = float(pt.q @ dz.imag - pt.p @ dz.real) / gamma
    if abs(complex_form - real_form) > 1e-14 * max(1.0, abs(complex_form)):
        raise NonRealResult(
            f"theta0 evaluations disagree: {complex_form!r} vs {real_form!r}"
        )
    return complex_form


def symplectic_matrices(pt: RayPoint) -> SymplecticMatrices:
    q, p = pt.q, pt.p
    gamma = pt.gamma
    qp = np.outer(q, p)
    anti = qp - qp.T  # q_r p_s - q_s p_r
    sym = np.outer(q, q) + np.outer(p, p)
    eye = np.eye(q.shape[0])
    l = anti / (2.0 * gamma**2)
    m = eye / (2.0 * gamma) - sym / (2.0 * gamma**2)
    x = 2.0 * gamma * anti
    y = -2.0 * gamma * (eye + sym)
    return SymplecticMatrices(l, m, x, y)


def omega_pairing(pt: RayPoint, u: np.ndarray, v: np.ndarray) -> float:
    """omega0 evaluated on two tangent vectors in (dq, dp) ordering.

    Includes the antisymmetrization factor, so this is the value the loop
    integral of theta0 around the (u, v) parallelogram converges to.
    """
    sm = symplectic_matrices(pt)
    u = np.asarray(u, dtype=float).reshape(-1)
    v = np.asarray(v, dtype=float).reshape(-1)
    return 2.0 * float(u @ sm.omega_matrix() @ v)


def poisson_bracket(grad_f: GradientFn, grad_g: GradientFn, pt: RayPoint):
    """{f, g} = grad(f) . J . grad(g) with the fundamental-bracket matrix.

    Gradient callbacks return (df/dq, df/dp) arrays; complex-valued
    functions extend by bilinearity, so complex gradient arrays are
    accepted and produce a complex bracket.
    """
    sm = symplectic_matrices(pt)
    fq, fp = grad_f(pt)
    gq, gp = grad_g(pt)
    xq = 0.25 * (sm.X @ gq + sm.Y @ gp)
    xp = 0.25 * (-sm.Y @ gq + sm.X @ gp)
    out = np.asarray(fq) @ xq + np.asarray(fp) @ xp
    return complex(out) if np.iscomplexobj(out) else float(out)


def classical_hamiltonian(pt: RayPoint, sample: HamiltonianSample) -> float:
    """-(H2 + z^dag V + V^dag z + z^dag H1 z) / gamma, i.e. minus the
    expectation value of H in the normalized chart state."""
    h1, v, h2 = sample.require_vector_form()
    z = pt.z
    vz = np.vdot(v, z)  # V^dag z
    quad = np.vdot(z, h1 @ z)
    if abs(quad.imag) > 1e-12 * max(1.0, abs(quad.real)):
        raise NonRealResult(f"z^dag H1 z has imaginary residue {quad.imag:.3e}")
    s = h2 + 2.0 * float(vz.real) + float(quad.real)
    return -s / pt.gamma


def classical_hamiltonian_gradient(
    pt: RayPoint, sample: HamiltonianSample
) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form (dH/dq, dH/dp) of the classical Hamiltonian.

    With w = dH/d(conj z) = -[(V + H1 z) gamma - S z] / gamma^2 and S the
    numerator expectation, the real gradients are 2 Re w and 2 Im w.
    """
    h1, v, h2 = sample.require_vector_form()
    z = pt.z
    gamma = pt.gamma
    vz = np.vdot(v, z)
    quad = np.vdot(z, h1 @ z)
    s = h2 + 2.0 * float(vz.real) + float(quad.real)
    w = -((v + h1 @ z) * gamma - s * z) / gamma**2
    return 2.0 * w.real, 2.0 * w.imag


def hamiltonian_flow(pt: RayPoint, sample: HamiltonianSample) -> np.ndarray:
    """dz/dt generated by the classical Hamiltonian through the Poisson
    matrix; must coincide with the ray-space Riccati right-hand side."""
    gq, gp = classical_hamiltonian_gradient(pt, sample)
    sm = symplectic_matrices(pt)
    dq = 0.25 * (sm.X @ gq + sm.Y @ gp)
    dp = 0.25 * (-sm.Y @ gq + sm.X @ gp)
    return dq + 1j * dp


# --- coordinate gradients for bracket identities ----------------------------


def grad_coordinate_z(r: int, n: int) -> GradientFn:
    """Gradient of the complex coordinate function z_r."""

    def grad(pt: RayPoint):
        dq = np.zeros(n, dtype=complex)
        dp = np.zeros(n, dtype=complex)
        dq[r] = 1.0
        dp[r] = 1.0j
        return dq, dp

    return grad


def grad_q(r: int, n: int) -> GradientFn:
    def grad(pt: RayPoint):
        dq = np.zeros(n)
        dq[r] = 1.0
        return dq, np.zeros(n)

    return grad


def grad_p(r: int, n: int) -> GradientFn:
    def grad(pt: RayPoint):
        dp = np.zeros(n)
        dp[r] = 1.0
        return np.zeros(n), dp

    return grad


def _grad_gamma(pt: RayPoint):
    return 2.0 * pt.q, 2.0 * pt.p


def _grad_inv_gamma(pt: RayPoint):
    g2 = pt.gamma**2
    return -2.0 * pt.q / g2, -2.0 * pt.p / g2


def _grad_zbar_over_gamma(s: int, n: int) -> GradientFn:
    def grad(pt: RayPoint):
        gamma = pt.gamma
        zbar = np.conj(pt.z[s])
        dq = np.zeros(n, dtype=complex)
        dp = np.zeros(n, dtype=complex)
        dq[s] = 1.0 / gamma
        dp[s] = -1.0j / gamma
        dq += zbar * (-2.0 * pt.q / gamma**2)
        dp += zbar * (-2.0 * pt.p / gamma**2)
        return dq, dp

    return grad


@dataclass(frozen=True)
class PBIdentityReport:
    """Residuals of the four closed-form bracket identities
    {z_r, gamma} = i gamma^2 z_r, {z_r, 1/gamma} = -i z_r,
    {z_r, conj(z_s)/gamma} = i delta_rs, {z_r, f(z)/gamma} = -i z_r f(z)."""

    residuals: dict[str, float]

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values())


def pb_gamma_identities(pt: RayPoint) -> PBIdentityReport:
    """Evaluate the bracket identities numerically at one point.

    The analytic test functions f(z) run over a small monomial family; all
    gradients are closed form.
    """
    n = pt.z.shape[0]
    gamma = pt.gamma
    res: dict[str, float] = {}

    r_gamma = 0.0
    r_inv = 0.0
    r_mixed = 0.0
    for r in range(n):
        gz = grad_coordinate_z(r, n)
        b = poisson_bracket(gz, lambda q: _grad_gamma(q), pt)
        r_gamma = max(r_gamma, abs(b - 1j * gamma**2 * pt.z[r]))
        b = poisson_bracket(gz, lambda q: _grad_inv_gamma(q), pt)
        r_inv = max(r_inv, abs(b + 1j * pt.z[r]))
        for s in range(n):
            b = poisson_bracket(gz, _grad_zbar_over_gamma(s, n), pt)
            expected = 1.0j if r == s else 0.0
            r_mixed = max(r_mixed, abs(b - expected))
    res["z_gamma"] = r_gamma
    res["z_inv_gamma"] = r_inv
    res["z_zbar_over_gamma"] = r_mixed

    # analytic monomials f(z): z_1, z_1^2 and, when available, z_1 z_2
    monomials: list[tuple[Callable[[np.ndarray], complex], Callable[[np.ndarray], np.ndarray]]] = [
        (lambda z: z[0], lambda z: np.eye(n, dtype=complex)[0]),
        (lambda z: z[0] ** 2, lambda z: 2.0 * z[0] * np.eye(n, dtype=complex)[0]),
    ]
    if n >= 2:
        def fz(z):
            return z[0] * z[1]

        def dfz(z):
            g = np.zeros(n, dtype=complex)
            g[0] = z[1]
            g[1] = z[0]
            return g

        monomials.append((fz, dfz))

    r_analytic = 0.0
    for f, df in monomials:
        def grad_f_over_gamma(q: RayPoint, f=f, df=df):
            gamma_ = q.gamma
            val = f(q.z)
            dz = df(q.z)
            dq = dz / gamma_ + val * (-2.0 * q.q / gamma_**2)
            dp = 1j * dz / gamma_ + val * (-2.0 * q.p / gamma_**2)
            return dq, dp

        for r in range(n):
            b = poisson_bracket(grad_coordinate_z(r, n), grad_f_over_gamma, pt)
            r_analytic = max(r_analytic, abs(b + 1j * pt.z[r] * f(pt.z)))
    res["z_analytic_over_gamma"] = r_analytic
    return PBIdentityReport(res)


def bracket_of_coordinates(i: int, j: int, n: int) -> Callable[[RayPoint], float]:
    """{x_i, x_j} as a function of the point, for x = (q_1..q_n, p_1..p_n)."""

    def value(pt: RayPoint) -> float:
        sm = symplectic_matrices(pt)
        return float(sm.pb_matrix()[i, j])

    return value


def jacobi_residual(pt: RayPoint, i: int, j: int, k: int, fd_step: float = 1e-5) -> float:
    """|{x_i, {x_j, x_k}} + {x_j, {x_k, x_i}} + {x_k, {x_i, x_j}}|.

    Inner brackets are closed-form coordinate brackets; their gradients are
    obtained by central differencing with the given step, nested inside an
    outer closed-form bracket.
    """
    n = pt.z.shape[0]

    def coord_grad(idx: int) -> GradientFn:
        return grad_q(idx, n) if idx < n else grad_p(idx - n, n)

    def displaced(base: RayPoint, axis: int, delta: float) -> RayPoint:
        q, p = base.q, base.p
        if axis < n:
            q = q.copy()
            q[axis] += delta
        else:
            p = p.copy()
            p[axis - n] += delta
        return ray_point_from_qp(q, p)

    def fd_grad_of(fn: Callable[[RayPoint], float]) -> GradientFn:
        def grad(base: RayPoint):
            dq = np.zeros(n)
            dp = np.zeros(n)
            for axis in range(2 * n):
                plus = fn(displaced(base, axis, fd_step))
                minus = fn(displaced(base, axis, -fd_step))
                g = (plus - minus) / (2.0 * fd_step)
                if axis < n:
                    dq[axis] = g
                else:
                    dp[axis - n] = g
            return dq, dp

        return grad

    total = 0.0
    for a, b, c in ((i, j, k), (j, k, i), (k, i, j)):
        inner = bracket_of_coordinates(b, c, n)
        total += poisson_bracket(coord_grad(a), fd_grad_of(inner), pt)
    return abs(total)
