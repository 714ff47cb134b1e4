"""Time-dependent block Hamiltonians and full Schroedinger evolution.

The integrators here are the reference ("full") evolution every reduced
quantity is validated against: a midpoint-exponential stepper that is
structurally unitary / norm preserving at every step, second-order accurate
for time-dependent H and exact for constant H.  Units are angular frequency
with hbar = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .coset import Partition
from .errors import DimensionMismatch, NonHermitianSample, NotNormalized
from .rng import Stream
from .matcore import (
    DEFAULT_PROFILE,
    ToleranceProfile,
    as_cmat,
    hermiticity_defect,
    unitary_exp_step,
)


@dataclass(frozen=True, eq=False)
class HamiltonianSample:
    """H(t) at one instant, in block form [[H1, V], [V^dag, H2]]."""

    H1: np.ndarray
    V: np.ndarray
    H2: np.ndarray

    @property
    def n1(self) -> int:
        return self.H1.shape[0]

    @property
    def n2(self) -> int:
        return self.H2.shape[0]

    def require_vector_form(self) -> tuple[np.ndarray, np.ndarray, float]:
        """(H1, V column as 1-D vector, H2 scalar); only valid for n2 = 1."""
        if self.n2 != 1:
            raise DimensionMismatch(f"ray-space operations need n2 = 1, got n2 = {self.n2}")
        return self.H1, self.V[:, 0], float(self.H2[0, 0].real)

    def assemble(self) -> np.ndarray:
        return np.block([[self.H1, self.V], [self.V.conj().T, self.H2]])


@dataclass(frozen=True, eq=False)
class BlockHamiltonian:
    """Time-parametrized source of Hermitian block Hamiltonians.

    The evaluator must be pure in t (reentrant).  Each sample is checked
    for Hermiticity of the diagonal blocks and symmetrized before use.
    """

    partition: Partition
    evaluator: Callable[[float], tuple[np.ndarray, np.ndarray, np.ndarray]]
    is_constant: bool = False
    prof: ToleranceProfile = field(default=DEFAULT_PROFILE)

    def blocks(self, t: float) -> HamiltonianSample:
        n1, n2 = self.partition.n1, self.partition.n2
        h1, v, h2 = self.evaluator(t)
        h1 = as_cmat(h1, n1, n1)
        v = as_cmat(v, n1, n2)
        h2 = as_cmat(h2, n2, n2)
        d1 = hermiticity_defect(h1)
        d2 = hermiticity_defect(h2)
        if d1 > self.prof.hermiticity_tol or d2 > self.prof.hermiticity_tol:
            raise NonHermitianSample(
                f"H(t={t!r}) diagonal-block asymmetry {max(d1, d2):.3e} exceeds "
                f"{self.prof.hermiticity_tol:.1e}"
            )
        return HamiltonianSample((h1 + h1.conj().T) / 2, v, (h2 + h2.conj().T) / 2)

    def full(self, t: float) -> np.ndarray:
        return self.blocks(t).assemble()


def constant_hamiltonian(
    h: np.ndarray, part: Partition, prof: ToleranceProfile = DEFAULT_PROFILE
) -> BlockHamiltonian:
    """Wrap a fixed Hermitian N x N matrix as a BlockHamiltonian."""
    h = as_cmat(h, part.N, part.N)
    d = hermiticity_defect(h)
    if d > prof.hermiticity_tol:
        raise NonHermitianSample(f"constant matrix asymmetry {d:.3e}")
    h = (h + h.conj().T) / 2
    n1 = part.n1
    blocks = (h[:n1, :n1], h[:n1, n1:], h[n1:, n1:])
    return BlockHamiltonian(part, lambda t: blocks, is_constant=True, prof=prof)


# --- serializable Hamiltonian descriptions ---------------------------------


@dataclass(frozen=True, eq=False)
class ConstantSpec:
    """Fixed Hermitian matrix, given explicitly or drawn from the portable
    seeded generator (spectral norm `random_norm`)."""

    matrix: np.ndarray | None = None
    random_norm: float | None = None


@dataclass(frozen=True)
class RotatingFieldSpec:
    """Two-level field of amplitude `amplitude`, tilted by `tilt` from the
    z axis and precessing about it at `frequency`:

        H(t) = (a/2) [sin(tilt) cos(f t) sx + sin(tilt) sin(f t) sy
                      + cos(tilt) sz]
    """

    amplitude: float
    frequency: float
    tilt: float


@dataclass(frozen=True, eq=False)
class InterpolatedSpec:
    """Linear interpolation between Hermitian samples on a strictly
    increasing time grid; evaluation outside the grid is an error."""

    times: np.ndarray
    matrices: tuple[np.ndarray, ...]


@dataclass(frozen=True)
class Envelope:
    """Scalar envelope a, a*cos(f t + p) or a*sin(f t + p)."""

    kind: str  # const | cos | sin
    amplitude: float = 1.0
    frequency: float = 0.0
    phase: float = 0.0

    def __call__(self, t: float) -> float:
        if self.kind == "const":
            return self.amplitude
        if self.kind == "cos":
            return self.amplitude * math.cos(self.frequency * t + self.phase)
        if self.kind == "sin":
            return self.amplitude * math.sin(self.frequency * t + self.phase)
        raise ValueError(f"unknown envelope kind {self.kind!r}")


@dataclass(frozen=True, eq=False)
class SumOfTermsSpec:
    """H(t) = sum_k envelope_k(t) * matrix_k with Hermitian matrices."""

    terms: tuple[tuple[np.ndarray, Envelope], ...]


HamiltonianSpec = ConstantSpec | RotatingFieldSpec | InterpolatedSpec | SumOfTermsSpec

_SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_SY = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
_SZ = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


def _split(h: np.ndarray, n1: int):
    return h[:n1, :n1], h[:n1, n1:], h[n1:, n1:]


def build_hamiltonian(
    spec: HamiltonianSpec,
    part: Partition,
    seed: int = 0,
    prof: ToleranceProfile = DEFAULT_PROFILE,
) -> BlockHamiltonian:
    """Realize a serializable spec as a BlockHamiltonian."""
    n1 = part.n1
    if isinstance(spec, ConstantSpec):
        if spec.matrix is not None:
            return constant_hamiltonian(spec.matrix, part, prof)
        norm = 1.0 if spec.random_norm is None else spec.random_norm
        return constant_hamiltonian(Stream(seed).hermitian(part.N, norm), part, prof)

    if isinstance(spec, RotatingFieldSpec):
        if part.N != 2:
            raise DimensionMismatch("rotating_field is defined for N = 2 only")
        a, f, th = spec.amplitude, spec.frequency, spec.tilt

        def rot_eval(t: float):
            h = 0.5 * a * (
                math.sin(th) * math.cos(f * t) * _SX
                + math.sin(th) * math.sin(f * t) * _SY
                + math.cos(th) * _SZ
            )
            return _split(h, n1)

        return BlockHamiltonian(part, rot_eval, is_constant=False, prof=prof)

    if isinstance(spec, InterpolatedSpec):
        times = np.asarray(spec.times, dtype=float)
        if times.ndim != 1 or len(times) < 2 or np.any(np.diff(times) <= 0):
            raise ValueError("interpolation grid must be strictly increasing with >= 2 samples")
        mats = [as_cmat(m, part.N, part.N) for m in spec.matrices]
        if len(mats) != len(times):
            raise DimensionMismatch("one matrix per grid time required")
        stack = np.array([(m + m.conj().T) / 2 for m in mats])

        def interp_eval(t: float):
            if t < times[0] - 1e-12 or t > times[-1] + 1e-12:
                raise ValueError(f"t={t} outside interpolation grid [{times[0]}, {times[-1]}]")
            tt = min(max(t, times[0]), times[-1])
            k = min(int(np.searchsorted(times, tt, side="right")) - 1, len(times) - 2)
            w = (tt - times[k]) / (times[k + 1] - times[k])
            return _split((1 - w) * stack[k] + w * stack[k + 1], n1)

        return BlockHamiltonian(part, interp_eval, is_constant=False, prof=prof)

    if isinstance(spec, SumOfTermsSpec):
        mats = [as_cmat(m, part.N, part.N) for m, _ in spec.terms]
        mats = [(m + m.conj().T) / 2 for m in mats]
        envs = [e for _, e in spec.terms]

        def sum_eval(t: float):
            h = np.zeros((part.N, part.N), dtype=complex)
            for m, e in zip(mats, envs):
                h = h + e(t) * m
            return _split(h, n1)

        return BlockHamiltonian(part, sum_eval, is_constant=False, prof=prof)

    raise TypeError(f"unknown Hamiltonian spec {type(spec).__name__}")


# --- trajectories and integrators -------------------------------------------


@dataclass(frozen=True, eq=False)
class UnitaryTrajectory:
    times: np.ndarray
    unitaries: np.ndarray  # (n_samples, N, N)

    def at(self, index: int) -> np.ndarray:
        return self.unitaries[index]


@dataclass(frozen=True, eq=False)
class StateTrajectory:
    times: np.ndarray
    states: np.ndarray  # (n_samples, N)

    def at(self, index: int) -> np.ndarray:
        return self.states[index]


def _check_window(t0: float, t1: float, steps: int):
    if t1 <= t0:
        raise ValueError("need t1 > t0")
    if steps < 1:
        raise ValueError("need steps >= 1")


def _step_factory(h: BlockHamiltonian, t0: float, dt: float):
    """Per-step midpoint propagator; cached when H is constant."""
    if h.is_constant:
        e = unitary_exp_step(h.full(t0), dt, h.prof)
        return lambda k: e
    return lambda k: unitary_exp_step(h.full(t0 + (k + 0.5) * dt), dt, h.prof)


def evolve_unitary(
    h: BlockHamiltonian, t0: float, t1: float, steps: int
) -> UnitaryTrajectory:
    """Integrate i dU/dt = H(t) U from U(t0) = I with midpoint-exponential
    steps U <- exp(-i H(t_mid) dt) U."""
    _check_window(t0, t1, steps)
    dt = (t1 - t0) / steps
    n = h.partition.N
    step = _step_factory(h, t0, dt)
    u = np.eye(n, dtype=complex)
    out = np.empty((steps + 1, n, n), dtype=complex)
    out[0] = u
    for k in range(steps):
        u = step(k) @ u
        out[k + 1] = u
    times = t0 + dt * np.arange(steps + 1)
    return UnitaryTrajectory(times, out)


def evolve_state(
    h: BlockHamiltonian, psi0: np.ndarray, t0: float, t1: float, steps: int
) -> StateTrajectory:
    """Same stepping as evolve_unitary, applied to a unit vector."""
    _check_window(t0, t1, steps)
    psi = np.asarray(psi0, dtype=complex).reshape(-1)
    if psi.shape[0] != h.partition.N:
        raise DimensionMismatch(f"state length {psi.shape[0]} != N = {h.partition.N}")
    nrm = float(np.linalg.norm(psi))
    if abs(nrm - 1.0) > 1e-10:
        raise NotNormalized(f"|psi0| = {nrm!r}")
    dt = (t1 - t0) / steps
    step = _step_factory(h, t0, dt)
    out = np.empty((steps + 1, psi.shape[0]), dtype=complex)
    out[0] = psi
    for k in range(steps):
        psi = step(k) @ psi
        out[k + 1] = psi
    times = t0 + dt * np.arange(steps + 1)
    return StateTrajectory(times, out)


def split_state(psi: np.ndarray | Sequence[complex]) -> tuple[np.ndarray, complex]:
    """Split psi into its upper N-1 components and its last component."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    return psi[:-1].copy(), complex(psi[-1])
