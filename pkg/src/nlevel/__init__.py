"""Riccati reduction of N-level quantum dynamics.

Reduces unitary Schroedinger evolution on U(N) to matrix Riccati flow on
the Grassmannian chart Z, and (for the (N-1, 1) partition) to Hamiltonian
flow on ray space, with total/dynamical/geometric phase computation.  Every
reduced quantity has an independent full-evolution oracle alongside it.
"""

from .coset import (
    BlockUnitary,
    CosetFactorization,
    CosetPoint,
    Partition,
    coset_factorize,
    extract_Z,
    reconstruct_U0,
    split_blocks,
)
from .dynamics import (
    BlockHamiltonian,
    ConstantSpec,
    Envelope,
    HamiltonianSample,
    InterpolatedSpec,
    RotatingFieldSpec,
    StateTrajectory,
    SumOfTermsSpec,
    UnitaryTrajectory,
    build_hamiltonian,
    constant_hamiltonian,
    evolve_state,
    evolve_unitary,
    split_state,
)
from .matcore import (
    DEFAULT_PROFILE,
    ToleranceProfile,
    hermitian_inv_sqrt,
    hermitian_sqrt,
    polar_decompose,
    unitary_exp_step,
)
from .phase import (
    KinematicCurve,
    PhaseReport,
    geometric_phase_schrodinger,
    kinematic_phases,
    line_integral_theta0,
    loop_symplectic_area,
)
from .riccati import (
    MatrixRiccatiTrajectory,
    RayPoint,
    ReducedTrajectory,
    integrate_matrix_riccati,
    integrate_reduced,
    matrix_riccati_rhs,
    vector_riccati_rhs,
)
from .rng import Stream
from .symplectic import (
    SymplecticMatrices,
    classical_hamiltonian,
    hamiltonian_flow,
    poisson_bracket,
    symplectic_matrices,
    theta0,
)

__version__ = "0.1.0"
