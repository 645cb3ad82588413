"""Exact qubit decoherence through the block-operator Riccati equation."""

from .dynamics import (
    JointState,
    KrausFamily,
    QubitState,
    assemble_factored,
    correlated_dynamics,
    driven_reduced_dynamics,
    evolve_block,
    evolve_factored,
    kraus_apply,
    kraus_family,
    local_unitarity_defect,
    ode_oracle,
    reduced_dynamics,
    rotating_frame_map,
)
from .exceptions import (
    CommutingSolverError,
    HermiticityError,
    InvalidAntilinearMap,
    InvalidStateError,
    ModelPreconditionError,
    RiccatiResidualError,
    StepSizeError,
    VerificationError,
)
from .hamiltonians import (
    EnvironmentPair,
    ModelParams,
    build_hbar,
    build_hqe,
    build_hqe_t,
    build_ht,
    spin_bath,
)
from .linalg import (
    AntilinearMap,
    BlockOperator,
    HermitianOperator,
    MixedOperator,
    antilinear_conjugate,
    exp_scaled,
    expm_oracle,
    herm_eig,
    kron,
    mixed_adjoint,
    mixed_compose,
    partial_trace_env,
)
from .riccati import (
    Branch,
    LocalFrame,
    RiccatiSolution,
    block_diagonalize,
    build_sx,
    joint_diagonalize,
    local_frames,
    riccati_residual_antilinear,
    riccati_residual_linear,
    solve_commuting,
)

__version__ = "0.1.0"
