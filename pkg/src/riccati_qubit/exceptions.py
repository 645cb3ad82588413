"""Exception types raised by the library.

Everything derives from ``ValueError`` or ``RuntimeError`` so callers that do
not care about the distinction can catch the builtin.
"""


class HermiticityError(ValueError):
    """Matrix is not Hermitian within the construction tolerance."""


class InvalidAntilinearMap(ValueError):
    """Linear factor of an antilinear map is singular or not involutive."""


class ModelPreconditionError(ValueError):
    """A model-level precondition failed (e.g. a non-commuting environment pair)."""


class CommutingSolverError(ModelPreconditionError):
    """The closed-form commuting solver was given a non-commuting pair."""


class RiccatiResidualError(ModelPreconditionError):
    """Candidate solution does not satisfy the Riccati equation."""

    def __init__(self, residual: float, tolerance: float):
        self.residual = residual
        self.tolerance = tolerance
        super().__init__(
            f"Riccati residual {residual:.3e} exceeds tolerance {tolerance:.3e}"
        )


class InvalidStateError(ValueError):
    """Density matrix is not Hermitian, unit-trace and positive semidefinite."""


class VerificationError(RuntimeError):
    """A numerical cross-check exceeded its tolerance."""


class StepSizeError(VerificationError):
    """The ODE oracle could not certify its own accuracy."""
