"""Dense complex linear algebra used throughout the package.

Hermitian operators, 2x2 block operators on C^2 (x) H, antilinear maps of the
form ``psi -> M conj(psi)`` and operators mixing a linear and an antilinear
part. All containers copy their input and freeze it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import HermiticityError, InvalidAntilinearMap

HERMITIAN_RTOL = 1e-12
INVOLUTION_TOL = 1e-12


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return a frozen complex 2-D copy of ``a`` after checking it is finite."""
    m = np.array(a, dtype=complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    m.setflags(write=False)
    return m


def _square(a, name: str = "matrix") -> np.ndarray:
    m = as_matrix(a, name)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.transpose(a))


def fro(a) -> float:
    return float(np.linalg.norm(a))


def commutator(a, b) -> np.ndarray:
    a = np.asarray(a)
    b = np.asarray(b)
    return a @ b - b @ a


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Square complex matrix certified Hermitian at construction.

    Inputs within ``rtol`` of Hermitian are symmetrized; anything further away
    raises :class:`HermiticityError`.
    """

    matrix: np.ndarray

    def __init__(self, matrix, rtol: float = HERMITIAN_RTOL):
        m = np.array(_square(matrix, "Hermitian operator"))
        scale = fro(m)
        defect = fro(m - dagger(m))
        if defect > rtol * scale:
            raise HermiticityError(
                f"||A - A^dagger||_F = {defect:.3e} exceeds {rtol:.1e} * ||A||_F"
            )
        m = 0.5 * (m + dagger(m))
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.matrix
        return self.matrix.astype(dtype)

    def is_real_symmetric(self, atol: float = 0.0) -> bool:
        return fro(self.matrix - self.matrix.T) <= atol


@dataclass(frozen=True, eq=False)
class BlockOperator:
    """Operator on H (+) H stored as four ``d x d`` blocks ``[[a, b], [c, e]]``.

    The flattened matrix uses the qubit index as the outer (slow) index, so
    ``flatten(kron(q, m))`` has blocks ``q[i, j] * m``.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    e: np.ndarray

    def __init__(self, a, b, c, e):
        blocks = [_square(x, name) for x, name in zip((a, b, c, e), "abce")]
        if len({x.shape for x in blocks}) != 1:
            raise ValueError("all four blocks must share one dimension")
        for name, x in zip("abce", blocks):
            object.__setattr__(self, name, x)

    @classmethod
    def from_matrix(cls, m) -> BlockOperator:
        m = _square(m)
        if m.shape[0] % 2:
            raise ValueError("flattened block operator must have even dimension")
        d = m.shape[0] // 2
        return cls(m[:d, :d], m[:d, d:], m[d:, :d], m[d:, d:])

    @classmethod
    def identity(cls, d: int) -> BlockOperator:
        eye = np.eye(d)
        zero = np.zeros((d, d))
        return cls(eye, zero, zero, eye)

    @classmethod
    def diagonal(cls, top, bottom) -> BlockOperator:
        zero = np.zeros(np.shape(top))
        return cls(top, zero, zero, bottom)

    @property
    def block_dim(self) -> int:
        return self.a.shape[0]

    @property
    def blocks(self) -> tuple[tuple[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]:
        return ((self.a, self.b), (self.c, self.e))

    def flatten(self) -> np.ndarray:
        return np.block([[self.a, self.b], [self.c, self.e]])

    def dagger(self) -> BlockOperator:
        return BlockOperator(dagger(self.a), dagger(self.c), dagger(self.b), dagger(self.e))

    def __matmul__(self, other: BlockOperator) -> BlockOperator:
        if not isinstance(other, BlockOperator):
            return NotImplemented
        return BlockOperator(
            self.a @ other.a + self.b @ other.c,
            self.a @ other.b + self.b @ other.e,
            self.c @ other.a + self.e @ other.c,
            self.c @ other.b + self.e @ other.e,
        )

    def __array__(self, dtype=None, copy=None):
        m = self.flatten()
        return m if dtype is None else m.astype(dtype)


@dataclass(frozen=True, eq=False)
class AntilinearMap:
    """Antilinear map ``psi -> M @ conj(psi)``; ``M = I`` gives complex conjugation K."""

    m: np.ndarray

    def __init__(self, m):
        object.__setattr__(self, "m", _square(m, "antilinear factor"))

    @classmethod
    def conjugation(cls, dim: int) -> AntilinearMap:
        return cls(np.eye(dim))

    @property
    def dim(self) -> int:
        return self.m.shape[0]

    @property
    def involution_defect(self) -> float:
        return fro(self.m @ np.conj(self.m) - np.eye(self.dim))

    @property
    def involutive(self) -> bool:
        return self.involution_defect <= INVOLUTION_TOL

    def __call__(self, psi) -> np.ndarray:
        return self.m @ np.conj(np.asarray(psi))

    def as_mixed(self) -> MixedOperator:
        return MixedOperator(np.zeros_like(self.m), self.m)


@dataclass(frozen=True, eq=False)
class MixedOperator:
    """Real-linear operator ``psi -> L psi + M conj(psi)``."""

    lin: np.ndarray
    anti: np.ndarray

    def __init__(self, lin, anti):
        lin = _square(lin, "linear part")
        anti = _square(anti, "antilinear part")
        if lin.shape != anti.shape:
            raise ValueError("linear and antilinear parts differ in dimension")
        object.__setattr__(self, "lin", lin)
        object.__setattr__(self, "anti", anti)

    @classmethod
    def linear(cls, m) -> MixedOperator:
        m = _square(m)
        return cls(m, np.zeros_like(m))

    @property
    def dim(self) -> int:
        return self.lin.shape[0]

    def __call__(self, psi) -> np.ndarray:
        psi = np.asarray(psi)
        return self.lin @ psi + self.anti @ np.conj(psi)

    def __matmul__(self, other: MixedOperator) -> MixedOperator:
        if not isinstance(other, MixedOperator):
            return NotImplemented
        return mixed_compose(self, other)

    def __add__(self, other: MixedOperator) -> MixedOperator:
        return MixedOperator(self.lin + other.lin, self.anti + other.anti)

    def __sub__(self, other: MixedOperator) -> MixedOperator:
        return MixedOperator(self.lin - other.lin, self.anti - other.anti)

    def __neg__(self) -> MixedOperator:
        return MixedOperator(-self.lin, -self.anti)

    def norm(self) -> float:
        return float(np.hypot(fro(self.lin), fro(self.anti)))

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        adj = mixed_adjoint(self)
        return (adj - self).norm() <= atol


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a, "a"), as_matrix(b, "b"))


def herm_eig(a) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and a unitary eigenvector matrix of a Hermitian operator."""
    if not isinstance(a, HermitianOperator):
        a = HermitianOperator(a)
    w, u = np.linalg.eigh(a.matrix)
    return w, u


def exp_scaled(a, t: float) -> np.ndarray:
    """``exp(-i a t)`` for Hermitian ``a`` through its spectral decomposition."""
    w, u = herm_eig(a)
    return (u * np.exp(-1j * w * t)) @ dagger(u)


def herm_function(a, func) -> np.ndarray:
    """Apply a scalar function to a Hermitian operator spectrally."""
    w, u = herm_eig(a)
    return (u * func(w)) @ dagger(u)


def expm_oracle(a) -> np.ndarray:
    """General complex matrix exponential by scaling and squaring.

    Raises OverflowError when the result is not finite (norm too large).
    """
    m = _square(a)
    with np.errstate(over="ignore", invalid="ignore"):
        out = scipy.linalg.expm(m)
    if not np.all(np.isfinite(out)):
        raise OverflowError(f"norm too large for expm: ||a||_1 = {np.abs(m).sum(0).max():.3e}")
    return out


def partial_trace_env(m) -> np.ndarray:
    """Trace out the environment: ``[[Tr m11, Tr m12], [Tr m21, Tr m22]]``."""
    if not isinstance(m, BlockOperator):
        m = BlockOperator.from_matrix(m)
    return np.array(
        [[np.trace(m.a), np.trace(m.b)], [np.trace(m.c), np.trace(m.e)]], dtype=complex
    )


def antilinear_conjugate(tau: AntilinearMap, a) -> np.ndarray:
    """Linear matrix of ``tau A tau^-1``, i.e. ``M conj(A) conj(M)^-1``."""
    a = _square(a)
    if a.shape[0] != tau.dim:
        raise ValueError("operator and antilinear map differ in dimension")
    if not tau.involutive:
        raise InvalidAntilinearMap(
            f"antilinear map is not an involution (defect {tau.involution_defect:.3e})"
        )
    mc = np.conj(tau.m)
    # X conj(M) = M conj(A)  <=>  conj(M)^T X^T = (M conj(A))^T
    try:
        return np.linalg.solve(mc.T, (tau.m @ np.conj(a)).T).T
    except np.linalg.LinAlgError as exc:
        raise InvalidAntilinearMap("antilinear factor is singular") from exc


def mixed_compose(x: MixedOperator, y: MixedOperator) -> MixedOperator:
    """``x o y``: apply ``y`` first."""
    if x.dim != y.dim:
        raise ValueError(f"dimension mismatch: {x.dim} vs {y.dim}")
    return MixedOperator(
        x.lin @ y.lin + x.anti @ np.conj(y.anti),
        x.lin @ y.anti + x.anti @ np.conj(y.lin),
    )


def mixed_adjoint(x: MixedOperator) -> MixedOperator:
    """Adjoint with the antilinear convention <T^dag phi, psi> = <T psi, phi>."""
    return MixedOperator(dagger(x.lin), x.anti.T)
