"""Riccati equation for 2x2 block Hamiltonians.

For ``H = [[A, B], [B^dag, C]]`` the Riccati map is
``R_H[X] = X B X + X A - C X - B^dag``; a zero of it gives the similarity
``S_X = [[I, -X^dag], [X, I]]`` that block-diagonalizes ``H``.

When ``[H_E, V] = 0`` the equation for the qubit model reduces, in the joint
eigenbasis, to the scalar quadratic ``alpha x^2 + 2 (V_n + beta) x - alpha = 0``
per eigenvector. Its two roots multiply to -1, so one is positive and one is
negative; :class:`Branch` selects which.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .exceptions import (
    CommutingSolverError,
    InvalidAntilinearMap,
    RiccatiResidualError,
    VerificationError,
)
from .hamiltonians import EnvironmentPair, ModelParams
from .linalg import (
    AntilinearMap,
    BlockOperator,
    MixedOperator,
    commutator,
    dagger,
    fro,
)

RESIDUAL_RTOL = 1e-10
ROOT_ATOL = 1e-10


class Branch(enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"

    @classmethod
    def parse(cls, value) -> Branch:
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


def riccati_residual_linear(h: BlockOperator, x) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    if x.shape != h.a.shape:
        raise ValueError(f"X has shape {x.shape}, blocks are {h.a.shape}")
    return x @ h.b @ x + x @ h.a - h.e @ x - dagger(h.b)


def riccati_residual_antilinear(h: BlockOperator, tau: AntilinearMap) -> tuple[np.ndarray, np.ndarray]:
    """``R_H[tau]`` split into its linear and antilinear matrices.

    With ``tau = M conj(.)``: ``tau B tau = M conj(B) conj(M)`` is linear while
    ``tau A`` and ``C tau`` are antilinear with matrices ``M conj(A)`` and ``C M``.
    """
    if tau.dim != h.block_dim:
        raise ValueError("antilinear map and blocks differ in dimension")
    if not tau.involutive:
        raise InvalidAntilinearMap(
            f"antilinear map is not an involution (defect {tau.involution_defect:.3e})"
        )
    m = tau.m
    linear = m @ np.conj(h.b) @ np.conj(m) - dagger(h.b)
    antilinear = m @ np.conj(h.a) - h.e @ m
    return linear, antilinear


def riccati_residual_mixed(h: BlockOperator, x: MixedOperator) -> MixedOperator:
    """``R_H[X]`` for a general real-linear candidate, via mixed-operator algebra."""
    a, b, c = (MixedOperator.linear(m) for m in (h.a, h.b, h.e))
    bd = MixedOperator.linear(dagger(h.b))
    return x @ b @ x + x @ a - c @ x - bd


# --- commuting case -------------------------------------------------------------


def positive_root(lam, alpha: float) -> np.ndarray:
    """Positive root of ``alpha x^2 + 2 lam x - alpha = 0`` (alpha != 0), cancellation-free."""
    lam = np.asarray(lam, dtype=float)
    s = np.sign(alpha)
    a = abs(alpha)
    r = np.hypot(lam, alpha)
    q = s * lam
    # x = (r - q)/|alpha| = |alpha|/(r + q)
    return np.where(q > 0, a / (r + np.abs(q)), (r - q) / a)


def negative_root(lam, alpha: float) -> np.ndarray:
    return -1.0 / positive_root(lam, alpha)


def quadratic_root_f(lam, alpha: float) -> np.ndarray:
    """The textbook ``(-lam + sqrt(lam^2 + alpha^2)) / alpha`` (positive only for alpha > 0)."""
    lam = np.asarray(lam, dtype=float)
    return (-lam + np.sqrt(lam**2 + alpha**2)) / alpha


def joint_diagonalize(env: EnvironmentPair, cluster_rtol: float = 1e-9):
    """Common eigenbasis of a commuting pair ``(H_E, V)``.

    Returns ``(basis, e_he, e_v)``. Degenerate eigenspaces of ``H_E`` are
    re-diagonalized with ``V``. When both operators are already diagonal the
    computational basis is kept in its original order.
    """
    if not env.commuting:
        raise CommutingSolverError(
            f"||[H_E, V]||_F = {env.commutator_residual:.3e}: commuting solver inapplicable"
        )
    h = env.h_e.matrix
    v = env.v.matrix
    d = env.dim
    if not np.any(h - np.diag(np.diag(h))) and not np.any(v - np.diag(np.diag(v))):
        return np.eye(d, dtype=complex), np.diag(h).real.copy(), np.diag(v).real.copy()

    w, u = np.linalg.eigh(h)
    scale = max(1.0, float(np.max(np.abs(w))))
    basis = np.array(u)
    start = 0
    while start < d:
        stop = start + 1
        while stop < d and w[stop] - w[start] <= cluster_rtol * scale:
            stop += 1
        if stop - start > 1:
            block = u[:, start:stop]
            vb = dagger(block) @ v @ block
            _, r = np.linalg.eigh(0.5 * (vb + dagger(vb)))
            basis[:, start:stop] = block @ r
        start = stop

    e_he = np.real(np.einsum("in,ij,jn->n", np.conj(basis), h, basis))
    e_v = np.real(np.einsum("in,ij,jn->n", np.conj(basis), v, basis))
    for name, op, ev in (("H_E", h, e_he), ("V", v, e_v)):
        off = dagger(basis) @ op @ basis - np.diag(ev)
        if fro(off) > 1e-10 * max(1.0, fro(op)):
            raise CommutingSolverError(f"joint eigenbasis fails to diagonalize {name}: {fro(off):.3e}")
    return basis, e_he, e_v


@dataclass(frozen=True, eq=False)
class RiccatiSolution:
    """Spectral form ``X = sum_n x_n |phi_n><phi_n|`` of a commuting-case solution."""

    basis: np.ndarray
    e_he: np.ndarray
    e_v: np.ndarray
    x: np.ndarray
    branch: Branch
    alpha: float
    beta: float
    decoupled: bool = False

    @property
    def dim(self) -> int:
        return self.x.size

    @property
    def lam(self) -> np.ndarray:
        """Eigenvalues ``V_n + beta`` of ``V_beta``."""
        return self.e_v + self.beta

    @property
    def x_bar(self) -> np.ndarray:
        """Eigenvalues of the other branch (``-1/x_n``)."""
        if self.decoupled:
            raise ValueError("the second branch does not exist at alpha = 0")
        return -1.0 / self.x

    def matrix(self) -> np.ndarray:
        return self.operator(self.x)

    def operator(self, values) -> np.ndarray:
        """``sum_n values[n] |phi_n><phi_n|``."""
        return (self.basis * np.asarray(values)) @ dagger(self.basis)

    def root_residuals(self) -> np.ndarray:
        return np.abs(self.alpha * self.x**2 + 2 * self.lam * self.x - self.alpha)


def solve_commuting(env: EnvironmentPair, params: ModelParams, branch=Branch.POSITIVE) -> RiccatiSolution:
    """Closed-form solution of the qubit-model Riccati equation for ``[H_E, V] = 0``.

    ``alpha = 0`` yields the zero solution with ``decoupled=True`` (positive branch
    only; the negative branch diverges there).
    """
    branch = Branch.parse(branch)
    if params.env_dim is not None and params.env_dim != env.dim:
        raise ValueError("params.env_dim does not match the environment")
    basis, e_he, e_v = joint_diagonalize(env)
    lam = e_v + params.beta
    if params.alpha == 0.0:
        if branch is Branch.NEGATIVE:
            raise CommutingSolverError("negative branch diverges at alpha = 0")
        return RiccatiSolution(basis, e_he, e_v, np.zeros(env.dim), branch, 0.0, params.beta, True)
    x = positive_root(lam, params.alpha)
    if branch is Branch.NEGATIVE:
        x = -1.0 / x
    sol = RiccatiSolution(basis, e_he, e_v, x, branch, params.alpha, params.beta)
    ok_sign = np.all(x > 0) if branch is Branch.POSITIVE else np.all(x < 0)
    scale = np.abs(params.alpha) * (1 + x**2) + 2 * np.abs(lam * x)
    if not ok_sign or np.any(sol.root_residuals() > ROOT_ATOL * np.maximum(1.0, scale)):
        raise VerificationError("scalar root check failed")
    return sol


# --- similarity transforms --------------------------------------------------------


def build_sx(x) -> tuple[BlockOperator, BlockOperator]:
    """``S_X = [[I, -X^dag], [X, I]]`` and its inverse.

    For Hermitian ``X`` the inverse is ``diag(g(X), g(X)) S_X^dag`` with
    ``g(l) = 1/(1 + l^2)``, evaluated spectrally. Otherwise the general
    ``diag((I + X^dag X)^-1, (I + X X^dag)^-1) S_X^dag`` is used.
    """
    x = np.asarray(x, dtype=complex)
    d = x.shape[0]
    eye = np.eye(d)
    sx = BlockOperator(eye, -dagger(x), x, eye)
    if fro(x - dagger(x)) <= 1e-12 * max(1.0, fro(x)):
        w, u = np.linalg.eigh(0.5 * (x + dagger(x)))
        g = (u / (1 + w**2)) @ dagger(u)
        g_top = g_bottom = g
    else:
        g_top = np.linalg.inv(eye + dagger(x) @ x)
        g_bottom = np.linalg.inv(eye + x @ dagger(x))
    return sx, BlockOperator.diagonal(g_top, g_bottom) @ sx.dagger()


def block_diagonalize(h: BlockOperator, x, rtol: float = RESIDUAL_RTOL) -> BlockOperator:
    """``S_X^-1 H S_X`` for a Riccati solution ``X``; refuses when ``R_H[X]`` is too large."""
    res = fro(riccati_residual_linear(h, x))
    tol = rtol * (1 + fro(h.flatten()))
    if res > tol:
        raise RiccatiResidualError(res, tol)
    sx, sx_inv = build_sx(x)
    return sx_inv @ h @ sx


def symmetry_block_diagonalize(h: BlockOperator, tau: AntilinearMap) -> tuple[tuple[MixedOperator, MixedOperator], tuple[MixedOperator, MixedOperator]]:
    """``S_tau^-1 H S_tau`` with ``S_tau = [[I, -tau], [tau, I]]`` as mixed-operator blocks.

    Uses ``S_tau^-1 = (1/2)[[I, tau], [-tau, I]]`` (valid since tau^2 = I).
    The result is block diagonal when tau solves ``R_H[tau] = 0`` with tau
    commuting with the diagonal blocks.
    """
    if not tau.involutive:
        raise InvalidAntilinearMap("antilinear map is not an involution")
    t = tau.as_mixed()
    eye = MixedOperator.linear(np.eye(tau.dim))
    half = MixedOperator.linear(0.5 * np.eye(tau.dim))
    hb = [[MixedOperator.linear(m) for m in row] for row in h.blocks]
    s = [[eye, -t], [t, eye]]
    s_inv = [[half, half @ t], [-(half @ t), half]]

    def mul(p, q):
        return [[p[i][0] @ q[0][j] + p[i][1] @ q[1][j] for j in range(2)] for i in range(2)]

    out = mul(mul(s_inv, hb), s)
    return (out[0][0], out[0][1]), (out[1][0], out[1][1])


# --- per-eigenvector 2x2 analysis ------------------------------------------------


@dataclass(frozen=True, eq=False)
class LocalFrame:
    """2x2 data attached to one joint eigenvector ``|phi_n>``.

    ``h_n`` is the qubit Hamiltonian seen in that sector, ``f_n`` the Riccati
    similarity ``[[1, -x], [x, 1]]`` and ``g_n`` the eigenvector matrix
    ``[[-x_bar, -x], [1, 1]]``.
    """

    index: int
    x: float
    h_n: np.ndarray
    h_plus: float
    h_minus: float
    normalized: bool = False

    @property
    def x_bar(self) -> float:
        if self.x == 0:
            raise ValueError("x_bar is undefined for x = 0 (alpha = 0)")
        return -1.0 / self.x

    @property
    def f_n(self) -> np.ndarray:
        f = np.array([[1.0, -self.x], [self.x, 1.0]])
        return f / np.sqrt(1 + self.x**2) if self.normalized else f

    @property
    def f_n_inv(self) -> np.ndarray:
        det = 1.0 + self.x**2
        f = np.array([[1.0, self.x], [-self.x, 1.0]])
        return f / np.sqrt(det) if self.normalized else f / det

    @property
    def g_n(self) -> np.ndarray:
        return np.array([[-self.x_bar, -self.x], [1.0, 1.0]])

    @property
    def eigvec_plus(self) -> np.ndarray:
        return np.array([-self.x_bar, 1.0])

    @property
    def eigvec_minus(self) -> np.ndarray:
        return np.array([-self.x, 1.0])

    def diagonalized(self) -> np.ndarray:
        return self.f_n_inv @ self.h_n @ self.f_n

    def eigvec_residuals(self) -> tuple[float, float]:
        rp = np.linalg.norm(self.h_n @ self.eigvec_plus - self.h_plus * self.eigvec_plus)
        rm = np.linalg.norm(self.h_n @ self.eigvec_minus - self.h_minus * self.eigvec_minus)
        return float(rp), float(rm)

    def column_relation_residual(self) -> float:
        """Columns of the unnormalized F_n against ``x * eigvec_plus`` and ``eigvec_minus``."""
        f = np.array([[1.0, -self.x], [self.x, 1.0]])
        return float(
            np.linalg.norm(f[:, 0] - self.x * self.eigvec_plus)
            + np.linalg.norm(f[:, 1] - self.eigvec_minus)
        )

    def similarity_gaps(self) -> tuple[float, float]:
        """``|Tr F_n - Tr G_n|`` and ``|det F_n - det G_n|`` (unnormalized F_n)."""
        f = np.array([[1.0, -self.x], [self.x, 1.0]])
        g = self.g_n
        return float(abs(np.trace(f) - np.trace(g))), float(abs(np.linalg.det(f) - np.linalg.det(g)))

    def propagator(self, t: float) -> np.ndarray:
        """``exp(-i h_n t) = F_n diag(exp(-i h_plus t), exp(-i h_minus t)) F_n^-1``."""
        phases = np.exp(-1j * np.array([self.h_plus, self.h_minus]) * t)
        return (self.f_n * phases) @ self.f_n_inv


def characteristic_roots(h2) -> np.ndarray:
    """Roots of ``l^2 - l Tr h + det h`` for a real-spectrum 2x2 matrix, descending."""
    h2 = np.asarray(h2)
    tr = np.trace(h2).real
    det = np.linalg.det(h2).real
    disc = np.sqrt(max(tr**2 - 4 * det, 0.0))
    return np.array([(tr + disc) / 2, (tr - disc) / 2])


def local_frames(sol: RiccatiSolution, params: ModelParams, normalized: bool = False) -> list[LocalFrame]:
    """Per-eigenvector 2x2 Hamiltonians ``h_n`` and Riccati eigenvalues ``h_n^+-``."""
    alpha, beta = params.alpha, params.beta
    if (alpha, beta) != (sol.alpha, sol.beta):
        raise ValueError("solution was computed for different model parameters")
    frames = []
    for n in range(sol.dim):
        e_plus = sol.e_he[n] + sol.e_v[n]
        e_minus = sol.e_he[n] - sol.e_v[n]
        xn = float(sol.x[n])
        h_n = np.array([[e_plus + beta, alpha], [alpha, e_minus - beta]])
        frames.append(
            LocalFrame(
                index=n,
                x=xn,
                h_n=h_n,
                h_plus=e_plus + beta + alpha * xn,
                h_minus=e_minus - beta - alpha * xn,
                normalized=normalized,
            )
        )
    return frames


def riccati_spectrum(sol: RiccatiSolution) -> tuple[np.ndarray, np.ndarray]:
    """``h_n^+`` and ``h_n^-`` for every n, vectorized."""
    h_plus = sol.e_he + sol.e_v + sol.beta + sol.alpha * sol.x
    h_minus = sol.e_he - sol.e_v - sol.beta - sol.alpha * sol.x
    return h_plus, h_minus


def commutation_residual(sol: RiccatiSolution, env: EnvironmentPair) -> float:
    x = sol.matrix()
    return max(fro(commutator(x, env.h_plus)), fro(commutator(x, env.h_minus)))
