"""Exact reduced dynamics of the qubit for a commuting environment.

The joint propagator is block diagonal in the environment eigenbasis,
``U_t = sum_n U_n(t) (x) |phi_n><phi_n|``, which gives the reduced state either
by an explicit partial trace or through a Kraus family with weights
``<phi_n|rho_E|phi_n>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import InvalidStateError, StepSizeError
from .hamiltonians import (
    SIGMA_1,
    SIGMA_2,
    SIGMA_3,
    EnvironmentPair,
    ModelParams,
)
from .linalg import BlockOperator, dagger, fro, partial_trace_env
from .riccati import Branch, RiccatiSolution, local_frames, riccati_spectrum, solve_commuting

STATE_ATOL = 1e-12
JOINT_ATOL = 1e-10


def _check_density(rho: np.ndarray, atol: float, what: str) -> np.ndarray:
    herm = fro(rho - dagger(rho))
    if herm > atol * max(1.0, fro(rho)):
        raise InvalidStateError(f"{what} is not Hermitian (defect {herm:.3e})")
    rho = 0.5 * (rho + dagger(rho))
    tr = np.trace(rho).real
    if abs(tr - 1.0) > atol:
        raise InvalidStateError(f"{what} has trace {tr!r}")
    lo = np.linalg.eigvalsh(rho)[0]
    if lo < -atol:
        raise InvalidStateError(f"{what} has negative eigenvalue {lo:.3e}")
    return rho


@dataclass(frozen=True, eq=False)
class QubitState:
    rho: np.ndarray

    def __init__(self, rho, atol: float = STATE_ATOL):
        rho = np.array(rho, dtype=complex)
        if rho.shape != (2, 2):
            raise InvalidStateError(f"qubit state must be 2x2, got {rho.shape}")
        rho = _check_density(rho, atol, "qubit state")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @classmethod
    def from_bloch(cls, r) -> QubitState:
        x, y, z = (float(c) for c in r)
        return cls(0.5 * (np.eye(2) + x * SIGMA_1 + y * SIGMA_2 + z * SIGMA_3))

    @property
    def bloch(self) -> np.ndarray:
        return np.array([np.trace(self.rho @ s).real for s in (SIGMA_1, SIGMA_2, SIGMA_3)])

    @property
    def purity(self) -> float:
        return float(np.trace(self.rho @ self.rho).real)

    @property
    def coherence(self) -> complex:
        return complex(self.rho[0, 1])

    @property
    def trace_error(self) -> float:
        return float(abs(np.trace(self.rho) - 1.0))

    def __array__(self, dtype=None, copy=None):
        return self.rho if dtype is None else self.rho.astype(dtype)


def validate_env_density(rho_e, atol: float = JOINT_ATOL) -> np.ndarray:
    rho_e = np.array(rho_e, dtype=complex)
    if rho_e.ndim != 2 or rho_e.shape[0] != rho_e.shape[1]:
        raise InvalidStateError("environment state must be square")
    return _check_density(rho_e, atol, "environment state")


class JointState:
    """Qubit-environment density matrix.

    Either given in full (``2d x 2d``) or in the structured form
    ``sum_ij gamma_ij rho_Q^i (x) rho_E^j``; the structured data is kept so that
    :func:`correlated_dynamics` can use it without materializing.
    """

    def __init__(self, full, atol: float = JOINT_ATOL):
        m = np.array(full.flatten() if isinstance(full, BlockOperator) else full, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2:
            raise InvalidStateError("joint state must be a square matrix of even size")
        m = _check_density(m, atol, "joint state")
        m.setflags(write=False)
        self.full = m
        self.gamma = None
        self.rho_qs = None
        self.rho_es = None

    @classmethod
    def product(cls, rho_q, rho_e) -> JointState:
        rho_q = np.asarray(rho_q, dtype=complex)
        rho_e = np.asarray(rho_e, dtype=complex)
        return cls.structured([[1.0]], [rho_q], [rho_e])

    @classmethod
    def structured(cls, gamma, rho_qs: Sequence, rho_es: Sequence, atol: float = JOINT_ATOL) -> JointState:
        gamma = np.asarray(gamma, dtype=complex)
        rho_qs = [np.asarray(r, dtype=complex) for r in rho_qs]
        rho_es = [np.asarray(r, dtype=complex) for r in rho_es]
        if gamma.shape != (len(rho_qs), len(rho_es)):
            raise InvalidStateError(
                f"gamma has shape {gamma.shape} for {len(rho_qs)} qubit and {len(rho_es)} environment factors"
            )
        full = sum(
            gamma[i, j] * np.kron(rq, re)
            for i, rq in enumerate(rho_qs)
            for j, re in enumerate(rho_es)
        )
        state = cls(full, atol)
        state.gamma = gamma
        state.rho_qs = rho_qs
        state.rho_es = rho_es
        return state

    @property
    def env_dim(self) -> int:
        return self.full.shape[0] // 2

    @property
    def is_structured(self) -> bool:
        return self.gamma is not None

    def blocks(self) -> BlockOperator:
        return BlockOperator.from_matrix(self.full)

    def marginal(self) -> np.ndarray:
        return partial_trace_env(self.full)


@dataclass(frozen=True, eq=False)
class KrausFamily:
    """Weights ``rho_n`` and 2x2 unitaries ``U_n(t)``; Kraus operators are ``sqrt(rho_n) U_n``."""

    weights: np.ndarray
    unitaries: np.ndarray
    t: float

    @property
    def operators(self) -> np.ndarray:
        return np.sqrt(self.weights)[:, None, None] * self.unitaries

    def __len__(self) -> int:
        return len(self.weights)

    def completeness_defect(self) -> float:
        k = self.operators
        total = np.einsum("nji,njk->ik", np.conj(k), k)
        return fro(total - np.eye(2))

    def unitarity_defect(self) -> float:
        u = self.unitaries
        prod = np.einsum("nji,njk->nik", np.conj(u), u)
        return float(np.max(np.linalg.norm(prod - np.eye(2), axis=(1, 2))))


def _check_solution(sol: RiccatiSolution, params: ModelParams) -> None:
    if (sol.alpha, sol.beta) != (params.alpha, params.beta):
        raise ValueError(
            f"solution was computed for alpha={sol.alpha}, beta={sol.beta}; "
            f"got alpha={params.alpha}, beta={params.beta}"
        )


def evolve_block(sol: RiccatiSolution, params: ModelParams, t: float) -> BlockOperator:
    """``exp(-i H_QE t)`` from the Riccati solution, as a block operator.

    ``U_t = G(X) [[U+ + X^2 U-, (U+ - U-) X], [(U+ - U-) X, U- + X^2 U+]]`` with
    ``U+- = exp(-i (H_+- +- beta +- alpha X) t)``, all evaluated on the joint
    eigenbasis.
    """
    _check_solution(sol, params)
    h_plus, h_minus = riccati_spectrum(sol)
    up = np.exp(-1j * h_plus * t)
    um = np.exp(-1j * h_minus * t)
    x = sol.x
    g = 1.0 / (1.0 + x**2)
    return BlockOperator(
        sol.operator(g * (up + x**2 * um)),
        sol.operator(g * (up - um) * x),
        sol.operator(g * (up - um) * x),
        sol.operator(g * (um + x**2 * up)),
    )


def evolve_factored(sol: RiccatiSolution, params: ModelParams, t: float) -> np.ndarray:
    """Stack of 2x2 propagators ``U_n(t) = exp(-i h_n t)``, one per joint eigenvector."""
    _check_solution(sol, params)
    return np.array([frame.propagator(t) for frame in local_frames(sol, params)])


def assemble_factored(unitaries: np.ndarray, basis: np.ndarray) -> BlockOperator:
    """``sum_n U_n (x) |phi_n><phi_n|`` as a block operator."""
    def block(i, j):
        return (basis * unitaries[:, i, j]) @ dagger(basis)

    return BlockOperator(block(0, 0), block(0, 1), block(1, 0), block(1, 1))


def reduced_dynamics(joint: JointState, sol: RiccatiSolution, params: ModelParams, t: float) -> QubitState:
    """``Tr_E(U_t rho_QE U_t^dag)`` with the closed-form propagator."""
    if joint.env_dim != sol.dim:
        raise ValueError("joint state and solution differ in environment dimension")
    u = evolve_block(sol, params, t).flatten()
    return QubitState(partial_trace_env(u @ joint.full @ dagger(u)))


def env_weights(rho_e, basis: np.ndarray, atol: float = 1e-12) -> np.ndarray:
    """Diagonal ``<phi_n|rho_E|phi_n>`` of an environment operator in the joint basis."""
    w = np.real(np.einsum("in,ij,jn->n", np.conj(basis), np.asarray(rho_e), basis))
    if np.any(w < -atol):
        raise InvalidStateError(f"negative environment weight {w.min():.3e}: invalid density")
    return w


def kraus_family(rho_e, sol: RiccatiSolution, params: ModelParams, t: float) -> KrausFamily:
    rho_e = validate_env_density(rho_e)
    weights = np.clip(env_weights(rho_e, sol.basis), 0.0, None)
    return KrausFamily(weights, evolve_factored(sol, params, t), float(t))


def kraus_apply(family: KrausFamily, rho_q) -> QubitState:
    rho_q = np.asarray(rho_q, dtype=complex)
    u = family.unitaries
    out = np.einsum("n,nij,jk,nlk->il", family.weights, u, rho_q, np.conj(u))
    return QubitState(out)


def correlated_dynamics(gamma, rho_qs, rho_es, sol: RiccatiSolution, params: ModelParams, t: float) -> QubitState:
    """``sum_n sum_ij gamma_ij <phi_n|rho_E^j|phi_n> U_n rho_Q^i U_n^dag``."""
    # rejects coefficient grids that do not describe a density matrix
    state = JointState.structured(gamma, rho_qs, rho_es)
    if state.env_dim != sol.dim:
        raise ValueError("environment factors and solution differ in dimension")
    u = evolve_factored(sol, params, t)
    # eps[n, i] = sum_j gamma_ij <phi_n|rho_E^j|phi_n>
    diag = np.array([np.einsum("in,ij,jn->n", np.conj(sol.basis), r, sol.basis) for r in state.rho_es])
    eps = diag.T @ state.gamma.T
    out = np.zeros((2, 2), dtype=complex)
    for n in range(sol.dim):
        mixed = sum(eps[n, i] * rq for i, rq in enumerate(state.rho_qs))
        out += u[n] @ mixed @ dagger(u[n])
    return QubitState(out)


def operator_schmidt_weights(u, dims: tuple[int, int]) -> np.ndarray:
    """Squared operator-Schmidt coefficients of ``u`` on ``C^dims[0] (x) C^dims[1]``, descending."""
    da, db = dims
    u = np.asarray(u)
    r = u.reshape(da, db, da, db).transpose(0, 2, 1, 3).reshape(da * da, db * db)
    s = np.linalg.svd(r, compute_uv=False)
    return s**2


def schmidt_defect(u, dims: tuple[int, int]) -> float:
    w = operator_schmidt_weights(u, dims)
    return float(max(0.0, 1.0 - w[0] / w.sum()))


def local_unitarity_defect(sol: RiccatiSolution, params: ModelParams, t: float) -> float:
    """``1 - (largest Schmidt weight)/(total)`` of ``U_t``; zero iff ``U_t = U_Q (x) U_E``."""
    u = evolve_block(sol, params, t).flatten()
    return schmidt_defect(u, (2, sol.dim))


def frame_unitary(omega: float, t: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * omega * t), np.exp(0.5j * omega * t)])


def rotating_frame_map(rho_ti, params: ModelParams, t: float) -> QubitState:
    """Map a state of the time-independent model at ``beta_bar`` to the driven lab frame."""
    v = frame_unitary(params.omega, t)
    return QubitState(v @ np.asarray(rho_ti) @ dagger(v))


def driven_reduced_dynamics(
    joint: JointState,
    env: EnvironmentPair,
    params: ModelParams,
    times,
    branch=Branch.POSITIVE,
) -> list[QubitState]:
    """Lab-frame reduced states of the driven model via the rotating-frame reduction."""
    rot = params.rotating()
    sol = solve_commuting(env, rot, branch)
    out = []
    for t in np.atleast_1d(times):
        if joint.is_structured:
            rho = correlated_dynamics(joint.gamma, joint.rho_qs, joint.rho_es, sol, rot, t)
        else:
            rho = reduced_dynamics(joint, sol, rot, t)
        out.append(rotating_frame_map(rho, params, t))
    return out


# --- independent integrator -------------------------------------------------------


def _rk4_propagate(h0, drive, t_grid, substeps) -> list[np.ndarray]:
    """Propagate ``U`` (from the identity at ``t_grid[0]``) through ``i dU/dt = H(t) U``.

    ``H(t) = h0 + drive(t)`` where ``drive`` returns the time-dependent part.
    """
    n = h0.shape[0]
    u = np.eye(n, dtype=complex)
    out = [u.copy()]
    for k in range(1, len(t_grid)):
        t0, t1 = t_grid[k - 1], t_grid[k]
        m = substeps[k - 1]
        h = (t1 - t0) / m
        for s in range(m):
            t = t0 + s * h
            ha = h0 + drive(t)
            hm = h0 + drive(t + 0.5 * h)
            hb = h0 + drive(t + h)
            k1 = -1j * (ha @ u)
            k2 = -1j * (hm @ (u + 0.5 * h * k1))
            k3 = -1j * (hm @ (u + 0.5 * h * k2))
            k4 = -1j * (hb @ (u + h * k3))
            u = u + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(u.copy())
    return out


def ode_oracle(
    params: ModelParams,
    env: EnvironmentPair,
    joint: JointState,
    t_grid,
    tol: float = 1e-6,
    max_step_phase: float = 0.02,
    unitarity_tol: float = 1e-8,
) -> list[QubitState]:
    """Reduced states of the driven model by direct 4th-order Runge-Kutta integration.

    The full ``2d x 2d`` propagator is integrated in the lab frame with steps
    satisfying ``||H|| h <= max_step_phase``, then again with half the step. The
    Richardson estimate ``max ||rho_h - rho_{h/2}|| / 15`` must stay below
    ``tol`` and the propagated frame must stay unitary to ``unitarity_tol``;
    otherwise :class:`StepSizeError` is raised. The half-step result is returned.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 1:
        raise ValueError("time grid must be a non-empty 1-D sequence")
    if np.any(np.diff(t_grid) < 0):
        raise ValueError("time grid must be non-decreasing")
    d = env.dim
    eye_e = np.eye(d)
    h0 = (
        params.beta * np.kron(SIGMA_3, eye_e)
        + np.kron(np.eye(2), env.h_e.matrix)
        + np.kron(SIGMA_3, env.v.matrix)
    )
    s1 = params.alpha * np.kron(SIGMA_1, eye_e)
    s2 = params.alpha * np.kron(SIGMA_2, eye_e)
    omega = params.omega

    def drive(t):
        return math.cos(omega * t) * s1 + math.sin(omega * t) * s2

    bound = abs(params.beta) + abs(params.alpha) + np.linalg.norm(env.h_e.matrix, 2) + np.linalg.norm(env.v.matrix, 2)
    steps = [max(1, math.ceil(bound * (t1 - t0) / max_step_phase)) for t0, t1 in zip(t_grid[:-1], t_grid[1:])]

    coarse = _rk4_propagate(h0, drive, t_grid, steps)
    fine = _rk4_propagate(h0, drive, t_grid, [2 * m for m in steps])

    rho0 = joint.full
    drift = max(fro(dagger(u) @ u - np.eye(2 * d)) for u in fine)
    if drift > unitarity_tol:
        raise StepSizeError(f"propagated frame lost unitarity: {drift:.3e}")
    states, estimate = [], 0.0
    for uc, uf in zip(coarse, fine):
        rc = partial_trace_env(uc @ rho0 @ dagger(uc))
        rf = partial_trace_env(uf @ rho0 @ dagger(uf))
        estimate = max(estimate, fro(rc - rf) / 15.0)
        states.append(rf)
    if estimate > tol:
        raise StepSizeError(f"Richardson error estimate {estimate:.3e} exceeds {tol:.1e}")
    return [QubitState(r, atol=max(STATE_ATOL, 10 * unitarity_tol)) for r in states]
