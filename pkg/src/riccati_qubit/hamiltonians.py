"""Model Hamiltonians: a driven qubit coupled through sigma_3 (x) V to an environment.

Qubit basis ordering puts the sigma_3 = +1 state first, so the upper-left block
of every block operator is the one carrying ``+V`` and ``+beta``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .linalg import BlockOperator, HermitianOperator, commutator, dagger, fro

COMMUTING_RTOL = 1e-10
MAX_SPIN_BATH_SITES = 12

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_3 = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class ModelParams:
    """Drive amplitude ``alpha``, detuning ``beta`` and drive frequency ``omega``.

    ``env_dim`` is optional; when given, builders check it against the environment.
    """

    alpha: float
    beta: float
    omega: float = 0.0
    env_dim: int | None = None

    def __post_init__(self):
        for name in ("alpha", "beta", "omega"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, value)
        if self.env_dim is not None and self.env_dim < 1:
            raise ValueError("env_dim must be >= 1")

    @property
    def beta_bar(self) -> float:
        """Detuning of the equivalent time-independent model in the rotating frame."""
        return self.beta - 0.5 * self.omega

    def rotating(self) -> ModelParams:
        """Time-independent model equivalent to this driven one (beta -> beta_bar, omega -> 0)."""
        return replace(self, beta=self.beta_bar, omega=0.0)


@dataclass(frozen=True, eq=False)
class EnvironmentPair:
    """Environment Hamiltonian ``h_e`` and coupling operator ``v`` on the same space."""

    h_e: HermitianOperator
    v: HermitianOperator
    commutator_residual: float = field(init=False)
    commuting: bool = field(init=False)

    def __post_init__(self):
        h_e = self.h_e if isinstance(self.h_e, HermitianOperator) else HermitianOperator(self.h_e)
        v = self.v if isinstance(self.v, HermitianOperator) else HermitianOperator(self.v)
        if h_e.dim != v.dim:
            raise ValueError(f"H_E has dimension {h_e.dim} but V has {v.dim}")
        object.__setattr__(self, "h_e", h_e)
        object.__setattr__(self, "v", v)
        res = fro(commutator(h_e.matrix, v.matrix))
        bound = COMMUTING_RTOL * fro(h_e.matrix) * fro(v.matrix)
        object.__setattr__(self, "commutator_residual", res)
        object.__setattr__(self, "commuting", res <= bound)

    @property
    def dim(self) -> int:
        return self.h_e.dim

    @property
    def h_plus(self) -> np.ndarray:
        return self.h_e.matrix + self.v.matrix

    @property
    def h_minus(self) -> np.ndarray:
        return self.h_e.matrix - self.v.matrix

    def v_beta(self, beta: float) -> np.ndarray:
        return self.v.matrix + beta * np.eye(self.dim)


def _check_dims(params: ModelParams, env: EnvironmentPair) -> None:
    if params.env_dim is not None and params.env_dim != env.dim:
        raise ValueError(f"params.env_dim={params.env_dim} but environment has dimension {env.dim}")


def site_operator(op, site: int, n_sites: int) -> np.ndarray:
    """``I (x) ... (x) op (x) ... (x) I`` with ``op`` on ``site`` (0-based, leftmost first)."""
    out = np.ones((1, 1), dtype=complex)
    for k in range(n_sites):
        out = np.kron(out, op if k == site else np.eye(len(op)))
    return out


def spin_bath(omegas, couplings) -> EnvironmentPair:
    """``H_E = sum w_n sigma_3(n)`` and ``V = sum g_n sigma_3(n)`` on ``2**N`` states."""
    omegas = np.asarray(omegas, dtype=float).ravel()
    couplings = np.asarray(couplings, dtype=float).ravel()
    if omegas.shape != couplings.shape:
        raise ValueError(f"{omegas.size} frequencies but {couplings.size} couplings")
    n = omegas.size
    if n < 1:
        raise ValueError("spin bath needs at least one site")
    if n > MAX_SPIN_BATH_SITES:
        raise ValueError(f"spin bath limited to {MAX_SPIN_BATH_SITES} sites, got {n}")
    # diagonal of sigma_3(n): +1 where bit n (from the left) is 0
    bits = (np.arange(2**n)[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1
    signs = 1.0 - 2.0 * bits
    return EnvironmentPair(np.diag(signs @ omegas), np.diag(signs @ couplings))


def build_hqe(params: ModelParams, env: EnvironmentPair) -> BlockOperator:
    """Time-independent Hamiltonian ``beta s3 + alpha s1 + H_E + s3 (x) V`` as blocks."""
    _check_dims(params, env)
    eye = np.eye(env.dim)
    return BlockOperator(
        env.h_plus + params.beta * eye,
        params.alpha * eye,
        params.alpha * eye,
        env.h_minus - params.beta * eye,
    )


def build_hqe_t(t: float, params: ModelParams, env: EnvironmentPair) -> BlockOperator:
    """Lab-frame driven Hamiltonian at time ``t``; drive ``alpha (s1 cos wt + s2 sin wt)``."""
    _check_dims(params, env)
    eye = np.eye(env.dim)
    phase = np.exp(-1j * params.omega * t)
    return BlockOperator(
        env.h_plus + params.beta * eye,
        params.alpha * phase * eye,
        params.alpha * np.conj(phase) * eye,
        env.h_minus - params.beta * eye,
    )


def build_ht(t: float, params: ModelParams, env: EnvironmentPair) -> BlockOperator:
    """``[[H_E, conj(z) V_beta], [z V_beta, H_E]]`` with ``z = exp(-2i alpha t)``."""
    _check_dims(params, env)
    z = np.exp(-2j * params.alpha * t)
    v_beta = env.v_beta(params.beta)
    h_e = env.h_e.matrix
    return BlockOperator(h_e, np.conj(z) * v_beta, z * v_beta, h_e)


def hbar_unitary(dim: int) -> BlockOperator:
    eye = np.eye(dim)
    s = 1 / np.sqrt(2)
    return BlockOperator(s * eye, 1j * s * eye, 1j * s * eye, s * eye)


def build_hbar(params: ModelParams, env: EnvironmentPair) -> tuple[BlockOperator, BlockOperator]:
    """Return ``(u, u^dag H_QE u)`` for ``u = (1/sqrt 2)[[1, i], [i, 1]] (x) I``.

    The product is evaluated numerically. Its diagonal blocks are ``H_E`` and the
    upper off-diagonal block comes out as ``alpha + i V_beta``.
    """
    u = hbar_unitary(env.dim)
    hbar = u.dagger() @ build_hqe(params, env) @ u
    return u, hbar


def coupling_block(hbar: BlockOperator) -> np.ndarray:
    """Upper off-diagonal block of a transformed Hamiltonian (checked against the lower one)."""
    if fro(hbar.c - dagger(hbar.b)) > 1e-12 * (1 + fro(hbar.b)):
        raise ValueError("off-diagonal blocks are not adjoint to each other")
    return hbar.b
