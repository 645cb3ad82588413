"""Invariant suites behind ``riccati-qubit verify``.

Each suite returns a list of :class:`Check` records. Tolerances are the
module defaults multiplied by ``scale``. The riccati and symmetry suites
work on the time-independent model at ``beta_bar``, which is the one the
closed-form solver is applied to.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import (
    JointState,
    QubitState,
    assemble_factored,
    correlated_dynamics,
    driven_reduced_dynamics,
    evolve_block,
    evolve_factored,
    kraus_apply,
    kraus_family,
    ode_oracle,
    reduced_dynamics,
)
from .exceptions import ModelPreconditionError
from .hamiltonians import EnvironmentPair, ModelParams, build_hbar, build_hqe, build_ht
from .linalg import AntilinearMap, expm_oracle, fro
from .riccati import (
    Branch,
    block_diagonalize,
    build_sx,
    characteristic_roots,
    commutation_residual,
    local_frames,
    riccati_residual_antilinear,
    riccati_residual_linear,
    riccati_spectrum,
    solve_commuting,
)

SUITES = ("riccati", "symmetry", "kraus", "frame")
DENSE_LIMIT = 256
ODE_LIMIT = 64


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    residual: float
    tolerance: float
    note: str = ""

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual <= self.tolerance)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        note = f"  # {self.note}" if self.note else ""
        return f"{status}  {self.suite}.{self.name}  residual={self.residual:.3e}  tolerance={self.tolerance:.1e}{note}"


def _require_commuting(env: EnvironmentPair) -> None:
    if not env.commuting:
        raise ModelPreconditionError(
            f"environment pair does not commute (||[H_E, V]||_F = {env.commutator_residual:.3e})"
        )


def riccati_suite(env: EnvironmentPair, params: ModelParams, rng, scale: float = 1.0, times=()) -> list[Check]:
    _require_commuting(env)
    out: list[Check] = []
    h = build_hqe(params, env)
    hf = h.flatten()
    hnorm = fro(hf)
    spectrum = np.linalg.eigvalsh(hf) if env.dim <= DENSE_LIMIT else None
    branches = [Branch.POSITIVE] if params.alpha == 0 else [Branch.POSITIVE, Branch.NEGATIVE]
    for branch in branches:
        tag = branch.value
        sol = solve_commuting(env, params, branch)
        x = sol.matrix()

        def add(name, res, tol, note=""):
            out.append(Check("riccati", f"{tag}.{name}", float(res), tol * scale, note))

        add("root_residual", sol.root_residuals().max(), 1e-10)
        if not sol.decoupled:
            add("branch_product", np.max(np.abs(sol.x * sol.x_bar + 1)), 1e-12)
        sign_violation = np.max(-sol.x) if branch is Branch.POSITIVE else np.max(sol.x)
        add("branch_sign", max(0.0, sign_violation), 0.0)
        add("riccati_residual", fro(riccati_residual_linear(h, x)) / (1 + hnorm), 1e-10)
        xn = fro(x)
        add("commutation", commutation_residual(sol, env) / (1 + xn * (fro(env.h_plus) + fro(env.h_minus))), 1e-10)
        sx, sx_inv = build_sx(x)
        add("sx_inverse", fro((sx @ sx_inv).flatten() - np.eye(2 * env.dim)), 1e-10)
        bd = block_diagonalize(h, x)
        add("block_offdiagonal", (fro(bd.b) + fro(bd.c)) / (1 + hnorm), 1e-9)
        hp, hm = riccati_spectrum(sol)
        if spectrum is not None:
            add("spectrum_equality", np.max(np.abs(np.sort(np.concatenate([hp, hm])) - spectrum)), 1e-9)
        frames = local_frames(sol, params)
        eig = max(max(f.eigvec_residuals()) for f in frames) if not sol.decoupled else 0.0
        add("local_eigenvectors", eig, 1e-10)
        diag = max(abs(f.diagonalized()[0, 1]) + abs(f.diagonalized()[1, 0]) for f in frames)
        add("local_diagonalization", diag, 1e-10)
        roots = max(np.max(np.abs(characteristic_roots(f.h_n) - np.sort([f.h_plus, f.h_minus])[::-1])) for f in frames)
        add("characteristic_roots", roots, 1e-10)
        if env.dim <= DENSE_LIMIT:
            for t in times:
                u = evolve_block(sol, params, t).flatten()
                ref = expm_oracle(-1j * hf * t)
                add(f"evolution_oracle[t={t:.6g}]", fro(u - ref), 1e-8)
    return out


def symmetry_suite(env: EnvironmentPair, params: ModelParams, rng, scale: float = 1.0, times=()) -> list[Check]:
    """Complex conjugation K as an antilinear solution of the Riccati equations."""
    out: list[Check] = []
    d = env.dim
    k = AntilinearMap.conjugation(d)
    h_e = env.h_e.matrix
    v_beta = env.v_beta(params.beta)

    def add(name, res, tol, note=""):
        out.append(Check("symmetry", name, float(res), tol * scale, note))

    for t in times:
        ht = build_ht(t, params, env)
        lin, anti = riccati_residual_antilinear(ht, k)
        bound = 1e-12 * (1 + fro(ht.flatten()))
        z = np.exp(-2j * params.alpha * t)
        add(f"K_solves_Ht.linear[t={t:.6g}]", fro(lin), bound)
        add(f"K_solves_Ht.antilinear[t={t:.6g}]", fro(anti), bound, "nonzero when H_E is not symmetric")
        identity = fro(lin - z * (v_beta.T - v_beta)) + fro(anti - (h_e.T - h_e))
        add(f"conjugation_identity[t={t:.6g}]", identity, bound)
        xt = z * np.eye(d)
        add(f"zt_solves_Ht[t={t:.6g}]", fro(riccati_residual_linear(ht, xt)), bound)
    _, hbar = build_hbar(params, env)
    lin, anti = riccati_residual_antilinear(hbar, k)
    bound = 1e-12 * (1 + fro(hbar.flatten()))
    add("K_solves_Hbar.linear", fro(lin), bound)
    add("K_solves_Hbar.antilinear", fro(anti), bound)
    add("Hbar_diagonal_blocks", fro(hbar.a - h_e) + fro(hbar.e - h_e), bound)
    return out


def kraus_suite(
    env: EnvironmentPair,
    params: ModelParams,
    rng,
    scale: float = 1.0,
    times=(),
    joint: JointState | None = None,
    branch=Branch.POSITIVE,
    n_states: int = 100,
) -> list[Check]:
    _require_commuting(env)
    out: list[Check] = []

    def add(name, res, tol, note=""):
        out.append(Check("kraus", name, float(res), tol * scale, note))

    rot = params.rotating()
    sol = solve_commuting(env, rot, branch)
    d = env.dim
    if joint is not None and joint.is_structured and joint.gamma.shape == (1, 1):
        rho_e = joint.rho_es[0]
    else:
        rho_e = np.eye(d) / d
    for t in times:
        fam = kraus_family(rho_e, sol, rot, t)
        tag = f"[t={t:.6g}]"
        add("completeness" + tag, fam.completeness_defect(), 1e-12)
        add("weights_sum" + tag, abs(fam.weights.sum() - 1), 1e-12)
        add("unitarity" + tag, fam.unitarity_defect(), 1e-10)
        if d <= DENSE_LIMIT:
            recon = assemble_factored(evolve_factored(sol, rot, t), sol.basis).flatten()
            add("factored_reconstruction" + tag, fro(recon - evolve_block(sol, rot, t).flatten()), 1e-9)
            rho_q = QubitState.from_bloch(_random_bloch(rng)).rho
            a = kraus_apply(fam, rho_q).rho
            b = reduced_dynamics(JointState.product(rho_q, rho_e), sol, rot, t).rho
            add("route_equivalence_product" + tag, fro(a - b), 1e-10)
            if joint is not None and joint.is_structured:
                a = correlated_dynamics(joint.gamma, joint.rho_qs, joint.rho_es, sol, rot, t).rho
                b = reduced_dynamics(joint, sol, rot, t).rho
                add("route_equivalence_config_state" + tag, fro(a - b), 1e-10)
    if len(times):
        fam = kraus_family(rho_e, sol, rot, float(times[-1]))
        drift, low = 0.0, 0.0
        for _ in range(n_states):
            rho = QubitState.from_bloch(_random_bloch(rng)).rho
            res = kraus_apply(fam, rho).rho
            drift = max(drift, abs(np.trace(res).real - 1))
            low = min(low, np.linalg.eigvalsh(res)[0])
        add("trace_preservation", drift, 1e-12)
        add("positivity", max(0.0, -low), 1e-10)
    return out


def frame_suite(
    env: EnvironmentPair,
    params: ModelParams,
    rng,
    scale: float = 1.0,
    times=(),
    joint: JointState | None = None,
    branch=Branch.POSITIVE,
) -> list[Check]:
    _require_commuting(env)
    if env.dim > ODE_LIMIT:
        return [Check("frame", "ode_oracle", 0.0, 0.0, f"skipped: environment dimension {env.dim} > {ODE_LIMIT}")]
    if joint is None:
        joint = JointState.product(np.eye(2) / 2, np.eye(env.dim) / env.dim)
    times = np.asarray(times, dtype=float)
    pipeline = driven_reduced_dynamics(joint, env, params, times, branch)
    oracle = ode_oracle(params, env, joint, times)
    err = max(np.max(np.abs(a.bloch - b.bloch)) for a, b in zip(pipeline, oracle))
    return [Check("frame", "rotating_frame_vs_ode", err, 1e-6 * scale, f"{len(times)} grid points")]


def _random_bloch(rng) -> np.ndarray:
    v = rng.normal(size=3)
    return v / np.linalg.norm(v) * rng.uniform() ** (1 / 3)


def run_suite(name: str, env, params, joint, times, rng, scale=1.0, branch=Branch.POSITIVE) -> list[Check]:
    times = np.asarray(times, dtype=float)
    if name == "riccati":
        return riccati_suite(env, params.rotating(), rng, scale, times[:10])
    if name == "symmetry":
        return symmetry_suite(env, params.rotating(), rng, scale, times[:10])
    if name == "kraus":
        return kraus_suite(env, params, rng, scale, times[:10], joint, branch)
    if name == "frame":
        return frame_suite(env, params, rng, scale, times, joint, branch)
    raise ValueError(f"unknown suite {name!r}")


def sample_times(times, rng, count: int = 5) -> np.ndarray:
    """Seeded subset of the time grid (always including its last point)."""
    times = np.asarray(times, dtype=float)
    if times.size <= count:
        return times
    pick = np.sort(rng.choice(times.size - 1, size=count - 1, replace=False))
    return np.append(times[pick], times[-1])

