import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riccati_qubit import (
    Branch,
    EnvironmentPair,
    JointState,
    ModelParams,
    QubitState,
    assemble_factored,
    build_hqe,
    correlated_dynamics,
    driven_reduced_dynamics,
    evolve_block,
    evolve_factored,
    expm_oracle,
    kraus_apply,
    kraus_family,
    local_unitarity_defect,
    ode_oracle,
    reduced_dynamics,
    solve_commuting,
    spin_bath,
)
from riccati_qubit.dynamics import _rk4_propagate, operator_schmidt_weights, schmidt_defect
from riccati_qubit.exceptions import InvalidStateError, StepSizeError
from riccati_qubit.hamiltonians import SIGMA_1
from riccati_qubit.linalg import partial_trace_env

from conftest import random_commuting_env, random_density, random_unitary


def full_route(joint, params, env, t):
    u = expm_oracle(-1j * build_hqe(params, env).flatten() * t)
    return partial_trace_env(u @ joint.full @ u.conj().T)


class TestStates:
    def test_bloch_roundtrip(self):
        r = np.array([0.3, -0.4, 0.5])
        s = QubitState.from_bloch(r)
        np.testing.assert_allclose(s.bloch, r, atol=1e-15)
        assert s.purity == pytest.approx((1 + r @ r) / 2)
        # rho_01 = (x - i y)/2
        assert s.coherence == pytest.approx((0.3 + 0.4j) / 2)

    def test_rejects_invalid(self):
        with pytest.raises(InvalidStateError):
            QubitState(np.diag([1.5, -0.5]))
        with pytest.raises(InvalidStateError):
            QubitState(np.diag([0.6, 0.6]))
        with pytest.raises(InvalidStateError):
            QubitState.from_bloch([1.0, 1.0, 0.0])

    def test_product_marginal(self, rng):
        rq, re = random_density(rng, 2), random_density(rng, 3)
        joint = JointState.product(rq, re)
        np.testing.assert_allclose(joint.marginal(), rq, atol=1e-15)
        assert joint.is_structured and joint.env_dim == 3

    def test_structured_rejects_non_positive_grid(self):
        rq = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
        re = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
        with pytest.raises(InvalidStateError):
            JointState.structured([[0.7, 0.0], [0.0, -0.3]], rq, re)
        with pytest.raises(InvalidStateError):
            JointState.structured([[1.0, 0.0]], rq, re)


class TestEvolution:
    @pytest.mark.parametrize("branch", list(Branch))
    def test_matches_matrix_exponential(self, rng, branch):
        env = random_commuting_env(rng, 5)
        p = ModelParams(0.6, -0.25)
        sol = solve_commuting(env, p, branch)
        h = build_hqe(p, env).flatten()
        for t in (0.0, 0.4, 3.0, 11.0):
            u = evolve_block(sol, p, t).flatten()
            np.testing.assert_allclose(u, expm_oracle(-1j * h * t), atol=1e-11)
            np.testing.assert_allclose(u @ u.conj().T, np.eye(10), atol=1e-12)

    def test_group_property(self, rng):
        env = random_commuting_env(rng, 4)
        p = ModelParams(1.3, -0.8)
        sol = solve_commuting(env, p, "negative")
        u1, u2 = evolve_block(sol, p, 0.7), evolve_block(sol, p, 2.9)
        np.testing.assert_allclose((u1 @ u2).flatten(), evolve_block(sol, p, 3.6).flatten(), atol=1e-12)

    def test_factored_matches_block(self, rng):
        env = random_commuting_env(rng, 4)
        p = ModelParams(-1.1, 0.5)
        sol = solve_commuting(env, p)
        u_n = evolve_factored(sol, p, 2.3)
        np.testing.assert_allclose(assemble_factored(u_n, sol.basis).flatten(), evolve_block(sol, p, 2.3).flatten(), atol=1e-12)

    def test_parameter_mismatch(self, rng):
        env = random_commuting_env(rng, 2)
        sol = solve_commuting(env, ModelParams(1.0, 0.0))
        with pytest.raises(ValueError):
            evolve_block(sol, ModelParams(1.0, 0.5), 1.0)

    def test_pure_dephasing_spin_bath(self):
        # alpha = 0, maximally mixed bath: rho_01(t) = rho_01(0) exp(-2i beta t) prod_k cos(2 g_k t)
        g = np.array([0.3, -0.7, 0.45])
        env = spin_bath([1.0, 0.4, 0.2], g)
        p = ModelParams(0.0, 0.15)
        sol = solve_commuting(env, p)
        rq = QubitState.from_bloch([0.6, 0.0, 0.8]).rho
        joint = JointState.product(rq, np.eye(8) / 8)
        for t in np.linspace(0, 6, 13):
            got = reduced_dynamics(joint, sol, p, t).rho
            expect = rq[0, 1] * np.exp(-2j * p.beta * t) * np.prod(np.cos(2 * g * t))
            assert got[0, 1] == pytest.approx(expect, abs=1e-14)
            assert got[0, 0] == pytest.approx(rq[0, 0], abs=1e-14)

    def test_pure_dephasing_general_weights(self, rng):
        # alpha = 0: rho_01(t) = rho_01(0) sum_n rho_n exp(-2i (V_n + beta) t)
        env = random_commuting_env(rng, 4)
        p = ModelParams(0.0, -0.3)
        sol = solve_commuting(env, p)
        re = random_density(rng, 4)
        rq = QubitState.from_bloch([0.0, 1.0, 0.0]).rho
        w = np.real(np.einsum("in,ij,jn->n", sol.basis.conj(), re, sol.basis))
        for t in (0.5, 2.0, 7.0):
            got = kraus_apply(kraus_family(re, sol, p, t), rq).rho[0, 1]
            assert got == pytest.approx(rq[0, 1] * np.sum(w * np.exp(-2j * (sol.e_v + p.beta) * t)), abs=1e-13)


class TestKraus:
    def test_family_laws(self, rng):
        env = random_commuting_env(rng, 6)
        p = ModelParams(0.9, 0.2)
        sol = solve_commuting(env, p)
        fam = kraus_family(random_density(rng, 6), sol, p, 1.7)
        assert len(fam) == 6
        assert fam.completeness_defect() < 1e-13
        assert fam.unitarity_defect() < 1e-13
        assert fam.weights.sum() == pytest.approx(1.0, abs=1e-14)

    def test_matches_full_route(self, rng):
        env = random_commuting_env(rng, 4)
        p = ModelParams(0.7, -0.6)
        sol = solve_commuting(env, p, "negative")
        rq, re = random_density(rng, 2), random_density(rng, 4)
        joint = JointState.product(rq, re)
        for t in (0.3, 2.5):
            a = kraus_apply(kraus_family(re, sol, p, t), rq).rho
            np.testing.assert_allclose(a, reduced_dynamics(joint, sol, p, t).rho, atol=1e-12)
            np.testing.assert_allclose(a, full_route(joint, p, env, t), atol=1e-11)

    def test_rejects_bad_environment_state(self, rng):
        env = random_commuting_env(rng, 2)
        sol = solve_commuting(env, ModelParams(1.0, 0.0))
        with pytest.raises(InvalidStateError):
            kraus_family(np.diag([1.2, -0.2]), sol, ModelParams(1.0, 0.0), 1.0)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_channel_is_cptp(self, seed):
        rng = np.random.default_rng(seed)
        env = random_commuting_env(rng, 3)
        p = ModelParams(rng.uniform(-2, 2), rng.uniform(-2, 2))
        fam = kraus_family(random_density(rng, 3, rank=1), solve_commuting(env, p), p, rng.uniform(0, 20))
        out = kraus_apply(fam, random_density(rng, 2)).rho
        assert abs(np.trace(out) - 1) < 1e-12
        assert np.linalg.eigvalsh(out).min() > -1e-12


class TestCorrelated:
    def test_matches_full_route(self, rng):
        env = random_commuting_env(rng, 3)
        p = ModelParams(0.8, 0.4)
        sol = solve_commuting(env, p)
        gamma = np.array([[0.3, 0.05], [0.05, 0.6]])
        qs = [random_density(rng, 2) for _ in range(2)]
        es = [random_density(rng, 3) for _ in range(2)]
        joint = JointState.structured(gamma, qs, es)
        for t in (0.0, 1.1, 4.2):
            got = correlated_dynamics(gamma, qs, es, sol, p, t).rho
            np.testing.assert_allclose(got, full_route(joint, p, env, t), atol=1e-11)

    def test_product_reduces_to_kraus(self, rng):
        env = random_commuting_env(rng, 3)
        p = ModelParams(-0.5, 0.1)
        sol = solve_commuting(env, p)
        rq, re = random_density(rng, 2), random_density(rng, 3)
        a = correlated_dynamics([[1.0]], [rq], [re], sol, p, 2.0).rho
        b = kraus_apply(kraus_family(re, sol, p, 2.0), rq).rho
        np.testing.assert_allclose(a, b, atol=1e-14)


class TestLocalUnitarity:
    def test_zero_for_uncoupled(self, rng):
        h = random_commuting_env(rng, 3).h_e.matrix
        env = EnvironmentPair(h, np.zeros((3, 3)))
        p = ModelParams(0.8, 0.3)
        assert local_unitarity_defect(solve_commuting(env, p), p, 2.0) < 1e-12

    def test_positive_when_entangling(self, rng):
        env = random_commuting_env(rng, 3)
        p = ModelParams(0.8, 0.3)
        assert local_unitarity_defect(solve_commuting(env, p), p, 2.0) > 1e-3

    def test_schmidt_weights_of_product(self, rng):
        a, b = random_unitary(rng, 2), random_unitary(rng, 3)
        w = operator_schmidt_weights(np.kron(a, b), (2, 3))
        assert w[0] == pytest.approx(6.0) and np.all(w[1:] < 1e-12)
        # CNOT-like controlled operation has two equal weights
        cz = np.diag([1, 1, 1, -1]).astype(complex)
        np.testing.assert_allclose(operator_schmidt_weights(cz, (2, 2))[:2], [2, 2])

    def test_invariant_under_local_unitaries(self, rng):
        env = random_commuting_env(rng, 3)
        p = ModelParams(1.1, -0.2)
        u = evolve_block(solve_commuting(env, p), p, 1.5).flatten()
        w1 = np.kron(random_unitary(rng, 2), random_unitary(rng, 3))
        w2 = np.kron(random_unitary(rng, 2), random_unitary(rng, 3))
        assert schmidt_defect(w1 @ u @ w2, (2, 3)) == pytest.approx(schmidt_defect(u, (2, 3)), abs=1e-12)


class TestRotatingFrame:
    def test_matches_ode(self, rng):
        env = spin_bath([0.7, -0.3], [0.25, 0.4])
        p = ModelParams(0.5, 0.3, 1.2)
        joint = JointState.product(QubitState.from_bloch([1, 0, 0]).rho, random_density(rng, 4))
        times = np.linspace(0, 5, 21)
        a = driven_reduced_dynamics(joint, env, p, times)
        b = ode_oracle(p, env, joint, times)
        err = max(np.max(np.abs(x.bloch - y.bloch)) for x, y in zip(a, b))
        assert err < 1e-7

    def test_zero_drive_frequency_is_lab_frame(self, rng):
        env = random_commuting_env(rng, 2)
        p = ModelParams(0.9, 0.1)
        joint = JointState.product(random_density(rng, 2), random_density(rng, 2))
        (state,) = driven_reduced_dynamics(joint, env, p, [1.3])
        np.testing.assert_allclose(state.rho, full_route(joint, p, env, 1.3), atol=1e-12)

    def test_rk4_is_fourth_order(self, rng):
        env = random_commuting_env(rng, 2)
        p = ModelParams(0.8, 0.4)
        h = build_hqe(p, env).flatten()
        h0 = h - p.alpha * np.kron(SIGMA_1, np.eye(2))
        drive = lambda t: p.alpha * np.kron(SIGMA_1, np.eye(2))  # noqa: E731
        exact = expm_oracle(-2j * h)
        errs = [np.linalg.norm(_rk4_propagate(h0, drive, [0.0, 2.0], [m])[-1] - exact) for m in (20, 40, 80)]
        ratios = [errs[0] / errs[1], errs[1] / errs[2]]
        assert all(13 < r < 19 for r in ratios), ratios

    def test_step_size_refusal(self):
        env = spin_bath([0.7], [0.25])
        p = ModelParams(0.5, 0.3, 1.2)
        joint = JointState.product(np.eye(2) / 2 + 0.5 * np.diag([1, -1]), np.eye(2) / 2)
        with pytest.raises(StepSizeError):
            ode_oracle(p, env, joint, [0.0, 5.0], tol=1e-6, max_step_phase=1.0)
