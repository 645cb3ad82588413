import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from riccati_qubit import (
    AntilinearMap,
    BlockOperator,
    Branch,
    EnvironmentPair,
    ModelParams,
    block_diagonalize,
    build_hqe,
    build_ht,
    build_sx,
    joint_diagonalize,
    local_frames,
    riccati_residual_antilinear,
    riccati_residual_linear,
    solve_commuting,
    spin_bath,
)
from riccati_qubit.exceptions import CommutingSolverError, RiccatiResidualError
from riccati_qubit.hamiltonians import SIGMA_1, SIGMA_3
from riccati_qubit.linalg import MixedOperator
from riccati_qubit.riccati import (
    characteristic_roots,
    commutation_residual,
    negative_root,
    positive_root,
    quadratic_root_f,
    riccati_residual_mixed,
    riccati_spectrum,
    symmetry_block_diagonalize,
)

from conftest import random_commuting_env, random_hermitian, random_real_symmetric

finite = st.floats(-50, 50, allow_nan=False)
nonzero = st.floats(-50, 50, allow_nan=False).filter(lambda a: abs(a) > 1e-6)


class TestScalarRoots:
    def test_worked_example(self):
        # 3x^2 + 8x - 3 = (3x - 1)(x + 3)
        assert positive_root(4.0, 3.0) == pytest.approx(1 / 3, rel=1e-15)
        assert negative_root(4.0, 3.0) == pytest.approx(-3.0, rel=1e-15)

    def test_unit_root(self):
        assert positive_root(0.0, 2.5) == 1.0
        assert positive_root(0.0, -2.5) == 1.0

    def test_textbook_formula_for_positive_alpha(self):
        lam = np.linspace(-3, 3, 13)
        np.testing.assert_allclose(positive_root(lam, 0.7), quadratic_root_f(lam, 0.7), rtol=1e-13)

    def test_textbook_formula_is_negative_for_negative_alpha(self):
        assert quadratic_root_f(0.5, -1.0) < 0
        assert positive_root(0.5, -1.0) > 0

    def test_no_cancellation_for_small_alpha(self):
        # the series is x = alpha/(2 lam) - alpha^3/(8 lam^3) + ...
        alpha = 1e-9
        assert positive_root(1.0, alpha) == pytest.approx(alpha / 2, rel=1e-15)
        assert quadratic_root_f(1.0, alpha) != pytest.approx(alpha / 2, rel=1e-6)

    @given(finite, nonzero)
    @settings(max_examples=200)
    def test_root_properties(self, lam, alpha):
        x = float(positive_root(lam, alpha))
        xb = float(negative_root(lam, alpha))
        assert x > 0 > xb
        assert x * xb == pytest.approx(-1.0, rel=1e-14)
        scale = abs(alpha) * (1 + x * x) + 2 * abs(lam * x)
        assert abs(alpha * x * x + 2 * lam * x - alpha) <= 1e-14 * scale
        others = np.sort(np.roots([alpha, 2 * lam, -alpha]).real)
        np.testing.assert_allclose(sorted([xb, x]), others, rtol=1e-8)


class TestJointDiagonalize:
    def test_keeps_diagonal_order(self):
        env = spin_bath([1.0, 0.5], [0.2, 0.1])
        basis, e, v = joint_diagonalize(env)
        np.testing.assert_array_equal(basis, np.eye(4))
        np.testing.assert_array_equal(e, [1.5, 0.5, -0.5, -1.5])

    def test_degenerate_h_e(self, rng):
        # H_E has a 2-fold degenerate level that only V resolves
        u = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))[0]
        h = u @ np.diag([1.0, 1.0, -2.0]) @ u.conj().T
        v = u @ np.diag([0.3, -0.6, 0.1]) @ u.conj().T
        basis, e, w = joint_diagonalize(EnvironmentPair(h, v))
        for op, ev in ((h, e), (v, w)):
            np.testing.assert_allclose(basis.conj().T @ op @ basis, np.diag(ev), atol=1e-12)
        assert sorted(np.round(w, 12)) == [-0.6, 0.1, 0.3]

    def test_refuses_non_commuting(self):
        with pytest.raises(CommutingSolverError, match="commuting solver inapplicable"):
            joint_diagonalize(EnvironmentPair(SIGMA_1, SIGMA_3))


class TestSolveCommuting:
    def test_one_dimensional_example(self):
        env = EnvironmentPair([[2.0]], [[0.0]])
        p = ModelParams(1.0, 0.0)
        sol = solve_commuting(env, p)
        assert sol.x[0] == 1.0 and sol.x_bar[0] == -1.0
        hp, hm = riccati_spectrum(sol)
        assert (hp[0], hm[0]) == (3.0, 1.0)
        np.testing.assert_allclose(np.linalg.eigvalsh(build_hqe(p, env).flatten()), [1, 3], atol=1e-15)

    def test_decoupled(self, rng):
        env = random_commuting_env(rng, 3)
        sol = solve_commuting(env, ModelParams(0.0, 0.4))
        assert sol.decoupled and not np.any(sol.x)
        with pytest.raises(ValueError):
            sol.x_bar
        with pytest.raises(CommutingSolverError):
            solve_commuting(env, ModelParams(0.0, 0.4), "negative")
        h = build_hqe(ModelParams(0.0, 0.4), env)
        assert np.linalg.norm(riccati_residual_linear(h, sol.matrix())) == 0

    def test_branch_parse(self):
        assert Branch.parse("negative") is Branch.NEGATIVE
        assert Branch.parse(Branch.POSITIVE) is Branch.POSITIVE
        with pytest.raises(ValueError):
            Branch.parse("sideways")

    @pytest.mark.parametrize("branch", ["positive", "negative"])
    def test_solves_operator_equation(self, rng, branch):
        env = random_commuting_env(rng, 6)
        p = ModelParams(-0.9, 0.35)
        sol = solve_commuting(env, p, branch)
        h = build_hqe(p, env)
        x = sol.matrix()
        res = np.linalg.norm(riccati_residual_linear(h, x))
        assert res <= 1e-12 * (1 + np.linalg.norm(h.flatten()))
        np.testing.assert_allclose(x, x.conj().T, atol=1e-14)
        assert commutation_residual(sol, env) < 1e-12
        assert (np.all(sol.x > 0) if branch == "positive" else np.all(sol.x < 0))

    def test_residual_is_matrix_polynomial(self, rng):
        h = BlockOperator(*(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)) for _ in range(4)))
        x = rng.normal(size=(3, 3))
        ref = x @ h.b @ x + x @ h.a - h.e @ x - h.b.conj().T
        np.testing.assert_allclose(riccati_residual_linear(h, x), ref, atol=1e-13)
        mixed = riccati_residual_mixed(h, MixedOperator.linear(x))
        np.testing.assert_allclose(mixed.lin, ref, atol=1e-13)
        np.testing.assert_array_equal(mixed.anti, 0)


class TestSimilarity:
    def test_sx_unit(self):
        sx, sx_inv = build_sx(np.array([[1.0]]))
        np.testing.assert_allclose(sx.flatten(), [[1, -1], [1, 1]])
        np.testing.assert_allclose(sx_inv.flatten(), 0.5 * np.array([[1, 1], [-1, 1]]), atol=1e-16)

    def test_sx_inverse_non_hermitian(self, rng):
        x = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        sx, sx_inv = build_sx(x)
        np.testing.assert_allclose((sx_inv @ sx).flatten(), np.eye(8), atol=1e-12)

    def test_block_diagonal_form(self, rng):
        env = random_commuting_env(rng, 5)
        p = ModelParams(1.2, -0.3)
        sol = solve_commuting(env, p)
        x = sol.matrix()
        bd = block_diagonalize(build_hqe(p, env), x)
        assert np.linalg.norm(bd.b) < 1e-12 and np.linalg.norm(bd.c) < 1e-12
        eye = np.eye(5)
        np.testing.assert_allclose(bd.a, env.h_plus + p.beta * eye + p.alpha * x, atol=1e-12)
        np.testing.assert_allclose(bd.e, env.h_minus - p.beta * eye - p.alpha * x, atol=1e-12)

    def test_refuses_non_solution(self, rng):
        env = random_commuting_env(rng, 3)
        with pytest.raises(RiccatiResidualError) as info:
            block_diagonalize(build_hqe(ModelParams(1.0, 0.0), env), np.eye(3) * 0.3)
        assert info.value.residual > info.value.tolerance

    def test_spectrum_is_union(self, rng):
        env = random_commuting_env(rng, 7)
        p = ModelParams(0.45, 0.8)
        for branch in Branch:
            hp, hm = riccati_spectrum(solve_commuting(env, p, branch))
            ref = np.linalg.eigvalsh(build_hqe(p, env).flatten())
            np.testing.assert_allclose(np.sort(np.concatenate([hp, hm])), ref, atol=1e-12)


class TestLocalFrames:
    def test_unit_example(self):
        env = EnvironmentPair([[2.0]], [[0.0]])
        p = ModelParams(1.0, 0.0)
        (f,) = local_frames(solve_commuting(env, p), p)
        np.testing.assert_allclose(f.h_n, [[2, 1], [1, 2]])
        np.testing.assert_allclose(f.diagonalized(), np.diag([3.0, 1.0]), atol=1e-15)
        assert f.similarity_gaps() == (0.0, 0.0)
        np.testing.assert_allclose(characteristic_roots(f.h_n), [3, 1])

    def test_eigenvectors_and_gaps(self, rng):
        env = random_commuting_env(rng, 6)
        p = ModelParams(0.7, -0.2)
        sol = solve_commuting(env, p)
        for f in local_frames(sol, p):
            assert max(f.eigvec_residuals()) < 1e-12
            assert f.column_relation_residual() < 1e-14
            off = f.diagonalized() - np.diag([f.h_plus, f.h_minus])
            assert np.linalg.norm(off) < 1e-12
            tr_gap, det_gap = f.similarity_gaps()
            # Tr F - Tr G = 1 - 1/x and det F - det G = 1 + x^2 - (x + 1/x); both vanish only at x = 1
            assert tr_gap == pytest.approx(abs(1 - 1 / f.x), rel=1e-12, abs=1e-15)
            assert det_gap == pytest.approx(abs(1 + f.x**2 - f.x - 1 / f.x), rel=1e-12, abs=1e-15)

    def test_normalized_frame_is_orthogonal(self, rng):
        env = random_commuting_env(rng, 3)
        p = ModelParams(-1.3, 0.6)
        for f in local_frames(solve_commuting(env, p), p, normalized=True):
            np.testing.assert_allclose(f.f_n.T @ f.f_n, np.eye(2), atol=1e-15)
            np.testing.assert_allclose(f.f_n_inv @ f.f_n, np.eye(2), atol=1e-15)

    def test_parameter_mismatch(self, rng):
        env = random_commuting_env(rng, 2)
        sol = solve_commuting(env, ModelParams(1.0, 0.0))
        with pytest.raises(ValueError):
            local_frames(sol, ModelParams(1.0, 0.1))


class TestAntilinearSolutions:
    def test_conjugation_solves_real_symmetric_ht(self, rng):
        env = EnvironmentPair(random_real_symmetric(rng, 4), random_real_symmetric(rng, 4))
        p = ModelParams(0.8, 0.1)
        for t in (0.0, 1.3, 4.0):
            lin, anti = riccati_residual_antilinear(build_ht(t, p, env), AntilinearMap.conjugation(4))
            assert np.linalg.norm(lin) < 1e-14 and np.linalg.norm(anti) < 1e-14

    def test_conjugation_fails_for_complex_h_e(self, rng):
        env = EnvironmentPair(random_hermitian(rng, 4), random_real_symmetric(rng, 4))
        _, anti = riccati_residual_antilinear(build_ht(0.5, ModelParams(0.8, 0.1), env), AntilinearMap.conjugation(4))
        h_e = env.h_e.matrix
        np.testing.assert_allclose(anti, h_e.T - h_e, atol=1e-14)

    def test_mixed_residual_matches_split(self, rng):
        env = EnvironmentPair(random_hermitian(rng, 3), random_hermitian(rng, 3))
        h = build_ht(0.7, ModelParams(0.4, -0.2), env)
        tau = AntilinearMap.conjugation(3)
        lin, anti = riccati_residual_antilinear(h, tau)
        mixed = riccati_residual_mixed(h, tau.as_mixed())
        np.testing.assert_allclose(mixed.lin, lin, atol=1e-14)
        np.testing.assert_allclose(mixed.anti, anti, atol=1e-14)

    def test_symmetry_block_diagonalization(self, rng):
        env = EnvironmentPair(random_real_symmetric(rng, 3), random_real_symmetric(rng, 3))
        h = build_ht(0.9, ModelParams(0.5, 0.2), env)
        (top, off_top), (off_bottom, bottom) = symmetry_block_diagonalize(h, AntilinearMap.conjugation(3))
        assert off_top.norm() < 1e-14 and off_bottom.norm() < 1e-14

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_scalar_multiple_of_identity_solves_ht(self, seed):
        rng = np.random.default_rng(seed)
        env = EnvironmentPair(random_hermitian(rng, 3), random_hermitian(rng, 3))
        p = ModelParams(rng.uniform(-2, 2), rng.uniform(-2, 2))
        t = rng.uniform(0, 5)
        assume(np.linalg.norm(env.v_beta(p.beta)) > 1e-3)
        h = build_ht(t, p, env)
        z = np.exp(-2j * p.alpha * t)
        assert np.linalg.norm(riccati_residual_linear(h, z * np.eye(3))) < 1e-12
