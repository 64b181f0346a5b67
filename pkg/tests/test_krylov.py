import numpy as np
import pytest

from fovk import (
    GridSpec,
    WeightedSpace,
    factor_spd,
    gmres,
    lu_solve,
    make_preconditioner,
    oseen_fd,
    solve_preconditioned,
)
from fovk.krylov import LinearOperator

from conftest import random_spd
from reference_gmres import reference_gmres


class TestGmresBasics:
    def test_identity_one_iteration(self, rng):
        b = rng.standard_normal(6)
        x, tr = gmres(np.eye(6), b)
        assert tr.iterations == 1
        assert tr.converged
        assert tr.breakdown == 0
        assert np.allclose(x, b)

    def test_three_distinct_eigenvalues(self):
        A = np.diag([1.0, 2.0, 3.0])
        b = np.array([1.0, 1.0, 1.0])
        x, tr = gmres(A, b, tol=1e-12)
        assert tr.iterations == 3
        assert tr.residuals_weighted[-1] <= 1e-10 * tr.residuals_weighted[0]
        assert np.allclose(x, b / np.diag(A))

    def test_direct_solve_oracle(self, rng):
        A = rng.standard_normal((50, 50)) + 8 * np.eye(50)
        b = rng.standard_normal(50)
        G = rng.standard_normal((50, 50))
        S = factor_spd(G @ G.T + 50 * np.eye(50))
        x, tr = gmres(A, b, space=S, tol=1e-12, maxit=50)
        xd = lu_solve(A, b)
        assert np.linalg.norm(x - xd) <= 1e-8 * np.linalg.norm(xd)
        assert tr.converged

    def test_maxit_returns_best_not_converged(self, rng):
        A = rng.standard_normal((40, 40)) + 6 * np.eye(40)
        b = rng.standard_normal(40)
        x, tr = gmres(A, b, tol=1e-14, maxit=5)
        assert not tr.converged
        assert tr.iterations == 5
        # still the best iterate so far: residual decreased from start
        assert np.linalg.norm(b - A @ x) < np.linalg.norm(b)

    def test_happy_breakdown_on_invariant_subspace(self):
        A = np.diag([2.0, 3.0, 4.0])
        b = np.array([1.0, 0.0, 0.0])  # eigenvector: one step is exact
        x, tr = gmres(A, b, tol=1e-12)
        assert tr.iterations == 1
        assert tr.converged
        assert np.allclose(x, [0.5, 0.0, 0.0])

    def test_zero_rhs(self):
        x, tr = gmres(np.eye(3), np.zeros(3))
        assert tr.converged
        assert np.allclose(x, 0.0)

    def test_nonzero_x0(self, rng):
        A = rng.standard_normal((20, 20)) + 5 * np.eye(20)
        b = rng.standard_normal(20)
        x0 = rng.standard_normal(20)
        x, tr = gmres(A, b, x0=x0, tol=1e-12, maxit=20)
        assert np.linalg.norm(A @ x - b) <= 1e-8 * np.linalg.norm(b)


class TestGmresContracts:
    def test_h_orthonormal_basis(self, rng):
        A = rng.standard_normal((30, 30)) + 4 * np.eye(30)
        b = rng.standard_normal(30)
        S = factor_spd(random_spd(rng, 30, shift=5.0))
        _, tr = gmres(A, b, space=S, tol=1e-12, maxit=30, keep_basis=True)
        V = tr.basis
        G = np.array([[S.inner(V[:, i], V[:, j]) for j in range(V.shape[1])]
                      for i in range(V.shape[1])])
        assert np.abs(G - np.eye(V.shape[1])).max() <= 1e-8

    def test_residual_monotone(self, rng):
        for trial in range(5):
            A = rng.standard_normal((25, 25)) + 3 * np.eye(25)
            b = rng.standard_normal(25)
            S = factor_spd(random_spd(rng, 25, shift=4.0))
            _, tr = gmres(A, b, space=S, tol=1e-13, maxit=25)
            r = np.array(tr.residuals_weighted)
            assert np.all(r[1:] <= r[:-1] * (1 + 1e-12))

    def test_givens_estimate_matches_explicit_residual(self, rng):
        A = rng.standard_normal((35, 35)) + 6 * np.eye(35)
        b = rng.standard_normal(35)
        S = factor_spd(random_spd(rng, 35, shift=6.0))
        x, tr = gmres(A, b, space=S, tol=1e-10, maxit=35)
        explicit = S.norm(b - A @ x)
        estimate = tr.residuals_weighted[-1]
        scale = tr.residuals_weighted[0]
        assert abs(explicit - estimate) <= 1e-8 * scale

    def test_euclid_residuals_match_direct_recomputation(self, rng):
        A = rng.standard_normal((20, 20)) + 5 * np.eye(20)
        b = rng.standard_normal(20)
        S = factor_spd(random_spd(rng, 20, shift=4.0))
        x, tr = gmres(A, b, space=S, tol=1e-12, maxit=20, keep_iterates=True)
        for j, xj in enumerate(tr.iterates):
            direct = np.linalg.norm(b - A @ xj)
            assert abs(direct - tr.residuals_euclid[j]) <= 1e-8 * np.linalg.norm(b)

    def test_scaled_norm_gives_identical_iterates(self, rng):
        # H and 2H induce proportional norms: the Krylov iterates coincide
        A = rng.standard_normal((20, 20)) + 5 * np.eye(20)
        b = rng.standard_normal(20)
        H = random_spd(rng, 20, shift=4.0)
        _, tr1 = gmres(A, b, space=factor_spd(H), tol=1e-10, maxit=20, keep_iterates=True)
        _, tr2 = gmres(A, b, space=factor_spd(2.0 * H), tol=1e-10, maxit=20, keep_iterates=True)
        assert tr1.iterations == tr2.iterations
        for xa, xb in zip(tr1.iterates, tr2.iterates):
            assert np.linalg.norm(xa - xb) <= 1e-10 * max(np.linalg.norm(xa), 1.0)

    def test_matches_reference_euclidean_gmres(self, rng):
        A = rng.standard_normal((24, 24)) + 4 * np.eye(24)
        b = rng.standard_normal(24)
        x, tr = gmres(A, b, tol=1e-12, maxit=24, keep_iterates=True)
        _, ref_iterates, ref_res = reference_gmres(A, b, tol=1e-12, maxit=24)
        for xa, xb in zip(tr.iterates, ref_iterates):
            assert np.linalg.norm(xa - xb) <= 1e-10 * max(1.0, np.linalg.norm(xb))

    def test_operator_linearity_spot_check(self, rng):
        A = rng.standard_normal((15, 15))
        op = LinearOperator.from_matrix(A)
        for _ in range(10):
            u, v = rng.standard_normal(15), rng.standard_normal(15)
            a, c = rng.standard_normal(2)
            lhs = op(a * u + c * v)
            rhs = a * op(u) + c * op(v)
            assert np.linalg.norm(lhs - rhs) <= 1e-10 * (np.linalg.norm(lhs) + 1.0)


class _ExactPreconditioner:
    """M = K itself, packaged with the solve_preconditioned interface."""

    def __init__(self, sysm, side):
        self.side = side
        self._K = sysm.K()

    def apply_inverse(self, v):
        return lu_solve(self._K, v)


class TestSolvePreconditioned:
    def test_exact_preconditioner_one_iteration(self, rng):
        from fovk import synthetic

        sysm = synthetic(12, 5, 0.2, 2.0, 0.5, seed=3)
        rhs = rng.standard_normal(sysm.n + sysm.m)
        for side in ("left", "right"):
            M = _ExactPreconditioner(sysm, side)
            x, tr = solve_preconditioned(sysm, M, rhs, tol=1e-8)
            assert tr.iterations == 1
            assert tr.unpreconditioned_residual <= 1e-6 * np.linalg.norm(rhs)

    def test_oseen_grid16_upper_left_iteration_window(self):
        sysm = oseen_fd(GridSpec(16), 1.0)
        rng = np.random.default_rng(1234)
        rhs = rng.standard_normal(sysm.n + sysm.m)
        MU = make_preconditioner(sysm, "upper", side="left")
        _, tr_u = solve_preconditioned(sysm, MU, rhs, tol=1e-5, maxit=100)
        assert tr_u.converged
        assert 8 <= tr_u.iterations <= 20
        # diagonal needs more iterations than upper on the same system
        MD = make_preconditioner(sysm, "diag", side="left")
        _, tr_d = solve_preconditioned(sysm, MD, rhs, tol=1e-5, maxit=100)
        assert tr_d.converged
        assert tr_u.iterations < tr_d.iterations

    def test_right_preconditioning_hinv_norm(self, rng):
        from fovk import synthetic

        sysm = synthetic(15, 6, 0.3, 2.0, 0.5, seed=5)
        rhs = rng.standard_normal(sysm.n + sysm.m)
        ML = make_preconditioner(sysm, "lower", side="right")
        x, tr = solve_preconditioned(sysm, ML, rhs, tol=1e-8, maxit=50)
        assert tr.converged
        assert tr.unpreconditioned_residual <= 1e-6 * np.linalg.norm(rhs)
        assert np.linalg.norm(sysm.apply_K(x) - rhs) <= 1e-6 * np.linalg.norm(rhs)

    def test_norm_override_l2(self, rng):
        from fovk import synthetic

        sysm = synthetic(10, 4, 0.1, 1.5, 0.6, seed=7)
        rhs = rng.standard_normal(sysm.n + sysm.m)
        M = make_preconditioner(sysm, "upper", side="left")
        _, tr = solve_preconditioned(sysm, M, rhs, tol=1e-8, norm="l2")
        assert tr.converged
