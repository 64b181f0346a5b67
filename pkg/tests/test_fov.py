import numpy as np
import pytest
from shapely.geometry import MultiPoint, Point

import fovk
from fovk import (
    GridSpec,
    WeightedSpace,
    certificate,
    constants_abc,
    factor_spd,
    fov_boundary,
    make_preconditioner,
    numerical_radius,
    omega_d_region,
    oseen_fd,
    preconditioned_matrix,
    toeplitz_example,
)
from fovk.exceptions import DimensionGuardError
from fovk.fov import winding_number
from fovk.krylov import LinearOperator

from conftest import random_spd


def euclid(n):
    return WeightedSpace.euclidean(n)


class TestBoundary:
    def test_identity_all_points_one(self):
        bd = fov_boundary(np.eye(3), euclid(3), 16)
        assert np.abs(bd.points - 1.0).max() <= 1e-10

    def test_normal_matrix_segment(self):
        bd = fov_boundary(np.diag([-1.0, 2.0]), euclid(2), 64)
        assert bd.max_im <= 1e-10
        assert bd.points.real.min() == pytest.approx(-1.0, abs=1e-10)
        assert bd.points.real.max() == pytest.approx(2.0, abs=1e-10)

    def test_jordan_disk(self):
        A = np.array([[0.0, 1.0], [0.0, 0.0]])
        bd = fov_boundary(A, euclid(2), 64)
        # field of values is the disk of radius 1/2
        assert np.abs(np.abs(bd.points) - 0.5).max() <= 1e-8

    def test_jordan_disk_sampling_oracle(self, rng):
        # random complex Rayleigh quotients never exceed the computed radius
        A = np.array([[0.0, 1.0], [0.0, 0.0]])
        bd = fov_boundary(A, euclid(2), 64)
        r = np.abs(bd.points).max()
        X = rng.standard_normal((100000, 2)) + 1j * rng.standard_normal((100000, 2))
        vals = np.abs(np.einsum("ki,ij,kj->k", X.conj(), A, X)
                      / np.einsum("ki,ki->k", X.conj(), X))
        assert vals.max() <= r * (1 + 1e-10)
        assert vals.max() >= 0.98 * r

    def test_weighted_equals_transformed(self, rng):
        # W_H(A) = W(L^T A L^{-T}): explicit inverse as the oracle transform
        A = rng.standard_normal((6, 6))
        H = random_spd(rng, 6)
        S = factor_spd(H)
        At = S.L.T @ A @ np.linalg.inv(S.L.T)
        bd_w = fov_boundary(A, S, 32)
        bd_t = fov_boundary(At, euclid(6), 32)
        assert np.abs(bd_w.points - bd_t.points).max() <= 1e-8 * (1 + np.abs(bd_t.points).max())

    def test_convex_polyline(self, rng):
        A = rng.standard_normal((12, 12))
        bd = fov_boundary(A, euclid(12), 128)
        pts = bd.points
        scale = np.abs(pts).max()
        z = np.r_[pts, pts[:2]]
        u = z[1:-1] - z[:-2]
        v = z[2:] - z[1:-1]
        cross = u.real * v.imag - u.imag * v.real
        assert (cross >= -1e-10 * scale**2).all() or (cross <= 1e-10 * scale**2).all()

    def test_eigenvalue_containment(self, rng):
        A = rng.standard_normal((10, 10))
        H = random_spd(rng, 10)
        bd = fov_boundary(A, factor_spd(H), 128)
        hull = MultiPoint(np.c_[bd.points.real, bd.points.imag]).convex_hull
        scale = np.abs(bd.points).max()
        lam = np.linalg.eigvals(A)
        for z in lam:
            assert hull.distance(Point(z.real, z.imag)) <= 1e-8 * scale

    def test_monotone_refinement(self, rng):
        A = rng.standard_normal((8, 8))
        bd32 = fov_boundary(A, euclid(8), 32)
        bd64 = fov_boundary(A, euclid(8), 64)
        h32 = MultiPoint(np.c_[bd32.points.real, bd32.points.imag]).convex_hull
        h64 = MultiPoint(np.c_[bd64.points.real, bd64.points.imag]).convex_hull
        assert h64.buffer(1e-10).contains(h32)

    def test_min_angles(self):
        with pytest.raises(ValueError):
            fov_boundary(np.eye(2), euclid(2), 4)


class TestConstants:
    def test_identity(self):
        a, b, c = constants_abc(np.eye(4), euclid(4))
        assert (a, b) == (pytest.approx(1.0, rel=1e-10), pytest.approx(1.0, rel=1e-10))
        assert c == pytest.approx(0.0, abs=1e-12)

    def test_pure_rotation(self):
        A = np.array([[0.0, 1.0], [-1.0, 0.0]])
        a, b, c = constants_abc(A, euclid(2))
        assert a == pytest.approx(1.0, rel=1e-9)
        assert b == pytest.approx(1.0, rel=1e-9)
        assert c == pytest.approx(1.0, rel=1e-9)
        cert = certificate(A, euclid(2))
        assert not cert.cond4_pass

    def test_skew_norm_is_max_imaginary_part(self, rng):
        A = rng.standard_normal((9, 9))
        S = factor_spd(random_spd(rng, 9))
        a, b, c = constants_abc(A, S)
        bd = fov_boundary(A, S, 256)
        resolution = a * (2 * np.pi / 256) ** 2 + 1e-8
        assert c >= bd.max_im - 1e-6 * max(np.abs(bd.points).max(), 1.0)
        assert abs(c - bd.max_im) <= resolution


class TestCertificate:
    def test_scaled_identity(self):
        A = 1.5 * np.eye(3)
        cert = certificate(A, euclid(3))
        assert cert.a == pytest.approx(1.5, rel=1e-10)
        assert cert.b == pytest.approx(1.0 / 1.5, rel=1e-10)
        assert cert.c == pytest.approx(0.0, abs=1e-12)
        assert cert.cond4_pass
        assert cert.origin_excluded
        # region degenerates to the single point 1.5
        samples = cert.region.samples()
        assert np.abs(samples - 1.5).max() <= 1e-8

    def test_toeplitz_two_components_origin_excluded(self):
        A = toeplitz_example(100)
        cert = certificate(A, euclid(200))
        assert not cert.cond4_pass           # bc > 1
        assert cert.bc > 1.0
        assert cert.origin_excluded          # two-component geometry
        assert len(cert.region.loops) == 2
        for lp in cert.region.loops:
            assert abs(winding_number(lp)) < 0.5
            assert np.abs(lp).min() >= cert.inner_radius - 1e-10

    def test_oseen_preconditioned_verdicts(self):
        sysm = oseen_fd(GridSpec(8), 1.0)
        for variant in ("upper", "diag"):
            M = make_preconditioner(sysm, variant, side="left")
            A = preconditioned_matrix(sysm, M)
            cert = certificate(A, sysm.h_space())
            assert cert.bc < 1.0
            assert cert.cond4_pass
            assert cert.origin_excluded

    def test_cond4_implies_origin_excluded(self, rng):
        for seed in range(6):
            r2 = np.random.default_rng(seed)
            A = r2.standard_normal((8, 8)) + 4 * np.eye(8)
            cert = certificate(A, factor_spd(random_spd(r2, 8)))
            if cert.cond4_pass:
                assert cert.origin_excluded

    def test_inner_radius_below_min_eigenvalue(self, rng):
        A = rng.standard_normal((8, 8)) + 3 * np.eye(8)
        cert = certificate(A, euclid(8))
        min_abs_eig = np.abs(np.linalg.eigvals(A)).min()
        assert cert.inner_radius <= min_abs_eig + 1e-8 * cert.a

    def test_scale_covariance(self, rng):
        A = rng.standard_normal((7, 7)) + 3 * np.eye(7)
        S = factor_spd(random_spd(rng, 7))
        cert1 = certificate(A, S)
        for alpha in (0.1, 10.0):
            cert2 = certificate(alpha * A, S)
            assert cert2.a == pytest.approx(alpha * cert1.a, rel=1e-9)
            assert cert2.b == pytest.approx(cert1.b / alpha, rel=1e-9)
            assert cert2.c == pytest.approx(alpha * cert1.c, rel=1e-9)
            assert cert2.bc == pytest.approx(cert1.bc, rel=1e-10)

    def test_dimension_guard(self):
        op = LinearOperator(3000, lambda v: v)
        with pytest.raises(DimensionGuardError):
            certificate(op, euclid(3000))

    def test_operator_materialization(self, rng):
        A = rng.standard_normal((6, 6)) + 4 * np.eye(6)
        op = LinearOperator.from_matrix(A)
        c1 = certificate(op, euclid(6))
        c2 = certificate(A, euclid(6))
        assert c1.a == pytest.approx(c2.a, rel=1e-12)
        assert c1.bc == pytest.approx(c2.bc, rel=1e-12)

    def test_json_dict_schema(self, rng):
        A = rng.standard_normal((5, 5)) + 3 * np.eye(5)
        cert = certificate(A, euclid(5), compute_numerical_radius=True)
        d = cert.to_json_dict()
        for key in ("schema_version", "a", "b", "c", "bc", "cond4_pass", "inner_radius",
                    "origin_excluded", "numerical_radius_inv", "boundary", "region"):
            assert key in d
        assert d["schema_version"] == 1
        assert len(d["boundary"]["re"]) == 256


class TestNumericalRadius:
    def test_identity(self):
        assert numerical_radius(np.eye(3), euclid(3), 32) == pytest.approx(1.0, rel=1e-9)

    def test_jordan_half(self):
        A = np.array([[0.0, 1.0], [0.0, 0.0]])
        assert numerical_radius(A, euclid(2), 32) == pytest.approx(0.5, rel=1e-8)

    def test_normal_max_abs_eigenvalue(self):
        assert numerical_radius(np.diag([2.0, -1.0]), euclid(2), 64) == pytest.approx(
            2.0, rel=1e-9)

    def test_sampling_lower_bound(self, rng):
        A = rng.standard_normal((5, 5))
        w = numerical_radius(A, euclid(5), 64)
        X = rng.standard_normal((20000, 5)) + 1j * rng.standard_normal((20000, 5))
        vals = np.abs(np.einsum("ki,ij,kj->k", X.conj(), A, X)
                      / np.einsum("ki,ki->k", X.conj(), X))
        assert vals.max() <= w * (1 + 1e-10)


class TestOmegaD:
    def test_two_components_when_c_below_radius(self):
        region = omega_d_region(a=2.0, b=1.0, c=0.3)  # inner radius 1, slab 0.3
        assert len(region.loops) == 2
        assert all(abs(winding_number(lp)) < 0.5 for lp in region.loops)

    def test_ring_when_c_above_radius(self):
        region = omega_d_region(a=2.0, b=2.0, c=0.8)  # inner radius 0.5 < c
        # annulus band with a hole: exterior loop winds around the origin
        windings = [abs(winding_number(lp)) for lp in region.loops]
        assert max(windings) > 0.5
