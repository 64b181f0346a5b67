import numpy as np
import pytest

from fovk import (
    GridSpec,
    WeightedSpace,
    WindField,
    default_wind,
    factor_spd,
    inv_norm,
    op_norm,
    oseen_fd,
    stokes_darcy_fd,
    synthetic,
    toeplitz_example,
    verify_assumptions,
)
from fovk.exceptions import InvalidParamsError, WindNotDivergenceFreeError
from fovk.linalg import min_singular_value, weighted_transform
from fovk.problems import _divergence, _drop_pressure_mean


class TestToeplitz:
    def test_n2_blocks(self):
        A = toeplitz_example(2)
        assert np.allclose(A[:2, :2], [[-1.0, 0.25], [0.0, -1.0]])
        assert np.allclose(A[2:, 2:], [[2.0, 1.2], [0.0, 2.0]])
        assert np.allclose(A[:2, 2:], 0.0)

    def test_eigenvalues(self):
        lam = np.linalg.eigvals(toeplitz_example(30))
        assert set(np.round(lam.real, 10)) == {-1.0, 2.0}
        assert np.abs(lam.imag).max() == 0.0

    def test_inverse_norm_window_all_sizes(self):
        for n in (50, 100, 200, 400):
            A = toeplitz_example(n)
            E = WeightedSpace.euclidean(2 * n)
            val = inv_norm(A, E, E).value
            assert 0.74 <= 1.0 / val <= 0.76


class TestGridAndWind:
    def test_grid_invariants(self):
        g = GridSpec(8)
        assert g.h * g.cells == pytest.approx(1.0, abs=1e-14)
        with pytest.raises(InvalidParamsError):
            GridSpec(3)

    def test_default_wind_exactly_divergence_free(self):
        g = GridSpec(16)
        w = default_wind(g)
        assert w.divergence_free
        assert w.max_divergence(g) == 0.0

    def test_component_sampling_flags_nondivergence(self):
        g = GridSpec(8)
        w = WindField.from_components(lambda x, y: x * 0 + 1.0 + 0 * y,
                                      lambda x, y: 0 * x + y, g)  # div = 1
        assert not w.divergence_free
        with pytest.raises(WindNotDivergenceFreeError):
            oseen_fd(g, 1.0, wind=w)

    def test_divergence_free_component_field_accepted(self):
        g = GridSpec(8)
        # constant wind is discretely divergence-free
        w = WindField.from_components(lambda x, y: np.ones_like(x * y),
                                      lambda x, y: np.zeros_like(x * y), g)
        assert w.divergence_free
        sysm = oseen_fd(g, 1.0, wind=w)
        assert np.abs(sysm.N + sysm.N.T).max() <= 1e-12


class TestOseen:
    def test_zero_wind_is_stokes_limit(self):
        g = GridSpec(8)
        sysm = oseen_fd(g, 1.0, wind=WindField.zero(g))
        assert np.allclose(sysm.N, 0.0)
        rep = verify_assumptions(sysm)
        assert rep.eta == pytest.approx(0.0, abs=1e-12)

    def test_invariants_and_eta_positive(self):
        sysm = oseen_fd(GridSpec(8), 1.0)
        rep = verify_assumptions(sysm)
        assert rep.eta > 0
        assert rep.all_pass

    def test_eta_nu_ratio(self):
        e1 = verify_assumptions(oseen_fd(GridSpec(8), 1.0)).eta
        e2 = verify_assumptions(oseen_fd(GridSpec(8), 2.0)).eta
        assert e2 / e1 == pytest.approx(0.5, rel=0.2)

    def test_raw_divergence_null_space_is_constants(self):
        c = 8
        Braw = _divergence(c, 1.0 / c).toarray()
        U, s, _ = np.linalg.svd(Braw)
        assert s[-1] <= 1e-12 * s[0]          # one rank deficiency
        assert s[-2] > 1e-10 * s[0]           # exactly one
        null = U[:, -1]                       # left null vector: constant pressure
        assert np.abs(null - null[0]).max() <= 1e-8

    def test_reduced_b_full_rank(self):
        sysm = oseen_fd(GridSpec(8), 1.0)
        C = weighted_transform(sysm.B.T, sysm.h2_space(), sysm.h1_space().inverse())
        smin = min_singular_value(C).value
        assert smin > 1e-10

    def test_constants_mesh_independent(self):
        vals = {}
        for c in (8, 16, 32):
            sysm = oseen_fd(GridSpec(c), 1.0)
            sp1 = sysm.h1_space()
            sp2i = sysm.h2_space().inverse()
            C1 = op_norm(sysm.B, sp1, sp2i).value
            Ct = weighted_transform(sysm.B.T, sysm.h2_space(), sp1.inverse())
            C2 = min_singular_value(Ct).value
            vals[c] = (C1, C2)
        c1s = [v[0] for v in vals.values()]
        c2s = [v[1] for v in vals.values()]
        assert (max(c1s) - min(c1s)) / max(c1s) <= 0.25
        assert (max(c2s) - min(c2s)) / max(c2s) <= 0.25


class TestStokesDarcy:
    def test_decoupled_limit(self):
        sysm = stokes_darcy_fd(GridSpec(8), 3.0, coupling_scale=0.0)
        assert np.allclose(sysm.N, 0.0)
        assert verify_assumptions(sysm).eta == pytest.approx(0.0, abs=1e-12)

    def test_coupling_exactly_skew(self):
        sysm = stokes_darcy_fd(GridSpec(8), 3.0)
        assert np.linalg.norm(sysm.N + sysm.N.T, "fro") == 0.0

    def test_invariants_and_eta_scaling(self):
        e3 = verify_assumptions(stokes_darcy_fd(GridSpec(8), 3.0)).eta
        e6 = verify_assumptions(stokes_darcy_fd(GridSpec(8), 6.0)).eta
        assert e3 > 0
        assert e6 / e3 == pytest.approx(0.5, rel=0.2)

    def test_lemma_checks(self):
        rep = verify_assumptions(stokes_darcy_fd(GridSpec(8), 3.0))
        assert rep.all_pass


class TestSynthetic:
    def test_requested_constants_match(self):
        sysm = synthetic(20, 8, 0.1, 2.0, 0.5, seed=42)
        rep = verify_assumptions(sysm, tol=1e-12)
        assert rep.eta == pytest.approx(0.1, abs=1e-8)
        assert rep.C1 == pytest.approx(2.0, abs=1e-8)
        assert rep.C2 == pytest.approx(0.5, abs=1e-8)

    def test_eta_zero_symmetric(self):
        sysm = synthetic(10, 4, 0.0, 1.0, 1.0, seed=1)
        assert np.allclose(sysm.F, np.eye(10))

    def test_high_eta_lemma_still_passes(self):
        sysm = synthetic(16, 8, 0.9, 2.0, 0.5, seed=7)
        rep = verify_assumptions(sysm)
        assert rep.all_pass

    def test_invalid_params(self):
        with pytest.raises(InvalidParamsError):
            synthetic(10, 12, 0.1, 2.0, 0.5)
        with pytest.raises(InvalidParamsError):
            synthetic(10, 4, 0.1, 0.5, 2.0)
        with pytest.raises(InvalidParamsError):
            synthetic(10, 4, -0.1, 2.0, 0.5)


def test_drop_pressure_mean_orthonormal_rows(rng):
    Braw = rng.standard_normal((10, 20))
    B = _drop_pressure_mean(Braw)
    assert B.shape == (9, 20)
    # rows live in the image of an orthonormal basis of the mean-zero space:
    # reconstructing B q for the constant q gives zero
    q = np.ones(10) / np.sqrt(10)
    # B = Q^T Braw with Q orthonormal perpendicular to q: check norms match
    assert np.linalg.norm(B, "fro") == pytest.approx(
        np.linalg.norm(Braw - np.outer(q, q @ Braw), "fro"), rel=1e-12)
