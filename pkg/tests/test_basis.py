import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from zkstrip.basis import (
    BoundaryCase,
    ConfigurationError,
    Field,
    Grid,
    NonRealSynthesisError,
    SpectralField,
    derivative,
    eigen_pairs,
    from_spectral,
    to_spectral,
)

from conftest import CASES, small_grid


def boundary_residual(basis, L):
    """Largest violation of the case's boundary conditions over all modes."""
    ev = basis.evaluate
    lo, hi = np.array([0.0]), np.array([L])
    case = basis.case
    if case is BoundaryCase.DIRICHLET:
        parts = [ev(lo), ev(hi)]
    elif case is BoundaryCase.NEUMANN:
        parts = [ev(lo, 1), ev(hi, 1)]
    elif case is BoundaryCase.MIXED:
        parts = [ev(lo), ev(hi, 1)]
    else:
        parts = [ev(lo) - ev(hi), ev(lo, 1) - ev(hi, 1)]
    scale = np.maximum(1.0, np.sqrt(basis.eigenvalues))
    return max(float(np.max(np.abs(p) / scale)) for p in parts)


class TestEigenPairs:
    @pytest.mark.parametrize("case", CASES)
    def test_discrete_gram_is_identity(self, case):
        g = small_grid(case, Ny=33 if case == "d" else 32, L=3.0)
        psi = g.basis.evaluate(g.y)
        gram = g.y_weight * psi.T @ psi
        assert np.max(np.abs(gram - np.eye(g.Ny))) <= 1e-12

    @pytest.mark.parametrize("case", CASES)
    def test_continuous_gram_by_gauss_legendre(self, case):
        L = 2.5
        basis = eigen_pairs(case, L, 12)
        t, w = np.polynomial.legendre.leggauss(200)
        y = 0.5 * L * (t + 1.0)
        psi = basis.evaluate(y)
        gram = psi.T @ (0.5 * L * w[:, None] * psi)
        assert np.max(np.abs(gram - np.eye(12))) <= 1e-12

    @pytest.mark.parametrize("case", CASES)
    def test_eigenrelation_and_boundary(self, case):
        L = 1.7
        basis = eigen_pairs(case, L, 20)
        y = np.linspace(0.0, L, 101)
        res = -basis.evaluate(y, 2) - basis.evaluate(y) * basis.eigenvalues[None, :]
        assert np.max(np.abs(res)) <= 1e-10 * max(1.0, basis.eigenvalues.max())
        assert boundary_residual(basis, L) <= 1e-12

    def test_dirichlet_first_mode(self):
        b = eigen_pairs("a", np.pi, 3)
        y = np.linspace(0, np.pi, 17)
        assert b.eigenvalues[0] == pytest.approx(1.0, abs=1e-14)
        np.testing.assert_allclose(b.evaluate(y)[:, 0], np.sqrt(2 / np.pi) * np.sin(y), atol=1e-14)

    def test_neumann_first_mode_is_constant(self):
        b = eigen_pairs("b", 1.0, 3)
        assert b.eigenvalues[0] == 0.0
        np.testing.assert_allclose(b.evaluate(np.linspace(0, 1, 9))[:, 0], 1.0, atol=1e-15)

    def test_mixed_first_mode(self):
        b = eigen_pairs("c", np.pi, 3)
        y = np.linspace(0, np.pi, 17)
        assert b.eigenvalues[0] == pytest.approx(0.25, abs=1e-14)
        np.testing.assert_allclose(b.evaluate(y)[:, 0], np.sqrt(2 / np.pi) * np.sin(y / 2), atol=1e-14)

    def test_periodic_ordering(self):
        b = eigen_pairs("d", 2 * np.pi, 5)
        np.testing.assert_allclose(b.eigenvalues, [0, 1, 1, 4, 4], atol=1e-14)

    def test_too_many_modes_rejected(self):
        with pytest.raises(ConfigurationError):
            eigen_pairs("a", 1.0, 9, ny=8)
        with pytest.raises(ConfigurationError):
            eigen_pairs("d", 1.0, 8, ny=8)

    @pytest.mark.parametrize("kw", [{"L": 0.0}, {"n": 0}, {"case": "e"}])
    def test_bad_parameters(self, kw):
        args = {"case": "a", "L": 1.0, "n": 3} | kw
        with pytest.raises(ConfigurationError):
            eigen_pairs(**args)


class TestGrid:
    def test_even_periodic_ny_rejected(self):
        with pytest.raises(ConfigurationError):
            Grid(10.0, 32, 1.0, 8, "d")

    @pytest.mark.parametrize("nx", [7, 9, 4])
    def test_bad_nx(self, nx):
        with pytest.raises(ConfigurationError):
            Grid(10.0, nx, 1.0, 8, "a")

    def test_nyquist_slot_not_differentiated(self):
        g = small_grid("a")
        assert g.kx[g.Nx // 2] == 0.0
        assert g.xi[1] == pytest.approx(np.pi / g.X)


class TestTransforms:
    def test_zero(self, case):
        g = small_grid(case)
        sf = to_spectral(Field.zeros(g))
        assert not np.any(sf.coeffs)
        assert not np.any(from_spectral(sf).values)

    def test_x_constant_mode(self, case):
        g = small_grid(case)
        psi = g.basis.evaluate(g.y)[:, 1]
        sf = to_spectral(Field(g, np.broadcast_to(psi, (g.Nx, g.Ny))))
        c = np.abs(sf.coeffs)
        assert c[0, 1] > 0.1
        c[0, 1] = 0.0
        assert c.max() <= 1e-12

    def test_cosine_mode_splits_evenly(self, case):
        g = small_grid(case)
        psi = g.basis.evaluate(g.y)[:, 2]
        u = np.cos(np.pi * g.x / g.X)[:, None] * psi[None, :]
        c = np.abs(to_spectral(Field(g, u)).coeffs)
        assert c[1, 2] == pytest.approx(c[-1, 2], abs=1e-14)
        assert c[1, 2] == pytest.approx(0.5, abs=1e-13)
        c[1, 2] = c[-1, 2] = 0.0
        assert c.max() <= 1e-12

    def test_travelling_wave_synthesis(self):
        g = small_grid("d", L=2 * np.pi)
        c = np.zeros((g.Nx, g.Ny), dtype=complex)
        c[1, 1] = 0.5 * np.exp(0.3j)
        c[-1, 1] = np.conj(c[1, 1])
        u = from_spectral(SpectralField(g, c)).values
        xx, yy = g.mesh()
        expected = np.cos(np.pi * xx / g.X + 0.3) * np.cos(yy) / np.sqrt(np.pi)
        np.testing.assert_allclose(u, expected, atol=1e-13)

    def test_non_real_synthesis_reported(self):
        g = small_grid("b")
        c = np.zeros((g.Nx, g.Ny), dtype=complex)
        c[1, 0] = 1.0
        with pytest.raises(NonRealSynthesisError):
            from_spectral(SpectralField(g, c))

    @given(case=st.sampled_from(CASES), seed=st.integers(0, 2**32 - 1))
    def test_round_trip(self, case, seed):
        g = small_grid(case, Nx=32)
        u = np.random.default_rng(seed).normal(size=(g.Nx, g.Ny))
        back = from_spectral(to_spectral(Field(g, u))).values
        assert np.max(np.abs(back - u)) <= 1e-12 * max(1.0, np.max(np.abs(u)))

    def test_shape_mismatch(self):
        with pytest.raises(ConfigurationError):
            Field(small_grid("a"), np.zeros((3, 3)))


class TestDerivative:
    def test_identity(self):
        g = small_grid("c")
        c = np.random.default_rng(0).normal(size=(g.Nx, g.Ny)) + 0j
        sf = SpectralField(g, c)
        np.testing.assert_array_equal(derivative(sf).coeffs, c)

    def test_sine_mode(self):
        g = small_grid("b")
        k = 3 * np.pi / g.X
        u = np.sin(k * g.x)[:, None] * np.ones(g.Ny)[None, :]
        du = from_spectral(derivative(to_spectral(Field(g, u)), order_x=1)).values
        np.testing.assert_allclose(du, k * np.cos(k * g.x)[:, None] * np.ones(g.Ny), atol=1e-12)

    def test_yy_is_minus_eigenvalue(self, case):
        g = small_grid(case)
        c = np.zeros((g.Nx, g.Ny), dtype=complex)
        c[0, 3] = 1.0
        out = derivative(SpectralField(g, c), apply_yy=True).coeffs
        assert out[0, 3] == pytest.approx(-g.lam[3], abs=1e-14)

    @given(case=st.sampled_from(CASES), seed=st.integers(0, 2**32 - 1))
    def test_derivatives_commute(self, case, seed):
        g = small_grid(case, Nx=32)
        sf = to_spectral(Field(g, np.random.default_rng(seed).normal(size=(g.Nx, g.Ny))))
        twice = derivative(derivative(sf, 1), 1).coeffs
        once = derivative(sf, 2).coeffs
        scale = max(1.0, np.max(np.abs(once)))
        assert np.max(np.abs(twice - once)) <= 1e-12 * scale
        a = derivative(derivative(sf, 1), apply_yy=True).coeffs
        b = derivative(derivative(sf, apply_yy=True), 1).coeffs
        assert np.max(np.abs(a - b)) <= 1e-12 * max(1.0, np.max(np.abs(a)))

    def test_order_out_of_range(self):
        g = small_grid("a")
        with pytest.raises(ValueError):
            derivative(SpectralField(g, np.zeros((g.Nx, g.Ny))), 4)
