import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from zkstrip.basis import ConfigurationError, Grid, SpectralField
from zkstrip.propagator import DispersionParams, ExpQuadrature, duhamel, legendre_moments, propagate, rates, symbol

from conftest import CASES, small_grid


def unit_grid():
    # xi_1 = 1 and lambda_1 = 1
    return Grid(np.pi, 16, 2 * np.pi, 9, "d")


def random_coeffs(grid, seed=0):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(grid.Nx, grid.Ny)) + 1j * rng.normal(size=(grid.Nx, grid.Ny))


def moment_oracle(z, k):
    f = lambda s: mpmath.exp(z * (1 - s)) * mpmath.legendre(k, 2 * s - 1)
    return complex(mpmath.quad(f, [0, 0.5, 1]))


class TestSymbol:
    def test_examples(self):
        assert symbol(0.0, 0.0, 0.0) == 0
        assert symbol(1.0, 1.0, 1.0) == pytest.approx(2j - 2, abs=1e-15)

    @given(xi=st.floats(-50, 50), lam=st.floats(0, 500))
    def test_inviscid_rate_is_imaginary(self, xi, lam):
        assert symbol(xi, lam, 0.0).real == 0.0

    def test_rate_table_uses_zeroed_nyquist(self):
        g = small_grid("a")
        r = rates(g, 0.2)
        np.testing.assert_allclose(r[g.Nx // 2], -0.2 * g.lam)


class TestPropagate:
    def test_zero_time_is_identity(self):
        g = small_grid("b")
        c = random_coeffs(g)
        np.testing.assert_array_equal(propagate(SpectralField(g, c), DispersionParams(0.3, 0.0)).coeffs, c)

    @pytest.mark.parametrize("case", CASES)
    def test_modal_isometry(self, case):
        g = small_grid(case, X=30.0, Nx=256, Ny=33 if case == "d" else 32)
        c = random_coeffs(g, 1)
        out = propagate(SpectralField(g, c), DispersionParams(0.0, 1.0)).coeffs
        assert np.max(np.abs(np.abs(out) - np.abs(c))) <= 1e-14 * 4

    @pytest.mark.parametrize("delta", [0.0, 0.5])
    def test_semigroup(self, delta):
        g = small_grid("c", X=30.0, Nx=128)
        sf = SpectralField(g, random_coeffs(g, 2))
        a = propagate(propagate(sf, DispersionParams(delta, 0.3)), DispersionParams(delta, 0.45)).coeffs
        b = propagate(sf, DispersionParams(delta, 0.75)).coeffs
        assert np.max(np.abs(a - b)) <= 1e-12

    def test_decay(self):
        g = unit_grid()
        c = np.zeros((g.Nx, g.Ny), dtype=complex)
        c[1, 1] = 1.0
        out = propagate(SpectralField(g, c), DispersionParams(1.0, 1.0)).coeffs
        assert abs(out[1, 1]) == pytest.approx(math.exp(-2.0), abs=1e-15)
        assert out[1, 1] == pytest.approx(np.exp(2j - 2), abs=1e-15)

    def test_backward_dissipation_guarded(self):
        g = small_grid("a", Nx=256)
        with pytest.raises(OverflowError):
            propagate(SpectralField(g, random_coeffs(g)), DispersionParams(1.0, -50.0))

    def test_bad_delta(self):
        with pytest.raises(ConfigurationError):
            DispersionParams(1.5, 1.0)


class TestMoments:
    @pytest.mark.parametrize("z", [0.0, 1e-6, 0.5 + 2j, -3.0, 5.9j, 6.1j, -6.1, 20j - 1, -40.0, 3 + 100j])
    def test_against_arbitrary_precision(self, z):
        got = legendre_moments(np.array([z]), 8)[:, 0]
        want = np.array([moment_oracle(z, k) for k in range(8)])
        assert np.max(np.abs(got - want)) <= 1e-13 * max(1.0, np.max(np.abs(want)))

    @pytest.mark.parametrize("m", [2, 3, 5])
    def test_rule_exact_for_polynomial_forcing(self, m):
        r, h = np.array([-0.7 + 3j, 2j, 0.0]), 0.4
        rule = ExpQuadrature(m)
        E_stage, A, W, E_end = rule.coefficients(r, h)
        k = m - 1
        F = (rule.nodes * h) ** k
        for i, ri in enumerate(r):
            want = complex(mpmath.quad(lambda s: mpmath.exp(ri * (h - s)) * s**k, [0, h]))
            assert h * np.dot(W[:, i], F) == pytest.approx(want, abs=1e-14)
            for p, sp in enumerate(rule.nodes):
                t = sp * h
                want = complex(mpmath.quad(lambda s: mpmath.exp(ri * (t - s)) * s**k, [0, t]))
                assert h * np.dot(A[p, :, i], F) == pytest.approx(want, abs=1e-14)
        np.testing.assert_allclose(E_end, np.exp(r * h))

    def test_too_few_nodes(self):
        with pytest.raises(ConfigurationError):
            ExpQuadrature(1)


class TestDuhamel:
    def _single(self, fhat=1.0):
        g = unit_grid()
        f = np.zeros((g.Nx, g.Ny), dtype=complex)
        f[1, 1] = fhat
        f[-1, 1] = np.conj(fhat)
        return g, f

    def test_zero_forcing(self):
        g = small_grid("a")
        u0 = SpectralField(g, random_coeffs(g))
        p = DispersionParams(0.2, 0.7)
        np.testing.assert_array_equal(duhamel(u0, None, p).coeffs, propagate(u0, p).coeffs)

    @pytest.mark.parametrize("delta", [0.0, 1.0])
    def test_constant_forcing_closed_form(self, delta):
        g, f = self._single(0.3 - 0.2j)
        t = 1.0
        out = duhamel(SpectralField(g, np.zeros_like(f)), lambda _: f, DispersionParams(delta, t), m=8)
        r = complex(symbol(1.0, 1.0, delta))
        assert out.coeffs[1, 1] == pytest.approx(f[1, 1] * (np.exp(r * t) - 1) / r, abs=1e-10)

    def test_zero_rate_mode(self):
        g = unit_grid()
        f = np.zeros((g.Nx, g.Ny), dtype=complex)
        f[0, 0] = 2.0
        out = duhamel(SpectralField(g, np.zeros_like(f)), lambda _: f, DispersionParams(0.0, 0.8))
        assert out.coeffs[0, 0] == pytest.approx(1.6, abs=1e-15)

    def test_order_under_panel_halving(self):
        g, f = self._single(1.0)
        w, t = 3.0, 1.0
        r = complex(symbol(1.0, 1.0, 0.0))
        exact = 0.5 * sum((np.exp(s * 1j * w * t) - np.exp(r * t)) / (s * 1j * w - r) for s in (1, -1))
        errs = []
        for panels in (1, 2, 4, 8):
            out = duhamel(SpectralField(g, np.zeros_like(f)), lambda tau: f * np.cos(w * tau), DispersionParams(0.0, t), m=2, panels=panels)
            errs.append(abs(out.coeffs[1, 1] - exact))
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(orders >= 3.8)

    def test_negative_time_with_forcing(self):
        g, f = self._single()
        with pytest.raises(ConfigurationError):
            duhamel(SpectralField(g, f), lambda _: f, DispersionParams(0.0, -1.0))
