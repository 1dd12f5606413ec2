import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from zkstrip.basis import ConfigurationError, Field, SpectralField, to_spectral
from zkstrip.profiles import make_profile, mode_field
from zkstrip.solver import RunConfig, run
from zkstrip.weights import (
    ConstantWeight,
    WeightedQuadrature,
    XSampler,
    eta,
    hk_alpha_norm,
    make_rho,
    mixed_coeffs,
    weighted_l2,
    xk_alpha_seminorms,
)

from conftest import small_grid


def central_diff(fn, x, h=1e-5):
    return (fn(x + h) - fn(x - h)) / (2 * h)


class TestCutoff:
    def test_plateaus(self):
        assert np.all(eta(np.linspace(-3, 0, 50)) == 0.0)
        assert np.all(eta(np.linspace(1, 4, 50)) == 1.0)

    def test_partition_of_unity(self):
        x = np.linspace(-0.5, 1.5, 20001)
        assert np.max(np.abs(eta(x) + eta(1 - x) - 1.0)) <= 1e-12

    def test_nondecreasing(self):
        v = eta(np.linspace(-0.2, 1.2, 20001))
        assert np.all(np.diff(v) >= 0.0)

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_derivatives_match_differences(self, d):
        x = np.linspace(0.05, 0.95, 37)
        fd = central_diff(lambda s: eta(s, d - 1), x)
        np.testing.assert_allclose(eta(x, d), fd, rtol=1e-6, atol=1e-7)

    def test_derivatives_vanish_outside(self):
        x = np.array([-1.0, 0.0, 1.0, 2.0])
        for d in (1, 2, 3):
            assert np.all(eta(x, d) == 0.0)

    def test_derivative_order_limit(self):
        with pytest.raises(ValueError):
            eta(np.array([0.5]), 4)


class TestRho:
    def test_alpha_zero_at_origin(self):
        assert make_rho(0.0, 1.0)(0.0) == pytest.approx(1.0, abs=1e-15)

    def test_polynomial_branch(self):
        assert make_rho(2.0, 1.0)(3.0) == pytest.approx(16.0, rel=1e-15)

    def test_exponential_branch(self):
        assert make_rho(1.0, 2.0)(-2.0) == pytest.approx(math.exp(-4.0), rel=1e-14)

    @pytest.mark.parametrize("alpha,beta", [(0.0, 1.0), (1.0, 1.0), (2.0, 1.0), (1.0, 2.0), (0.5, 0.3), (3.0, 4.0)])
    def test_branches_and_seams(self, alpha, beta):
        rho = make_rho(alpha, beta)
        xl = np.linspace(-6.0, -1.0, 41)
        np.testing.assert_allclose(rho(xl), np.exp(beta * xl), rtol=1e-13)
        xr = np.linspace(0.0, 8.0, 41)
        right = (1 + xr) ** alpha if alpha > 0 else 2 - (1 + xr) ** -0.5
        np.testing.assert_allclose(rho(xr), right, rtol=1e-13)
        for seam in (-1.0, 0.0):
            for d in (0, 1):
                jump = abs(float(rho(seam + 1e-12, d)) - float(rho(seam - 1e-12, d)))
                assert jump <= 1e-10

    @given(alpha=st.floats(0.0, 4.0), beta=st.floats(0.05, 6.0))
    def test_strictly_increasing_on_bridge(self, alpha, beta):
        rho = make_rho(alpha, beta)
        x = np.linspace(-1.0, 0.0, 2001)
        assert np.all(rho(x, 1) > 0.0)

    @pytest.mark.parametrize("alpha,beta", [(1.0, 1.0), (2.0, 0.5), (0.0, 3.0)])
    def test_derivatives_consistent_on_bridge(self, alpha, beta):
        rho = make_rho(alpha, beta)
        x = np.linspace(-0.99, -0.01, 41)
        for d in (1, 2, 3):
            fd = central_diff(lambda s: rho(s, d - 1), x, 1e-6)
            scale = np.max(np.abs(rho(x, d))) + 1.0
            assert np.max(np.abs(rho(x, d) - fd)) <= 1e-5 * scale

    @pytest.mark.parametrize("alpha,beta", [(1.0, 1.0), (0.0, 1.0), (2.0, 2.0)])
    def test_admissibility_constants_finite(self, alpha, beta):
        rho = make_rho(alpha, beta)
        consts = [rho.admissibility(j) for j in (1, 2, 3)]
        assert all(np.isfinite(c) and c > 0 for c in consts)
        # refining the sampling barely moves the measured constants
        fine = [rho.admissibility(j, np.linspace(-40, 40, 320001)) for j in (1, 2, 3)]
        np.testing.assert_allclose(fine, consts, rtol=1e-3)

    @pytest.mark.parametrize("alpha,beta", [(-1.0, 1.0), (1.0, 0.0), (1.0, -2.0)])
    def test_invalid(self, alpha, beta):
        with pytest.raises(ConfigurationError):
            make_rho(alpha, beta)


class TestSampling:
    def test_sampler_matches_nodes(self):
        g = small_grid("c", X=12.0, Nx=96)
        sf = to_spectral(make_profile(g, "bump", width=1.5, modes=(0, 2)))
        at_nodes = XSampler(g, g.x).coeffs(sf.coeffs, 1)
        np.testing.assert_allclose(at_nodes, mixed_coeffs(sf.coeffs, g, 1), atol=1e-12)

    def test_sampler_off_nodes(self):
        g = small_grid("b", X=10.0, Nx=64)
        sf = to_spectral(mode_field(g, 3, 1, 2.0))
        x = np.linspace(-9.7, 9.9, 31)
        k = 3 * np.pi / g.X
        out = XSampler(g, x).coeffs(sf.coeffs, 1)
        np.testing.assert_allclose(out[:, 1], -2.0 * k * np.sin(k * x), atol=1e-12)
        assert np.max(np.abs(out[:, [0, 2]])) <= 1e-12

    @pytest.mark.parametrize("alpha,beta", [(1.0, 1.0), (2.0, 1.0), (0.0, 2.0)])
    def test_weighted_integral_against_adaptive_quadrature(self, alpha, beta):
        g = small_grid("a", X=15.0, Nx=128)
        rho = make_rho(alpha, beta)
        u = Field(g, np.exp(-((g.x - 0.5) ** 2) / 2)[:, None] * g.basis.evaluate(g.y)[:, 0][None, :])
        rule = WeightedQuadrature(g, rho)
        got = rule.integrate(rho(rule.x) * rule.density(u))
        want = integrate.quad(lambda x: float(rho(x)) * math.exp(-((x - 0.5) ** 2)), -15, 15, points=[-1, 0], epsabs=0, epsrel=1e-13, limit=400)[0]
        assert got == pytest.approx(want, rel=1e-11)


class TestNorms:
    def test_zero(self):
        g = small_grid("a")
        assert weighted_l2(Field.zeros(g), 1.0) == 0.0
        assert hk_alpha_norm(Field.zeros(g), 1, 2.0) == 0.0

    def test_alpha_zero_is_plain_l2(self):
        g = small_grid("b", X=12.0, Nx=96)
        u = make_profile(g, "bump", width=1.5, modes=(0, 1), amps=(1.0, 0.5))
        plain = math.sqrt(g.cell * np.sum(u.values**2))
        assert weighted_l2(u, 0.0) == pytest.approx(plain, rel=1e-12)

    def test_support_left_of_origin(self):
        g = small_grid("c", X=15.0, Nx=128)
        u = make_profile(g, "bump", x0=-7.0, width=1.0)
        assert weighted_l2(u, 3.0) == pytest.approx(weighted_l2(u, 0.0), rel=1e-12)

    def test_polynomial_weight_against_adaptive_quadrature(self):
        g = small_grid("a", X=15.0, Nx=128)
        u = Field(g, np.exp(-((g.x - 3.0) ** 2))[:, None] * g.basis.evaluate(g.y)[:, 0][None, :])
        want = integrate.quad(lambda x: (1 + max(x, 0)) ** 2 * math.exp(-2 * (x - 3) ** 2), -15, 15, points=[0], epsabs=0, epsrel=1e-13)[0]
        assert weighted_l2(u, 1.0) ** 2 == pytest.approx(want, rel=1e-12)

    def test_single_mode_h1(self):
        g = small_grid("d", X=10.0, Nx=64, L=2 * np.pi)
        A, j, l = 1.5, 4, 3
        u = mode_field(g, j, l, A)
        xi = np.pi * j / g.X
        expected = math.sqrt(A**2 * g.X * (1 + xi**2 + g.lam[l]))
        assert hk_alpha_norm(u, 1, 0.0) == pytest.approx(expected, rel=1e-12)
        assert hk_alpha_norm(u, 0, 0.0) == pytest.approx(weighted_l2(u, 0.0), rel=1e-14)

    def test_negative_alpha(self):
        with pytest.raises(ConfigurationError):
            weighted_l2(Field.zeros(small_grid("a")), -0.5)


@pytest.mark.filterwarnings("ignore:initial data not negligible")
class TestSeminorms:
    def _single_mode_run(self, delta):
        g = small_grid("d", X=10.0, Nx=64, L=2 * np.pi)
        cfg = RunConfig(g, T=0.5, t0=0.125, delta=delta)
        return run(mode_field(g, 2, 1, 1.0), None, cfg, "zero")

    def test_zero_trajectory(self):
        g = small_grid("a")
        tr = run(Field.zeros(g), None, RunConfig(g, T=0.2, t0=0.1), "zk")
        assert xk_alpha_seminorms(tr, 0, 1.0) == (0.0, 0.0, 0.0)

    def test_unitary_mode(self):
        tr = self._single_mode_run(0.0)
        sup, window, weighted = xk_alpha_seminorms(tr, 1, 0.0)
        assert sup == pytest.approx(hk_alpha_norm(tr.spectral(0), 1, 0.0), rel=1e-10)
        assert window > 0 and weighted == 0.0
        assert xk_alpha_seminorms(tr, 1, 1.0)[2] > 0

    def test_dissipative_sup_at_start(self):
        tr = self._single_mode_run(0.5)
        sup, _, _ = xk_alpha_seminorms(tr, 0, 0.5)
        assert sup == hk_alpha_norm(tr.spectral(0), 0, 0.5)
        assert hk_alpha_norm(tr.final, 0, 0.5) < sup

    def test_constant_weight_has_no_segments(self):
        assert ConstantWeight().fine_segments() == ()
        sf = SpectralField(small_grid("b"), np.zeros((64, 8)))
        assert WeightedQuadrature(sf.grid).integrate(np.zeros_like(WeightedQuadrature(sf.grid).x)) == 0.0
