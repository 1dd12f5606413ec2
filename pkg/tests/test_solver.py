import numpy as np
import pytest

from zkstrip.basis import ConfigurationError, Field, Grid, SpectralField, to_spectral
from zkstrip.nonlinearity import make_flux
from zkstrip.profiles import make_profile, mode_field
from zkstrip.propagator import DispersionParams, propagate
from zkstrip.solver import RunConfig, SlabFailure, lambda_map, leakage_fraction, regularization_sweep, run, solve_slab

from conftest import small_grid


def bump_grid():
    return Grid(15.0, 64, 2 * np.pi, 9, "d")


def bump(grid, amplitude=1.0):
    return make_profile(grid, "bump", amplitude=amplitude, width=1.5, modes=(0, 1))


class TestConfig:
    @pytest.mark.parametrize(
        "kw", [{"t0": 0.0}, {"t0": 2.0}, {"tol": 0.1}, {"max_iter": 1}, {"m": 1}, {"delta": 2.0}, {"h": 0.0}]
    )
    def test_rejects(self, kw):
        with pytest.raises(ConfigurationError):
            RunConfig(small_grid("a"), **({"T": 1.0, "t0": 0.1} | kw))

    def test_grid_mismatch(self):
        cfg = RunConfig(small_grid("a"), T=0.1, t0=0.1)
        with pytest.raises(ConfigurationError):
            run(Field.zeros(small_grid("b")), None, cfg, "zk")


class TestRun:
    def test_zero_data(self):
        g = small_grid("c")
        tr = run(Field.zeros(g), None, RunConfig(g, T=0.5, t0=0.125), "zk")
        assert all(not np.any(c) for c in tr.coeffs)
        assert tr.iterations == [1, 1, 1, 1]
        assert tr.times == [0.0, 0.125, 0.25, 0.375, 0.5]

    @pytest.mark.filterwarnings("ignore:initial data not negligible")
    def test_linear_single_mode(self):
        g = Grid(10.0, 32, 2 * np.pi, 9, "d")
        j, l, T = 3, 2, 1.0
        tr = run(mode_field(g, j, l, 1.0), None, RunConfig(g, T=T, t0=0.25), "zero")
        xi = np.pi * j / g.X
        phase = (xi**3 + xi * g.lam[l]) * T
        psi = g.basis.evaluate(g.y)[:, l]
        expected = np.cos(xi * g.x + phase)[:, None] * psi[None, :]
        assert np.max(np.abs(tr.snapshots[-1].values - expected)) <= 1e-10
        assert tr.iterations == [2, 2, 2, 2]

    def test_time_quadrature_covers_interval(self):
        g = bump_grid()
        tr = run(bump(g), None, RunConfig(g, T=0.3, t0=0.1, m=3), "zk")
        w, cs = tr.time_quadrature()
        assert np.sum(w) == pytest.approx(0.3, abs=1e-15)
        assert len(cs) == 9

    def test_snapshot_every(self):
        g = bump_grid()
        tr = run(bump(g), None, RunConfig(g, T=0.5, t0=0.1, snapshot_every=2), "zk")
        np.testing.assert_allclose(tr.times, [0.0, 0.2, 0.4, 0.5])

    def test_leakage_flag(self):
        g = bump_grid()
        u = make_profile(g, "bump", x0=14.0, width=1.0)
        with pytest.warns(UserWarning, match="window edge"):
            tr = run(u, None, RunConfig(g, T=0.1, t0=0.1), "zero")
        assert tr.flagged
        assert leakage_fraction(tr.coeffs[0], g) > 1e-4

    def test_auto_halving_recovers(self):
        g = bump_grid()
        cfg = RunConfig(g, T=0.4, t0=0.4, max_iter=8, tol=1e-12)
        tr = run(bump(g, 3.0), None, cfg, "zk")
        assert tr.info["halvings"] >= 1
        assert tr.times[-1] == 0.4
        ref = run(bump(g, 3.0), None, RunConfig(g, T=0.4, t0=tr.info["final_slab_length"], tol=1e-12), "zk")
        # the recovered run took one longer first slab, so agreement is at discretisation level
        assert np.max(np.abs(ref.final.coeffs - tr.final.coeffs)) <= 1e-8

    def test_exhausted_halvings(self):
        g = bump_grid()
        cfg = RunConfig(g, T=0.4, t0=0.4, max_iter=3, tol=1e-12, max_halvings=1)
        with pytest.raises(SlabFailure):
            run(bump(g, 3.0), None, cfg, "zk")


class TestSlab:
    def test_zero_start(self):
        g = small_grid("a")
        out, its = solve_slab(Field.zeros(g), None, RunConfig(g, T=0.1, t0=0.1), make_flux("zk"))
        assert its == 1 and not np.any(out.values)

    def test_linear_problem_two_iterations(self):
        g = bump_grid()
        _, its = solve_slab(bump(g), None, RunConfig(g, T=0.1, t0=0.1), make_flux("zero"))
        assert its == 2

    def test_iterations_drop_with_slab_length(self):
        g = bump_grid()
        counts = [solve_slab(bump(g, 2.0), None, RunConfig(g, T=0.2, t0=t0), make_flux("zk"))[1] for t0 in (0.2, 0.1, 0.05)]
        per_slab = [counts[0], counts[1] / 2, counts[2] / 4]
        assert per_slab[0] >= per_slab[1] >= per_slab[2]

    def test_lambda_map_constant_for_zero_flux(self):
        g = bump_grid()
        cfg = RunConfig(g, T=0.1, t0=0.1, m=3)
        rng = np.random.default_rng(0)
        shape = (1, 3, g.Nx, g.Ny)
        a, ea = lambda_map(rng.normal(size=shape), bump(g), None, cfg, make_flux("zero"))
        b, eb = lambda_map(rng.normal(size=shape), bump(g), None, cfg, make_flux("zero"))
        np.testing.assert_array_equal(a, b)
        linear = propagate(to_spectral(bump(g)), DispersionParams(0.0, 0.1)).coeffs
        assert np.max(np.abs(ea - linear)) <= 1e-13

    def test_lambda_map_zero_guess_is_linear(self):
        g = bump_grid()
        cfg = RunConfig(g, T=0.1, t0=0.1, m=3, delta=0.2)
        _, end = lambda_map(np.zeros((1, 3, g.Nx, g.Ny)), bump(g), None, cfg, make_flux("zk"))
        linear = propagate(to_spectral(bump(g)), DispersionParams(0.2, 0.1)).coeffs
        assert np.max(np.abs(end - linear)) <= 1e-13

    def test_fixed_point(self):
        g = bump_grid()
        cfg = RunConfig(g, T=0.1, t0=0.1, m=3, tol=1e-13)
        tr = run(bump(g, 2.0), None, cfg, "zk")
        stages = np.array(tr.stage_coeffs).reshape(1, 3, g.Nx, g.Ny)
        again, end = lambda_map(stages, bump(g, 2.0), None, cfg, make_flux("zk"))
        assert np.max(np.abs(again - stages)) <= 1e-12 * np.max(np.abs(stages))
        assert np.max(np.abs(end - tr.final.coeffs)) <= 1e-12 * np.max(np.abs(stages))


class TestSweep:
    def test_single_h(self):
        g = bump_grid()
        res = regularization_sweep(bump(g, 0.5), None, RunConfig(g, T=0.1, t0=0.05), [0.5])
        assert res.rows == [] and res.distances == []

    def test_inactive_truncation(self):
        g = bump_grid()
        cfg = RunConfig(g, T=0.2, t0=0.05, tol=1e-12)
        res = regularization_sweep(bump(g, 0.3), None, cfg, [1.0, 0.5, 0.25])
        assert all(d <= 10 * cfg.tol for d in res.distances)

    def test_order_enforced(self):
        g = bump_grid()
        with pytest.raises(ConfigurationError):
            regularization_sweep(bump(g), None, RunConfig(g, T=0.1, t0=0.1), [0.25, 0.5])

    def test_coupled_delta(self):
        g = bump_grid()
        res = regularization_sweep(bump(g, 0.3), None, RunConfig(g, T=0.1, t0=0.05), [1.0, 0.5], couple_delta=True)
        # different dissipation makes the runs differ even without truncation
        assert res.distances[0] > 1e-6
        assert all("x_alpha" in n for n in res.norms)
