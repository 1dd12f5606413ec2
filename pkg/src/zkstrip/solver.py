"""Slab-wise Picard iteration of the Duhamel map for

    u_t + u_xxx + u_xyy - delta (u_xx + u_yy) + (g_h(u))_x = f.

A slab [t, t + t0] is split into ``panels`` panels with ``m`` Gauss-Legendre
stage times each.  Given a guess v at the stage times, the map Lambda solves
the linear problem with source f - (g_h(v))_x exactly in the modes and with
exponential product quadrature in time; iteration stops when the largest
relative L2 change over the stage times drops below ``tol``.  A slab that
fails to contract is retried with half the length.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .basis import BoundaryCase, ConfigurationError, Field, Grid, SpectralField, from_spectral, to_spectral
from .nonlinearity import ALIAS_THRESHOLD, Nonlinearity, TruncatedNonlinearity, flux_coeffs, make_flux
from .propagator import ExpQuadrature, rates

__all__ = [
    "RunConfig",
    "Trajectory",
    "SlabFailure",
    "SlabIntegrator",
    "lambda_map",
    "solve_slab",
    "run",
    "regularization_sweep",
    "SweepResult",
    "leakage_fraction",
    "LEAKAGE_FLAG",
]

#: mass fraction in the outer 10% of the window above which a trajectory is flagged
LEAKAGE_FLAG = 1e-4


class SlabFailure(RuntimeError):
    """Picard iteration did not converge even after the allowed halvings."""

    def __init__(self, message: str, history: list):
        super().__init__(message)
        self.history = history


@dataclass(frozen=True)
class RunConfig:
    grid: Grid
    T: float
    t0: float
    delta: float = 0.0
    h: float | None = None
    tol: float = 1e-10
    max_iter: int = 60
    m: int = 4
    panels: int = 1
    snapshot_every: int = 1
    max_halvings: int = 6
    keep_stages: bool = True

    def __post_init__(self):
        if not (self.T > 0 and 0 < self.t0 <= self.T * (1 + 1e-12)):
            raise ConfigurationError(f"need 0 < t0 <= T, got t0={self.t0}, T={self.T}")
        if not (0 < self.tol <= 1e-2):
            raise ConfigurationError("tol must lie in (0, 1e-2]")
        if self.max_iter < 2:
            raise ConfigurationError("max_iter must be >= 2")
        if self.m < 2 or self.panels < 1 or self.snapshot_every < 1:
            raise ConfigurationError("need m >= 2, panels >= 1, snapshot_every >= 1")
        if not (0.0 <= self.delta <= 1.0):
            raise ConfigurationError("delta must lie in [0, 1]")
        if self.h is not None and not (0.0 < self.h <= 1.0):
            raise ConfigurationError("h must lie in (0, 1] or be None")

    @property
    def case(self) -> BoundaryCase:
        return self.grid.case

    def describe(self) -> dict:
        return {
            "grid": self.grid.describe(),
            "T": self.T,
            "t0": self.t0,
            "delta": self.delta,
            "h": self.h,
            "tol": self.tol,
            "max_iter": self.max_iter,
            "m": self.m,
            "panels": self.panels,
            "snapshot_every": self.snapshot_every,
        }


@dataclass
class Trajectory:
    """Snapshots at slab ends plus, optionally, every stage value.

    ``stage_times``/``stage_weights`` form a composite Gauss-Legendre rule on
    [0, T] whose nodes carry ``stage_coeffs``; time integrals over a run use
    it in preference to the snapshot trapezoid.
    """

    config: RunConfig
    flux: str
    times: list = field(default_factory=list)
    coeffs: list = field(default_factory=list)
    iterations: list = field(default_factory=list)
    slab_lengths: list = field(default_factory=list)
    leakage: list = field(default_factory=list)
    stage_times: list = field(default_factory=list)
    stage_weights: list = field(default_factory=list)
    stage_coeffs: list = field(default_factory=list)
    flags: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def grid(self) -> Grid:
        return self.config.grid

    @property
    def snapshots(self) -> list:
        return [Field(self.grid, _real_values(c, self.grid)) for c in self.coeffs]

    def spectral(self, i: int) -> SpectralField:
        return SpectralField(self.grid, self.coeffs[i])

    @property
    def final(self) -> SpectralField:
        return self.spectral(-1)

    @property
    def flagged(self) -> bool:
        return bool(self.flags)

    def time_quadrature(self):
        """(weights, coefficient arrays) approximating int_0^T ... dt."""
        if self.stage_coeffs:
            return np.asarray(self.stage_weights), self.stage_coeffs
        t = np.asarray(self.times)
        if t.size < 2:
            return np.zeros(t.size), self.coeffs
        dt = np.diff(t)
        w = np.zeros(t.size)
        w[:-1] += 0.5 * dt
        w[1:] += 0.5 * dt
        return w, self.coeffs


def _real_values(c: np.ndarray, grid: Grid) -> np.ndarray:
    return from_spectral(SpectralField(grid, c)).values


def leakage_fraction(c: np.ndarray, grid: Grid) -> float:
    """Share of the mass in |x| > 0.9 X."""
    from .weights import density

    d = density(SpectralField(grid, c), 0)
    total = float(np.sum(d))
    if total == 0.0:
        return 0.0
    outer = np.abs(grid.x) > 0.9 * grid.X
    return float(np.sum(d[outer]) / total)


def _forcing_coeffs(forcing, t: float, grid: Grid) -> np.ndarray:
    val = forcing(t)
    if isinstance(val, SpectralField):
        return val.coeffs
    if isinstance(val, Field):
        return to_spectral(val).coeffs
    return np.asarray(val, dtype=np.complex128)


class SlabIntegrator:
    """Owns the rate table and per-step-length quadrature weights of one run."""

    def __init__(self, config: RunConfig, flux: Nonlinearity | TruncatedNonlinearity, forcing=None):
        self.config = config
        self.grid = config.grid
        if isinstance(flux, Nonlinearity):
            flux = TruncatedNonlinearity(flux, config.h)
        self.tnl = flux
        self.linear_zero = flux.base.poly is not None and not np.any(flux.base.poly[1:])
        self.forcing = forcing
        self.rule = ExpQuadrature(config.m)
        self.rates = rates(self.grid, config.delta)
        self._cache: dict = {}
        self.max_alias = 0.0
        self.max_abs_u = 0.0

    def weights_for(self, hp: float):
        key = float(hp)
        if key not in self._cache:
            if len(self._cache) > 8:
                self._cache.clear()
            self._cache[key] = self.rule.coefficients(self.rates, hp)
        return self._cache[key]

    def _source(self, stage: np.ndarray, fstage: np.ndarray | None) -> np.ndarray:
        """f - (g_h(v))_x at a batch of stage coefficient arrays."""
        if self.linear_zero:
            # g is constant: its x-derivative vanishes identically
            out = np.zeros_like(stage)
        else:
            flux, alias, umax = flux_coeffs(stage, self.grid, self.tnl)
            self.max_alias = max(self.max_alias, alias)
            self.max_abs_u = max(self.max_abs_u, umax)
            out = -flux
        if fstage is not None:
            out = out + fstage
        return out

    def forcing_stages(self, t_start: float, length: float):
        if self.forcing is None:
            return None
        cfg = self.config
        hp = length / cfg.panels
        out = np.empty((cfg.panels, cfg.m, self.grid.Nx, self.grid.Ny), dtype=np.complex128)
        for n in range(cfg.panels):
            for q, s in enumerate(self.rule.nodes):
                out[n, q] = _forcing_coeffs(self.forcing, t_start + (n + s) * hp, self.grid)
        return out

    def lambda_map(self, v: np.ndarray, c_start: np.ndarray, length: float, fstages=None):
        """One application of the map: new stage values (panels, m, Nx, Ny) and slab-end coefficients."""
        cfg = self.config
        hp = length / cfg.panels
        E_stage, A, W, E_end = self.weights_for(hp)
        out = np.empty_like(v)
        c = c_start
        for n in range(cfg.panels):
            F = self._source(v[n], None if fstages is None else fstages[n])
            c = _kernels.panel_update(E_stage, A, W, E_end, c, F, hp, out[n])
        return out, c

    def solve(self, c_start: np.ndarray, t_start: float, length: float):
        """Picard iteration on one slab; returns (end coeffs, iterations, stage values, history)."""
        cfg = self.config
        fstages = self.forcing_stages(t_start, length)
        v = np.broadcast_to(c_start, (cfg.panels, cfg.m) + c_start.shape).copy()
        history = []
        for it in range(1, cfg.max_iter + 1):
            new, c_end = self.lambda_map(v, c_start, length, fstages)
            if not np.all(np.isfinite(new)):
                history.append(math.inf)
                raise SlabFailure("non-finite iterate", history)
            diff = np.sqrt(np.sum(np.abs(new - v) ** 2, axis=(-2, -1)))
            size = np.sqrt(np.sum(np.abs(new) ** 2, axis=(-2, -1)))
            with np.errstate(invalid="ignore", divide="ignore"):
                rel = np.where(diff == 0.0, 0.0, diff / np.where(size == 0.0, 1.0, size))
                rel = np.where((size == 0.0) & (diff > 0.0), np.inf, rel)
            change = float(np.max(rel))
            history.append(change)
            v = new
            if change <= cfg.tol:
                return c_end, it, v, history
            if len(history) >= 4 and history[-1] > history[-2] > history[-3] > history[-4]:
                raise SlabFailure("iteration diverging", history)
            if change > 1e6:
                raise SlabFailure("iteration diverging", history)
        raise SlabFailure(f"no convergence in {cfg.max_iter} iterations", history)


def lambda_map(v, u_slab_start: Field, f, config: RunConfig, flux: Nonlinearity | TruncatedNonlinearity, t_start: float = 0.0):
    """Field-level map: ``v`` is a (panels, m, Nx, Ny) array of stage coefficients."""
    integ = SlabIntegrator(config, flux, f)
    c0 = to_spectral(u_slab_start).coeffs
    return integ.lambda_map(np.asarray(v, dtype=np.complex128), c0, config.t0, integ.forcing_stages(t_start, config.t0))


def solve_slab(u_start: Field, f, config: RunConfig, flux: Nonlinearity | TruncatedNonlinearity, t_start: float = 0.0):
    """(field at t_start + t0, iterations); halves the slab on failure, as in :func:`run`."""
    integ = SlabIntegrator(config, flux, f)
    c = to_spectral(u_start).coeffs
    length = config.t0
    history = []
    for _ in range(config.max_halvings + 1):
        try:
            c_end, its, _, _ = integ.solve(c, t_start, length)
        except SlabFailure as exc:
            history.append((length, exc.history))
            length *= 0.5
            continue
        t = length
        total = its
        while t < config.t0 * (1 - 1e-12):
            c_end, its, _, _ = integ.solve(c_end, t_start + t, min(length, config.t0 - t))
            total += its
            t += length
        return Field(config.grid, _real_values(c_end, config.grid)), total
    raise SlabFailure("slab failed after all halvings", history)


def _compatibility_warnings(c: np.ndarray, grid: Grid) -> list:
    msgs = []
    lf = leakage_fraction(c, grid)
    if lf > 1e-10:
        msgs.append(f"initial data not negligible near the window edge (outer mass fraction {lf:.2e})")
    power = np.sum(np.abs(c) ** 2, axis=0)
    total = float(np.sum(power))
    if total > 0:
        tail = float(np.sum(power[int(0.9 * grid.Ny):])) / total
        if tail > 1e-8:
            msgs.append(
                f"slow decay of y-coefficients (tail fraction {tail:.2e}); data may violate the boundary compatibility of case {grid.case.value}"
            )
    return msgs


def run(u0: Field | SpectralField, f, config: RunConfig, flux: Nonlinearity | TruncatedNonlinearity | str = "zk") -> Trajectory:
    """Chain slabs over [0, T]; snapshots every ``snapshot_every`` slabs and at T."""
    if isinstance(flux, str):
        flux = make_flux(flux)
    grid = config.grid
    sf = u0 if isinstance(u0, SpectralField) else to_spectral(u0)
    if not sf.grid.same_as(grid):
        raise ConfigurationError("initial data lives on a different grid")
    integ = SlabIntegrator(config, flux, f)
    traj = Trajectory(config, integ.tnl.name)
    c = sf.coeffs.copy()
    for msg in _compatibility_warnings(c, grid):
        warnings.warn(msg, stacklevel=2)
        traj.flags.append(msg)
    traj.times.append(0.0)
    traj.coeffs.append(c.copy())
    traj.leakage.append(leakage_fraction(c, grid))

    T = float(config.T)
    length = float(config.t0)
    halvings = 0
    t = 0.0
    slab = 0
    failures = []
    rule = integ.rule
    while t < T * (1.0 - 1e-12):
        step = min(length, T - t)
        if T - t - step < 1e-9 * T:
            step = T - t
        try:
            c_new, its, stages, _ = integ.solve(c, t, step)
        except SlabFailure as exc:
            failures.append({"t": t, "length": step, "history": exc.history})
            if halvings >= config.max_halvings:
                raise SlabFailure(f"slab at t={t:.6g} failed after {halvings} halvings", failures) from exc
            halvings += 1
            length *= 0.5
            continue
        if config.keep_stages:
            hp = step / config.panels
            for n in range(config.panels):
                for q, s in enumerate(rule.nodes):
                    traj.stage_times.append(t + (n + s) * hp)
                    traj.stage_weights.append(hp * rule.weights[q])
                    traj.stage_coeffs.append(stages[n, q].copy())
        c = c_new
        t = t + step
        slab += 1
        traj.iterations.append(its)
        traj.slab_lengths.append(step)
        last = t >= T * (1.0 - 1e-12)
        if slab % config.snapshot_every == 0 or last:
            traj.times.append(T if last else t)
            traj.coeffs.append(c.copy())
            traj.leakage.append(leakage_fraction(c, grid))

    lk = max(traj.leakage)
    if lk > LEAKAGE_FLAG:
        traj.flags.append(f"leakage {lk:.2e} exceeds {LEAKAGE_FLAG:g}")
    if integ.max_alias > ALIAS_THRESHOLD:
        traj.flags.append(f"aliasing monitor {integ.max_alias:.2e} exceeds {ALIAS_THRESHOLD:g}")
    if integ.tnl.h is None and not integ.linear_zero:
        slope = float(np.max(np.abs(integ.tnl.base.dg(np.linspace(-integ.max_abs_u, integ.max_abs_u, 2001)))))
        if not np.isfinite(slope):
            raise SlabFailure("untruncated flux has an unbounded slope on the observed range", failures)
        traj.info["slope_on_range"] = slope
    traj.info.update(
        {
            "halvings": halvings,
            "final_slab_length": length,
            "failures": failures,
            "max_aliasing": integ.max_alias,
            "max_abs_u": integ.max_abs_u,
            "backend": _kernels.BACKEND,
        }
    )
    return traj


# ---------------------------------------------------------------------------
# regularisation sweep
# ---------------------------------------------------------------------------


@dataclass
class SweepResult:
    h_list: list
    rows: list
    norms: list
    errors: dict

    @property
    def distances(self) -> list:
        return [r["linf_l2"] for r in self.rows]


def _sup_l2_distance(a: Trajectory, b: Trajectory) -> float:
    n = min(len(a.coeffs), len(b.coeffs))
    if not np.allclose(a.times[:n], b.times[:n]):
        raise ConfigurationError("trajectories have different snapshot times")
    scale = 2.0 * a.grid.X
    return float(max(np.sqrt(scale * np.sum(np.abs(a.coeffs[i] - b.coeffs[i]) ** 2)) for i in range(n)))


def _difference(a: Trajectory, b: Trajectory) -> Trajectory:
    d = Trajectory(a.config, a.flux)
    n = min(len(a.coeffs), len(b.coeffs))
    d.times = list(a.times[:n])
    d.coeffs = [a.coeffs[i] - b.coeffs[i] for i in range(n)]
    if a.stage_coeffs and len(a.stage_coeffs) == len(b.stage_coeffs) and np.allclose(a.stage_times, b.stage_times):
        d.stage_times = list(a.stage_times)
        d.stage_weights = list(a.stage_weights)
        d.stage_coeffs = [x - y for x, y in zip(a.stage_coeffs, b.stage_coeffs)]
    return d


def regularization_sweep(u0, f, base: RunConfig, h_list, flux="zk", alpha: float = 0.0, couple_delta: bool = False) -> SweepResult:
    """Run every h in ``h_list`` (strictly decreasing) and tabulate successive distances.

    ``couple_delta`` sets delta = h for each run, mirroring the regularised
    problem in which the same parameter controls dissipation and truncation.
    """
    from .weights import xk_alpha_seminorms

    h_list = [float(h) for h in h_list]
    if any(b >= a for a, b in zip(h_list, h_list[1:])):
        raise ConfigurationError("h_list must be strictly decreasing")
    trajs: list = []
    errors: dict = {}
    norms = []
    for h in h_list:
        cfg = replace(base, h=h, delta=h if couple_delta else base.delta)
        try:
            tr = run(u0, f, cfg, flux)
            sup, window, weighted = xk_alpha_seminorms(tr, 0, alpha)
            h1 = _l2_h1_alpha(tr, alpha)
            norms.append({"h": h, "x_alpha": sup + math.sqrt(window) + math.sqrt(weighted), "h_half_l2h1": math.sqrt(h) * h1})
            trajs.append(tr)
        except Exception as exc:  # a failed row is recorded and the sweep continues
            errors[h] = repr(exc)
            norms.append({"h": h, "error": repr(exc)})
            trajs.append(None)
    rows = []
    for i in range(len(h_list) - 1):
        a, b = trajs[i], trajs[i + 1]
        row = {"h": h_list[i], "h_next": h_list[i + 1]}
        if a is None or b is None:
            row["error"] = "run failed"
        else:
            row["linf_l2"] = _sup_l2_distance(a, b)
            sup, window, weighted = xk_alpha_seminorms(_difference(a, b), 0, alpha)
            row["x_alpha"] = sup + math.sqrt(window) + math.sqrt(weighted)
        rows.append(row)
    return SweepResult(h_list, rows, norms, errors)


def _l2_h1_alpha(traj: Trajectory, alpha: float) -> float:
    from .weights import hk_alpha_norm

    w, cs = traj.time_quadrature()
    return math.sqrt(sum(wi * hk_alpha_norm(SpectralField(traj.grid, c), 1, alpha) ** 2 for wi, c in zip(w, cs)))
