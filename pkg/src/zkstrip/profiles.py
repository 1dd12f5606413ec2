"""Named analytic initial profiles and forcings.

Every profile is compatible with all four boundary families: its y-shape is
a finite combination of the case's own eigenfunctions, so it satisfies the
boundary conditions (and their even/odd derivative companions) exactly.
"""

from __future__ import annotations

import numpy as np

from .basis import ConfigurationError, Field, Grid, to_spectral

__all__ = ["PROFILES", "make_profile", "y_shape", "mode_field", "make_forcing", "random_bump_family"]


def y_shape(grid: Grid, modes=(0,), amps=None) -> np.ndarray:
    """sum_k amps[k] psi_{modes[k]}(y) at the grid's y-nodes (0-based mode indices)."""
    modes = tuple(int(m) for m in modes)
    amps = np.ones(len(modes)) if amps is None else np.asarray(amps, dtype=np.float64)
    if max(modes) >= grid.Ny:
        raise ConfigurationError(f"mode {max(modes)} not representable with Ny={grid.Ny}")
    psi = grid.basis.evaluate(grid.y)
    return psi[:, list(modes)] @ amps


def _bump(grid: Grid, amplitude=1.0, x0=0.0, width=2.0, modes=(0,), amps=None, **_):
    xx = grid.x[:, None]
    return amplitude * np.exp(-(((xx - x0) / width) ** 2)) * y_shape(grid, modes, amps)[None, :]


def _sech2(grid: Grid, amplitude=1.0, x0=0.0, width=None, modes=(0,), amps=None, **_):
    # KdV-type soliton profile; width 2/sqrt(amplitude/3) matches u_t + u_xxx + u u_x = 0
    w = 2.0 * np.sqrt(3.0 / amplitude) if width is None else width
    xx = grid.x[:, None]
    return amplitude / np.cosh((xx - x0) / w) ** 2 * y_shape(grid, modes, amps)[None, :]


def _zero(grid: Grid, **_):
    return np.zeros((grid.Nx, grid.Ny))


def _mode(grid: Grid, amplitude=1.0, j=1, l=0, **_):
    return mode_field(grid, j, l, amplitude).values


PROFILES = {"bump": _bump, "sech2": _sech2, "zero": _zero, "mode": _mode}


def make_profile(grid: Grid, name: str, **params) -> Field:
    try:
        fn = PROFILES[name]
    except KeyError:
        raise ConfigurationError(f"unknown profile {name!r}; known: {sorted(PROFILES)}") from None
    return Field(grid, fn(grid, **params), {"profile": name, **params})


def mode_field(grid: Grid, j: int, l: int, amplitude: float = 1.0) -> Field:
    """Real single mode amplitude cos(pi j x / X) psi_l(y) (j = 0 gives the x-constant)."""
    xi = np.pi * j / grid.X
    return Field(grid, amplitude * np.cos(xi * grid.x)[:, None] * grid.basis.evaluate(grid.y)[:, l][None, :])


def make_forcing(grid: Grid, spec: dict | None):
    """Forcing callable t -> coefficient array, or None for spec ``zero``/None.

    ``{"kind": "bump", "amplitude", "x0", "width", "modes", "omega"}`` gives
    cos(omega t) times the bump profile.
    """
    if spec is None or spec.get("kind", "zero") == "zero":
        return None
    spec = dict(spec)
    kind = spec.pop("kind")
    omega = float(spec.pop("omega", 0.0))
    if kind not in PROFILES:
        raise ConfigurationError(f"unknown forcing kind {kind!r}")
    base = Field(grid, PROFILES[kind](grid, **spec))
    c = to_spectral(base).coeffs

    def forcing(t):
        return c * np.cos(omega * t)

    return forcing


def random_bump_family(grid: Grid, n: int, rng: np.random.Generator, scale=(0.6, 3.0), shift=(-8.0, 8.0), max_mode: int = 3):
    """``n`` Gaussian bumps with random width, centre, amplitude and y-content."""
    out = []
    for _ in range(n):
        width = rng.uniform(*scale)
        x0 = rng.uniform(*shift)
        k = int(rng.integers(1, max_mode + 1))
        modes = tuple(int(m) for m in rng.choice(min(max_mode, grid.Ny), size=min(k, grid.Ny), replace=False))
        amps = rng.normal(size=len(modes))
        out.append(Field(grid, _bump(grid, 1.0, x0, width, modes, amps)))
    return out

