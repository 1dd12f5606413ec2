"""Exact modal propagation of the linear (optionally dissipative) equation

    u_t + u_xxx + u_xyy - delta (u_xx + u_yy) = f

and exponential product quadrature for the forced (Duhamel) part.

Each coefficient c[j, l] evolves as exp(r t) with the rate
r = i (xi^3 + xi lambda) - delta (xi^2 + lambda).  Forcing is integrated
against the exact exponential kernel: on a panel of length h the forcing is
replaced by its Lagrange interpolant through m Gauss-Legendre nodes and the
products exp(z(1-s)) P_k(s) are integrated in closed form, so the only error
is the interpolation error of the forcing itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from . import _kernels
from .basis import ConfigurationError, Grid, SpectralField

__all__ = [
    "DispersionParams",
    "symbol",
    "rates",
    "propagate",
    "legendre_moments",
    "ExpQuadrature",
    "duhamel",
]

# exp() of anything above this overflows long before it is useful
_MAX_GROWTH = 700.0
# |z| below which the moments are summed as a power series
_SERIES_RADIUS = 6.0


@dataclass(frozen=True)
class DispersionParams:
    delta: float = 0.0
    t: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.delta <= 1.0):
            raise ConfigurationError(f"delta must lie in [0, 1], got {self.delta}")
        if not np.isfinite(self.t):
            raise ConfigurationError("t must be finite")


def symbol(xi, lam, delta: float):
    """Growth rate i(xi^3 + xi lam) - delta (xi^2 + lam) of a single mode."""
    xi = np.asarray(xi, dtype=np.float64)
    lam = np.asarray(lam, dtype=np.float64)
    return 1j * (xi**3 + xi * lam) - delta * (xi**2 + lam)


def rates(grid: Grid, delta: float) -> np.ndarray:
    """Rate table of shape (Nx, Ny); the unpaired Nyquist x-mode gets xi = 0."""
    return symbol(grid.kx[:, None], grid.lam[None, :], delta)


def propagate(sf: SpectralField, params: DispersionParams) -> SpectralField:
    """Homogeneous evolution: coefficients times exp(rate t)."""
    t = float(params.t)
    if t == 0.0:
        return SpectralField(sf.grid, sf.coeffs.copy())
    r = rates(sf.grid, params.delta)
    growth = np.max(r.real * t)
    if growth > _MAX_GROWTH:
        raise OverflowError(
            f"backward dissipative propagation amplifies some mode by exp({growth:.1f}); refusing"
        )
    return SpectralField(sf.grid, sf.coeffs * np.exp(r * t))


# ---------------------------------------------------------------------------
# exponential moments against shifted Legendre polynomials
# ---------------------------------------------------------------------------


def legendre_moments(z, m: int) -> np.ndarray:
    """M_k(z) = int_0^1 exp(z (1 - s)) P_k(2 s - 1) ds for k < m.

    Small |z| uses the series (-1)^k sum_{n>=k} z^n n! / ((n-k)! (n+k+1)!);
    large |z| uses repeated integration by parts, which terminates after
    k + 1 terms because P_k is a polynomial.  Returns shape (m,) + z.shape.
    """
    z = np.asarray(z, dtype=np.complex128)
    out = np.empty((m,) + z.shape, dtype=np.complex128)
    small = np.abs(z) <= _SERIES_RADIUS
    zs = z[small]
    zl = z[~small]
    ez = np.exp(zl)
    for k in range(m):
        if zs.size:
            term = zs**k * (factorial(k) / factorial(2 * k + 1))
            acc = term.copy()
            n = k
            # terms shrink like 6^n / n!^2 beyond n ~ 6; 60 terms is ample
            for _ in range(60):
                term = term * zs * ((n + 1) / ((n + 1 - k) * (n + k + 2)))
                n += 1
                acc += term
            out[k][small] = (-1) ** k * acc
        if zl.size:
            acc = np.zeros_like(zl)
            zp = zl.copy()
            for n in range(k + 1):
                d1 = factorial(k + n) / (factorial(n) * factorial(k - n))
                d0 = (-1) ** (k + n) * d1
                acc += (ez * d0 - d1) / zp
                zp = zp * zl
            out[k][~small] = acc
    return out


def _shifted_legendre(s, m: int) -> np.ndarray:
    """P_k(2 s - 1) for k < m; shape (m,) + s.shape."""
    s = np.asarray(s, dtype=np.float64)
    return np.stack([np.polynomial.legendre.legval(2.0 * s - 1.0, np.eye(m)[k]) for k in range(m)])


def _lagrange(nodes: np.ndarray, x: np.ndarray) -> np.ndarray:
    """ell_q(x_i) for the Lagrange basis through ``nodes``; shape (len(x), m)."""
    m = nodes.size
    out = np.ones((x.size, m))
    for q in range(m):
        for r in range(m):
            if r != q:
                out[:, q] *= (x - nodes[r]) / (nodes[q] - nodes[r])
    return out


class ExpQuadrature:
    """Exponential collocation weights for one panel of length ``h``.

    For a table of rates ``r`` (any shape) and forcing samples F_q at the
    Gauss-Legendre nodes s_q of the panel,

        u(s_p h) = E_stage[p] u(0) + h sum_q A[p, q] F_q
        u(h)     = E_end u(0)      + h sum_q W[q] F_q

    are exact whenever F is a polynomial of degree < m on the panel.
    """

    def __init__(self, m: int):
        if m < 2:
            raise ConfigurationError("need m >= 2 quadrature nodes")
        self.m = m
        t, w = np.polynomial.legendre.leggauss(m)
        self.nodes = 0.5 * (t + 1.0)
        self.weights = 0.5 * w
        P = _shifted_legendre(self.nodes, m)  # (k, q)
        # end weights: W_q = sum_k (2k+1) w_q P_k(s_q) M_k(z)
        self._end = (2 * np.arange(m)[:, None] + 1) * self.weights[None, :] * P  # (k, q)
        # stage weights: A_pq = s_p sum_k beta[p, q, k] M_k(z s_p)
        beta = np.empty((m, m, m))
        for p in range(m):
            ell = _lagrange(self.nodes, self.nodes[p] * self.nodes)  # (r, q)
            beta[p] = (2 * np.arange(m)[None, :] + 1) * np.einsum("r,rq,kr->qk", self.weights, ell, P)
        self._stage = beta

    def coefficients(self, r: np.ndarray, h: float):
        r = np.asarray(r, dtype=np.complex128)
        z = r * h
        m = self.m
        M_end = legendre_moments(z, m)
        W = np.einsum("kq,k...->q...", self._end, M_end)
        E_end = np.exp(z)
        E_stage = np.empty((m,) + z.shape, dtype=np.complex128)
        A = np.empty((m, m) + z.shape, dtype=np.complex128)
        for p, sp in enumerate(self.nodes):
            E_stage[p] = np.exp(z * sp)
            Mp = legendre_moments(z * sp, m)
            A[p] = sp * np.einsum("qk,k...->q...", self._stage[p], Mp)
        return E_stage, A, W, E_end


def _coeffs_at(forcing, tau: float, grid: Grid) -> np.ndarray:
    from .basis import Field, to_spectral

    val = forcing(tau)
    if isinstance(val, SpectralField):
        return val.coeffs
    if isinstance(val, Field):
        return to_spectral(val).coeffs
    return np.asarray(val, dtype=np.complex128)


def duhamel(u0: SpectralField, forcing, params: DispersionParams, m: int = 8, panels: int = 1) -> SpectralField:
    """Forced linear solution at time ``params.t``.

    ``forcing`` maps a time to a Field, SpectralField or coefficient array
    (or is None).  The interval is split into ``panels`` equal panels with
    ``m`` Gauss-Legendre nodes each.
    """
    t = float(params.t)
    if forcing is None or t == 0.0:
        return propagate(u0, params)
    if t < 0:
        raise ConfigurationError("forced evolution needs t >= 0")
    if panels < 1:
        raise ConfigurationError("panels must be >= 1")
    grid = u0.grid
    h = t / panels
    rule = ExpQuadrature(m)
    E_stage, A, W, E_end = rule.coefficients(rates(grid, params.delta), h)
    c = u0.coeffs.copy()
    stage = np.empty((m,) + c.shape, dtype=np.complex128)
    F = np.empty_like(stage)
    for n in range(panels):
        t0 = n * h
        for q, s in enumerate(rule.nodes):
            F[q] = _coeffs_at(forcing, t0 + s * h, grid)
        c = _kernels.panel_update(E_stage, A, W, E_end, c, F, h, stage)
    return SpectralField(grid, c)
