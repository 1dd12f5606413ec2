"""Fluxes g, their primitives, the truncation g_h and the dealiased x-flux.

The truncation keeps g untouched on |u| <= 1/h, blends g' towards the
constant g'(2 sgn u / h) over 1/h < |u| < 2/h with the cut-off eta, and is
affine beyond.  Written with S = h|u| - 1 in [0, 1] and sgn = sign(u):

    g_h(u) = g(sgn (1+S)/h) - (sgn/h) int_0^S [g'(sgn(1+s)/h) - g'(2 sgn/h)] eta(s) ds.

The correction integral has no elementary closed form (eta is a logistic of
a rational function), so it is evaluated with a fixed composite
Gauss-Legendre rule of 128 nodes; the integrand is smooth, which makes that
rule accurate to round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.fft as sfft
from scipy import integrate

from . import _kernels
from .basis import ConfigurationError, Field, Grid, SpectralField, to_spectral, x_synthesis_real, y_analysis, y_synthesis
from .weights import eta

__all__ = [
    "Nonlinearity",
    "TruncatedNonlinearity",
    "make_flux",
    "FLUXES",
    "g_star",
    "g_h_eval",
    "flux_x",
    "flux_coeffs",
    "ALIAS_THRESHOLD",
]

#: relative spectral energy of g_h(u) discarded by the 3/2 rule above which a result is flagged
ALIAS_THRESHOLD = 1e-10


@dataclass(frozen=True, eq=False)
class Nonlinearity:
    """Scalar flux with growth metadata.

    ``poly`` (ascending coefficients) enables closed forms for g* and the
    compiled g_h kernel.  ``b`` and ``c`` are the growth exponent and
    constant in |g'(u)| <= c (1 + |u|^b).
    """

    name: str
    g: Callable
    dg: Callable
    d2g: Callable | None = None
    b: float = 1.0
    c: float = 1.0
    poly: np.ndarray | None = None
    primitive: Callable | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (1.0 <= self.b < 2.0):
            raise ConfigurationError(f"growth exponent b must lie in [1, 2), got {self.b}")
        if self.c < 0:
            raise ConfigurationError("growth constant must be non-negative")

    @classmethod
    def polynomial(cls, name: str, coeffs, b: float = 1.0, c: float | None = None, **params) -> "Nonlinearity":
        coeffs = np.asarray(coeffs, dtype=np.float64)
        P = np.polynomial.Polynomial(coeffs)
        dP, d2P = P.deriv(1), P.deriv(2)
        if c is None:
            c = float(np.sum(np.abs(dP.coef)))
        return cls(name, P, dP, d2P, b, c, coeffs, P.integ(lbnd=0.0), dict(params))

    @property
    def g0(self) -> float:
        return float(self.g(np.float64(0.0)))

    @property
    def dg0(self) -> float:
        return float(self.dg(np.float64(0.0)))

    def growth_ratio(self, U: float = 100.0, n: int = 20001) -> float:
        """Sampled sup of |g'(u)| / (1 + |u|^b) on [-U, U]."""
        u = np.linspace(-U, U, n)
        return float(np.max(np.abs(self.dg(u)) / (1.0 + np.abs(u) ** self.b)))

    def growth_ok(self, U: float = 100.0) -> bool:
        ok = self.growth_ratio(U) <= self.c * (1.0 + 1e-12)
        if self.d2g is not None:
            u = np.linspace(-U, U, 20001)
            ok &= bool(np.all(np.abs(self.d2g(u)) <= self.c * (1.0 + np.abs(u) ** (self.b - 1.0)) + 1e-12))
        return bool(ok)

    def shifted(self) -> "Nonlinearity":
        """g_1(u) = g(u) - g'(0) u."""
        a = self.dg0
        if self.poly is not None:
            co = self.poly.copy()
            if co.size < 2:
                co = np.pad(co, (0, 2 - co.size))
            co[1] -= a
            return Nonlinearity.polynomial(self.name + "-shifted", co, self.b, self.c + abs(a))
        g, dg = self.g, self.dg
        d2g = self.d2g
        prim = None if self.primitive is None else (lambda u: self.primitive(u) - 0.5 * a * np.asarray(u) ** 2)
        return Nonlinearity(
            self.name + "-shifted", lambda u: g(u) - a * u, lambda u: dg(u) - a, d2g, self.b, self.c + abs(a), None, prim
        )


def _sine() -> Nonlinearity:
    return Nonlinearity("sine", np.sin, np.cos, lambda u: -np.sin(u), 1.0, 1.0, None, lambda u: 1.0 - np.cos(u))


def make_flux(name: str, **params) -> Nonlinearity:
    """Named fluxes: zk (u^2/2), linear (a u), shifted-zk (a u + u^2/2), sine, zero."""
    if name == "zk":
        return Nonlinearity.polynomial("zk", [0.0, 0.0, 0.5], 1.0, 1.0)
    if name == "linear":
        a = float(params.get("a", 1.0))
        return Nonlinearity.polynomial("linear", [0.0, a], 1.0, abs(a), a=a)
    if name == "shifted-zk":
        a = float(params.get("a", 1.0))
        return Nonlinearity.polynomial("shifted-zk", [0.0, a, 0.5], 1.0, 1.0 + abs(a), a=a)
    if name == "sine":
        return _sine()
    if name == "zero":
        return Nonlinearity.polynomial("zero", [0.0], 1.0, 0.0)
    raise ConfigurationError(f"unknown flux {name!r}; known: {sorted(FLUXES)}")


FLUXES = ("zk", "linear", "shifted-zk", "sine", "zero")


def g_star(nl: Nonlinearity, u):
    """Primitive int_0^u g; closed form when known, adaptive quadrature otherwise."""
    u = np.asarray(u, dtype=np.float64)
    if nl.primitive is not None:
        return nl.primitive(u)
    flat = [integrate.quad(lambda t: float(nl.g(t)), 0.0, float(v), epsabs=0.0, epsrel=1e-12, limit=200)[0] for v in u.ravel()]
    return np.asarray(flat).reshape(u.shape)


@dataclass(frozen=True, eq=False)
class TruncatedNonlinearity:
    """g_h for h in (0, 1]; ``h=None`` leaves the flux untruncated."""

    base: Nonlinearity
    h: float | None = None

    def __post_init__(self):
        if self.h is not None and not (0.0 < self.h <= 1.0):
            raise ConfigurationError(f"h must lie in (0, 1], got {self.h}")

    @property
    def name(self) -> str:
        return self.base.name

    def __call__(self, u):
        return g_h_eval(self, u)

    def value(self, u):
        return g_h_eval(self, u)[0]

    def slope_bound(self) -> float:
        """sup |g_h'| (finite for h > 0), sampled on the blend region."""
        if self.h is None:
            return math.inf
        u = np.linspace(-2.0 / self.h, 2.0 / self.h, 4001)
        return float(np.max(np.abs(g_h_eval(self, u)[1])))


def _generic_gh(base: Nonlinearity, u: np.ndarray, h: float):
    val = np.asarray(base.g(u), dtype=np.float64) * np.ones_like(u)
    der = np.asarray(base.dg(u), dtype=np.float64) * np.ones_like(u)
    a = np.abs(u)
    outer = a > 1.0 / h
    if not np.any(outer):
        return val, der
    ao, uo = a[outer], u[outer]
    so = np.where(uo < 0.0, -1.0, 1.0)
    S = np.minimum(h * ao - 1.0, 1.0)
    cap = 2.0 * so / h
    gcap = base.dg(cap)
    s = S[:, None] * _kernels.GH_NODES[None, :]
    d = base.dg(so[:, None] * (1.0 + s) / h) - gcap[:, None]
    Q = S * np.sum(_kernels.GH_WEIGHTS[None, :] * d * eta(s), axis=1)
    end = so * (1.0 + S) / h
    blend = base.g(end) - so / h * Q
    eS = eta(S)
    beyond = h * ao > 2.0
    val[outer] = np.where(beyond, blend + gcap * (uo - cap), blend)
    der[outer] = np.where(beyond, gcap, base.dg(end) * (1.0 - eS) + gcap * eS)
    return val, der


def g_h_eval(tnl: TruncatedNonlinearity, u):
    """(g_h(u), g_h'(u)) elementwise."""
    u = np.asarray(u, dtype=np.float64)
    base = tnl.base
    if tnl.h is None:
        return np.asarray(base.g(u), dtype=np.float64) * np.ones_like(u), np.asarray(base.dg(u), dtype=np.float64) * np.ones_like(u)
    if base.poly is not None:
        return _kernels.poly_gh_eval(u, base.poly, tnl.h)
    return _generic_gh(base, u, tnl.h)


# ---------------------------------------------------------------------------
# (g_h(u))_x with 3/2 zero padding in x
# ---------------------------------------------------------------------------


def _padded_size(nx: int) -> int:
    return (3 * nx) // 2


def flux_coeffs(c: np.ndarray, grid: Grid, tnl: TruncatedNonlinearity, derivative: bool = True):
    """Spectral coefficients of (g_h(u))_x (or g_h(u)) for coefficients ``c``.

    ``c`` may carry leading batch axes.  Returns (coefficients, discarded
    energy fraction, max |u| on the padded grid).
    """
    nx = grid.Nx
    n = _padded_size(nx)
    u = y_synthesis(x_synthesis_real(c, grid, n), grid)
    gu = tnl.value(u)
    if not np.all(np.isfinite(gu)):
        raise FloatingPointError("flux evaluation produced non-finite values")
    a = y_analysis(gu, grid)
    F = sfft.rfft(a, axis=-2, workers=1) / n
    power = np.abs(F) ** 2
    power[..., 1:, :] *= 2.0
    total = float(np.sum(power))
    kept = float(np.sum(power[..., : nx // 2, :]))
    alias = 0.0 if total == 0.0 else max(total - kept, 0.0) / total
    out = np.zeros(c.shape, dtype=np.complex128)
    out[..., : nx // 2, :] = F[..., : nx // 2, :]
    out[..., nx // 2 + 1 :, :] = np.conj(F[..., nx // 2 - 1 : 0 : -1, :])
    out *= grid._parity[:, None]
    if derivative:
        out *= (1j * grid.kx)[:, None]
    return out, alias, float(np.max(np.abs(u))) if u.size else 0.0


def flux_x(field: Field | SpectralField, tnl: TruncatedNonlinearity) -> Field:
    """(g_h(u))_x on the grid nodes, dealiased in x; metadata reports the aliasing monitor."""
    sf = field if isinstance(field, SpectralField) else to_spectral(field)
    grid = sf.grid
    out, alias, umax = flux_coeffs(sf.coeffs, grid, tnl)
    vals = y_synthesis(x_synthesis_real(out, grid), grid)
    return Field(grid, vals, {"aliasing": alias, "aliasing_flag": alias > ALIAS_THRESHOLD, "max_abs_u": umax})
