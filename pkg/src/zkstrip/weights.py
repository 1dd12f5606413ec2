"""Cut-off function, admissible weights rho_{alpha,beta}, and weighted norms.

All y-integrals of squared quantities are taken in coefficient space
(discrete Parseval, exact for fields in the basis span); x-integrals use the
periodic trapezoid rule on the nodes.  Integrals against non-constant
weights use a composite Gauss-Legendre rule with panel edges at the weight's
seams, evaluating the band-limited field at the quadrature points, because
the weights and their derivatives vary on scales shorter than the grid
spacing.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .basis import ConfigurationError, Field, Grid, SpectralField, to_spectral, x_synthesis

__all__ = [
    "CutoffFn",
    "eta",
    "Weight",
    "WeightFn",
    "ConstantWeight",
    "make_rho",
    "mixed_coeffs",
    "XSampler",
    "WeightedQuadrature",
    "density",
    "weighted_integral",
    "weighted_l2",
    "hk_alpha_norm",
    "xk_alpha_seminorms",
]


class CutoffFn:
    """Smooth step: 0 on x <= 0, 1 on x >= 1, eta(x) + eta(1 - x) = 1.

    Built as a logistic of ``t(x) = 1/(1-x) - 1/x``, which is the
    symmetrised ``e^{-1/x}`` partition.  Derivatives up to order 3 are exact.
    """

    def __call__(self, x, deriv: int = 0):
        x = np.asarray(x, dtype=np.float64)
        out = np.zeros_like(x)
        if deriv == 0:
            out[x >= 1.0] = 1.0
        inner = (x > 0.0) & (x < 1.0)
        if not np.any(inner):
            return out
        xi = x[inner]
        a, b = 1.0 / xi, 1.0 / (1.0 - xi)
        t = b - a
        sig = expit(t)
        if deriv == 0:
            out[inner] = sig
            return out
        # 1 - sig computed directly: the subtraction loses everything near x = 1
        s1 = sig * expit(-t)
        t1 = a * a + b * b
        if deriv == 1:
            out[inner] = s1 * t1
            return out
        s2 = s1 * (1.0 - 2.0 * sig)
        t2 = 2.0 * (b**3 - a**3)
        if deriv == 2:
            out[inner] = s2 * t1 * t1 + s1 * t2
            return out
        if deriv == 3:
            s3 = s1 * (1.0 - 6.0 * s1)
            t3 = 6.0 * (a**4 + b**4)
            out[inner] = s3 * t1**3 + 3.0 * s2 * t1 * t2 + s1 * t3
            return out
        raise ValueError("derivatives up to order 3 only")


eta = CutoffFn()


class Weight:
    """A smooth positive weight rho(x) with derivatives up to order 3."""

    def __call__(self, x, deriv: int = 0):  # pragma: no cover - interface
        raise NotImplementedError

    def fine_segments(self):
        """Intervals (a, b, panel width) on which quadrature must be refined."""
        return ()

    def admissibility(self, j: int, x=None) -> float:
        """Measured sup |rho^{(j)}| / rho over a sampling grid."""
        if x is None:
            x = np.linspace(-40.0, 40.0, 80001)
        return float(np.max(np.abs(self(x, j)) / self(x)))


@dataclass(frozen=True)
class ConstantWeight(Weight):
    value: float = 1.0

    def __call__(self, x, deriv: int = 0):
        x = np.asarray(x, dtype=np.float64)
        return np.full_like(x, self.value if deriv == 0 else 0.0)


def _gl_unit(panels: int = 4, order: int = 16):
    t, w = np.polynomial.legendre.leggauss(order)
    t, w = 0.5 * (t + 1.0), 0.5 * w
    edges = np.linspace(0.0, 1.0, panels + 1)
    nodes = np.concatenate([a + (b - a) * t for a, b in zip(edges[:-1], edges[1:])])
    weights = np.concatenate([(b - a) * w for a, b in zip(edges[:-1], edges[1:])])
    return nodes, weights


_GL_NODES, _GL_WEIGHTS = _gl_unit()


def _integrate(fn, a, b):
    """Vectorised composite Gauss-Legendre of ``fn`` over [a_i, b_i]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    span = (b - a)[..., None]
    pts = a[..., None] + span * _GL_NODES
    return np.sum(fn(pts) * _GL_WEIGHTS, axis=-1) * span[..., 0]


@dataclass(frozen=True)
class WeightFn(Weight):
    """``offset + rho_{alpha,beta}(x - shift)``.

    rho = e^{beta x} on x <= -1 and (1+x)^alpha (alpha > 0) or 2 - (1+x)^{-1/2}
    (alpha = 0) on x >= 0.  On (-1, 0) rho = exp(Phi) with

        Phi' = beta (1 - eta1) + (log R)' eta2 + kappa eta'(x + 1),

    eta1 switching off over [-1, -1+eps], eta2 switching on over [-eps, 0],
    and kappa > 0 fixed so that Phi(0) = log R(0) = 0.  Every term is
    non-negative, so rho is strictly increasing for any alpha, beta.
    """

    alpha: float
    beta: float
    shift: float = 0.0
    offset: float = 0.0

    def shifted(self, x0: float) -> "WeightFn":
        return WeightFn(self.alpha, self.beta, self.shift + x0, self.offset)

    def plus(self, c: float) -> "WeightFn":
        return WeightFn(self.alpha, self.beta, self.shift, self.offset + c)

    def fine_segments(self):
        eps, s = self.eps, self.shift
        return ((s - 1.0, s - 1.0 + eps, eps / 16.0), (s - 1.0 + eps, s - eps, 1.0 / 32.0), (s - eps, s, eps / 16.0))

    # right tail R and its log-derivative
    def _right(self, x, deriv):
        s = 1.0 + x
        a = self.alpha
        if a > 0:
            coef = 1.0
            for i in range(deriv):
                coef *= a - i
            return coef * s ** (a - deriv)
        if deriv == 0:
            return 2.0 - s**-0.5
        coef = -1.0
        p = -0.5
        for _ in range(deriv):
            coef *= p
            p -= 1.0
        return coef * s**p

    def _logslope(self, x, deriv=0):
        if self.alpha > 0:
            s = 1.0 + x
            return self.alpha * (-1.0) ** deriv * float(np.prod(np.arange(1, deriv + 1))) / s ** (deriv + 1)
        R = self._right(x, 0)
        r1 = self._right(x, 1) / R
        if deriv == 0:
            return r1
        r2 = self._right(x, 2) / R
        if deriv == 1:
            return r2 - r1 * r1
        r3 = self._right(x, 3) / R
        return r3 - 3.0 * r1 * r2 + 2.0 * r1**3

    def _eta2_integral(self, x):
        eps = self.eps
        lo = np.full_like(x, -eps)
        hi = np.maximum(x, -eps)
        return _integrate(lambda t: self._logslope(t) * eta((t + eps) / eps), lo, hi)

    @property
    def eps(self) -> float:
        return self._bridge[0]

    @property
    def kappa(self) -> float:
        return self._bridge[1]

    @property
    def _bridge(self):
        cached = self.__dict__.get("_bridge_cache")
        if cached is not None:
            return cached
        eps = 0.5
        while True:
            object.__setattr__(self, "_bridge_cache", (eps, 0.0))
            kappa = self.beta * (1.0 - 0.5 * eps) - float(self._eta2_integral(np.array([0.0]))[0])
            if kappa >= 0.25 * self.beta or eps < 1e-3:
                break
            eps *= 0.5
        if kappa <= 0:
            raise ConfigurationError(f"cannot build an increasing bridge for alpha={self.alpha}, beta={self.beta}")
        object.__setattr__(self, "_bridge_cache", (eps, kappa))
        return eps, kappa

    def _phi(self, x):
        eps, kappa = self._bridge
        s = x + 1.0
        tau = np.minimum(s / eps, 1.0)
        left = eps * (tau - _integrate(eta, np.zeros_like(tau), tau))
        return -self.beta + self.beta * left + self._eta2_integral(x) + kappa * eta(s)

    def _phi_derivs(self, x, n):
        eps, kappa = self._bridge
        b = self.beta
        s = x + 1.0
        u1 = s / eps
        u2 = (x + eps) / eps
        e1 = [eta(u1, k) / eps**k for k in range(n)]
        e2 = [eta(u2, k) / eps**k for k in range(n)]
        ls = [self._logslope(x, k) if k < n else None for k in range(n)]
        # guard: the log-slope is only needed where eta2 is non-zero
        ls = [np.where(u2 > 0, v, 0.0) for v in ls]
        d1 = b * eta(1.0 - u1) + ls[0] * e2[0] + kappa * eta(s, 1)
        out = [d1]
        if n >= 2:
            out.append(-b * e1[1] + ls[1] * e2[0] + ls[0] * e2[1] + kappa * eta(s, 2))
        if n >= 3:
            out.append(-b * e1[2] + ls[2] * e2[0] + 2.0 * ls[1] * e2[1] + ls[0] * e2[2] + kappa * eta(s, 3))
        return out

    def __call__(self, x, deriv: int = 0):
        if deriv not in (0, 1, 2, 3):
            raise ValueError("derivatives up to order 3 only")
        x = np.asarray(x, dtype=np.float64) - self.shift
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        out = np.empty_like(x)
        b = self.beta
        left = x <= -1.0
        right = x >= 0.0
        mid = ~(left | right)
        out[left] = b**deriv * np.exp(b * x[left])
        out[right] = self._right(x[right], deriv)
        if np.any(mid):
            xm = x[mid]
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                rho = np.exp(self._phi(xm))
                if deriv == 0:
                    out[mid] = rho
                else:
                    p = self._phi_derivs(xm, deriv)
                    if deriv == 1:
                        out[mid] = p[0] * rho
                    elif deriv == 2:
                        out[mid] = (p[1] + p[0] ** 2) * rho
                    else:
                        out[mid] = (p[2] + 3.0 * p[0] * p[1] + p[0] ** 3) * rho
        if deriv == 0:
            out = out + self.offset
        return out[0] if scalar else out


def make_rho(alpha: float, beta: float, *, check: bool = True) -> WeightFn:
    """Construct rho_{alpha,beta} and verify strict monotonicity of the bridge."""
    if not (0.0 <= alpha <= 4.0):
        raise ConfigurationError("alpha must lie in [0, 4]")
    if not beta > 0:
        raise ConfigurationError("beta must be positive")
    w = WeightFn(float(alpha), float(beta))
    if check:
        xs = np.linspace(-1.0, 0.0, 2001)[1:-1]
        if np.min(w(xs, 1)) <= 0.0:
            raise ConfigurationError(f"rho_{{{alpha},{beta}}} is not strictly increasing on (-1, 0)")
    return w


# ---------------------------------------------------------------------------
# densities: y-integrated squared derivative magnitudes at each x node
# ---------------------------------------------------------------------------


def _as_spectral(obj) -> SpectralField:
    if isinstance(obj, SpectralField):
        return obj
    if isinstance(obj, Field):
        return to_spectral(obj)
    raise TypeError(f"expected Field or SpectralField, got {type(obj).__name__}")


class XSampler:
    """Band-limited interpolation of coefficient arrays at arbitrary x points.

    u(x) = Re[c_0 + 2 sum_{0<j<Nx/2} c_j exp(i xi_j x)]; the unpaired Nyquist
    slot is dropped, as on every padded grid.
    """

    def __init__(self, grid: Grid, x):
        self.grid = grid
        self.x = np.asarray(x, dtype=np.float64)
        half = grid.Nx // 2
        self._k = grid.xi[:half]
        mult = np.full(half, 2.0)
        mult[0] = 1.0
        phase = np.outer(self.x, self._k)
        self._cos = np.cos(phase) * mult
        self._sin = np.sin(phase) * mult

    def coeffs(self, c: np.ndarray, order_x: int = 0) -> np.ndarray:
        """y-coefficients of ``(d/dx)^order_x u`` at the sample points; shape (len(x), Ny)."""
        ch = c[: self.grid.Nx // 2]
        if order_x:
            ch = ch * ((1j * self._k) ** order_x)[:, None]
        return self._cos @ ch.real - self._sin @ ch.imag


def mixed_coeffs(c: np.ndarray, grid: Grid, order_x: int = 0) -> np.ndarray:
    """y-coefficients at the x nodes of ``(d/dx)^order_x u``; shape (..., Nx, Ny)."""
    if order_x:
        c = c * ((1j * grid.kx) ** order_x)[:, None]
    return x_synthesis(c, grid).real


def _density_from(get, k: int, lam: np.ndarray) -> np.ndarray:
    a0 = get(0)
    if k == 0:
        return np.sum(a0 * a0, axis=-1)
    a1 = get(1)
    if k == 1:
        return np.sum(a1 * a1 + lam * a0 * a0, axis=-1)
    if k == 2:
        a2 = get(2)
        return np.sum(a2 * a2 + lam * a1 * a1 + lam * lam * a0 * a0, axis=-1)
    raise ValueError("k must be 0, 1 or 2")


def density(obj, k: int = 0, sampler: XSampler | None = None) -> np.ndarray:
    """``int_0^L |D^k u|^2 dy`` at every x node, or at the sampler's points (k = 0, 1, 2).

    |D^k u|^2 is the sum over k1 + k2 = k of (d_x^k1 d_y^k2 u)^2.
    """
    sf = _as_spectral(obj)
    g = sf.grid
    if sampler is None:
        return _density_from(lambda o: mixed_coeffs(sf.coeffs, g, o), k, g.lam[None, :])
    return _density_from(lambda o: sampler.coeffs(sf.coeffs, o), k, g.lam[None, :])


def weighted_integral(dens: np.ndarray, grid: Grid, weight) -> float:
    """``dx * sum_n w(x_n) dens(x_n)`` for a weight callable or array."""
    w = weight(grid.x) if callable(weight) else np.broadcast_to(np.asarray(weight, dtype=np.float64), grid.x.shape)
    return float(grid.dx * np.dot(w, dens))


#: Gauss-Legendre nodes per panel in weighted x-quadrature
PANEL_ORDER = 16


@functools.lru_cache(maxsize=32)
def _panel_rule(X: float, dx: float, segments: tuple, breaks: tuple):
    t, w = np.polynomial.legendre.leggauss(PANEL_ORDER)
    t, w = 0.5 * (t + 1.0), 0.5 * w
    cuts = {-X, X}
    for a, b, _ in segments:
        cuts.update((a, b))
    cuts.update(breaks)
    cuts = sorted(v for v in cuts if -X <= v <= X)
    nodes, weights = [], []
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b - a <= 0.0:
            continue
        hmax = dx
        for sa, sb, sh in segments:
            if a >= sa - 1e-14 and b <= sb + 1e-14:
                hmax = min(hmax, sh)
        npan = int(np.ceil((b - a) / hmax - 1e-9))
        edges = np.linspace(a, b, npan + 1)
        span = np.diff(edges)
        nodes.append((edges[:-1, None] + span[:, None] * t).ravel())
        weights.append((span[:, None] * w).ravel())
    return np.concatenate(nodes), np.concatenate(weights)


_RULES: dict = {}


def _cached_rule(grid: Grid, segments: tuple, breaks: tuple):
    key = (float(grid.X), int(grid.Nx), segments, breaks)
    hit = _RULES.get(key)
    if hit is None:
        x, w = _panel_rule(float(grid.X), float(grid.dx), segments, breaks)
        if len(_RULES) >= 32:
            _RULES.pop(next(iter(_RULES)))
        hit = _RULES[key] = (x, w, XSampler(grid, x))
    return hit


class WeightedQuadrature:
    """Composite Gauss-Legendre rule in x adapted to a weight's seams.

    Panels are no wider than the grid spacing and are refined inside the
    fast segments of ``weight`` (one weight or a sequence); the band-limited field is evaluated exactly at
    the nodes, so the only error is that of the panel rule.
    """

    def __init__(self, grid: Grid, weight=None, breaks=()):
        weights = weight if isinstance(weight, (tuple, list)) else (weight,)
        segments = tuple(seg for w in weights if isinstance(w, Weight) for seg in w.fine_segments())
        self.grid = grid
        self.x, self.w, self.sampler = _cached_rule(grid, segments, tuple(float(b) for b in breaks))

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.w, values))

    def density(self, obj, k: int = 0) -> np.ndarray:
        return density(obj, k, self.sampler)


def _poly_weight(alpha: float):
    return lambda x: (1.0 + np.maximum(x, 0.0)) ** (2.0 * alpha)


def _poly_rule(grid: Grid, alpha: float):
    rule = WeightedQuadrature(grid, breaks=(0.0,))
    return rule, _poly_weight(alpha)(rule.x)


def weighted_l2(field, alpha: float) -> float:
    """sqrt of ∬ (1 + x_+)^{2 alpha} u^2."""
    if alpha < 0:
        raise ConfigurationError("alpha must be >= 0")
    sf = _as_spectral(field)
    rule, w = _poly_rule(sf.grid, alpha)
    return float(np.sqrt(rule.integrate(w * rule.density(sf, 0))))


def hk_alpha_norm(field, k: int, alpha: float) -> float:
    """H^{k,alpha} norm: root-sum-of-squares of weighted_l2(|D^j u|), j <= k."""
    if k not in (0, 1):
        raise ValueError("k must be 0 or 1")
    sf = _as_spectral(field)
    rule, w = _poly_rule(sf.grid, alpha)
    return float(np.sqrt(sum(rule.integrate(w * rule.density(sf, j)) for j in range(k + 1))))


def _time_weights(times: np.ndarray) -> np.ndarray:
    times = np.asarray(times, dtype=np.float64)
    if times.size == 1:
        return np.zeros(1)
    dt = np.diff(times)
    if not np.allclose(dt, dt[0], rtol=1e-9, atol=1e-14):
        raise ConfigurationError("trajectory time grid must be uniform")
    w = np.full(times.size, dt[0])
    w[0] = w[-1] = 0.5 * dt[0]
    return w


def xk_alpha_seminorms(trajectory, k: int, alpha: float):
    """(sup_t H^{k,alpha} norm, sliding-window smoothing term, weighted smoothing term).

    The window term is sup over x0 in the x nodes of the space-time integral
    of |D^{k+1}u|^2 over [x0, x0+1) (periodic wrap); the weighted term is the
    integral of (1+x)^{2 alpha - 1} |D^{k+1}u|^2 over x > 0 (0 when alpha = 0).
    """
    snaps = list(getattr(trajectory, "coeffs", None) or trajectory.snapshots)
    if not snaps:
        raise ValueError("empty trajectory")
    grid = trajectory.grid if hasattr(trajectory, "grid") else snaps[0].grid

    def spectral(u):
        return SpectralField(grid, u) if isinstance(u, np.ndarray) else _as_spectral(u)

    sup_norm = max(hk_alpha_norm(spectral(u), k, alpha) for u in snaps)
    if hasattr(trajectory, "time_quadrature"):
        tw, series = trajectory.time_quadrature()
    else:
        tw, series = _time_weights(trajectory.times), snaps
    rule = WeightedQuadrature(grid, breaks=(0.0,)) if alpha > 0 else None
    dens_t = np.zeros(grid.Nx)
    dens_q = np.zeros(rule.x.size) if rule is not None else None
    for w, u in zip(tw, series):
        sf = spectral(u)
        dens_t += w * density(sf, k + 1)
        if rule is not None:
            dens_q += w * rule.density(sf, k + 1)
    width = int(np.ceil(1.0 / grid.dx - 1e-12))
    wrapped = np.concatenate([dens_t, dens_t[:width]])
    csum = np.concatenate([[0.0], np.cumsum(wrapped)])
    window = grid.dx * np.max(csum[width : width + grid.Nx] - csum[: grid.Nx])
    if rule is not None:
        xp = rule.x
        wt = np.where(xp > 0, (1.0 + np.maximum(xp, 0.0)) ** (2.0 * alpha - 1.0), 0.0)
        weighted = rule.integrate(wt * dens_q)
    else:
        weighted = 0.0
    return float(sup_norm), float(window), weighted
