"""Hot inner loops, compiled with numba when available.

Two kernels dominate a solver run: the per-mode stage update of the
exponential collocation sweep, and pointwise evaluation of the truncated
polynomial flux.  Each has a pure-numpy twin with identical semantics.

Set ``ZKSTRIP_DISABLE_NUMBA=1`` before import to force the numpy path.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        def decorator(func):
            return func

        if args and callable(args[0]):
            return args[0]
        return decorator


def _env_disabled() -> bool:
    return os.environ.get("ZKSTRIP_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}


USE_NUMBA = NUMBA_AVAILABLE and not _env_disabled()
BACKEND = "numba" if USE_NUMBA else "numpy"

# composite Gauss-Legendre rule on [0, 1] for the g_h correction integral
_GH_PANELS = 8
_GH_ORDER = 16


def _unit_gl_rule(panels: int = _GH_PANELS, order: int = _GH_ORDER):
    t, w = np.polynomial.legendre.leggauss(order)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    edges = np.linspace(0.0, 1.0, panels + 1)
    nodes = np.concatenate([a + (b - a) * t for a, b in zip(edges[:-1], edges[1:])])
    weights = np.concatenate([(b - a) * w for a, b in zip(edges[:-1], edges[1:])])
    return nodes, weights


GH_NODES, GH_WEIGHTS = _unit_gl_rule()


# ---------------------------------------------------------------------------
# stage update
# ---------------------------------------------------------------------------


def _panel_update_numpy(E_stage, A, W, E_end, c_a, F, h, out):
    # out[p] = E_stage[p] c_a + h sum_q A[p, q] F[q];  returns panel-end coefficients
    np.multiply(E_stage, c_a[None], out=out)
    out += h * np.einsum("pq...,q...->p...", A, F)
    return E_end * c_a + h * np.einsum("q...,q...->...", W, F)


@njit(cache=True)
def _panel_update_numba(E_stage, A, W, E_end, c_a, F, h, out):
    m = E_stage.shape[0]
    nx = E_stage.shape[1]
    ny = E_stage.shape[2]
    end = np.empty((nx, ny), dtype=np.complex128)
    for i in range(nx):
        for j in range(ny):
            c = c_a[i, j]
            for p in range(m):
                acc = 0j
                for q in range(m):
                    acc += A[p, q, i, j] * F[q, i, j]
                out[p, i, j] = E_stage[p, i, j] * c + h * acc
            acc = 0j
            for q in range(m):
                acc += W[q, i, j] * F[q, i, j]
            end[i, j] = E_end[i, j] * c + h * acc
    return end


# ---------------------------------------------------------------------------
# truncated polynomial flux g_h
# ---------------------------------------------------------------------------


def _horner_numpy(coeffs, u):
    acc = np.zeros_like(u)
    for a in coeffs[::-1]:
        acc = acc * u + a
    return acc


def _dcoeffs(coeffs):
    n = coeffs.shape[0]
    if n <= 1:
        return np.zeros(1)
    return coeffs[1:] * np.arange(1, n, dtype=np.float64)


def _eta_numpy(s):
    s = np.asarray(s, dtype=np.float64)
    out = np.where(s >= 1.0, 1.0, 0.0)
    inner = (s > 0.0) & (s < 1.0)
    si = s[inner]
    t = 1.0 / si - 1.0 / (1.0 - si)
    with np.errstate(over="ignore"):
        out[inner] = 1.0 / (1.0 + np.exp(np.clip(t, -700.0, 700.0)))
    return out


def _poly_gh_numpy(u, coeffs, h, out_val, out_der):
    u = np.asarray(u, dtype=np.float64)
    dco = _dcoeffs(coeffs)
    a = np.abs(u)
    sgn = np.where(u < 0.0, -1.0, 1.0)
    inner = a <= 1.0 / h
    out_val[...] = _horner_numpy(coeffs, u)
    out_der[...] = _horner_numpy(dco, u)
    if np.all(inner):
        return
    outer = ~inner
    ao, so, uo = a[outer], sgn[outer], u[outer]
    S = np.minimum(h * ao - 1.0, 1.0)
    cap = 2.0 * so / h
    gcap = _horner_numpy(dco, cap)
    # correction integral Q(S) = int_0^S (g'(sgn(1+s)/h) - g'(2 sgn/h)) eta(s) ds
    s = S[:, None] * GH_NODES[None, :]
    d = _horner_numpy(dco, so[:, None] * (1.0 + s) / h) - gcap[:, None]
    Q = S * np.sum(GH_WEIGHTS[None, :] * d * _eta_numpy(s), axis=1)
    blend_val = _horner_numpy(coeffs, so * (1.0 + S) / h) - so / h * Q
    eta_S = _eta_numpy(S)
    blend_der = _horner_numpy(dco, so * (1.0 + S) / h) * (1.0 - eta_S) + gcap * eta_S
    beyond = h * ao > 2.0
    val = np.where(beyond, blend_val + gcap * (uo - cap), blend_val)
    der = np.where(beyond, gcap, blend_der)
    out_val[outer] = val
    out_der[outer] = der


@njit(cache=True)
def _horner_scalar(coeffs, u):
    acc = 0.0
    for k in range(coeffs.shape[0] - 1, -1, -1):
        acc = acc * u + coeffs[k]
    return acc


@njit(cache=True)
def _eta_scalar(s):
    if s <= 0.0:
        return 0.0
    if s >= 1.0:
        return 1.0
    t = 1.0 / s - 1.0 / (1.0 - s)
    if t > 700.0:
        return 0.0
    if t < -700.0:
        return 1.0
    return 1.0 / (1.0 + np.exp(t))


@njit(cache=True)
def _poly_gh_numba_flat(u, coeffs, dco, h, nodes, weights, out_val, out_der):
    inv_h = 1.0 / h
    for i in range(u.shape[0]):
        x = u[i]
        a = abs(x)
        if a <= inv_h:
            out_val[i] = _horner_scalar(coeffs, x)
            out_der[i] = _horner_scalar(dco, x)
            continue
        sg = -1.0 if x < 0.0 else 1.0
        S = h * a - 1.0
        if S > 1.0:
            S = 1.0
        cap = 2.0 * sg * inv_h
        gcap = _horner_scalar(dco, cap)
        q = 0.0
        for k in range(nodes.shape[0]):
            s = S * nodes[k]
            q += weights[k] * (_horner_scalar(dco, sg * (1.0 + s) * inv_h) - gcap) * _eta_scalar(s)
        q *= S
        end = sg * (1.0 + S) * inv_h
        val = _horner_scalar(coeffs, end) - sg * inv_h * q
        if h * a > 2.0:
            out_val[i] = val + gcap * (x - cap)
            out_der[i] = gcap
        else:
            e = _eta_scalar(S)
            out_val[i] = val
            out_der[i] = _horner_scalar(dco, end) * (1.0 - e) + gcap * e


def _poly_gh_numba(u, coeffs, h, out_val, out_der):
    u = np.ascontiguousarray(u, dtype=np.float64)
    flat_v = np.empty(u.size)
    flat_d = np.empty(u.size)
    _poly_gh_numba_flat(u.ravel(), np.ascontiguousarray(coeffs, dtype=np.float64),
                        _dcoeffs(np.asarray(coeffs, dtype=np.float64)), float(h),
                        GH_NODES, GH_WEIGHTS, flat_v, flat_d)
    out_val[...] = flat_v.reshape(u.shape)
    out_der[...] = flat_d.reshape(u.shape)


IMPLEMENTATIONS = {
    "numpy": {"panel_update": _panel_update_numpy, "poly_gh": _poly_gh_numpy},
    "numba": {"panel_update": _panel_update_numba, "poly_gh": _poly_gh_numba},
}

panel_update = IMPLEMENTATIONS[BACKEND]["panel_update"]
poly_gh = IMPLEMENTATIONS[BACKEND]["poly_gh"]


def poly_gh_eval(u, coeffs, h):
    """Evaluate the truncated polynomial flux and its derivative at ``u``."""
    u = np.asarray(u, dtype=np.float64)
    val = np.empty_like(u)
    der = np.empty_like(u)
    poly_gh(u, np.asarray(coeffs, dtype=np.float64), h, val, der)
    return val, der
