"""Eigenbases of -d^2/dy^2 on [0, L] and the Fourier x eigenbasis transform pair.

Coefficient convention: a field on the window [-X, X) x [0, L] is

    u(x, y) = sum_j sum_l c[j, l] exp(i xi_j x) psi_l(y),   xi_j = pi j / X,

with ``j`` stored in numpy FFT order along axis -2 and the eigenmode index
``l`` (0-based here, 1-based in the usual notation) along axis -1.  Hence
``c = û / (2X)`` where ``û`` is the continuous Fourier coefficient, and
``∬ u^2 = 2X sum |c|^2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np
import scipy.fft as sfft

__all__ = [
    "BoundaryCase",
    "ConfigurationError",
    "NonRealSynthesisError",
    "Grid",
    "EigenBasis",
    "Field",
    "SpectralField",
    "eigen_pairs",
    "to_spectral",
    "from_spectral",
    "derivative",
]

#: scipy.fft worker count; the CLI's ``--threads`` sets it
FFT_WORKERS = 1


class ConfigurationError(ValueError):
    """Invalid grid, basis or run configuration."""


class NonRealSynthesisError(ValueError):
    """Coefficients lack the conjugate symmetry of a real field."""


class BoundaryCase(str, Enum):
    """The four y-boundary families on the strip."""

    DIRICHLET = "a"
    NEUMANN = "b"
    MIXED = "c"
    PERIODIC = "d"

    @classmethod
    def parse(cls, value) -> "BoundaryCase":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ConfigurationError(f"unknown boundary case {value!r}; expected one of a, b, c, d") from None


# cos(x + q pi/2) for q = 0..3
_QUARTER = (np.cos, lambda t: -np.sin(t), lambda t: -np.cos(t), np.sin)


@dataclass(frozen=True, eq=False)
class EigenBasis:
    """Orthonormal eigenpairs ``(lambda_l, psi_l)`` for one boundary family.

    Every mode is ``amp * cos(k y + q pi/2)``, so derivatives of any order
    are closed form.
    """

    case: BoundaryCase
    L: float
    n: int

    @cached_property
    def _table(self):
        n, L = self.n, self.L
        l = np.arange(1, n + 1)
        amp = np.full(n, np.sqrt(2.0 / L))
        q = np.zeros(n, dtype=int)
        if self.case is BoundaryCase.DIRICHLET:
            k = l * np.pi / L
            q[:] = 3
        elif self.case is BoundaryCase.NEUMANN:
            k = (l - 1) * np.pi / L
            amp[0] = 1.0 / np.sqrt(L)
        elif self.case is BoundaryCase.MIXED:
            k = (l - 0.5) * np.pi / L
            q[:] = 3
        else:
            m = l // 2
            k = 2.0 * np.pi * m / L
            q[(l % 2 == 1) & (l > 1)] = 3
            amp[0] = 1.0 / np.sqrt(L)
        return k, amp, q

    @property
    def wavenumbers(self) -> np.ndarray:
        return self._table[0]

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return self._table[0] ** 2

    def evaluate(self, y, deriv: int = 0) -> np.ndarray:
        """Matrix ``M[i, l] = psi_l^{(deriv)}(y_i)``."""
        y = np.atleast_1d(np.asarray(y, dtype=np.float64))
        k, amp, q = self._table
        out = np.empty((y.size, self.n))
        arg = np.outer(y, k)
        for l in range(self.n):
            out[:, l] = amp[l] * k[l] ** deriv * _QUARTER[(q[l] + deriv) % 4](arg[:, l])
        return out

    def pairs(self):
        return [(float(lam), lambda y, l=l: self.evaluate(y)[:, l]) for l, lam in enumerate(self.eigenvalues)]


def eigen_pairs(case, L: float, n: int, ny: int | None = None) -> EigenBasis:
    """Return the first ``n`` eigenpairs of -psi'' = lambda psi on [0, L].

    ``ny`` is the y-node count the basis must live on; asking for more modes
    than the nodes can carry orthonormally is a configuration error.
    """
    case = BoundaryCase.parse(case)
    if not L > 0:
        raise ConfigurationError("strip width L must be positive")
    if n < 1:
        raise ConfigurationError("need at least one eigenpair")
    if ny is not None:
        # an even periodic node set cannot carry the unpaired Nyquist mode
        limit = ny - 1 if case is BoundaryCase.PERIODIC and ny % 2 == 0 else ny
        if n > limit:
            raise ConfigurationError(f"{n} modes exceed the {limit} representable on {ny} y-nodes for case {case.value}")
    return EigenBasis(case, float(L), int(n))


@dataclass(frozen=True, eq=False)
class Grid:
    """Periodic x-window [-X, X) with ``Nx`` nodes times the case's y-nodes.

    The y-nodes are the quadrature nodes on which the first ``Ny``
    eigenfunctions are discretely orthonormal:

    * a: interior nodes k L/(Ny+1)            (DST-I)
    * b: midpoints (k+1/2) L/Ny              (DCT-II)
    * c: midpoints (k+1/2) L/Ny              (DST-IV)
    * d: k L/Ny, Ny odd                      (real DFT)
    """

    X: float
    Nx: int
    L: float
    Ny: int
    case: BoundaryCase = BoundaryCase.PERIODIC

    def __post_init__(self):
        object.__setattr__(self, "case", BoundaryCase.parse(self.case))
        if not (isinstance(self.Nx, (int, np.integer)) and self.Nx >= 8 and self.Nx % 2 == 0):
            raise ConfigurationError(f"Nx must be an even integer >= 8, got {self.Nx}")
        if not (isinstance(self.Ny, (int, np.integer)) and self.Ny >= 4):
            raise ConfigurationError(f"Ny must be an integer >= 4, got {self.Ny}")
        if not self.X > 0 or not self.L > 0:
            raise ConfigurationError("X and L must be positive")
        if self.case is BoundaryCase.PERIODIC and self.Ny % 2 == 0:
            raise ConfigurationError("case d needs an odd Ny: an even node count cannot carry an orthonormal Nyquist mode")

    def same_as(self, other: "Grid") -> bool:
        return (self.X, self.Nx, self.L, self.Ny, self.case) == (other.X, other.Nx, other.L, other.Ny, other.case)

    def describe(self) -> dict:
        return {"X": self.X, "Nx": self.Nx, "L": self.L, "Ny": self.Ny, "case": self.case.value}

    @property
    def dx(self) -> float:
        return 2.0 * self.X / self.Nx

    @cached_property
    def x(self) -> np.ndarray:
        return -self.X + self.dx * np.arange(self.Nx)

    @cached_property
    def y(self) -> np.ndarray:
        n, L = self.Ny, self.L
        if self.case is BoundaryCase.DIRICHLET:
            return L * np.arange(1, n + 1) / (n + 1)
        if self.case is BoundaryCase.PERIODIC:
            return L * np.arange(n) / n
        return L * (np.arange(n) + 0.5) / n

    @property
    def y_weight(self) -> float:
        """Uniform y-quadrature weight of the node layout."""
        if self.case is BoundaryCase.DIRICHLET:
            return self.L / (self.Ny + 1)
        return self.L / self.Ny

    @property
    def cell(self) -> float:
        return self.dx * self.y_weight

    @cached_property
    def basis(self) -> EigenBasis:
        return eigen_pairs(self.case, self.L, self.Ny, self.Ny)

    @cached_property
    def mode_index(self) -> np.ndarray:
        """Integer ``j`` of each x-slot, FFT order."""
        return np.fft.fftfreq(self.Nx, d=1.0 / self.Nx).round().astype(int)

    @cached_property
    def xi(self) -> np.ndarray:
        """Wavenumbers pi j / X in FFT order (Nyquist slot negative)."""
        return np.pi * self.mode_index / self.X

    @cached_property
    def kx(self) -> np.ndarray:
        """Wavenumbers used for differentiation: the Nyquist slot is zeroed."""
        k = self.xi.copy()
        k[self.Nx // 2] = 0.0
        return k

    @cached_property
    def _parity(self) -> np.ndarray:
        return np.where(self.mode_index % 2 == 0, 1.0, -1.0)

    @cached_property
    def lam(self) -> np.ndarray:
        return self.basis.eigenvalues

    def mesh(self):
        return np.meshgrid(self.x, self.y, indexing="ij")

    def with_case(self, case) -> "Grid":
        return Grid(self.X, self.Nx, self.L, self.Ny, case)


@dataclass(frozen=True, eq=False)
class Field:
    """Real samples u(x_n, y_k) on ``grid``; values have shape (Nx, Ny)."""

    grid: Grid
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.shape != (self.grid.Nx, self.grid.Ny):
            raise ConfigurationError(f"field shape {v.shape} does not match grid ({self.grid.Nx}, {self.grid.Ny})")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "Field":
        xx, yy = grid.mesh()
        return cls(grid, np.broadcast_to(fn(xx, yy), xx.shape))

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros((grid.Nx, grid.Ny)))

    def __mul__(self, a):
        return Field(self.grid, self.values * a)

    __rmul__ = __mul__

    def __add__(self, other):
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other):
        return Field(self.grid, self.values - other.values)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Coefficients ``c[j, l]`` over the grid's Fourier x eigenbasis product."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != (self.grid.Nx, self.grid.Ny):
            raise ConfigurationError(f"coefficient shape {c.shape} does not match grid")
        object.__setattr__(self, "coeffs", c)

    @property
    def case(self) -> BoundaryCase:
        return self.grid.case


# ---------------------------------------------------------------------------
# one-dimensional transforms; all act on the last axis (y) or axis -2 (x)
# ---------------------------------------------------------------------------


def _y_analysis_real(u, grid: Grid):
    n, case = grid.Ny, grid.case
    s = np.sqrt(grid.y_weight)
    w = FFT_WORKERS
    if case is BoundaryCase.DIRICHLET:
        return s * sfft.dst(u, type=1, norm="ortho", axis=-1, workers=w)
    if case is BoundaryCase.NEUMANN:
        return s * sfft.dct(u, type=2, norm="ortho", axis=-1, workers=w)
    if case is BoundaryCase.MIXED:
        return s * sfft.dst(u, type=4, norm="ortho", axis=-1, workers=w)
    F = sfft.rfft(u, axis=-1, workers=w)
    out = np.empty(u.shape[:-1] + (n,))
    out[..., 0] = F[..., 0].real * np.sqrt(grid.L) / n
    f = np.sqrt(2.0 * grid.L) / n
    out[..., 1::2] = f * F[..., 1:].real
    out[..., 2::2] = -f * F[..., 1:].imag
    return out


def _y_synthesis_real(c, grid: Grid):
    n, case = grid.Ny, grid.case
    s = 1.0 / np.sqrt(grid.y_weight)
    w = FFT_WORKERS
    if case is BoundaryCase.DIRICHLET:
        return s * sfft.idst(c, type=1, norm="ortho", axis=-1, workers=w)
    if case is BoundaryCase.NEUMANN:
        return s * sfft.idct(c, type=2, norm="ortho", axis=-1, workers=w)
    if case is BoundaryCase.MIXED:
        return s * sfft.idst(c, type=4, norm="ortho", axis=-1, workers=w)
    F = np.empty(c.shape[:-1] + ((n + 1) // 2,), dtype=np.complex128)
    F[..., 0] = c[..., 0] * n / np.sqrt(grid.L)
    f = n / np.sqrt(2.0 * grid.L)
    F[..., 1:] = f * (c[..., 1::2] - 1j * c[..., 2::2])
    return sfft.irfft(F, n=n, axis=-1, workers=w)


def y_analysis(u, grid: Grid):
    """Node values -> eigen-coefficients along the last axis."""
    if np.iscomplexobj(u):
        return _y_analysis_real(u.real, grid) + 1j * _y_analysis_real(u.imag, grid)
    return _y_analysis_real(u, grid)


def y_synthesis(c, grid: Grid):
    """Eigen-coefficients -> node values along the last axis."""
    if np.iscomplexobj(c):
        return _y_synthesis_real(c.real, grid) + 1j * _y_synthesis_real(c.imag, grid)
    return _y_synthesis_real(c, grid)


def x_analysis(u, grid: Grid):
    """Node values -> Fourier coefficients along axis -2."""
    c = sfft.fft(u, axis=-2, workers=FFT_WORKERS) / grid.Nx
    return c * grid._parity[:, None]


def x_synthesis(c, grid: Grid):
    """Fourier coefficients -> node values along axis -2 (complex result)."""
    return sfft.ifft(c * grid._parity[:, None], axis=-2, workers=FFT_WORKERS) * grid.Nx


def x_synthesis_real(c, grid: Grid, n: int | None = None):
    """Hermitian coefficients -> real node values, optionally on ``n`` >= Nx points."""
    nx = grid.Nx
    n = nx if n is None else n
    half = c[..., : nx // 2 + 1, :] * grid._parity[: nx // 2 + 1, None]
    half = half.copy()
    if n > nx:
        # drop the Nyquist slot on the padded grid
        half[..., nx // 2, :] = 0.0
    return sfft.irfft(half, n=n, axis=-2, workers=FFT_WORKERS) * n


def x_analysis_real(u, grid: Grid):
    """Real node values on ``n`` >= Nx points -> Nx Fourier coefficients (truncated)."""
    n = u.shape[-2]
    nx = grid.Nx
    F = sfft.rfft(u, axis=-2, workers=FFT_WORKERS) / n
    out = np.zeros(u.shape[:-2] + (nx, u.shape[-1]), dtype=np.complex128)
    out[..., : nx // 2, :] = F[..., : nx // 2, :]
    out[..., nx // 2 + 1 :, :] = np.conj(F[..., nx // 2 - 1 : 0 : -1, :])
    if n == nx:
        out[..., nx // 2, :] = F[..., nx // 2, :].real
    return out * grid._parity[:, None]


def _check_basis(grid: Grid, basis: EigenBasis | None) -> EigenBasis:
    if basis is None:
        return grid.basis
    if basis.case is not grid.case or basis.n != grid.Ny or basis.L != grid.L:
        raise ConfigurationError("basis is not compatible with the field's grid")
    return basis


def to_spectral(field: Field, basis: EigenBasis | None = None) -> SpectralField:
    """Forward transform: DFT in x, eigen-projection in y."""
    grid = field.grid
    _check_basis(grid, basis)
    if field.values.shape != (grid.Nx, grid.Ny):
        raise ConfigurationError("field shape mismatch")
    return SpectralField(grid, x_analysis(y_analysis(field.values, grid), grid))


def from_spectral(sf: SpectralField, basis: EigenBasis | None = None, tol: float = 1e-10) -> Field:
    """Synthesis; raises if the result has an imaginary part above ``tol`` (relative)."""
    grid = sf.grid
    _check_basis(grid, basis)
    u = y_synthesis(x_synthesis(sf.coeffs, grid), grid)
    scale = max(np.max(np.abs(u)), np.finfo(float).tiny)
    if np.max(np.abs(u.imag)) > tol * scale:
        raise NonRealSynthesisError("coefficients are not conjugate-symmetric in j; synthesis is not real")
    return Field(grid, u.real)


def derivative(sf: SpectralField, order_x: int = 0, apply_yy: bool = False) -> SpectralField:
    """Multiply by ``(i xi)^order_x`` and, if ``apply_yy``, by ``-lambda_l``."""
    if order_x not in (0, 1, 2, 3):
        raise ValueError("order_x must be 0..3")
    c = sf.coeffs
    grid = sf.grid
    if order_x:
        c = c * ((1j * grid.kx) ** order_x)[:, None]
    if apply_yy:
        c = c * (-grid.lam)[None, :]
    return SpectralField(grid, c)
