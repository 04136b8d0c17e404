"""
Fourier representation of height functions on one periodic cell of C_r.

A field is sampled on the tensor grid

    x_j = j a / Nx,          j = 0..Nx-1   (axial, period a)
    theta_k = 2 pi k / Ntheta, k = 0..Ntheta-1 (angular, period 2 pi)

and stored with rows indexed by the axial node and columns by the angular node.
Spectral coefficients are normalized so that

    rho(x, theta) = sum_{m,n} rho_hat(m, n) exp(2 pi i m x / a) exp(i n theta),

i.e. ``rho_hat = fft2(values) / (Nx * Ntheta)``, which is the discrete analogue of
(1 / (2 pi a)) times the integral over [0, a] x [0, 2 pi].

Coefficient arrays of :class:`SpectralField` use numpy's FFT ordering; use
:meth:`SpectralField.coeff` or :meth:`SpectralField.centered` for signed indexing.

Internally the geometry code works on the half-spectrum produced by
``rfft2`` (angular axis last); the helpers ``_rfft``/``_irfft`` and
:func:`derivative_multiplier` cover that layout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "Grid",
    "HeightField",
    "SpectralField",
    "make_grid",
    "to_spectral",
    "to_physical",
    "spectral_derivative",
    "shift_x",
    "shift_theta",
    "reflect_x",
    "dealias",
    "grid_integral",
]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [0, a) x [0, 2 pi) over the cylinder of radius r."""

    a: float
    r: float
    Nx: int
    Ntheta: int

    def __post_init__(self):
        for name in ("Nx", "Ntheta"):
            n = getattr(self, name)
            if int(n) != n or n < 8 or n % 2:
                raise ValueError(f"{name} must be an even integer >= 8, got {n}")
            object.__setattr__(self, name, int(n))
        if not (np.isfinite(self.a) and self.a > 0):
            raise ValueError(f"axial period a must be positive, got {self.a}")
        if not (np.isfinite(self.r) and self.r > 0):
            raise ValueError(f"radius r must be positive, got {self.r}")
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "r", float(self.r))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.Nx, self.Ntheta)

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.Nx) * (self.a / self.Nx)

    @property
    def theta(self) -> np.ndarray:
        return np.arange(self.Ntheta) * (2 * np.pi / self.Ntheta)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Broadcastable (x, theta) arrays of shape (Nx, 1) and (1, Ntheta)."""
        return self.x[:, None], self.theta[None, :]

    @property
    def cell_area(self) -> float:
        """Quadrature weight dx * dtheta of the periodic trapezoid rule."""
        return (self.a / self.Nx) * (2 * np.pi / self.Ntheta)

    def m_index(self) -> np.ndarray:
        """Signed axial wavenumbers in FFT order."""
        return np.fft.fftfreq(self.Nx, 1.0 / self.Nx).astype(int)

    def n_index(self) -> np.ndarray:
        """Signed angular wavenumbers in FFT order."""
        return np.fft.fftfreq(self.Ntheta, 1.0 / self.Ntheta).astype(int)

    def field(self, values) -> "HeightField":
        return HeightField(self, values)

    def evaluate(self, func) -> "HeightField":
        """Sample ``func(x, theta)`` (vectorized) on the grid."""
        x, th = self.mesh()
        return HeightField(self, np.broadcast_to(func(x, th), self.shape))


def make_grid(a: float, r: float, Nx: int, Ntheta: int) -> Grid:
    return Grid(a=a, r=r, Nx=Nx, Ntheta=Ntheta)


@dataclass(frozen=True, eq=False)
class HeightField:
    """Real samples of a height function rho on one periodic cell."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"values have shape {v.shape}, grid expects {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("height field contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def _coerce(self, other):
        if isinstance(other, HeightField):
            if other.grid != self.grid:
                raise ValueError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return HeightField(self.grid, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return HeightField(self.grid, self.values - self._coerce(other))

    def __rsub__(self, other):
        return HeightField(self.grid, self._coerce(other) - self.values)

    def __mul__(self, other):
        return HeightField(self.grid, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __neg__(self):
        return HeightField(self.grid, -self.values)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def min_clearance(self) -> float:
        """min over the grid of r + rho."""
        return float(self.grid.r + np.min(self.values))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Complex coefficients rho_hat(m, n) in FFT order."""

    grid: Grid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.shape != self.grid.shape:
            raise ValueError(f"coeffs have shape {c.shape}, grid expects {self.grid.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def coeff(self, m: int, n: int) -> complex:
        """rho_hat(m, n) for signed wavenumbers (aliased modulo the grid)."""
        return complex(self.coeffs[m % self.grid.Nx, n % self.grid.Ntheta])

    def centered(self) -> np.ndarray:
        """Coefficients with m in [-Nx/2, Nx/2), n in [-Ntheta/2, Ntheta/2) ascending."""
        return np.fft.fftshift(self.coeffs)


def to_spectral(f: HeightField) -> SpectralField:
    g = f.grid
    return SpectralField(g, np.fft.fft2(f.values) / (g.Nx * g.Ntheta))


def to_physical(c: SpectralField, *, tol: float = 1e-10) -> HeightField:
    """Inverse of :func:`to_spectral`.

    Raises ``ValueError`` if the coefficients do not describe a real field, i.e. the
    imaginary part of the synthesis exceeds ``tol`` relative to its real part.
    """
    g = c.grid
    v = np.fft.ifft2(c.coeffs) * (g.Nx * g.Ntheta)
    scale = max(1.0, float(np.max(np.abs(v.real))))
    resid = float(np.max(np.abs(v.imag)))
    if resid > tol * scale:
        raise ValueError(
            f"coefficients are not conjugate-symmetric (imaginary residue {resid:.3e})"
        )
    return HeightField(g, v.real)


@lru_cache(maxsize=64)
def _wavenumbers(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Physical wavenumbers (2 pi m / a, n) in FFT order along each axis."""
    kx = 2 * np.pi * grid.m_index() / grid.a
    kt = grid.n_index().astype(float)
    return kx, kt


def _axis_multiplier(k: np.ndarray, order: int, nyquist: int) -> np.ndarray:
    mult = (1j * k) ** order
    if order % 2:
        # odd derivatives: drop the unpaired Nyquist mode
        mult = mult.copy()
        mult[nyquist] = 0.0
    return mult


def spectral_derivative(c: SpectralField, bx: int, btheta: int) -> SpectralField:
    """Apply d^bx/dx^bx d^btheta/dtheta^btheta as a Fourier multiplier."""
    if bx < 0 or btheta < 0 or bx + btheta > 4:
        raise ValueError(f"derivative order ({bx}, {btheta}) outside 0 <= |beta| <= 4")
    g = c.grid
    kx, kt = _wavenumbers(g)
    mx = _axis_multiplier(kx, bx, g.Nx // 2)
    mt = _axis_multiplier(kt, btheta, g.Ntheta // 2)
    return SpectralField(g, c.coeffs * mx[:, None] * mt[None, :])


def _is_whole_cells(s: float, h: float) -> int | None:
    k = s / h
    kr = round(k)
    if abs(k - kr) <= 1e-12 * max(1.0, abs(k)):
        return int(kr)
    return None


def shift_x(f: HeightField, s: float) -> HeightField:
    """Samples of rho(x + s, theta).

    Whole-cell shifts are index rolls (exact); other shifts use phase multipliers,
    with the Nyquist mode treated by its real part so the result stays real.
    """
    g = f.grid
    cells = _is_whole_cells(s, g.a / g.Nx)
    if cells is not None:
        return HeightField(g, np.roll(f.values, -cells, axis=0))
    kx, _ = _wavenumbers(g)
    phase = np.exp(1j * kx * s)
    phase[g.Nx // 2] = np.cos(kx[g.Nx // 2] * s)
    hat = np.fft.fft(f.values, axis=0) * phase[:, None]
    return HeightField(g, np.fft.ifft(hat, axis=0).real)


def shift_theta(f: HeightField, cells: int) -> HeightField:
    """Rotation by a whole number of angular cells: samples of rho(x, theta + cells*dtheta)."""
    return HeightField(f.grid, np.roll(f.values, -int(cells), axis=1))


def reflect_x(f: HeightField) -> HeightField:
    """Samples of rho(-x, theta), via j -> (Nx - j) mod Nx."""
    idx = (-np.arange(f.grid.Nx)) % f.grid.Nx
    return HeightField(f.grid, f.values[idx, :])


@lru_cache(maxsize=64)
def dealias_mask(grid: Grid) -> np.ndarray:
    """Boolean 2/3-rule mask (full FFT layout): keep |m| <= Nx/3 and |n| <= Ntheta/3."""
    m = np.abs(grid.m_index())
    n = np.abs(grid.n_index())
    mask = (3 * m <= grid.Nx)[:, None] & (3 * n <= grid.Ntheta)[None, :]
    mask.setflags(write=False)
    return mask


def dealias(c: SpectralField) -> SpectralField:
    return SpectralField(c.grid, np.where(dealias_mask(c.grid), c.coeffs, 0.0))


def grid_integral(grid: Grid, values) -> float:
    """Periodic trapezoid rule over [0, a] x [0, 2 pi]."""
    return float(np.sum(values) * grid.cell_area)


# --- half-spectrum helpers used by the nonlinear operators -------------------


def _rfft(values: np.ndarray) -> np.ndarray:
    return np.fft.rfft2(values)


def _irfft(hat: np.ndarray, grid: Grid) -> np.ndarray:
    return np.fft.irfft2(hat, s=grid.shape)


@lru_cache(maxsize=256)
def derivative_multiplier(grid: Grid, bx: int, btheta: int) -> np.ndarray:
    """Multiplier for d_x^bx d_theta^btheta in the rfft2 layout (Nx, Ntheta//2 + 1)."""
    kx, _ = _wavenumbers(grid)
    kt = np.arange(grid.Ntheta // 2 + 1, dtype=float)
    mx = _axis_multiplier(kx, bx, grid.Nx // 2)
    mt = _axis_multiplier(kt, btheta, grid.Ntheta // 2)
    out = mx[:, None] * mt[None, :]
    out.setflags(write=False)
    return out


@lru_cache(maxsize=64)
def rdealias_mask(grid: Grid) -> np.ndarray:
    """2/3-rule mask in the rfft2 layout."""
    m = np.abs(grid.m_index())
    n = np.arange(grid.Ntheta // 2 + 1)
    mask = (3 * m <= grid.Nx)[:, None] & (3 * n <= grid.Ntheta)[None, :]
    mask.setflags(write=False)
    return mask


def derivatives(grid: Grid, values: np.ndarray, orders, *, filtered: bool = False) -> dict:
    """Spectral derivatives of a real array for every (bx, btheta) in ``orders``.

    With ``filtered`` the input spectrum is first truncated by the 2/3 rule;
    the (0, 0) entry is then the truncated field itself.
    """
    hat = _rfft(values)
    if filtered:
        hat = hat * rdealias_mask(grid)
    out = {}
    for bx, bt in orders:
        if bx == 0 and bt == 0:
            out[(0, 0)] = _irfft(hat, grid) if filtered else np.asarray(values, dtype=float)
        else:
            out[(bx, bt)] = _irfft(hat * derivative_multiplier(grid, bx, bt), grid)
    return out


def filter_array(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Apply the 2/3-rule truncation to a real array."""
    return _irfft(_rfft(values) * rdealias_mask(grid), grid)
