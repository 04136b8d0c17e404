"""
Linearization of G at the reference cylinder rho = 0.

    DG(0) h = -(d_x^2 + r^-2 d_t^2)(d_x^2 + r^-2 d_t^2 + r^-2) h

is diagonal in the Fourier basis exp(2 pi i m x / a) exp(i n theta) with eigenvalue

    lambda(m, n) = -q (q - r^-2),   q = (2 pi m / a)^2 + n^2 / r^2.

Its kernel on a generic grid is span{1, cos theta, sin theta}.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .spectral import Grid, HeightField, grid_integral, _irfft, _rfft, _wavenumbers

__all__ = [
    "SpectrumEntry",
    "eigenvalue",
    "multiplier",
    "apply_DG0",
    "spectrum_table",
    "kernel_projection",
    "linear_propagator",
    "KERNEL_MODES",
]

KERNEL_MODES = frozenset({(0, 0), (0, 1), (0, -1)})


@dataclass(frozen=True)
class SpectrumEntry:
    m: int
    n: int
    lam: float
    multiplicity: int = 1

    @property
    def is_kernel(self) -> bool:
        return (self.m, self.n) in KERNEL_MODES


def eigenvalue(m: int, n: int, r: float, a: float = 2 * np.pi) -> float:
    q = (2 * np.pi * m / a) ** 2 + n**2 / r**2
    return float(-q * (q - 1.0 / r**2)) + 0.0  # + 0.0 turns -0.0 into 0.0


def multiplier(grid: Grid, sign: float = 1.0) -> np.ndarray:
    """lambda(m, n) on the full FFT layout. ``sign`` exists for negative-control checks."""
    kx, kt = _wavenumbers(grid)
    q = kx[:, None] ** 2 + kt[None, :] ** 2 / grid.r**2
    return sign * (-q * (q - 1.0 / grid.r**2))


@lru_cache(maxsize=64)
def _rmultiplier(grid: Grid, sign: float) -> np.ndarray:
    # lambda is even in (m, n), so the half spectrum carries all of it
    out = multiplier(grid, sign)[:, : grid.Ntheta // 2 + 1].copy()
    out.setflags(write=False)
    return out


def apply_DG0(h: HeightField, *, sign: float = 1.0) -> HeightField:
    g = h.grid
    return HeightField(g, _irfft(_rfft(h.values) * _rmultiplier(g, float(sign)), g))


def spectrum_table(r: float, a: float = 2 * np.pi, mmax: int = 4, nmax: int = 4,
                   *, rel_tol: float = 1e-12) -> list[SpectrumEntry]:
    """All eigenvalues for |m| <= mmax, |n| <= nmax, sorted descending.

    ``multiplicity`` counts the table entries sharing the same eigenvalue
    (to ``rel_tol``).  Ties are ordered by (|m|, |n|, m, n).
    """
    if mmax < 1 or nmax < 1:
        raise ValueError("mmax and nmax must be >= 1")
    rows = [(eigenvalue(m, n, r, a), m, n)
            for m in range(-mmax, mmax + 1) for n in range(-nmax, nmax + 1)]
    rows.sort(key=lambda e: (-e[0], abs(e[1]), abs(e[2]), e[1], e[2]))

    # group equal eigenvalues (rows are sorted, so groups are contiguous)
    groups, start = [], 0
    for i in range(1, len(rows) + 1):
        if i == len(rows) or not np.isclose(rows[i][0], rows[start][0],
                                            rtol=rel_tol, atol=rel_tol):
            groups.append((start, i))
            start = i
    out = []
    for s, e in groups:
        out.extend(SpectrumEntry(m, n, lam, e - s) for lam, m, n in rows[s:e])
    return out


def kernel_projection(h: HeightField):
    """Orthogonal projection onto span{1, cos theta, sin theta}.

    Returns (c0, c_cos, c_sin, remainder) with h = c0 + c_cos cos(theta)
    + c_sin sin(theta) + remainder and the remainder orthogonal to all three
    in L2([0, a] x [0, 2 pi]).
    """
    g = h.grid
    _, th = g.mesh()
    cos, sin = np.cos(th), np.sin(th)
    c0 = grid_integral(g, h.values) / (2 * np.pi * g.a)
    cc = grid_integral(g, h.values * cos) / (np.pi * g.a)
    cs = grid_integral(g, h.values * sin) / (np.pi * g.a)
    rem = h.values - c0 - cc * cos - cs * sin
    return c0, cc, cs, HeightField(g, rem)


def linear_propagator(h: HeightField, t: float) -> HeightField:
    """exp(t DG(0)) h."""
    if t < 0:
        raise ValueError("linear_propagator is only defined for t >= 0")
    g = h.grid
    hat = np.fft.fft2(h.values) * np.exp(t * multiplier(g))
    return HeightField(g, np.fft.ifft2(hat).real)
