"""
Geometry of the surface Gamma(rho) = {p + rho(p) nu(p)} over the cylinder C_r.

With R = r + rho and subscripts for partial derivatives, the parametrization
(x, theta) -> (x, R cos theta, R sin theta) gives

    g11 = 1 + rho_x^2,   g12 = rho_x rho_theta,   g22 = R^2 + rho_theta^2,
    gdet = R^2 (1 + rho_x^2) + rho_theta^2 = g11 g22 - g12^2.

The mean curvature (positive, 1/r, on C_r itself) is

    H = [rho_theta^2 - R (g22 rho_xx + g11 rho_tt - 2 g12 rho_xt)] / gdet^{3/2}
        + gdet^{-1/2},

and the surface diffusion law V = Delta_Gamma H becomes rho_t = G(rho) with

    G(rho) = (1/R) { d_x[(g22 H_x - g12 H_t)/sqrt(gdet)]
                   + d_t[(g11 H_t - g12 H_x)/sqrt(gdet)] }.

All derivatives are spectral.  With ``dealias=True`` (the default) every field
that enters a pointwise product (rho, H and the two fluxes) is truncated by the
2/3 rule before it is differentiated, so products are formed from band-limited
factors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import (
    Grid,
    HeightField,
    derivative_multiplier,
    derivatives,
    filter_array,
    rdealias_mask,
    _irfft,
    _rfft,
)

__all__ = [
    "ClearanceError",
    "GeometryBundle",
    "PrincipalCoefficients",
    "default_clearance",
    "check_clearance",
    "geometry_bundle",
    "metric_det",
    "mean_curvature",
    "surface_laplacian",
    "evolution_operator",
    "principal_coefficients",
    "principal_symbol",
    "ellipticity_bounds",
    "normal_velocity",
]

_FIRST_TWO = ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))


class ClearanceError(ValueError):
    """Raised when r + rho does not stay above the required clearance."""

    def __init__(self, min_radius: float, clearance: float):
        self.min_radius = min_radius
        self.clearance = clearance
        super().__init__(
            f"min(r + rho) = {min_radius:.6g} violates the clearance bound {clearance:.6g}"
        )


def default_clearance(r: float) -> float:
    return 1e-3 * r


def check_clearance(rho: HeightField, clearance: float = 0.0) -> None:
    mr = rho.min_clearance()
    if not mr > clearance:
        raise ClearanceError(mr, clearance)


@dataclass(frozen=True, eq=False)
class GeometryBundle:
    gdet: np.ndarray
    H: np.ndarray
    g11: np.ndarray
    g12: np.ndarray
    g22: np.ndarray
    II11: np.ndarray
    II12: np.ndarray
    II22: np.ndarray
    derivs: dict


@dataclass(frozen=True, eq=False)
class PrincipalCoefficients:
    b40: np.ndarray
    b31: np.ndarray
    b22: np.ndarray
    b13: np.ndarray
    b04: np.ndarray

    def as_dict(self) -> dict:
        return {(4, 0): self.b40, (3, 1): self.b31, (2, 2): self.b22,
                (1, 3): self.b13, (0, 4): self.b04}


def _jets(rho: HeightField, dealias: bool, orders=_FIRST_TWO) -> dict:
    return derivatives(rho.grid, rho.values, orders, filtered=dealias)


def _metric(r: float, d: dict):
    R = r + d[(0, 0)]
    rx, rt = d[(1, 0)], d[(0, 1)]
    g11 = 1.0 + rx**2
    g12 = rx * rt
    g22 = R**2 + rt**2
    gdet = R**2 * g11 + rt**2
    return R, g11, g12, g22, gdet


def _curvature(r: float, d: dict) -> np.ndarray:
    R, g11, g12, g22, gdet = _metric(r, d)
    rt = d[(0, 1)]
    num = rt**2 - R * (g22 * d[(2, 0)] + g11 * d[(0, 2)] - 2.0 * g12 * d[(1, 1)])
    return num / gdet**1.5 + 1.0 / np.sqrt(gdet)


def geometry_bundle(rho: HeightField, *, dealias: bool = True) -> GeometryBundle:
    """Metric, second fundamental form, mean curvature and derivatives of rho up to order 4."""
    check_clearance(rho)
    orders = [(i, j) for i in range(5) for j in range(5 - i)]
    d = _jets(rho, dealias, orders)
    r = rho.grid.r
    R, g11, g12, g22, gdet = _metric(r, d)
    sq = np.sqrt(gdet)
    rx, rt = d[(1, 0)], d[(0, 1)]
    return GeometryBundle(
        gdet=gdet,
        H=_curvature(r, d),
        g11=g11,
        g12=g12,
        g22=g22,
        II11=R * d[(2, 0)] / sq,
        II12=(R * d[(1, 1)] - rx * rt) / sq,
        II22=(R * (d[(0, 2)] - R) - 2.0 * rt**2) / sq,
        derivs=d,
    )


def metric_det(rho: HeightField, *, dealias: bool = True) -> np.ndarray:
    check_clearance(rho)
    d = _jets(rho, dealias, ((0, 0), (1, 0), (0, 1)))
    return _metric(rho.grid.r, d)[4]


def mean_curvature(rho: HeightField, *, dealias: bool = True) -> np.ndarray:
    check_clearance(rho)
    return _curvature(rho.grid.r, _jets(rho, dealias))


def _fluxes(grid: Grid, d: dict, f: np.ndarray, dealias: bool):
    """The bracketed divergence-form fluxes of Delta_Gamma applied to f, spectrum of each."""
    R, g11, g12, g22, gdet = _metric(grid.r, d)
    fhat = _rfft(f)
    if dealias:
        fhat = fhat * rdealias_mask(grid)
    fx = _irfft(fhat * derivative_multiplier(grid, 1, 0), grid)
    ft = _irfft(fhat * derivative_multiplier(grid, 0, 1), grid)
    sq = np.sqrt(gdet)
    jx = _rfft((g22 * fx - g12 * ft) / sq)
    jt = _rfft((g11 * ft - g12 * fx) / sq)
    if dealias:
        mask = rdealias_mask(grid)
        jx = jx * mask
        jt = jt * mask
    div = _irfft(jx * derivative_multiplier(grid, 1, 0) + jt * derivative_multiplier(grid, 0, 1), grid)
    return R, gdet, div


def surface_laplacian(rho: HeightField, f: HeightField, *, dealias: bool = True) -> np.ndarray:
    """Laplace-Beltrami operator of Gamma(rho) applied to f."""
    check_clearance(rho)
    if f.grid != rho.grid:
        raise ValueError("rho and f live on different grids")
    d = _jets(rho, dealias)
    _, gdet, div = _fluxes(rho.grid, d, f.values, dealias)
    return div / np.sqrt(gdet)


def _evolution_values(grid: Grid, values: np.ndarray, dealias: bool) -> np.ndarray:
    d = derivatives(grid, values, _FIRST_TWO, filtered=dealias)
    H = _curvature(grid.r, d)
    R, _, div = _fluxes(grid, d, H, dealias)
    return div / R


def evolution_operator(rho: HeightField, *, clearance: float | None = None,
                       dealias: bool = True) -> HeightField:
    """G(rho), the right-hand side of rho_t = G(rho).

    ``clearance`` defaults to 1e-3 r; fields with min(r + rho) below it are rejected.
    """
    if clearance is None:
        clearance = default_clearance(rho.grid.r)
    check_clearance(rho, clearance)
    return HeightField(rho.grid, _evolution_values(rho.grid, rho.values, dealias))


def _coefficients(r: float, d: dict) -> PrincipalCoefficients:
    R, g11, g12, g22, gdet = _metric(r, d)
    g2 = gdet**2
    return PrincipalCoefficients(
        b40=g22**2 / g2,
        b31=-4.0 * g12 * g22 / g2,
        b22=(2.0 * g22 * g11 + 4.0 * g12**2) / g2,
        b13=-4.0 * g12 * g11 / g2,
        b04=g11**2 / g2,
    )


def principal_coefficients(rho: HeightField, *, dealias: bool = True) -> PrincipalCoefficients:
    """The five fourth-order coefficients b_(j,k) of the quasilinear operator A(rho)."""
    check_clearance(rho)
    return _coefficients(rho.grid.r, _jets(rho, dealias, ((0, 0), (1, 0), (0, 1))))


def principal_symbol(rho: HeightField, xi, *, dealias: bool = True) -> np.ndarray:
    """sum_{j+k=4} b_(j,k) xi_1^j xi_2^k at every grid point."""
    x1, x2 = (float(v) for v in xi)
    b = principal_coefficients(rho, dealias=dealias)
    return (b.b40 * x1**4 + b.b31 * x1**3 * x2 + b.b22 * x1**2 * x2**2
            + b.b13 * x1 * x2**3 + b.b04 * x2**4)


def ellipticity_bounds(rho: HeightField, *, ndirs: int = 64,
                       dealias: bool = True) -> tuple[float, float]:
    """(min, max) of the principal symbol over grid points and unit directions.

    The symbol is even in xi, so directions phi = pi k / ndirs, k < ndirs, cover
    the circle; ``ndirs`` is rounded up to a multiple of 4 so both axes are sampled.
    A returned minimum <= 0 signals loss of ellipticity.
    """
    ndirs = 4 * -(-int(ndirs) // 4)
    b = principal_coefficients(rho, dealias=dealias)
    phi = np.pi * np.arange(ndirs) / ndirs
    c1, c2 = np.inf, -np.inf
    for p in phi:
        x1, x2 = np.cos(p), np.sin(p)
        s = (b.b40 * x1**4 + b.b31 * x1**3 * x2 + b.b22 * x1**2 * x2**2
             + b.b13 * x1 * x2**3 + b.b04 * x2**4)
        c1 = min(c1, float(s.min()))
        c2 = max(c2, float(s.max()))
    return c1, c2


def normal_velocity(rho: HeightField, rhodot: HeightField, *, dealias: bool = True) -> np.ndarray:
    """V = (r + rho) rho_t / sqrt(gdet)."""
    check_clearance(rho)
    d = _jets(rho, dealias, ((0, 0), (1, 0), (0, 1)))
    R, *_, gdet = _metric(rho.grid.r, d)
    return R * rhodot.values / np.sqrt(gdet)


def filtered(rho: HeightField) -> HeightField:
    """The 2/3-rule truncation of rho (what the dealiased operators actually see)."""
    return HeightField(rho.grid, filter_array(rho.grid, rho.values))
