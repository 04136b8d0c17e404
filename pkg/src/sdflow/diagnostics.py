"""
Volume, area and their rates of change on one axial period.

    Vol(rho) = 1/2 int (r + rho)^2 dtheta dx
    A(rho)   = int sqrt(gdet) dtheta dx
    dA/dt    = -int gdet^{-1/2} Q(H_x, H_t) dtheta dx,
    Q(u, v)  = (R^2 + rho_t^2) u^2 - 2 rho_x rho_t u v + (1 + rho_x^2) v^2,

all integrals by the periodic trapezoid rule.  Q is the cofactor form of the
metric, positive definite with determinant gdet, so the rate is never positive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import _curvature, _jets, _metric, check_clearance
from .spectral import HeightField, derivatives, grid_integral

__all__ = [
    "DiagnosticsRow",
    "volume",
    "area",
    "dVol_dt",
    "dA_dt",
    "dissipation_lower_bound",
]


@dataclass(frozen=True)
class DiagnosticsRow:
    t: float
    volume: float
    area: float
    dA_dt_formula: float
    min_clearance: float
    sup_norm: float
    residual: float

    FIELDS = ("t", "volume", "area", "dA_dt_formula", "min_clearance", "sup_norm", "residual")

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, k) for k in self.FIELDS)


def volume(rho: HeightField) -> float:
    return 0.5 * grid_integral(rho.grid, (rho.grid.r + rho.values) ** 2)


def area(rho: HeightField) -> float:
    check_clearance(rho)
    d = derivatives(rho.grid, rho.values, ((1, 0), (0, 1)))
    d[(0, 0)] = rho.values
    gdet = _metric(rho.grid.r, d)[4]
    return grid_integral(rho.grid, np.sqrt(gdet))


def dVol_dt(rho: HeightField, rhodot: HeightField) -> float:
    return grid_integral(rho.grid, (rho.grid.r + rho.values) * rhodot.values)


def _gradient_form(rho: HeightField, dealias: bool):
    check_clearance(rho)
    d = _jets(rho, dealias)
    g = rho.grid
    H = _curvature(g.r, d)
    dH = derivatives(g, H, ((1, 0), (0, 1)), filtered=dealias)
    R, g11, g12, g22, gdet = _metric(g.r, d)
    return R, g11, g12, g22, gdet, dH[(1, 0)], dH[(0, 1)]


def dA_dt(rho: HeightField, *, dealias: bool = True) -> float:
    R, g11, g12, g22, gdet, hx, ht = _gradient_form(rho, dealias)
    q = g22 * hx**2 - 2.0 * g12 * hx * ht + g11 * ht**2
    return -grid_integral(rho.grid, q / np.sqrt(gdet))


def dissipation_lower_bound(rho: HeightField, *, dealias: bool = True) -> float:
    """-int gdet^{-1/2} (R^2 H_x^2 + H_t^2); dA_dt never exceeds this."""
    R, g11, g12, g22, gdet, hx, ht = _gradient_form(rho, dealias)
    return -grid_integral(rho.grid, (R**2 * hx**2 + ht**2) / np.sqrt(gdet))
