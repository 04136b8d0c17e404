"""
Offset cylinders C(ybar, zbar, rbar) written as height functions over C_r.

The circle ((r + rho) cos t - ybar)^2 + ((r + rho) sin t - zbar)^2 = rbar^2 has the
outer root

    rho_bar(theta) = ybar cos t + zbar sin t + sqrt(rbar^2 - (ybar sin t - zbar cos t)^2) - r.

Every such cylinder is an equilibrium and encloses volume pi rbar^2 a per period,
independent of the offset.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .diagnostics import volume
from .spectral import Grid, HeightField, to_spectral

__all__ = ["CylinderFit", "cylinder_height", "fit_cylinder", "predicted_radius"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CylinderFit:
    ybar: float
    zbar: float
    rbar: float
    residual: float
    converged: bool = True
    iterations: int = 0


def _profile(theta: np.ndarray, ybar: float, zbar: float, rbar: float, r: float):
    c, s = np.cos(theta), np.sin(theta)
    w = s * ybar - c * zbar
    arg = rbar**2 - w**2
    return c, s, w, arg


def cylinder_height(ybar: float, zbar: float, rbar: float, grid: Grid) -> HeightField:
    if not rbar > 0:
        raise ValueError(f"rbar must be positive, got {rbar}")
    if not ybar**2 + zbar**2 < rbar**2:
        raise ValueError("the axis of the offset cylinder must lie inside it "
                         f"(ybar^2 + zbar^2 = {ybar**2 + zbar**2:.6g} >= rbar^2)")
    c, s, w, arg = _profile(grid.theta, ybar, zbar, rbar, grid.r)
    if np.any(arg <= 0):
        raise ValueError("square-root argument non-positive: offset cylinder not a height graph")
    prof = c * ybar + s * zbar + np.sqrt(arg) - grid.r
    return HeightField(grid, np.broadcast_to(prof, grid.shape))


def predicted_radius(vol: float, a: float) -> float:
    """Radius of the cylinder enclosing ``vol`` over one period of length a."""
    if not vol > 0:
        raise ValueError("volume must be positive")
    return float(np.sqrt(vol / (np.pi * a)))


def fit_cylinder(rho: HeightField, *, max_iter: int = 50, step_tol: float = 1e-12) -> CylinderFit:
    """Least-squares offset cylinder by Gauss-Newton with the analytic Jacobian.

    The model is x-independent, so the fit is done on the axial mean of rho
    (the same minimizer as the full-grid L2 problem).  The initial guess takes
    (ybar, zbar) from the (0, +-1) Fourier modes and rbar from the enclosed volume.
    """
    g = rho.grid
    target = rho.values.mean(axis=0)
    theta = g.theta
    c1 = to_spectral(rho).coeff(0, 1)
    p = np.array([2 * c1.real, -2 * c1.imag, predicted_radius(volume(rho), g.a)])

    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        c, s, w, arg = _profile(theta, *p, g.r)
        if np.any(arg <= 0):
            # back off toward the concentric cylinder
            p[:2] *= 0.5
            continue
        root = np.sqrt(arg)
        model = c * p[0] + s * p[1] + root - g.r
        J = np.column_stack([c - w * s / root, s + w * c / root, p[2] / root])
        step, *_ = np.linalg.lstsq(J, target - model, rcond=None)
        p = p + step
        if np.max(np.abs(step)) <= step_tol * max(1.0, abs(p[2])):
            converged = True
            break
    if not converged:
        log.warning("cylinder fit did not converge in %d iterations", max_iter)

    ybar, zbar, rbar = (float(v) for v in p)
    try:
        resid = float(np.max(np.abs(rho.values - cylinder_height(ybar, zbar, rbar, g).values)))
    except ValueError:
        resid, converged = float("inf"), False
    return CylinderFit(ybar, zbar, rbar, resid, converged, it)
