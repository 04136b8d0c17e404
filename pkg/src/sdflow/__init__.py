"""
sdflow: surface diffusion flow of height functions over a cylinder.

A surface r + rho(x, theta) around the x axis evolves by V = Laplace-Beltrami
of the mean curvature.  The package provides a Fourier pseudospectral
discretization of the resulting fourth-order equation rho_t = G(rho), its
linearization at the cylinder, the offset-cylinder equilibria, an adaptive IMEX
integrator, conserved/dissipated diagnostics, Neumann ends via even extension,
and a batch command line interface.
"""

__version__ = "0.1.0"

from .spectral import (Grid, HeightField, SpectralField, make_grid, to_spectral, to_physical,
                       spectral_derivative, shift_x, reflect_x, dealias)
from .geometry import (ClearanceError, metric_det, mean_curvature, surface_laplacian,
                       evolution_operator, principal_coefficients, principal_symbol,
                       ellipticity_bounds, normal_velocity)
from .linearization import (SpectrumEntry, apply_DG0, eigenvalue, spectrum_table,
                            kernel_projection, linear_propagator)
from .equilibria import CylinderFit, cylinder_height, fit_cylinder, predicted_radius
from .diagnostics import DiagnosticsRow, volume, area, dVol_dt, dA_dt
from .flow import Event, FlowState, RunOutcome, SolverSettings, imex_step, adapt_dt, integrate, run
from .neumann import NeumannField, even_extend, restrict, check_neumann, run_neumann
from .config import ConfigError, RunConfig, parse_config, load_config

__all__ = [
    "Grid", "HeightField", "SpectralField", "make_grid", "to_spectral", "to_physical",
    "spectral_derivative", "shift_x", "reflect_x", "dealias",
    "ClearanceError", "metric_det", "mean_curvature", "surface_laplacian",
    "evolution_operator", "principal_coefficients", "principal_symbol",
    "ellipticity_bounds", "normal_velocity",
    "SpectrumEntry", "apply_DG0", "eigenvalue", "spectrum_table", "kernel_projection",
    "linear_propagator",
    "CylinderFit", "cylinder_height", "fit_cylinder", "predicted_radius",
    "DiagnosticsRow", "volume", "area", "dVol_dt", "dA_dt",
    "Event", "FlowState", "RunOutcome", "SolverSettings", "imex_step", "adapt_dt",
    "integrate", "run",
    "NeumannField", "even_extend", "restrict", "check_neumann", "run_neumann",
    "ConfigError", "RunConfig", "parse_config", "load_config",
]
