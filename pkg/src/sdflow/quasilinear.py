"""
Quasilinear split G(rho) = -A(rho) rho + F(rho).

A(rho) rho = sum_{|beta| = 3, 4} b_beta(rho, d rho, d^2 rho) d^beta rho.  The
fourth-order coefficients have closed forms (see :mod:`sdflow.geometry`); the
third-order ones are long, so they are obtained here by symbolic expansion of G
in the jet variables (rho, rho_x, ..., rho_tttt) and compiled with
``sympy.lambdify`` on first use.  G is affine in every derivative of order
three and four, hence b_beta = -dG/d(rho_beta) exactly.  F is defined by
subtraction, F := G(rho) + A(rho) rho, and depends on derivatives up to order two.

The symbolic derivation takes a few seconds and is cached for the process.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .geometry import check_clearance, evolution_operator
from .spectral import HeightField, derivatives

__all__ = ["JET_ORDERS", "jet_operator", "third_order_coefficients", "quasilinear_split"]

JET_ORDERS = tuple((i, j) for i in range(5) for j in range(5 - i))
THIRD = ((3, 0), (2, 1), (1, 2), (0, 3))
FOURTH = ((4, 0), (3, 1), (2, 2), (1, 3), (0, 4))


@lru_cache(maxsize=1)
def _symbolic():
    import sympy as sp

    x, t, r = sp.symbols("x theta r", real=True)
    f = sp.Function("rho")(x, t)
    R = r + f
    fx, ft = f.diff(x), f.diff(t)
    g11, g12, g22 = 1 + fx**2, fx * ft, R**2 + ft**2
    gdet = R**2 * g11 + ft**2
    H = (ft**2 - R * (g22 * f.diff(x, 2) + g11 * f.diff(t, 2) - 2 * g12 * f.diff(x, t))) \
        / gdet ** sp.Rational(3, 2) + 1 / sp.sqrt(gdet)
    Hx, Ht = H.diff(x), H.diff(t)
    G = ((g22 * Hx - g12 * Ht) / sp.sqrt(gdet)).diff(x) \
        + ((g11 * Ht - g12 * Hx) / sp.sqrt(gdet)).diff(t)
    G = G / R

    jets = {o: sp.Symbol(f"d{o[0]}{o[1]}") for o in JET_ORDERS}
    subs = {}
    # highest orders first so that lower derivatives are not replaced inside them
    for (i, j) in sorted(JET_ORDERS, key=lambda o: -sum(o)):
        if i + j == 0:
            continue
        expr = f
        if i:
            expr = expr.diff(x, i)
        if j:
            expr = expr.diff(t, j)
        subs[expr] = jets[(i, j)]
    G = G.subs(subs).subs(f, jets[(0, 0)])

    args = [r] + [jets[o] for o in JET_ORDERS]
    g_fn = sp.lambdify(args, G, modules="numpy", cse=True)
    b_fns = {o: sp.lambdify(args, -sp.diff(G, jets[o]), modules="numpy", cse=True)
             for o in THIRD + FOURTH}
    return g_fn, b_fns


def _jet_arrays(rho: HeightField, dealias: bool):
    d = derivatives(rho.grid, rho.values, JET_ORDERS, filtered=dealias)
    return [rho.grid.r] + [d[o] for o in JET_ORDERS], d


def _broadcast(val, shape):
    return np.broadcast_to(np.asarray(val, dtype=float), shape).copy()


def jet_operator(rho: HeightField, *, dealias: bool = True) -> np.ndarray:
    """G(rho) evaluated pointwise from the symbolic jet expression.

    Independent of the divergence-form evaluation in :mod:`sdflow.geometry`;
    used to cross-check it.
    """
    check_clearance(rho)
    g_fn, _ = _symbolic()
    args, _ = _jet_arrays(rho, dealias)
    return _broadcast(g_fn(*args), rho.grid.shape)


def third_order_coefficients(rho: HeightField, *, dealias: bool = True) -> dict:
    """b_beta for |beta| = 3, keyed by (bx, btheta)."""
    check_clearance(rho)
    _, b_fns = _symbolic()
    args, _ = _jet_arrays(rho, dealias)
    return {o: _broadcast(b_fns[o](*args), rho.grid.shape) for o in THIRD}


def quasilinear_split(rho: HeightField, *, dealias: bool = True):
    """Return (A(rho) rho, F(rho), coefficients) with G(rho) = -A(rho) rho + F(rho).

    ``coefficients`` maps every |beta| in {3, 4} to its b_beta field.  G here is the
    divergence-form operator, so F absorbs nothing but the lower-order remainder.
    """
    check_clearance(rho)
    _, b_fns = _symbolic()
    args, d = _jet_arrays(rho, dealias)
    coeffs = {o: _broadcast(b_fns[o](*args), rho.grid.shape) for o in THIRD + FOURTH}
    a_rho = sum(coeffs[o] * d[o] for o in THIRD + FOURTH)
    G = evolution_operator(rho, clearance=0.0, dealias=dealias).values
    return HeightField(rho.grid, a_rho), HeightField(rho.grid, G + a_rho), coeffs
