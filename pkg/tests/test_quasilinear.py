"""Tests for the quasilinear split G = -A(rho) rho + F(rho)."""

import numpy as np
import pytest

from sdflow.geometry import evolution_operator, principal_coefficients
from sdflow.quasilinear import (FOURTH, JET_ORDERS, THIRD, _symbolic, jet_operator,
                                quasilinear_split, third_order_coefficients)
from sdflow.spectral import Grid

from conftest import smooth_field


@pytest.fixture(scope="module")
def fns():
    return _symbolic()


class TestJetOperator:
    # the jet form multiplies derivatives of rho pointwise while the divergence
    # form differentiates products, so they agree up to spectral truncation error

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_matches_divergence_form(self, seed):
        g = Grid(2 * np.pi, 1.5, 128, 128)
        rho = smooth_field(g, amplitude=0.3, seed=seed)
        G = evolution_operator(rho).values
        assert np.max(np.abs(jet_operator(rho) - G)) < 1e-9 * np.max(np.abs(G))

    def test_discrepancy_decays_with_resolution(self):
        gaps = []
        for N in (32, 64, 128):
            rho = smooth_field(Grid(2 * np.pi, 1.5, N, N), amplitude=0.3, seed=0)
            gaps.append(np.max(np.abs(jet_operator(rho) - evolution_operator(rho).values)))
        assert gaps[1] < gaps[0] / 100 and gaps[2] < gaps[1] / 100

    def test_zero(self, grid32):
        assert np.max(np.abs(jet_operator(grid32.field(np.zeros(grid32.shape))))) == 0.0


class TestSplit:
    @pytest.mark.parametrize("seed", [3, 4])
    def test_reassembles_G(self, grid64, seed):
        rho = smooth_field(grid64, seed=seed)
        a_rho, F, _ = quasilinear_split(rho)
        G = evolution_operator(rho).values
        assert np.max(np.abs(-a_rho.values + F.values - G)) < 1e-12 * np.max(np.abs(G))

    @pytest.mark.parametrize("seed", [5, 6])
    def test_fourth_order_coefficients_match_closed_forms(self, grid64, seed):
        rho = smooth_field(grid64, amplitude=0.4, seed=seed)
        _, _, coeffs = quasilinear_split(rho)
        closed = principal_coefficients(rho).as_dict()
        for o in FOURTH:
            np.testing.assert_allclose(coeffs[o], closed[o], rtol=1e-12, atol=1e-14)

    def test_flat_third_order_coefficients_vanish(self, grid32):
        b = third_order_coefficients(grid32.field(np.zeros(grid32.shape)))
        assert set(b) == set(THIRD)
        assert all(np.max(np.abs(v)) == 0.0 for v in b.values())

    def test_third_order_by_finite_differences(self, fns):
        # b_beta = -dG/d(rho_beta): G is affine in that jet variable
        g_fn, b_fns = fns
        rng = np.random.default_rng(7)
        jets = {o: rng.normal(scale=0.3) for o in JET_ORDERS}
        for o in THIRD + FOURTH:
            up, dn = dict(jets), dict(jets)
            up[o] += 0.5
            dn[o] -= 0.5
            fd = (g_fn(1.5, *[up[k] for k in JET_ORDERS])
                  - g_fn(1.5, *[dn[k] for k in JET_ORDERS]))
            assert -fd == pytest.approx(b_fns[o](1.5, *[jets[k] for k in JET_ORDERS]),
                                        rel=1e-10, abs=1e-12)

    def test_F_independent_of_high_jets(self, fns):
        g_fn, b_fns = fns
        rng = np.random.default_rng(8)
        base = {o: rng.normal(scale=0.3) for o in JET_ORDERS}

        def F(j):
            args = [1.5] + [j[k] for k in JET_ORDERS]
            return g_fn(*args) + sum(b_fns[o](*args) * j[o] for o in THIRD + FOURTH)

        ref = F(base)
        for _ in range(5):
            moved = dict(base)
            for o in THIRD + FOURTH:
                moved[o] = rng.normal(scale=2.0)
            assert F(moved) == pytest.approx(ref, rel=1e-10, abs=1e-12)
