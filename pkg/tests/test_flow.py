"""Tests for the IMEX stepper, the step-size controller and the run driver."""

import math

import numpy as np
import pytest

from sdflow.config import RunConfig
from sdflow.diagnostics import volume
from sdflow.equilibria import cylinder_height
from sdflow.flow import (Event, SolverSettings, adapt_dt, imex_step, initial_state, integrate,
                         run)
from sdflow.geometry import ClearanceError
from sdflow.linearization import eigenvalue, linear_propagator
from sdflow.spectral import Grid, reflect_x, to_spectral

from conftest import smooth_field


def mode_amplitude(rho, m=1, n=0):
    return 2 * to_spectral(rho).coeff(m, n).real


class TestImexStep:
    @pytest.mark.parametrize("dt", [1e-3, 0.1, 10.0])
    def test_zero_is_fixed(self, grid32, dt):
        st = initial_state(grid32.field(np.zeros(grid32.shape)))
        assert imex_step(st, dt).rho.sup_norm() == 0.0

    @pytest.mark.parametrize("scheme", ["imex1", "bdf2"])
    def test_equilibrium_is_fixed(self, grid64, scheme):
        rho = cylinder_height(0.05, 0.0, 1.2, grid64)
        settings = SolverSettings(scheme=scheme)
        st = initial_state(rho, settings)
        for dt in (1e-3, 0.05, 0.1):
            st = imex_step(st, dt, settings)
        assert np.max(np.abs(st.rho.values - rho.values)) < 1e-9

    def test_amplitude_matches_linear_propagator(self):
        g = Grid(2 * np.pi, 2.0, 32, 32)
        delta = 1e-6
        rho = g.evaluate(lambda x, t: delta * np.cos(x) + 0 * t)
        st = initial_state(rho)
        for dt in (0.1, 0.05, 0.025):
            new = imex_step(st, dt)
            ref = linear_propagator(rho, dt)
            ratio = mode_amplitude(new.rho) / delta
            assert ratio == pytest.approx(mode_amplitude(ref) / delta, abs=0.5 * dt**2)
            assert mode_amplitude(ref) / delta == pytest.approx(math.exp(-0.75 * dt), rel=1e-12)

    def test_diagnostics_refreshed(self, grid32):
        rho = smooth_field(grid32, seed=1)
        st = imex_step(initial_state(rho), 1e-3)
        assert st.t == pytest.approx(1e-3)
        assert st.stats.volume == pytest.approx(volume(st.rho), rel=1e-15)
        assert st.stats.sup_norm == st.rho.sup_norm()


class TestAdaptDt:
    @pytest.fixture
    def state(self, grid32):
        st = initial_state(grid32.field(np.zeros(grid32.shape)))
        return st.__class__(st.t, st.rho, 0.01, st.stats, st.rhs)

    def test_zero_error(self, state):
        assert adapt_dt(state, 0.0, dt_max=0.1) == 0.1

    def test_error_at_tolerance(self, state):
        assert adapt_dt(state, 1e-8, tol_step=1e-8) == pytest.approx(0.01, rel=0.1)

    def test_sixteen_times_tolerance_halves(self, state):
        assert adapt_dt(state, 16e-8, tol_step=1e-8, order=1) == pytest.approx(0.005, rel=0.1)

    def test_clamped(self, state):
        assert adapt_dt(state, 1e10, tol_step=1e-8, dt_min=5e-3) == 5e-3
        assert adapt_dt(state, 1e10, tol_step=1e-8) == pytest.approx(0.002)  # shrink limit
        assert adapt_dt(state, 1e-20, tol_step=1e-8, dt_max=0.02) == 0.02

    def test_growth_limited(self, state):
        assert adapt_dt(state, 1e-30, tol_step=1e-8, dt_max=1.0) <= 0.05 + 1e-15

    @pytest.mark.parametrize("bad", [-1.0, float("nan"), float("inf")])
    def test_rejects_invalid(self, state, bad):
        with pytest.raises(ValueError):
            adapt_dt(state, bad)


def fixed_step_final(rho0, n, T, scheme="imex1"):
    s = SolverSettings(dt0=T / n, dt_max=T / n, t_end=T, adaptive=False, scheme=scheme,
                       output_every=10**6)
    out = integrate(rho0, s, keep_snapshots=False)
    assert out.steps == n
    return out.final.rho.values


class TestConvergence:
    # bdf2 approaches order 2 from below (1.76 to 1.89 over these step sizes)
    @pytest.mark.parametrize("scheme,min_order", [("imex1", 0.9), ("bdf2", 1.7)])
    def test_observed_order(self, scheme, min_order):
        g = Grid(2 * np.pi, 1.5, 16, 16)
        rho0 = smooth_field(g, amplitude=0.1, seed=4)
        T = 0.2
        ref = fixed_step_final(rho0, 1280, T, scheme)
        ns = np.array([20, 40, 80])
        errs = [np.max(np.abs(fixed_step_final(rho0, n, T, scheme) - ref)) for n in ns]
        order = -np.polyfit(np.log(ns), np.log(errs), 1)[0]
        assert order >= min_order


class TestSymmetry:
    def test_axisymmetric_stays_axisymmetric(self):
        g = Grid(2 * np.pi, 1.5, 32, 32)
        rho0 = g.evaluate(lambda x, t: 0.05 * np.cos(x) + 0.02 * np.sin(2 * x) + 0 * t)
        out = integrate(rho0, SolverSettings(t_end=1.0))
        for _, rho in out.snapshots:
            assert np.max(np.ptp(rho.values, axis=1)) <= 1e-10

    def test_reflection_symmetric_stays_symmetric(self):
        g = Grid(2 * np.pi, 1.5, 32, 32)
        rho0 = smooth_field(g, amplitude=0.05, seed=9, even=True)
        out = integrate(rho0, SolverSettings(t_end=1.0))
        for _, rho in out.snapshots:
            assert np.max(np.abs(rho.values - reflect_x(rho).values)) <= 1e-10


class TestEvents:
    def test_equilibrium_converges_immediately(self):
        cfg = RunConfig(r=1.5, Nx=32, Ntheta=32, ic_kind="offset_cylinder", ic_ybar=0.1,
                        ic_rbar=1.3)
        out = run(cfg)
        assert out.event == Event.CONVERGED and out.steps == 0
        assert (out.fit.ybar, out.fit.zbar, out.fit.rbar) == pytest.approx((0.1, 0, 1.3),
                                                                           abs=1e-10)

    def test_max_time(self, grid32):
        out = integrate(smooth_field(grid32, amplitude=0.05, seed=2), SolverSettings(t_end=0.05))
        assert out.event == Event.MAX_TIME and not out.failed
        assert out.final.t == pytest.approx(0.05)
        assert out.series[-1].t == pytest.approx(0.05)

    def test_min_radius(self):
        g = Grid(2 * np.pi, 0.8, 16, 16)
        rho0 = g.evaluate(lambda x, t: 0.3 * np.cos(x) + 0 * t)
        out = integrate(rho0, SolverSettings(t_end=50, tol_step=1e-5))
        assert out.event == Event.MIN_RADIUS and out.failed

    def test_blowup(self):
        g = Grid(2 * np.pi, 0.8, 16, 16)
        rho0 = g.evaluate(lambda x, t: 0.3 * np.cos(x) + 0 * t)
        out = integrate(rho0, SolverSettings(t_end=50, tol_step=1e-5, blowup_factor=0.45))
        assert out.event == Event.BLOWUP

    def test_step_collapse(self, grid32):
        s = SolverSettings(dt0=0.1, dt_min=0.1, dt_max=0.1, tol_step=1e-15)
        out = integrate(smooth_field(grid32, amplitude=0.1, seed=3), s)
        assert out.event == Event.STEP_COLLAPSE and out.rejected >= 1

    def test_inadmissible_start(self, grid32):
        with pytest.raises(ClearanceError):
            integrate(grid32.field(np.full(grid32.shape, -1.4999)))

    def test_stable_run_converges(self):
        g = Grid(2 * np.pi, 1.5, 32, 32)
        rho0 = g.evaluate(lambda x, t: 0.01 * (np.cos(x) * np.cos(t) + 0.5 * np.sin(2 * x)))
        out = integrate(rho0, SolverSettings(t_end=50))
        assert out.event == Event.CONVERGED
        assert out.final.stats.residual <= 1e-9 and out.fit.residual <= 1e-6
        areas = [row.area for row in out.series]
        assert all(b <= a + 1e-9 * areas[0] for a, b in zip(areas, areas[1:]))

    def test_unstable_radius_caps_step(self):
        g = Grid(2 * np.pi, 0.8, 16, 16)
        lam = eigenvalue(1, 0, 0.8)
        seen = []
        integrate(g.evaluate(lambda x, t: 1e-4 * np.cos(x) + 0 * t),
                  SolverSettings(t_end=2.0, dt_max=10.0),
                  observer=lambda st: seen.append(st.dt))
        assert max(seen[1:]) <= 0.5 / lam + 1e-15


class TestSettings:
    @pytest.mark.parametrize("kw", [dict(scheme="rk4"), dict(dt0=0), dict(kappa=0.5),
                                    dict(dt_min=1.0, dt_max=0.1), dict(output_every=0)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            SolverSettings(**kw)
