"""
Time integration of rho_t = G(rho).

The stiff part is handled with the flat-state linearization L = DG(0), which is
diagonal in Fourier space.  One IMEX Euler step solves

    (I - dt kappa L) rho_new = rho + dt (G(rho) - kappa L rho),

so exact equilibria (G = 0) are fixed points for every dt.  With dealiasing on,
G only sees the 2/3-rule band of rho, so the explicit term subtracts kappa L rho
on that band only; modes outside it are then damped by the implicit linear
part instead of being left neutral.  The optional
``bdf2`` scheme is the variable-step semi-implicit BDF2 with the explicit part
N = G - kappa L extrapolated linearly.

Step sizes are chosen by a PI controller.  For ``imex1`` the local error is
estimated by step doubling and the two half steps are kept; for ``bdf2`` the
estimate is the difference to an IMEX Euler step from the same state.

For r < 1 the multiplier L has finitely many positive entries; steps are capped
at dt <= 1 / (2 kappa max(L)) so that 1 - dt kappa L >= 1/2 everywhere.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .diagnostics import DiagnosticsRow, area, dA_dt, volume
from .equilibria import CylinderFit, fit_cylinder
from .geometry import ClearanceError, _evolution_values, default_clearance
from .linearization import multiplier
from .spectral import Grid, HeightField, dealias_mask

__all__ = [
    "Event",
    "Stats",
    "FlowState",
    "RunOutcome",
    "SolverSettings",
    "initial_state",
    "imex_step",
    "adapt_dt",
    "integrate",
    "run",
]

log = logging.getLogger(__name__)


class Event:
    CONVERGED = "Converged"
    MAX_TIME = "MaxTime"
    BLOWUP = "Blowup"
    MIN_RADIUS = "MinRadiusViolation"
    STEP_COLLAPSE = "StepCollapse"

    FAILURES = frozenset({BLOWUP, MIN_RADIUS, STEP_COLLAPSE})


@dataclass(frozen=True)
class SolverSettings:
    dt0: float = 1e-4
    dt_min: float = 1e-12
    dt_max: float = 0.1
    tol_step: float = 1e-8
    tol_residual: float = 1e-9
    tol_fit: float = 1e-6
    t_end: float = 50.0
    scheme: str = "imex1"
    kappa: float = 1.0
    dealias: bool = True
    adaptive: bool = True
    clearance: float | None = None  # absolute; None -> 1e-3 r
    output_every: int = 10
    blowup_factor: float = 10.0

    def __post_init__(self):
        if self.scheme not in ("imex1", "bdf2"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        for name in ("dt0", "dt_min", "dt_max", "tol_step", "tol_residual", "tol_fit", "t_end"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.dt_min > self.dt_max:
            raise ValueError("dt_min exceeds dt_max")
        if self.kappa < 1:
            raise ValueError("kappa must be >= 1")
        if self.output_every < 1:
            raise ValueError("output_every must be >= 1")


@dataclass(frozen=True)
class Stats:
    volume: float
    area: float
    min_clearance: float
    sup_norm: float
    residual: float


@dataclass(frozen=True, eq=False)
class FlowState:
    t: float
    rho: HeightField
    dt: float
    stats: Stats
    rhs: np.ndarray = field(repr=False)  # G(rho), reused by the next step
    # (rho, N(rho), dt) of the previous step, needed by bdf2
    history: tuple | None = field(default=None, repr=False)


@dataclass
class RunOutcome:
    event: str
    final: FlowState
    fit: CylinderFit | None = None
    series: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    steps: int = 0
    rejected: int = 0
    message: str = ""
    wall_time: float = 0.0

    @property
    def failed(self) -> bool:
        return self.event in Event.FAILURES


# --- single steps ------------------------------------------------------------


def _make_state(t: float, values: np.ndarray, dt: float, grid: Grid, settings: SolverSettings,
                history=None) -> FlowState:
    rhs = _evolution_values(grid, values, settings.dealias)
    rho = HeightField(grid, values)
    mc = rho.min_clearance()
    try:
        ar = area(rho)
    except ClearanceError:
        ar = float("nan")
    stats = Stats(volume(rho), ar, mc, rho.sup_norm(), float(np.max(np.abs(rhs))))
    return FlowState(t, rho, dt, stats, rhs, history)


def initial_state(rho0: HeightField, settings: SolverSettings | None = None) -> FlowState:
    settings = settings or SolverSettings()
    clearance = _clearance(rho0.grid, settings)
    mc = rho0.min_clearance()
    if not mc > clearance:
        raise ClearanceError(mc, clearance)
    return _make_state(0.0, rho0.values, settings.dt0, rho0.grid, settings)


def _clearance(grid: Grid, settings: SolverSettings) -> float:
    return default_clearance(grid.r) if settings.clearance is None else settings.clearance


def _stab(grid: Grid, settings: SolverSettings):
    """Implicit multiplier kappa L and its explicit counterpart (band-limited if dealiasing)."""
    L = settings.kappa * multiplier(grid)
    return L, (L * dealias_mask(grid) if settings.dealias else L)


def _explicit(state: FlowState, settings: SolverSettings):
    """Spectra of rho and of the explicit part N = G - kappa L rho."""
    L, L_exp = _stab(state.rho.grid, settings)
    rhat = np.fft.fft2(state.rho.values)
    return L, rhat, np.fft.fft2(state.rhs) - L_exp * rhat


def _euler_values(state: FlowState, dt: float, settings: SolverSettings) -> np.ndarray:
    L, rhat, n_now = _explicit(state, settings)
    return np.fft.ifft2((rhat + dt * n_now) / (1.0 - dt * L)).real


def _bdf2_values(state: FlowState, dt: float, settings: SolverSettings) -> np.ndarray:
    prev_rho, prev_n, prev_dt = state.history
    L, rhat, n_now = _explicit(state, settings)
    w = dt / prev_dt
    c0 = (1 + 2 * w) / (1 + w)
    lhs = c0 - dt * L
    rhs = (1 + w) * rhat - (w * w / (1 + w)) * prev_rho + dt * ((1 + w) * n_now - w * prev_n)
    return np.fft.ifft2(rhs / lhs).real


def _history(state: FlowState, settings: SolverSettings, dt: float):
    _, rhat, n_now = _explicit(state, settings)
    return (rhat, n_now, dt)


def imex_step(state: FlowState, dt: float, settings: SolverSettings | None = None) -> FlowState:
    """Advance one step of size dt with the configured scheme.

    ``bdf2`` falls back to IMEX Euler when the state carries no history
    (first step).  Returns a new state with fresh diagnostics.
    """
    settings = settings or SolverSettings()
    if settings.scheme == "bdf2" and state.history is not None:
        vals = _bdf2_values(state, dt, settings)
    else:
        vals = _euler_values(state, dt, settings)
    hist = _history(state, settings, dt) if settings.scheme == "bdf2" else None
    return _make_state(state.t + dt, vals, dt, state.rho.grid, settings, hist)


# --- step-size control -------------------------------------------------------

_SAFETY = 0.95
_K_I = 0.25   # per unit (order + 1): 1/(2 (p + 1)) for p = 1
_K_P = 0.08
_GROW, _SHRINK = 5.0, 0.2


def adapt_dt(state: FlowState, err_est: float, *, tol_step: float = 1e-8,
             dt_min: float = 1e-12, dt_max: float = 0.1, order: int = 1,
             err_prev: float | None = None) -> float:
    """PI controller: dt (tol/err)^{kI} (err_prev/tol)^{kP}, clamped to [dt_min, dt_max].

    With kI = 1/(2(p + 1)), an error 16x the tolerance halves the step of a
    first-order scheme.  ``err_prev`` defaults to ``tol_step`` (pure I control).
    """
    if err_est < 0 or not np.isfinite(err_est):
        raise ValueError("err_est must be a finite non-negative number")
    if err_est == 0:
        return dt_max
    k_i = _K_I * 2.0 / (order + 1)
    k_p = _K_P * 2.0 / (order + 1)
    prev = tol_step if err_prev is None else max(err_prev, 1e-300)
    fac = _SAFETY * (tol_step / err_est) ** k_i * (prev / tol_step) ** k_p
    fac = min(_GROW, max(_SHRINK, fac))
    return float(min(dt_max, max(dt_min, state.dt * fac)))


def _dt_cap(grid: Grid, settings: SolverSettings) -> float:
    lmax = float(np.max(multiplier(grid)))
    cap = settings.dt_max
    if lmax > 0:
        cap = min(cap, 0.5 / (settings.kappa * lmax))
    return cap


def _attempt(state: FlowState, dt: float, settings: SolverSettings):
    """One trial step; returns (new_values, err_est, intermediate state or None)."""
    g = state.rho.grid
    if settings.scheme == "bdf2" and state.history is not None:
        vals = _bdf2_values(state, dt, settings)
        if not settings.adaptive:
            return vals, 0.0
        low = _euler_values(state, dt, settings)
        return vals, float(np.max(np.abs(vals - low)))
    if not settings.adaptive:
        return _euler_values(state, dt, settings), 0.0
    full = _euler_values(state, dt, settings)
    half_vals = _euler_values(state, 0.5 * dt, settings)
    if not np.all(np.isfinite(half_vals)):
        return half_vals, float("inf")
    half = FlowState(state.t + 0.5 * dt, HeightField(g, half_vals), 0.5 * dt, state.stats,
                     _evolution_values(g, half_vals, settings.dealias))
    vals = _euler_values(half, 0.5 * dt, settings)
    return vals, float(np.max(np.abs(vals - full)))


# --- driver ------------------------------------------------------------------


def _row(state: FlowState, settings: SolverSettings) -> DiagnosticsRow:
    try:
        rate = dA_dt(state.rho, dealias=settings.dealias)
    except ClearanceError:
        rate = float("nan")
    s = state.stats
    return DiagnosticsRow(state.t, s.volume, s.area, rate, s.min_clearance, s.sup_norm, s.residual)


def _check_events(state: FlowState, settings: SolverSettings, clearance: float):
    s = state.stats
    r = state.rho.grid.r
    if not (np.isfinite(s.residual) and np.isfinite(s.sup_norm)):
        return Event.BLOWUP, "non-finite values"
    if s.sup_norm > settings.blowup_factor * r:
        return Event.BLOWUP, f"sup norm {s.sup_norm:.4g} exceeds {settings.blowup_factor:g} r"
    if not s.min_clearance > clearance:
        return Event.MIN_RADIUS, f"min(r + rho) = {s.min_clearance:.4g} <= {clearance:.4g}"
    return None, ""


def integrate(rho0: HeightField, settings: SolverSettings | None = None, *,
              project: Callable[[np.ndarray], np.ndarray] | None = None,
              project_every: int = 100,
              observer: Callable[[FlowState], None] | None = None,
              keep_snapshots: bool = True) -> RunOutcome:
    """Integrate from rho0 until t_end or a terminating event.

    ``project`` (applied every ``project_every`` accepted steps) maps the new
    sample array to a corrected one; ``observer`` is called on every recorded
    sample.  Samples (diagnostic row and, optionally, the field) are taken at
    t = 0, every ``output_every`` accepted steps, and at the final state.
    """
    settings = settings or SolverSettings()
    wall0 = time.perf_counter()
    grid = rho0.grid
    clearance = _clearance(grid, settings)
    state = initial_state(rho0, settings)
    cap = _dt_cap(grid, settings)
    dt = min(settings.dt0, cap)
    order = 1
    out = RunOutcome(event=Event.MAX_TIME, final=state)

    def record(st):
        out.series.append(_row(st, settings))
        if keep_snapshots:
            out.snapshots.append((st.t, st.rho))
        if observer is not None:
            observer(st)

    def converged(st):
        if st.stats.residual > settings.tol_residual:
            return None
        fit = fit_cylinder(st.rho)
        return fit if fit.residual <= settings.tol_fit else None

    record(state)
    fit = converged(state)
    if fit is not None:
        out.event, out.fit, out.message = Event.CONVERGED, fit, "initial state is an equilibrium"
        out.wall_time = time.perf_counter() - wall0
        return out

    err_prev = None
    last_recorded = True
    while True:
        remaining = settings.t_end - state.t
        if remaining <= 1e-12 * max(1.0, settings.t_end):
            out.event = Event.MAX_TIME
            break
        step = min(dt, cap, remaining)
        vals, err = _attempt(state, step, settings)
        if settings.adaptive and not (err <= settings.tol_step):
            out.rejected += 1
            if step <= settings.dt_min * (1 + 1e-12):
                out.event = Event.STEP_COLLAPSE
                out.message = f"error {err:.3e} above tolerance at dt_min"
                break
            probe = replace(state, dt=step)
            dt = adapt_dt(probe, err if np.isfinite(err) else 1e300,
                          tol_step=settings.tol_step, dt_min=settings.dt_min,
                          dt_max=settings.dt_max, order=order)
            continue

        out.steps += 1
        if project is not None and out.steps % project_every == 0:
            vals = project(vals)
        hist = _history(state, settings, step) if settings.scheme == "bdf2" else None
        if not np.all(np.isfinite(vals)):
            out.event, out.message = Event.BLOWUP, "non-finite values"
            break
        state = _make_state(state.t + step, vals, step, grid, settings, hist)

        event, msg = _check_events(state, settings, clearance)
        fit = None if event else converged(state)
        last_recorded = False
        if event or fit is not None or out.steps % settings.output_every == 0:
            record(state)
            last_recorded = True
        if event:
            out.event, out.message = event, msg
            break
        if fit is not None:
            out.event, out.fit = Event.CONVERGED, fit
            break

        if settings.adaptive:
            probe = replace(state, dt=step)
            dt = adapt_dt(probe, err, tol_step=settings.tol_step, dt_min=settings.dt_min,
                          dt_max=settings.dt_max, order=order, err_prev=err_prev)
            err_prev = max(err, 1e-16 * settings.tol_step)
        else:
            dt = step if step < remaining else dt

    if not last_recorded:
        record(state)
    out.final = state
    out.wall_time = time.perf_counter() - wall0
    log.info("run finished: %s at t=%.6g after %d steps (%d rejected)",
             out.event, state.t, out.steps, out.rejected)
    return out


def run(config) -> RunOutcome:
    """Run the periodic flow described by a :class:`sdflow.config.RunConfig`."""
    if getattr(config, "bc", "periodic") != "periodic":
        from .neumann import run_neumann

        return run_neumann(config)
    grid = config.grid()
    rho0 = config.initial_field(grid)
    return integrate(rho0, config.solver_settings())
