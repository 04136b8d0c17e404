"""
Run configuration.

Config files are flat UTF-8 ``key = value`` lines; ``#`` starts a comment and
dotted keys group related settings::

    r = 1.5
    t_end = 50
    ic.kind = modes
    ic.amplitude = 0.01
    ic.modes = cos1*cos1:1.0, sin2*cos0:0.5

A mode term ``<fx><m>*<ft><n>:<coeff>`` contributes
coeff * fx(2 pi m x / a) * ft(n theta) with fx, ft in {cos, sin}; the sum is
multiplied by ``ic.amplitude``.

For ``bc = neumann`` the parameter ``a`` is the length of the bounded cylinder,
the solver works on its even extension of period 2a, and ``Nx`` counts samples
of that extension (Nx/2 + 1 samples on [0, a]).  Mode terms are then read on the
extended period, so ``cos1`` is cos(pi x / a).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .equilibria import cylinder_height
from .flow import SolverSettings
from .spectral import Grid, HeightField

__all__ = ["ConfigError", "RunConfig", "parse_config", "load_config", "parse_modes",
           "random_field", "RNG_ALGORITHM"]

RNG_ALGORITHM = "numpy.random.Philox"

_MODE_RE = re.compile(
    r"^\s*(cos|sin)(\d+)\s*\*\s*(cos|sin)(\d+)\s*:\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*$"
)


class ConfigError(ValueError):
    def __init__(self, message: str, *, line: int | None = None, key: str | None = None):
        self.reason = message
        self.line = line
        self.key = key
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


@dataclass
class RunConfig:
    r: float = 1.5
    a: float = 2 * math.pi
    Nx: int = 64
    Ntheta: int = 64
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
    clearance: float = 0.0  # 0 -> 1e-3 r
    bc: str = "periodic"
    ic_kind: str = "zero"
    ic_amplitude: float = 0.0
    ic_modes: str = ""
    ic_seed: int = 0
    ic_kmax: int = 3
    ic_ybar: float = 0.0
    ic_zbar: float = 0.0
    ic_rbar: float = 0.0  # 0 -> r
    output_dir: str = "out"
    output_every: int = 10
    output_snapshots: int = 1  # write every k-th recorded sample; 0 disables

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        def bad(key, msg):
            raise ConfigError(msg, key=key.replace("_", ".", 1) if key.startswith(("ic_", "output_")) else key)

        for key in ("r", "a", "dt0", "dt_min", "dt_max", "tol_step", "tol_residual", "tol_fit",
                    "t_end"):
            if not (math.isfinite(getattr(self, key)) and getattr(self, key) > 0):
                bad(key, "must be a positive number")
        for key in ("Nx", "Ntheta"):
            v = getattr(self, key)
            if v < 8 or v % 2:
                bad(key, "resolution must be an even integer >= 8")
        if self.bc == "neumann" and (self.Nx // 2) < 4:
            bad("Nx", "too small for the Neumann extension")
        if self.scheme not in ("imex1", "bdf2"):
            bad("scheme", "must be imex1 or bdf2")
        if self.bc not in ("periodic", "neumann"):
            bad("bc", "must be periodic or neumann")
        if self.kappa < 1:
            bad("kappa", "must be >= 1")
        if self.clearance < 0:
            bad("clearance", "must be >= 0")
        if self.ic_kind not in ("zero", "modes", "offset_cylinder", "random"):
            bad("ic_kind", "must be one of zero, modes, offset_cylinder, random")
        if not self.ic_amplitude >= 0:
            bad("ic_amplitude", "must be >= 0")
        if self.ic_kind == "modes":
            try:
                parse_modes(self.ic_modes)
            except ValueError as exc:
                bad("ic_modes", str(exc))
        if self.ic_kmax < 1:
            bad("ic_kmax", "must be >= 1")
        if self.output_every < 1:
            bad("output_every", "must be >= 1")
        if self.output_snapshots < 0:
            bad("output_snapshots", "must be >= 0")

    # --- derived objects ---------------------------------------------------

    @property
    def period(self) -> float:
        """Axial period of the grid the solver runs on."""
        return 2 * self.a if self.bc == "neumann" else self.a

    def grid(self) -> Grid:
        return Grid(self.period, self.r, self.Nx, self.Ntheta)

    def solver_settings(self) -> SolverSettings:
        return SolverSettings(
            dt0=self.dt0, dt_min=self.dt_min, dt_max=self.dt_max, tol_step=self.tol_step,
            tol_residual=self.tol_residual, tol_fit=self.tol_fit, t_end=self.t_end,
            scheme=self.scheme, kappa=self.kappa, dealias=self.dealias, adaptive=self.adaptive,
            clearance=self.clearance or None, output_every=self.output_every,
        )

    def initial_field(self, grid: Grid | None = None) -> HeightField:
        grid = grid or self.grid()
        kind = self.ic_kind
        if kind == "zero":
            return HeightField(grid, np.zeros(grid.shape))
        if kind == "modes":
            x, th = grid.mesh()
            vals = np.zeros(grid.shape)
            for fx, m, ft, n, c in parse_modes(self.ic_modes):
                vals = vals + c * _TRIG[fx](2 * np.pi * m * x / grid.a) * _TRIG[ft](n * th)
            return HeightField(grid, self.ic_amplitude * vals)
        if kind == "offset_cylinder":
            rbar = self.ic_rbar or self.r
            return cylinder_height(self.ic_ybar, self.ic_zbar, rbar, grid)
        return random_field(grid, self.ic_amplitude, self.ic_seed, self.ic_kmax,
                            even=self.bc == "neumann")

    def as_dict(self) -> dict:
        out = {}
        for f in fields(self):
            out[_dotted(f.name)] = getattr(self, f.name)
        return out


_TRIG = {"cos": np.cos, "sin": np.sin}


def _dotted(name: str) -> str:
    for prefix in ("ic_", "output_"):
        if name.startswith(prefix):
            return prefix[:-1] + "." + name[len(prefix):]
    return name


def _attr(key: str) -> str:
    return key.replace(".", "_")


def parse_modes(text: str) -> list[tuple[str, int, str, int, float]]:
    terms = [t for t in (s.strip() for s in text.split(",")) if t]
    if not terms:
        raise ValueError("mode list is empty")
    out = []
    for t in terms:
        mt = _MODE_RE.match(t)
        if mt is None:
            raise ValueError(f"cannot parse mode term {t!r} (expected e.g. cos1*sin2:0.5)")
        fx, m, ft, n, c = mt.groups()
        out.append((fx, int(m), ft, int(n), float(c)))
    return out


def random_field(grid: Grid, amplitude: float, seed: int, kmax: int = 3, *,
                 even: bool = False) -> HeightField:
    """Smooth random field: Fourier modes |m|, |n| <= kmax with 1/(1 + m^2 + n^2) decay.

    Scaled so its sup norm equals ``amplitude``.  ``even`` restricts to cos(m x)
    in the axial direction (reflection-symmetric fields).  Coefficients come
    from a Philox counter-based generator keyed by ``seed``.
    """
    rng = np.random.Generator(np.random.Philox(int(seed)))
    x, th = grid.mesh()
    kx = 2 * np.pi * x / grid.a
    vals = np.zeros(grid.shape)
    for m in range(kmax + 1):
        for n in range(kmax + 1):
            w = 1.0 / (1.0 + m * m + n * n)
            c = rng.standard_normal(4) * w
            cx, sx = np.cos(m * kx), np.sin(m * kx)
            ct, st = np.cos(n * th), np.sin(n * th)
            vals = vals + c[0] * cx * ct + c[1] * cx * st
            if not even:
                vals = vals + c[2] * sx * ct + c[3] * sx * st
    peak = np.max(np.abs(vals))
    if amplitude == 0 or peak == 0:
        return HeightField(grid, np.zeros(grid.shape))
    return HeightField(grid, vals * (amplitude / peak))


_PI_RE = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)?\s*\*?\s*pi\s*$")


def _parse_float(raw: str) -> float:
    """A number, or a multiple of pi written as ``pi``, ``2pi`` or ``0.5*pi``."""
    mt = _PI_RE.match(raw)
    if mt is not None:
        return float(mt.group(1) or 1.0) * math.pi
    return float(raw)


def _convert(f, raw: str):
    kind = f.type if isinstance(f.type, str) else f.type.__name__
    if kind == "bool":
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if kind == "int":
        v = float(raw)
        if v != int(v):
            raise ValueError(f"expected an integer, got {raw!r}")
        return int(v)
    if kind == "float":
        return _parse_float(raw)
    return raw.strip()


def _assign(values: dict, key: str, raw: str, line: int | None):
    known = {f.name: f for f in fields(RunConfig)}
    name = _attr(key.strip())
    if name not in known:
        raise ConfigError("unknown key", line=line, key=key.strip())
    try:
        values[name] = _convert(known[name], raw)
    except ValueError as exc:
        raise ConfigError(str(exc), line=line, key=key.strip()) from None


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    """Parse config text; ``overrides`` (dotted key -> string) are applied last."""
    values: dict = {}
    where: dict = {}  # attribute name -> defining line
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, raw = body.split("=", 1)
        if not raw.strip():
            raise ConfigError("missing value", line=lineno, key=key.strip())
        _assign(values, key, raw, lineno)
        where[_attr(key.strip())] = lineno
    for key, raw in (overrides or {}).items():
        _assign(values, key, str(raw), None)
        where.pop(_attr(key.strip()), None)
    if "r" not in values:
        raise ConfigError("required key missing", key="r")
    try:
        return RunConfig(**values)
    except ConfigError as exc:
        if exc.line is None and exc.key is not None and _attr(exc.key) in where:
            raise ConfigError(exc.reason, line=where[_attr(exc.key)],
                              key=exc.key) from None
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path, overrides: dict | None = None) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except UnicodeDecodeError:
        raise ConfigError("config is not valid UTF-8") from None
    return parse_config(text, overrides)
