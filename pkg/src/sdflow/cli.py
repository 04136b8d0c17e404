"""
Command line front end: ``sdflow run | spectrum | verify``.

Exit codes: 0 success, 2 configuration error, 3 flow failure event,
4 verification failure.

``run`` writes into the output directory (config key ``output.dir``; the
``SDFLOW_OUT`` environment variable overrides the config file, an explicit
``--output.dir=...`` flag overrides both):

series.csv      t, volume, area, dA_dt_formula, min_clearance, sup_norm, residual,
                one row per recorded sample, 17 significant digits
snap_<k>.csv    "x,theta,rho" then one row per node, theta varying fastest;
                k counts recorded samples; half-domain nodes for bc = neumann
manifest.json   config echo, version, timings, event, final diagnostics, fit,
                predicted limit radius; written even when the run fails
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import RNG_ALGORITHM, ConfigError, _parse_float, load_config, parse_config
from .diagnostics import DiagnosticsRow, volume
from .equilibria import predicted_radius
from .flow import run
from .linearization import spectrum_table
from .neumann import NeumannField, SymmetryDriftError
from .presets import PRESETS
from .verify import PROFILES, run_checks

__all__ = ["main", "cmd_run", "cmd_spectrum", "cmd_verify", "write_series", "write_snapshot"]

EXIT_OK, EXIT_CONFIG, EXIT_FLOW, EXIT_VERIFY = 0, 2, 3, 4

log = logging.getLogger("sdflow")


# --- output formats ----------------------------------------------------------


def _g17(v: float) -> str:
    return "%.17g" % v


def write_series(path: Path, rows) -> None:
    lines = [",".join(DiagnosticsRow.FIELDS)]
    lines += [",".join(_g17(v) for v in row.as_tuple()) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_snapshot(path: Path, field) -> None:
    """Write a HeightField or NeumannField as x,theta,rho rows (theta fastest)."""
    if isinstance(field, NeumannField):
        x, th = field.x, field.theta
    else:
        x, th = field.grid.x, field.grid.theta
    X, T = np.meshgrid(x, th, indexing="ij")
    table = np.column_stack([X.ravel(), T.ravel(), field.values.ravel()])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("x,theta,rho\n")
        np.savetxt(fh, table, fmt="%.17g", delimiter=",")


def _jsonable(v):
    """Non-finite floats become null so the manifest stays strict JSON."""
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.generic):
        return _jsonable(v.item())
    return v


def _write_manifest(outdir: Path, manifest: dict) -> None:
    text = json.dumps(_jsonable(manifest), indent=2, allow_nan=False)
    (outdir / "manifest.json").write_text(text + "\n", encoding="utf-8")


# --- commands ----------------------------------------------------------------


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


def _load(source: str | None, preset: str | None, overrides: dict):
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r} (choose from {', '.join(PRESETS)})")
        return parse_config(PRESETS[preset], overrides)
    if source is None:
        raise ConfigError("no config file or preset given")
    return load_config(source, overrides)


def _output_dir(cfg, overrides: dict) -> Path:
    explicit = any(k in overrides for k in ("output.dir", "output_dir"))
    env = os.environ.get("SDFLOW_OUT")
    return Path(cfg.output_dir if explicit or not env else env)


def cmd_run(source: str | None = None, *, preset: str | None = None,
            overrides: dict | None = None) -> int:
    overrides = dict(overrides or {})
    try:
        cfg = _load(source, preset, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    outdir = _output_dir(cfg, overrides)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "version": __version__,
        "config": cfg.as_dict(),
        "bc": cfg.bc,
        "rng": {"algorithm": RNG_ALGORITHM, "seed": cfg.ic_seed},
        "start_time": _now(),
        "end_time": None,
        "wall_seconds": None,
        "event": None,
        "message": "",
        "exit_code": None,
        "steps": 0,
        "rejected": 0,
        "final": None,
        "fit": None,
        "predicted_rbar": None,
        "snapshots": [],
    }
    wall0 = time.perf_counter()

    def finish(code: int) -> int:
        manifest["end_time"] = _now()
        manifest["wall_seconds"] = time.perf_counter() - wall0
        manifest["exit_code"] = code
        _write_manifest(outdir, manifest)
        return code

    try:
        rho0 = cfg.initial_field()
        # volume over one period of the solver grid (2a for the Neumann extension)
        manifest["predicted_rbar"] = predicted_radius(volume(rho0), cfg.period)
        outcome = run(cfg)
    except SymmetryDriftError as exc:
        manifest["event"], manifest["message"] = "SymmetryDrift", str(exc)
        print(f"flow aborted: {exc}", file=sys.stderr)
        return finish(EXIT_FLOW)
    except ValueError as exc:  # inadmissible or malformed initial condition
        manifest["message"] = f"invalid initial condition: {exc}"
        print(f"config error: {manifest['message']}", file=sys.stderr)
        return finish(EXIT_CONFIG)

    write_series(outdir / "series.csv", outcome.series)
    if cfg.output_snapshots:
        for k, (t, field) in enumerate(outcome.snapshots):
            if k % cfg.output_snapshots == 0:
                name = f"snap_{k}.csv"
                write_snapshot(outdir / name, field)
                manifest["snapshots"].append({"k": k, "t": t, "file": name})

    manifest.update(
        event=outcome.event,
        message=outcome.message,
        steps=outcome.steps,
        rejected=outcome.rejected,
        solver_wall_seconds=outcome.wall_time,
        final=asdict(outcome.series[-1]) if outcome.series else None,
        fit=asdict(outcome.fit) if outcome.fit is not None else None,
    )
    code = EXIT_FLOW if outcome.failed else EXIT_OK
    print(f"{outcome.event}: t = {outcome.final.t:.6g}, {outcome.steps} steps"
          + (f" ({outcome.message})" if outcome.message else ""))
    return finish(code)


def _flag(entry) -> str:
    if entry.is_kernel:
        return "kernel"
    if abs(entry.lam) <= 1e-12:
        return "neutral"
    if entry.lam > 0:
        return "unstable"
    return "stable"


def cmd_spectrum(r: float, a: float = 2 * math.pi, mmax: int = 4, nmax: int = 4,
                 out=None) -> int:
    out = out or sys.stdout
    try:
        table = spectrum_table(r, a, mmax, nmax)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out.write("m,n,lambda,multiplicity,flag\n")
    for e in table:
        out.write(f"{e.m},{e.n},{_g17(e.lam)},{e.multiplicity},{_flag(e)}\n")
    return EXIT_OK


def cmd_verify(*, tiny: bool = False, dg0_sign: float = 1.0, groups=None, jobs: int = 1,
               out=None) -> int:
    out = out or sys.stdout
    profile = "tiny" if tiny else "default"
    N = PROFILES[profile]["N"]
    out.write(f"verify profile={profile} grid={N}x{N}\n")
    results = run_checks(profile, dg0_sign=dg0_sign, groups=groups, jobs=jobs)
    for g in results:
        out.write(f"{'PASS' if g.passed else 'FAIL'} {g.name}\n")
        if g.error:
            out.write(f"    error: {g.error}\n")
        for c in g.checks:
            mark = "ok " if c.passed else "BAD"
            out.write(f"    {mark} {c.name}: {c.value:.3e} (tol {c.tol:.1e})\n")
    return EXIT_OK if all(g.passed for g in results) else EXIT_VERIFY


# --- argument handling -------------------------------------------------------


def _split_overrides(extra: list[str]) -> dict:
    """Turn ``--key=value`` / ``--key value`` tokens into a dict of dotted keys."""
    out, i = {}, 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--") or len(tok) == 2:
            raise ConfigError(f"unexpected argument {tok!r}")
        body = tok[2:]
        if "=" in body:
            key, value = body.split("=", 1)
        else:
            if i + 1 >= len(extra):
                raise ConfigError("missing value", key=body)
            key, value = body, extra[i + 1]
            i += 1
        out[key] = value
        i += 1
    return out


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sdflow", description="Surface diffusion flow of "
                                "height functions over a cylinder.")
    p.add_argument("--version", action="version", version=f"sdflow {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("run", help="integrate the flow from a config file or preset",
                        description="Any config key may be overridden with --key=value, "
                        "e.g. --r=2 --ic.amplitude=0.02.")
    pr.add_argument("config", nargs="?", help="path to a key = value config file")
    pr.add_argument("--preset", choices=sorted(PRESETS), help="use a built-in configuration")

    ps = sub.add_parser("spectrum", help="print eigenvalues of the linearization at the cylinder")
    ps.add_argument("--r", type=_parse_float, required=True, help="cylinder radius")
    ps.add_argument("--a", type=_parse_float, default=2 * math.pi,
                    help="axial period (accepts 'pi', '2pi'; default 2pi)")
    ps.add_argument("--mmax", type=int, default=4)
    ps.add_argument("--nmax", type=int, default=4)

    pv = sub.add_parser("verify", help="run the built-in identity checks")
    pv.add_argument("--tiny", action="store_true", help="8x8 grid with relaxed tolerances")
    pv.add_argument("--group", action="append", choices=sorted(
        ["equilibrium", "conservation", "dissipation", "linearization", "symbol"]),
        help="restrict to a check group (repeatable)")
    pv.add_argument("--jobs", type=int, default=1, help="run groups on this many threads")
    pv.add_argument("--flip-dg0-sign", action="store_true",
                    help="negative control: use -DG(0) in the linearization checks")
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    args, extra = parser.parse_known_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "run":
        try:
            overrides = _split_overrides(extra)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        if args.config is not None and args.preset is not None:
            print("config error: give either a config file or --preset, not both",
                  file=sys.stderr)
            return EXIT_CONFIG
        return cmd_run(args.config, preset=args.preset, overrides=overrides)
    if extra:
        parser.error(f"unrecognized arguments: {' '.join(extra)}")
    if args.command == "spectrum":
        return cmd_spectrum(args.r, args.a, args.mmax, args.nmax)
    return cmd_verify(tiny=args.tiny, dg0_sign=-1.0 if args.flip_dg0_sign else 1.0,
                      groups=args.group, jobs=args.jobs)


if __name__ == "__main__":
    sys.exit(main())
