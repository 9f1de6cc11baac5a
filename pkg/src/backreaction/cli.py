"""Command line entry point: ``backreaction verify`` and ``backreaction run``.

Run configuration is a JSON file::

    {
      "coupling": {"m": 1.0, "xi": "conformal", "lambda": "minkowski",
                   "c": 0, "c_prime": 0, "c_dprime": 0, "eight_pi_G": 1},
      "grid": {"k_min": 0.01, "k_max": 1000, "points": 2048},
      "geometry": {"a": 1, "H": 0, "Hdot": 0, "Hddot": 0, "slow_start": false},
      "init": {"profile": "vacuum", "purity": true,
               "a": {"name": "k7_step", "amplitude": 0.01}},
      "integrator": {"rtol": 1e-9},
      "equation": "auto",
      "t_end": 10, "cadence": 1
    }

``xi`` takes a number or ``"conformal"``; ``lambda`` a number,
``"minkowski"`` or ``"static"``; ``c_dprime`` a number or ``"wald"``.
Perturbation profiles (``a``, ``b``, ``c``) are named, see ``PROFILES``.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dynamics as dyn
from . import verify as vf
from .quadrature import grid_build
from .subtraction import CouplingConfig, GeometryState

FMT = "%.17g"


def _k7_step(k, amplitude=1e-2):
    return amplitude * k ** -7.0 * dyn.smooth_step(k)


def _k5_step(k, amplitude=1e-2):
    return amplitude * k ** -5.0 * dyn.smooth_step(k)


def _bump(k, amplitude=1e-2, center=2.0, width=0.5):
    return amplitude * np.exp(-(((k - center) / width) ** 2))


PROFILES = {"k7_step": _k7_step, "k5_step": _k5_step, "bump": _bump}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    coupling: CouplingConfig
    grid: dict
    geometry: GeometryState
    init: dyn.InitSpec
    rtol: float = 1e-9
    max_step: float | None = None
    equation: str = "auto"
    t_end: float = 1.0
    cadence: float = 0.1
    slow_start: bool = False
    snapshots: bool = True
    raw: dict = field(default_factory=dict)


def _profile(entry, key):
    if entry is None:
        return None
    if not isinstance(entry, dict) or "name" not in entry:
        raise ConfigError(f"init.{key} must be an object with a 'name'")
    params = {k: v for k, v in entry.items() if k != "name"}
    name = entry["name"]
    if name not in PROFILES:
        raise ConfigError(f"unknown profile {name!r} in init.{key}; known: {sorted(PROFILES)}")
    fn = PROFILES[name]
    try:
        fn(np.array([1.0]), **params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for profile {name!r}: {exc}") from exc
    return lambda k: fn(k, **params)


def load_config(path) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        return parse_config(raw)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def parse_config(raw: dict) -> RunConfig:
    c = dict(raw.get("coupling", {}))
    m = float(c.get("m", 1.0))
    xi = c.get("xi", "conformal")
    xi = 1.0 / 6.0 if xi == "conformal" else float(xi)
    cdd = c.get("c_dprime", 0.0)
    cdd = dyn.WALD_C_DPRIME if cdd == "wald" else float(cdd)
    G_N = float(c["eight_pi_G"]) / (8 * math.pi) if "eight_pi_G" in c else float(c.get("G_N", 1 / (8 * math.pi)))
    g = dict(raw.get("grid", {}))
    grid_kw = {"k_min": float(g.get("k_min", 1e-2)), "k_max": float(g.get("k_max", 1e3)),
               "points": int(g.get("points", 2048))}
    lam = c.get("lambda", "minkowski")
    if lam == "minkowski":
        lam = dyn.minkowski_lambda(m)
    elif lam == "static":
        lam = dyn.static_lambda(m, grid_build(**grid_kw))
    else:
        lam = float(lam)
    coupling = CouplingConfig(m=m, xi=xi, lam=lam, c=float(c.get("c", 0.0)),
                              c_prime=float(c.get("c_prime", 0.0)), c_dprime=cdd, G_N=G_N)
    geo_raw = dict(raw.get("geometry", {}))
    geo = GeometryState(0.0, float(geo_raw.get("a", 1.0)), float(geo_raw.get("H", 0.0)),
                        float(geo_raw.get("Hdot", 0.0)), float(geo_raw.get("Hddot", 0.0)))
    ini = dict(raw.get("init", {}))
    profile = ini.get("profile", "vacuum")
    if profile not in ("vacuum", "hadamard"):
        raise ConfigError(f"unknown init profile {profile!r}")
    spec = dyn.InitSpec(profile=profile, a_fn=_profile(ini.get("a"), "a"), b_fn=_profile(ini.get("b"), "b"),
                        purity=bool(ini.get("purity", True)), c_fn=_profile(ini.get("c"), "c"))
    integ = dict(raw.get("integrator", {}))
    t_end = float(raw.get("t_end", 1.0))
    cadence = float(raw.get("cadence", t_end / 10))
    if not t_end > 0:
        raise ConfigError("t_end must be positive")
    if not cadence > 0:
        raise ConfigError("cadence must be positive")
    equation = raw.get("equation", "auto")
    if equation not in ("auto", "conformal", "wald", "general"):
        raise ConfigError(f"unknown equation {equation!r}")
    return RunConfig(coupling, grid_kw, geo, spec, float(integ.get("rtol", 1e-9)),
                     integ.get("max_step"), equation, t_end, cadence,
                     bool(geo_raw.get("slow_start", False)), bool(raw.get("snapshots", True)), raw)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(FMT % float(v) for v in row) + "\n")


def run_config(cfg: RunConfig, out: Path) -> dict:
    grid = grid_build(**cfg.grid)
    start = dyn.slow_start if cfg.slow_start else dyn.init_state
    state = start(cfg.init, grid, cfg.geometry, cfg.coupling, cfg.equation)
    n_out = int(math.floor(cfg.t_end / cfg.cadence + 1e-9))
    times = [i * cfg.cadence for i in range(n_out + 1)]
    if times[-1] < cfg.t_end:
        times.append(cfg.t_end)
    traj = dyn.evolve(state, cfg.t_end, rtol=cfg.rtol, output_times=times,
                      max_step=None if cfg.max_step is None else float(cfg.max_step))
    out.mkdir(parents=True, exist_ok=True)
    geo_rows, diag_rows = [], []
    for t, st in zip(traj.times, traj.states):
        g = st.geo
        d = dyn.trace_diagnostics(st)
        phi = dyn.phi2_integral(st)
        geo_rows.append([t, g.a, g.H, g.Hdot, g.Hddot, st.Hdddot_prev, g.R, d["residual"]])
        diag_rows.append([t, phi.value / dyn.EIGHT_PI3, dyn.purity_defect(st),
                          dyn.hadamard_difference(st), phi.tail_bound / dyn.EIGHT_PI3])
        if cfg.snapshots:
            ms = st.modes
            _write_csv(out / f"modes_{t:.6f}.csv", ["k", "Gpp", "Gppi", "Gpipi", "Jk"],
                       zip(ms.k, ms.Gpp, ms.Gppi, ms.Gpipi, ms.J))
    _write_csv(out / "geometry.csv", ["t", "a", "H", "Hdot", "Hddot", "Hdddot", "R", "residual"], geo_rows)
    _write_csv(out / "diagnostics.csv",
               ["t", "phi2_ren", "max_purity_defect", "max_hadamard_difference", "tail_bound"], diag_rows)
    return {"states": len(traj.states), "nfev": traj.nfev}


def cmd_verify(args) -> int:
    try:
        rep = vf.run(args.scope, args.perturb)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(rep.render())
    print("OK" if rep.ok else "FAILED")
    return 0 if rep.ok else 1


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out) if args.out else Path(cfg.raw.get("out", "out"))
    try:
        info = run_config(cfg, out)
    except (dyn.SolverAbort, dyn.GeometrySolveError) as exc:
        print(f"solver abort: {exc}", file=sys.stderr)
        dump = getattr(exc, "dump", {})
        if dump:
            print(json.dumps(dump, indent=2), file=sys.stderr)
        return 3
    except ValueError as exc:
        # invalid initial data is a configuration problem
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {info['states']} output times to {out} ({info['nfev']} RHS evaluations)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="backreaction", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", help="run the certification suites")
    v.add_argument("--scope", default="all", choices=("all",) + vf.SCOPES)
    v.add_argument("--perturb", default=None, metavar="NAME:P,Q",
                   help="add a small mutation to a catalog slot before the hadamard checks")
    v.set_defaults(func=cmd_verify)
    r = sub.add_parser("run", help="evolve a configuration and write CSV output")
    r.add_argument("config")
    r.add_argument("--out", default=None)
    r.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
