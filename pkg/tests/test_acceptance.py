"""Acceptance suite: one pass/fail line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` (the lines are printed in
the terminal summary) or directly with ``python3 tests/test_acceptance.py``.
Tolerances are pinned below and are not to be loosened to make a run pass.
"""

from __future__ import annotations

import filecmp
import json
import math
import os
import subprocess
import sys
import tempfile
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from backreaction import dynamics as dyn
from backreaction import hadamard as hd
from backreaction import quadrature as qd
from backreaction import subtraction as sb
from backreaction import verify as vf

# pinned tolerances
PURITY_SLOPE_MAX = -5.9
PURITY_SLOPE_WITH_A = -2.0
PURITY_SLOPE_WITH_A_TOL = 0.1
ORACLE_REL = 1e-6
CHI_INVARIANCE = 1e-8
STATIC_RESIDUAL = 1e-10
STATIC_H = 1e-8
STATIC_RTOL = 1e-9
LOG4_REL = 1e-8
MINKOWSKI_RUNTIME = 60.0
DRIFT_PER_TIME = 1e-8
DRIFT_RTOL = 1e-10
CONTINUITY_FINAL = 1e-8
PERSISTENCE_FACTOR = 2.0

RESULTS: dict[int, tuple[bool, str]] = {}
INFO: list[str] = []


def record(n: int, ok: bool, detail: str) -> None:
    RESULTS[n] = (ok, detail)


def report_lines() -> list[str]:
    lines = [f"CRITERION {n}: {'PASS' if ok else 'FAIL'}  {detail}" for n, (ok, detail) in sorted(RESULTS.items())]
    return lines + [f"  info: {line}" for line in INFO]


EIGHT_PI_G = 1.0
M = 1.0


def _cfg(**kw) -> sb.CouplingConfig:
    base = dict(m=M, xi=1 / 6, lam=dyn.minkowski_lambda(M), G_N=EIGHT_PI_G / (8 * math.pi))
    base.update(kw)
    return sb.CouplingConfig(**base)


FLAT = sb.GeometryState(0.0, 1.0, 0.0, 0.0, 0.0)


@pytest.fixture(scope="module")
def grid():
    return qd.default_grid()


def _mild_state(grid, eps: float = 0.0, xi: float = 1 / 6):
    spec = dyn.InitSpec(profile="hadamard",
                        a_fn=(lambda k: eps * k ** -7.0 * dyn.smooth_step(k)) if eps else None)
    return dyn.slow_start(spec, grid, sb.GeometryState(0.0, 1.0, 0.1, 0.0, 0.0), _cfg(xi=xi))


# ---------------------------------------------------------------------------

def test_criterion_1_series_certification():
    t0 = time.perf_counter()
    cat = hd.build_catalog()
    zero = {
        "eikonal 2sigma w6": hd.eikonal_residual(cat).is_zero(),
        "symmetry 2sigma w6": hd.symmetry_residual(cat.sigma2).truncate(6).is_zero(),
        "symmetry u w4": hd.symmetry_residual(cat.u).truncate(4).is_zero(),
        "recursion u w3": hd.recursion_residual("u", cat, 3).is_zero(),
        "recursion u w4": hd.recursion_residual("u", cat, 4).is_zero(),
        "recursion v0 w1": hd.recursion_residual("v0", cat, 1).is_zero(),
    }
    rep = vf.Report()
    vf.verify_series(rep)
    vf.verify_hadamard(rep)
    failures = [ln for ln in rep.lines if ln[0] == "FAIL"]
    flags = [ln[2] for ln in rep.lines if ln[0] == "FLAG"]
    ruling = [ln for ln in rep.lines if ln[0] == "INFO" and "m^4 sign ruling" in ln[2]]
    elapsed = time.perf_counter() - t0
    ok = all(zero.values()) and not failures and len(ruling) == 1 and elapsed < 30
    record(1, ok, f"residuals zero: {sum(zero.values())}/{len(zero)}; displays failing: {len(failures)}; "
                  f"flagged: {len(flags)}; m^4 ruling line present: {bool(ruling)}; {elapsed:.1f}s")
    INFO.append("criterion 1 ruling: " + (ruling[0][3].split(";")[0] if ruling else "missing"))
    for name in flags:
        INFO.append(f"criterion 1 flagged display: {name}")
    assert ok


def test_criterion_2_coefficient_closure():
    sym = {k: v.is_zero() for k, v in sb.coefficient_system().items()}
    cfg = sb.CouplingConfig(m=1.0, xi=0.1)
    geo = sb.AnalyticGeometry(0.3, 0.1, 1.3, 0.4)
    peaks = []
    for dt in (1e-2, 5e-3, 2.5e-3):
        traj = [(geo.state(0.5 + i * dt), geo.coefficients(0.5 + i * dt, cfg)) for i in range(7)]
        peaks.append({k: float(np.max(np.abs(v))) for k, v in sb.coefficient_ode_residual(traj, cfg).items()})
    orders = {k: math.log2(peaks[1][k] / peaks[2][k]) for k in ("a1", "a2", "b1", "b2", "b3")}
    second_order = all(1.8 < p < 2.2 for p in orders.values())
    ok = all(sym.values()) and second_order
    record(2, ok, f"symbolic residuals zero: {sum(sym.values())}/{len(sym)}; observed orders "
                  + ", ".join(f"{k}={v:.2f}" for k, v in orders.items()))
    assert ok


def test_criterion_3_purity_scaling():
    rng = np.random.default_rng(20240521)
    k = np.geomspace(1e2, 1e4, 17)
    slopes, slopes_a = [], []
    for _ in range(10):
        geo = sb.AnalyticGeometry(rng.uniform(0.05, 0.5), rng.uniform(0.0, 0.2), rng.uniform(0.5, 2.0),
                                  rng.uniform(0, 2 * math.pi), rng.uniform(0.5, 2.0))
        cfg = sb.CouplingConfig(m=rng.uniform(0.5, 2.0), xi=rng.uniform(0.0, 0.3))
        t = rng.uniform(0.0, 1.0)
        st, sc = geo.state(t), geo.coefficients(t, cfg, exact=True)
        slopes.append(np.polyfit(np.log(k), np.log(np.abs(sb.purity_residual(k, sc, st))), 1)[0])
        A = rng.uniform(0.1, 1.0) * rng.choice([-1, 1])
        f = sb.with_integration_constant(A, exact=True)
        v = st.values(cfg, geo.H_deriv(3, t), geo.H_deriv(4, t))
        bad = replace(sc, alpha3=f["alpha3"](v), beta3=f["beta3"](v), gamma1=f["gamma1"](v))
        slopes_a.append(np.polyfit(np.log(k), np.log(np.abs(sb.purity_residual(k, bad, st))), 1)[0])
    ok = max(slopes) <= PURITY_SLOPE_MAX and all(abs(s - PURITY_SLOPE_WITH_A) < PURITY_SLOPE_WITH_A_TOL
                                                 for s in slopes_a)
    record(3, ok, f"worst slope {max(slopes):.3f} (<= {PURITY_SLOPE_MAX}); with A != 0 slopes in "
                  f"[{min(slopes_a):.3f}, {max(slopes_a):.3f}]")
    assert ok


def test_criterion_4_pairing_oracle():
    f = lambda k: np.exp(-k ** 2 / 2)  # noqa: E731
    val = qd.regularized_k3_pairing(f)
    oracle = qd.zeta_oracle(0.5)
    rel = abs(val - oracle) / abs(oracle)
    vals = [qd.regularized_k3_pairing(f, beta=b) for b in (0.125, 0.25, 0.5, 1.0, 2.0)]
    spread = (max(vals) - min(vals)) / abs(val)
    ok = rel < ORACLE_REL and spread < CHI_INVARIANCE
    record(4, ok, f"pairing {val:.12g}, oracle {oracle:.12g}, rel {rel:.1e}; chi spread {spread:.1e}")
    assert ok


def test_criterion_5_minkowski_fixed_point(grid):
    t0 = time.perf_counter()
    lam = dyn.minkowski_lambda(M)
    st = dyn.init_state(dyn.InitSpec(), grid, FLAT, _cfg(lam=lam))
    r0 = dyn.trace_diagnostics(replace(st, Hdddot_prev=0.0))["residual"]
    try:
        traj = dyn.evolve(st, 10.0, rtol=STATIC_RTOL, output_times=np.linspace(0, 10, 41))
        hmax = max(abs(s.geo.H) for s in traj.states)
    except dyn.SolverAbort:
        hmax = math.inf
    st2 = dyn.init_state(dyn.InitSpec(), grid, FLAT, _cfg(lam=2 * lam))
    r2 = dyn.trace_diagnostics(replace(st2, Hdddot_prev=0.0))["residual"]
    target = EIGHT_PI_G * M ** 4 / (4 * math.pi ** 2) * math.log(4)
    elapsed = time.perf_counter() - t0
    ok = abs(r0) < STATIC_RESIDUAL and hmax < STATIC_H and abs(r2 - target) <= LOG4_REL * target \
        and elapsed < MINKOWSKI_RUNTIME
    record(5, ok, f"residual(t=0) {r0:.6g} (< {STATIC_RESIDUAL}); max|H| {hmax:.3g} (< {STATIC_H}); "
                  f"doubled-lambda residual {r2:.10g} vs {target:.10g}; {elapsed:.0f}s")
    INFO.append(f"criterion 5: doubling lambda shifts the residual by {r2 - r0:.12g} "
                f"(expected {target:.12g})")
    lam_s = dyn.static_lambda(M, grid)
    st_s = dyn.init_state(dyn.InitSpec(), grid, FLAT, _cfg(lam=lam_s))
    rs = dyn.trace_diagnostics(st_s)["residual"]
    trs = dyn.evolve(st_s, 10.0, rtol=STATIC_RTOL, output_times=np.linspace(0, 10, 41))
    INFO.append(f"criterion 5: with the static calibration lambda = {lam_s:.12g} (vs {lam:.12g}) the "
                f"residual is {rs:.3g} and max|H| over [0, 10] is "
                f"{max(abs(s.geo.H) for s in trs.states):.3g}")
    assert ok


def test_criterion_6_mode_invariants(grid):
    st = _mild_state(grid)
    traj = dyn.evolve(st, 1.0, rtol=DRIFT_RTOL)
    drift = dyn.purity_defect(traj.states[-1])
    small = qd.grid_build(k_max=100.0, points=256)
    st_s = _mild_state(small)
    tols = [1e-2, 1e-3, 1e-4, 1e-5]
    drifts = [dyn.purity_defect(dyn.evolve(st_s, 5.0, rtol=tol, max_step=np.inf).states[-1]) / 5.0
              for tol in tols]
    slope = np.polyfit(np.log(tols), np.log(drifts), 1)[0]
    halving = [dyn.purity_defect(dyn.evolve(st_s, 5.0, rtol=tol, max_step=np.inf).states[-1]) / 5.0
               for tol in (1e-3, 5e-4)]
    ok = drift < DRIFT_PER_TIME and slope >= 1.0 and halving[0] >= 2 * halving[1]
    record(6, ok, f"drift per unit time {drift:.2e} at rtol {DRIFT_RTOL} (< {DRIFT_PER_TIME}); "
                  f"log-log slope vs tolerance {slope:.2f}; halving 1e-3 -> 5e-4 reduces drift "
                  f"{halving[0] / halving[1]:.1f}x")
    INFO.append("criterion 6 drifts per unit time: " + ", ".join(f"{t:g}->{d:.2e}" for t, d in zip(tols, drifts)))
    assert ok


def test_criterion_7_coupling_continuity(grid):
    st = _mild_state(grid)
    conformal = dyn.solve_geometry(st)[0]
    gaps = []
    for n in range(2, 7):
        worst = 0.0
        for sign in (1, -1):
            s = replace(st, cfg=replace(st.cfg, xi=1 / 6 + sign * 10.0 ** -n), equation="general")
            worst = max(worst, abs(dyn.general_geometry_solve(s, conformal)["Hdddot"] - conformal))
        gaps.append(worst)
    monotone = all(b < a for a, b in zip(gaps, gaps[1:]))
    ok = monotone and gaps[-1] < CONTINUITY_FINAL
    record(7, ok, "|H'''_general - H'''_conformal| for n=2..6: " + ", ".join(f"{g:.3g}" for g in gaps)
           + f"; monotone {monotone}")
    at = replace(st, equation="general")
    gap_res = dyn.equation_residual(at, conformal, "general")
    INFO.append(f"criterion 7: at xi = 1/6 the general equation evaluated at the conformal H''' leaves "
                f"residual {gap_res:.6g}; the limit is a fixed offset, not zero")
    # the flat-space part of the offset is m^4 log(lambda) / (4 pi^2); absorb it into c and look again
    shift = -math.log(st.cfg.lam) / (4 * math.pi ** 2)
    shifted = []
    for n in (2, 4, 6):
        s = replace(st, cfg=replace(st.cfg, xi=1 / 6 + 10.0 ** -n, c=st.cfg.c + shift), equation="general")
        shifted.append(abs(dyn.general_geometry_solve(s, conformal)["Hdddot"] - conformal))
    INFO.append("criterion 7: with c shifted by -log(lambda)/(4 pi^2) the gaps for n=2,4,6 are "
                + ", ".join(f"{g:.3g}" for g in shifted))
    assert ok


def test_criterion_8_hadamard_persistence(grid):
    def growth(eps):
        st = _mild_state(grid, eps)
        traj = dyn.evolve(st, 1.0, rtol=DRIFT_RTOL, output_times=np.linspace(0, 1, 11))
        mon = [dyn.hadamard_difference(s) for s in traj.states]
        return mon, max(mon) / mon[0]

    mon, g = growth(1.0)
    ok = g < PERSISTENCE_FACTOR and all(np.isfinite(mon))
    record(8, ok, f"k^7-weighted difference (k in [1, 10]) from {mon[0]:.3g} to max {max(mon):.3g}, "
                  f"growth {g:.2f} (< {PERSISTENCE_FACTOR})")
    mon_s, g_s = growth(1e-2)
    INFO.append(f"criterion 8: with a 100x smaller perturbation the monitor rises from {mon_s[0]:.3g} to "
                f"{max(mon_s):.3g} (growth {g_s:.0f}); it saturates at the k^-7 truncation level of the "
                "Hadamard modes, which does not depend on the perturbation")
    assert ok


def test_criterion_9_determinism():
    cfg = {
        "coupling": {"m": 1.0, "xi": "conformal", "lambda": "static", "eight_pi_G": 1},
        "grid": {"k_min": 0.01, "k_max": 1000, "points": 512},
        "init": {"profile": "vacuum", "a": {"name": "bump", "amplitude": 0.01}},
        "integrator": {"rtol": 1e-9},
        "t_end": 0.5, "cadence": 0.25,
    }
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        (tmp / "cfg.json").write_text(json.dumps(cfg))
        outs = []
        for threads in ("1", "4"):
            env = dict(os.environ)
            for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
                env[var] = threads
            out = tmp / f"out{threads}"
            subprocess.run([sys.executable, "-m", "backreaction", "run", str(tmp / "cfg.json"), "--out", str(out)],
                           check=True, env=env, capture_output=True)
            outs.append(out)
        names = sorted(p.name for p in outs[0].iterdir())
        same = names == sorted(p.name for p in outs[1].iterdir())
        _, mismatch, errors = filecmp.cmpfiles(outs[0], outs[1], names, shallow=False)
        ok = same and not mismatch and not errors
        record(9, ok, f"{len(names)} files compared byte for byte with 1 and 4 threads; mismatches {mismatch}")
    assert ok


if __name__ == "__main__":
    g = qd.default_grid()
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn(g) if fn.__code__.co_argcount else fn()
            except AssertionError:
                pass
    print("\n".join(report_lines()))
