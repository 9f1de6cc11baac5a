"""Coupled evolution of the two-point modes and the scale factor.

The state carries ``(a, H, Hdot, Hddot)`` and, for every grid momentum, the
symmetric equal-time modes ``(G_pp, G_ppi, G_pipi)``. Each right-hand side
evaluation solves the trace equation for ``H'''`` at the current stage, so
the geometry never lags the modes.

Three forms of the geometry equation are supported:

``conformal``
    ``xi = 1/6`` with ``c'' != -1/(2880 pi^2)``; explicit in ``H'''``.
``wald``
    ``xi = 1/6`` with ``c'' = -1/(2880 pi^2)``; the equation no longer
    contains ``H'''`` or ``Hddot`` and becomes a constraint fixing ``Hdot``.
``general``
    any ``xi``; the right side is affine in ``H'''`` through the
    counterterms, the zero-mode term and ``v1``, and is solved from two
    evaluations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from .quadrature import ModeGrid, QuadResult, default_grid, regularized_k3_pairing
from .subtraction import (
    CouplingConfig,
    GeometryState,
    hadamard_modes,
    homogeneous_term,
    subtraction_coefficients,
    v1_value,
)

WALD_C_DPRIME = -1.0 / (2880.0 * math.pi ** 2)
PI2 = math.pi ** 2
EIGHT_PI3 = 8.0 * math.pi ** 3


class SolverAbort(RuntimeError):
    def __init__(self, message: str, dump: dict | None = None):
        super().__init__(message)
        self.dump = dump or {}


class GeometrySolveError(RuntimeError):
    pass


@dataclass(frozen=True)
class ModeState:
    k: np.ndarray
    Gpp: np.ndarray
    Gppi: np.ndarray
    Gpipi: np.ndarray

    @property
    def J(self) -> np.ndarray:
        return self.Gpp * self.Gpipi - self.Gppi ** 2


@dataclass(frozen=True)
class SystemState:
    geo: GeometryState
    Hdddot_prev: float
    modes: ModeState
    cfg: CouplingConfig
    grid: ModeGrid
    equation: str = "auto"
    H4: float = 0.0


# ---------------------------------------------------------------------------
# Modes
# ---------------------------------------------------------------------------

def omega2(k, geo: GeometryState, cfg: CouplingConfig):
    return np.asarray(k) ** 2 / geo.a ** 2 + cfg.m2 - cfg.xi * geo.R


def mode_rhs(ms: ModeState, geo: GeometryState, cfg: CouplingConfig):
    a3 = geo.a ** 3
    w2 = omega2(ms.k, geo, cfg)
    dpp = 2.0 * ms.Gppi / a3
    dppi = -a3 * w2 * ms.Gpp + ms.Gpipi / a3
    dpipi = -2.0 * a3 * w2 * ms.Gppi
    return dpp, dppi, dpipi


def smooth_step(k, lo: float = 0.5, hi: float = 1.0):
    """C-infinity step rising from 0 at ``lo`` to 1 at ``hi``."""
    x = np.clip((np.asarray(k, dtype=float) - lo) / (hi - lo), 0.0, 1.0)

    def f(t):
        return np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)

    return f(x) / (f(x) + f(1.0 - x))


@dataclass(frozen=True)
class InitSpec:
    """Initial mode data.

    ``profile="vacuum"`` uses the instantaneous frozen vacuum
    ``G_pp = 1/(2 a^3 w)``; ``profile="hadamard"`` uses the Hadamard modes for
    ``k >= 1``, blended smoothly into the frozen vacuum below. ``a_fn`` and
    ``b_fn`` perturb ``G_pp`` and ``G_ppi``; ``G_pipi`` follows from purity,
    plus ``c_fn`` for mixed states.
    """

    profile: str = "vacuum"
    a_fn: Optional[Callable] = None
    b_fn: Optional[Callable] = None
    purity: bool = True
    c_fn: Optional[Callable] = None
    Hdddot: Optional[float] = None
    H4: Optional[float] = None


def _frozen_vacuum(k, geo, cfg):
    w2 = omega2(k, geo, cfg)
    if np.any(w2 <= 0):
        raise ValueError("frozen vacuum needs a positive frequency at every node")
    w = np.sqrt(w2)
    a3 = geo.a ** 3
    return 1.0 / (2 * a3 * w), np.zeros_like(w), a3 * w / 2


def _build_modes(spec: InitSpec, grid: ModeGrid, geo, cfg, H3: float, H4: float) -> ModeState:
    k = grid.nodes
    pp, ppi, pipi = _frozen_vacuum(k, geo, cfg)
    if spec.profile == "hadamard":
        sc = subtraction_coefficients(geo, H3, cfg, H4=H4)
        hpp, hppi, _ = hadamard_modes(k, sc, geo)
        s = smooth_step(k)
        pp = s * hpp + (1 - s) * pp
        ppi = s * hppi + (1 - s) * ppi
    elif spec.profile != "vacuum":
        raise ValueError(f"unknown init profile {spec.profile!r}")
    if spec.a_fn is not None:
        pp = pp + np.asarray(spec.a_fn(k), dtype=float)
    if spec.b_fn is not None:
        ppi = ppi + np.asarray(spec.b_fn(k), dtype=float)
    bad = np.nonzero(~(pp > 0))[0]
    if bad.size:
        raise ValueError(f"initial G_pp is not positive at k = {k[bad[0]]:.6g}")
    pipi = (0.25 + ppi ** 2) / pp
    if not spec.purity and spec.c_fn is not None:
        c = np.asarray(spec.c_fn(k), dtype=float)
        if np.any(c < 0):
            raise ValueError("mixed-state addition must be non-negative")
        pipi = pipi + c
    return ModeState(k.copy(), pp, ppi, pipi)


def init_state(spec: InitSpec, grid: ModeGrid | None, geo: GeometryState, cfg: CouplingConfig,
               equation: str = "auto") -> SystemState:
    """Build initial modes and solve the geometry equation for ``H'''``.

    The Hadamard profile depends on ``H'''`` (and on ``H''''`` through
    ``beta5`` away from conformal coupling) while ``H'''`` depends on the
    modes; the two are iterated to a fixed point. ``H''''`` is estimated by
    differencing the solved ``H'''`` along the flow unless given.
    """
    grid = grid or default_grid()
    if equation == "wald" or (equation == "auto" and cfg.conformal
                              and abs(cfg.c_dprime - WALD_C_DPRIME) <= 1e-12 * abs(WALD_C_DPRIME)):
        return _init_wald(spec, grid, geo, cfg, equation)
    H3 = 0.0 if spec.Hdddot is None else spec.Hdddot
    H4 = 0.0 if spec.H4 is None else spec.H4
    state = None
    for _ in range(8 if spec.profile == "hadamard" else 1):
        modes = _build_modes(spec, grid, geo, cfg, H3, H4)
        state = SystemState(geo, H3, modes, cfg, grid, equation, H4)
        if spec.Hdddot is not None:
            break
        new = solve_geometry(state)[0]
        done = abs(new - H3) <= 1e-12 * max(1.0, abs(new))
        H3 = new
        if spec.profile == "hadamard" and spec.H4 is None and not cfg.conformal:
            H4 = _estimate_H4(replace(state, Hdddot_prev=H3))
        if done:
            break
    state = replace(state, Hdddot_prev=H3 if spec.Hdddot is None else spec.Hdddot, H4=H4)
    if spec.Hdddot is None and _branch(state) != "wald":
        state = replace(state, Hdddot_prev=solve_geometry(state)[0])
    return state


def _init_wald(spec: InitSpec, grid: ModeGrid, geo: GeometryState, cfg: CouplingConfig,
               equation: str) -> SystemState:
    """Wald branch: ``Hdot`` from the constraint, ``Hddot`` and ``H'''`` by differencing it."""
    state = None
    for _ in range(8):
        modes = _build_modes(spec, grid, geo, cfg, 0.0, 0.0)
        state = SystemState(geo, 0.0, modes, cfg, grid, equation)
        hdot = wald_Hdot(state)
        done = abs(hdot - geo.Hdot) <= 1e-14 * max(1.0, abs(hdot))
        geo = replace(geo, Hdot=hdot)
        if done or spec.profile == "vacuum":
            break
    state = replace(state, geo=geo)
    Hdd, H3 = _wald_derivatives(state)
    return replace(state, geo=replace(geo, Hddot=Hdd), Hdddot_prev=H3)


def _estimate_H4(state: SystemState, dt: float = 1e-6) -> float:
    y = pack(state)
    f = _rhs_factory(state)(state.geo.t, y)
    H3a = solve_geometry(unpack(y, state))[0]
    H3b = solve_geometry(unpack(y + dt * f, state, t=state.geo.t + dt))[0]
    return (H3b - H3a) / dt


# ---------------------------------------------------------------------------
# Mode integrals
# ---------------------------------------------------------------------------

def phi2_integral(state: SystemState, H3: float | None = None) -> QuadResult:
    """``int [G_pp - a^-2/(2k) - alpha3/(2k^3)] d^3k`` with the regularized ``k^-3`` part."""
    geo, cfg, grid, ms = state.geo, state.cfg, state.grid, state.modes
    H3 = state.Hdddot_prev if H3 is None else H3
    sc = subtraction_coefficients(geo, H3, cfg)
    k = ms.k
    f = k ** 3 * ms.Gpp - k ** 2 / (2 * geo.a ** 2) - sc.alpha3 / 2
    return regularized_k3_pairing(f, grid, f0=-sc.alpha3 / 2, tail=5, tail_coeff=sc.alpha5 / 2, detail=True)


def phi2_renormalized(state: SystemState) -> float:
    """Mode-integral part of the renormalized ``<phi^2>`` (zero-mode terms excluded)."""
    return phi2_integral(state).value / EIGHT_PI3


def _general_integrals(state: SystemState, H3: float):
    geo, cfg, grid, ms = state.geo, state.cfg, state.grid, state.modes
    sc = subtraction_coefficients(geo, H3, cfg)
    k, a = ms.k, geo.a
    k2, k3 = k ** 2, k ** 3
    f_pipi = k3 * ms.Gpipi - a ** 2 * k2 * k2 / 2 - (a ** 4 * geo.H ** 2 + sc.gamma1) * k2 / 2 - sc.gamma3 / 2
    f_kk = k3 * k2 * ms.Gpp - k2 * k2 / (2 * a ** 2) - sc.alpha3 * k2 / 2 - sc.alpha5 / 2
    f_phi = k3 * ms.Gpp - k2 / (2 * a ** 2) - sc.alpha3 / 2
    I_pipi = regularized_k3_pairing(f_pipi, grid, f0=-sc.gamma3 / 2, detail=True)
    I_kk = regularized_k3_pairing(f_kk, grid, f0=-sc.alpha5 / 2, detail=True)
    I_phi = regularized_k3_pairing(f_phi, grid, f0=-sc.alpha3 / 2, tail=5,
                                   tail_coeff=sc.alpha5 / 2, detail=True)
    return I_pipi, I_kk, I_phi


# ---------------------------------------------------------------------------
# Geometry equation
# ---------------------------------------------------------------------------

def _branch(state: SystemState) -> str:
    if state.equation != "auto":
        return state.equation
    cfg = state.cfg
    if cfg.conformal:
        if abs(cfg.c_dprime - WALD_C_DPRIME) <= 1e-12 * abs(WALD_C_DPRIME):
            return "wald"
        return "conformal"
    return "general"


def conformal_rhs_value(state: SystemState, H3: float, I_phi: float | None = None) -> float:
    """Right side of the conformal trace equation (including ``8 pi G``)."""
    geo, cfg = state.geo, state.cfg
    if I_phi is None:
        I_phi = phi2_integral(state, H3).value
    m2 = cfg.m2
    body = (
        m2 * I_phi / EIGHT_PI3
        + m2 * (1.0 / 72.0 + cfg.c_prime) * geo.R
        + (geo.Hdot * geo.H ** 2 + geo.H ** 4) / (240.0 * PI2)
        + (1.0 / (2880.0 * PI2) + cfg.c_dprime) * geo.box_R(H3)
        + m2 * m2 / (4.0 * PI2) * math.log(geo.a ** 2 / cfg.lam ** 2)
        - m2 * m2 * (1.0 / (32.0 * PI2) - cfg.c)
    )
    return 8.0 * math.pi * cfg.G_N * body


def general_rhs_value(state: SystemState, H3: float) -> float:
    """Right side of the general trace equation (including ``8 pi G``)."""
    geo, cfg = state.geo, state.cfg
    xi, m2, R, a = cfg.xi, cfg.m2, geo.R, geo.a
    I_pipi, I_kk, I_phi = _general_integrals(state, H3)
    body = (
        (6 * xi - 1) * (I_pipi.value / a ** 6 + I_kk.value / a ** 2) / EIGHT_PI3
        + xi * (6 * m2 + (6 * xi - 1) * R) * I_phi.value / EIGHT_PI3
        - homogeneous_term(geo, H3, cfg) / (4 * PI2)
        + (36 * xi - 5) * v1_value(geo, H3, cfg) / (4 * PI2)
        + cfg.c * m2 * m2 + cfg.c_prime * m2 * R + cfg.c_dprime * geo.box_R(H3)
    )
    return 8.0 * math.pi * cfg.G_N * body


def equation_residual(state: SystemState, H3: float, branch: str | None = None) -> float:
    """``lhs - rhs`` of the trace equation, ``lhs = -R``."""
    branch = branch or _branch(state)
    if branch == "general":
        return -state.geo.R - general_rhs_value(state, H3)
    return -state.geo.R - conformal_rhs_value(state, H3)


def conformal_geometry_rhs(state: SystemState) -> dict:
    """Solve the conformal equation for ``H'''`` (explicit branch).

    In the Wald branch ``H'''`` drops out; the returned ``residual_fn`` maps a
    trial ``Hdot`` to the constraint residual.
    """
    if not state.cfg.conformal:
        raise ValueError("conformal equation requires xi = 1/6")
    cfg = state.cfg
    K = 1.0 / (2880.0 * PI2) + cfg.c_dprime
    if _branch(state) == "wald" or K == 0.0:
        return {"residual_fn": lambda Hdot: equation_residual(
            replace(state, geo=replace(state.geo, Hdot=Hdot)), 0.0, "conformal")}
    I_phi = phi2_integral(state, state.Hdddot_prev).value
    r0 = -state.geo.R - conformal_rhs_value(state, 0.0, I_phi)
    slope = 8.0 * math.pi * cfg.G_N * 6.0 * K  # d(residual)/dH''' = +48 pi G K
    if abs(slope) < 1e-300:
        raise GeometrySolveError("singular H''' coefficient")
    H3 = -r0 / slope
    return {"Hdddot": H3, "residual": -state.geo.R - conformal_rhs_value(state, H3, I_phi)}


def general_geometry_solve(state: SystemState, guess_Hdddot: float = 0.0,
                           check_linearity: bool = False, threshold: float = 1e-12,
                           damping: float = 0.5, n_max: int = 50) -> dict:
    """Solve the general equation for ``H'''`` by affine extraction.

    Two evaluations at ``guess`` and ``guess + 1`` fix the affine map; with
    ``check_linearity`` a third at ``guess + 2`` reports the collinearity
    defect. A degenerate slope falls back to damped fixed-point iteration.
    """
    x0, x1 = guess_Hdddot, guess_Hdddot + 1.0
    r0 = equation_residual(state, x0, "general")
    r1 = equation_residual(state, x1, "general")
    slope = r1 - r0
    out = {}
    if check_linearity:
        r2 = equation_residual(state, x0 + 2.0, "general")
        out["collinearity"] = abs(r2 - 2 * r1 + r0) / max(abs(r0), abs(r1), abs(r2), 1e-300)
    scale = max(abs(r0), abs(r1), 1.0)
    if abs(slope) > threshold * scale:
        H3 = x0 - r0 / slope
        out.update(Hdddot=H3, residual=equation_residual(state, H3, "general"), slope=slope)
        return out
    # implicit system degenerate at this state
    x, r = x0, r0
    for _ in range(n_max):
        step = -r if slope == 0 else -r / slope
        x_new = x + damping * step
        r_new = equation_residual(state, x_new, "general")
        if abs(r_new) <= 1e-12 * scale:
            out.update(Hdddot=x_new, residual=r_new, slope=slope)
            return out
        x, r = x_new, r_new
    raise GeometrySolveError("implicit system degenerate at this state; fixed-point iteration did not converge")


def solve_geometry(state: SystemState) -> tuple[float, float]:
    """``(H''', residual)`` for explicit branches."""
    branch = _branch(state)
    if branch == "general":
        res = general_geometry_solve(state, state.Hdddot_prev)
        return res["Hdddot"], res["residual"]
    if branch == "wald":
        raise ValueError("the Wald branch has no H''' to solve for")
    res = conformal_geometry_rhs(state)
    return res["Hdddot"], res["residual"]


def wald_Hdot(state: SystemState) -> float:
    """``Hdot`` fixed by the Wald-branch constraint (affine in ``Hdot``)."""
    fn = conformal_geometry_rhs(replace(state, equation="wald"))["residual_fn"]
    r0, r1 = fn(0.0), fn(1.0)
    if r1 == r0:
        raise GeometrySolveError("Wald constraint does not determine Hdot")
    return -r0 / (r1 - r0)


def trace_diagnostics(state: SystemState) -> dict:
    branch = _branch(state)
    H3 = state.Hdddot_prev
    if branch == "general":
        rhs = general_rhs_value(state, H3)
    else:
        rhs = conformal_rhs_value(state, H3)
    lhs = -state.geo.R
    return {"lhs": lhs, "rhs": rhs, "residual": lhs - rhs,
            "rho_minus_3p": lhs / (8.0 * math.pi * state.cfg.G_N)}


# ---------------------------------------------------------------------------
# Packing and time stepping
# ---------------------------------------------------------------------------

def pack(state: SystemState) -> np.ndarray:
    g, ms = state.geo, state.modes
    if _branch(state) == "wald":
        head = [g.a, g.H]
    else:
        head = [g.a, g.H, g.Hdot, g.Hddot]
    return np.concatenate([head, ms.Gpp, ms.Gppi, ms.Gpipi])


def unpack(y: np.ndarray, template: SystemState, t: float | None = None) -> SystemState:
    n = len(template.grid)
    t = template.geo.t if t is None else t
    wald = _branch(template) == "wald"
    h = 2 if wald else 4
    modes = ModeState(template.grid.nodes, y[h:h + n], y[h + n:h + 2 * n], y[h + 2 * n:h + 3 * n])
    if wald:
        geo = GeometryState(t, y[0], y[1], template.geo.Hdot, template.geo.Hddot)
        state = replace(template, geo=geo, modes=modes)
        geo = replace(geo, Hdot=wald_Hdot(state))
        return replace(state, geo=geo)
    geo = GeometryState(t, y[0], y[1], y[2], y[3])
    return replace(template, geo=geo, modes=modes)


def _rhs_factory(template: SystemState):
    wald = _branch(template) == "wald"
    holder = {"H3": template.Hdddot_prev}

    def rhs(t, y):
        try:
            st = unpack(y, replace(template, Hdddot_prev=holder["H3"]), t)
        except (ValueError, GeometrySolveError):
            # an unphysical trial stage; NaN makes the integrator reject the step
            return np.full_like(y, np.nan)
        dpp, dppi, dpipi = mode_rhs(st.modes, st.geo, st.cfg)
        g = st.geo
        if wald:
            head = [g.a * g.H, g.Hdot]
        else:
            H3 = solve_geometry(st)[0]
            holder["H3"] = H3
            head = [g.a * g.H, g.Hdot, g.Hddot, H3]
        return np.concatenate([head, dpp, dppi, dpipi])

    return rhs


def _atol(state: SystemState, rtol: float) -> np.ndarray:
    ms = state.modes
    n = len(ms.k)
    head = [abs(state.geo.a)] + [1.0] * (1 if _branch(state) == "wald" else 3)
    cross = np.sqrt(np.abs(ms.Gpp * ms.Gpipi))
    scales = np.concatenate([head, np.abs(ms.Gpp), cross, np.abs(ms.Gpipi)])
    assert scales.size == len(head) + 3 * n
    return rtol * np.where(scales > 0, scales, 1.0)


def _finish_state(y, template: SystemState, t: float) -> SystemState:
    st = unpack(y, template, t)
    if _branch(st) == "wald":
        Hdd, H3 = _wald_derivatives(st)
        return replace(st, geo=replace(st.geo, Hddot=Hdd), Hdddot_prev=H3)
    return replace(st, Hdddot_prev=solve_geometry(st)[0])


def _wald_Hddot(state: SystemState, y: np.ndarray, t: float, dt: float) -> float:
    f = _rhs_factory(state)(t, y)
    hp = unpack(y + dt * f, state, t + dt).geo.Hdot
    hm = unpack(y - dt * f, state, t - dt).geo.Hdot
    return (hp - hm) / (2 * dt)


def _wald_derivatives(state: SystemState, dt: float = 1e-3, dt_outer: float = 1e-2) -> tuple[float, float]:
    """``Hddot`` and ``H'''`` by differencing the constraint along the flow.

    ``H'''`` differences ``Hddot`` between states moved one explicit step
    forward and backward, each ``Hddot`` using the flow at its own state.
    The steps trade truncation error against the rounding noise of the mode
    integral; both are output-only quantities here.
    """
    y = pack(state)
    t = state.geo.t
    hdd = _wald_Hddot(state, y, t, dt)
    f = _rhs_factory(state)(t, y)
    up = _wald_Hddot(state, y + dt_outer * f, t + dt_outer, dt)
    down = _wald_Hddot(state, y - dt_outer * f, t - dt_outer, dt)
    return hdd, (up - down) / (2 * dt_outer)


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    nfev: int = 0


def evolve(state: SystemState, t_end: float, rtol: float = 1e-9, output_times=None,
           max_step: float | None = None) -> Trajectory:
    """Integrate to ``t_end`` with the DOP853 embedded pair.

    Returns the states at ``output_times`` (default: start and end). The
    default ``max_step`` is ``3 / w_max`` so the fastest mode stays inside the
    stability region even when the error estimate is tiny (near a static
    solution).
    """
    if max_step is None:
        w_max = math.sqrt(max(float(omega2(state.grid.k_max, state.geo, state.cfg)), 1e-300))
        max_step = 3.0 / w_max
    t0 = state.geo.t
    if output_times is None:
        output_times = [t0, t_end]
    output_times = sorted(set(float(t) for t in output_times if t0 <= t <= t_end))
    rhs = _rhs_factory(state)
    y0 = pack(state)
    sol = solve_ivp(rhs, (t0, t_end), y0, method="DOP853", rtol=rtol, atol=_atol(state, rtol),
                    t_eval=output_times, max_step=max_step)
    if sol.status != 0:
        raise SolverAbort(f"integrator stopped at t={sol.t[-1] if len(sol.t) else t0}: {sol.message}",
                          {"t": float(sol.t[-1]) if len(sol.t) else t0,
                           "y_head": [float(v) for v in (sol.y[:4, -1] if sol.y.size else y0[:4])]})
    traj = Trajectory(nfev=sol.nfev)
    for i, t in enumerate(sol.t):
        traj.times.append(float(t))
        traj.states.append(_finish_state(sol.y[:, i], state, float(t)))
    return traj


def step(state: SystemState, dt_target: float, rtol: float = 1e-9) -> SystemState:
    return evolve(state, state.geo.t + dt_target, rtol).states[-1]


# ---------------------------------------------------------------------------
# Diagnostics and calibration
# ---------------------------------------------------------------------------

def purity_defect(state: SystemState) -> float:
    return float(np.max(np.abs(state.modes.J - 0.25)))


def hadamard_difference(state: SystemState, k_lo: float = 1.0, k_hi: float = 10.0) -> float:
    """``max k^7 |G_pp - h_pp|`` over ``k_lo <= k <= k_hi``.

    The upper cut keeps the ``k^7`` weight from amplifying rounding of
    ``G_pp`` itself.
    """
    ms = state.modes
    sel = (ms.k >= k_lo) & (ms.k <= k_hi)
    sc = subtraction_coefficients(state.geo, state.Hdddot_prev, state.cfg)
    hpp = hadamard_modes(ms.k[sel], sc, state.geo)[0]
    return float(np.max(ms.k[sel] ** 7 * np.abs(ms.Gpp[sel] - hpp)))


def minkowski_lambda(m: float) -> float:
    """``lambda = sqrt(4 exp(7/4 - 2 gamma_E)) / m``."""
    if m <= 0:
        raise ValueError("the Minkowski calibration needs m > 0")
    return math.sqrt(4.0 * math.exp(1.75 - 2.0 * np.euler_gamma)) / m


def static_lambda(m: float, grid: ModeGrid | None = None) -> float:
    """``lambda`` making flat space with vacuum modes a solution of the conformal equation.

    Uses the discrete vacuum integral on ``grid`` when given, otherwise its
    closed form ``pi m^2 (gamma_E - 1/2 - log 2 + log m)``.
    """
    if m <= 0:
        raise ValueError("the static calibration needs m > 0")
    from .quadrature import minkowski_phi2_integral

    m2 = m * m
    if grid is None:
        I = minkowski_phi2_integral(m)
    else:
        cfg = CouplingConfig(m=m, xi=1.0 / 6.0)
        geo = GeometryState(0.0, 1.0, 0.0, 0.0, 0.0)
        st = init_state(InitSpec(Hdddot=0.0), grid, geo, cfg)
        I = phi2_integral(st, 0.0).value
    log_lam2 = (m2 * I / EIGHT_PI3 - m2 * m2 / (32 * PI2)) * 4 * PI2 / (m2 * m2)
    return math.exp(log_lam2 / 2)


def slow_start(spec: InitSpec, grid: ModeGrid | None, geo: GeometryState, cfg: CouplingConfig,
               equation: str = "auto") -> SystemState:
    """Initial state with ``Hdot`` chosen so that ``H''' = 0`` and ``Hddot`` so that ``R' = 0``.

    An arbitrary ``(Hdot, Hddot)`` leaves the trace equation far from
    balance, which the ``box R`` term answers with a fast curvature
    oscillation of frequency ``1/sqrt(8 pi G K)``,
    ``K = 1/(2880 pi^2) + c''``. Starting near the slow solution keeps that
    oscillation small. ``geo.H`` and ``geo.a`` are kept.
    """
    from scipy.optimize import brentq, newton

    fixed = replace(spec, Hdddot=0.0)

    def at(hdot):
        g = replace(geo, Hdot=hdot, Hddot=-4.0 * geo.H * hdot)
        return init_state(fixed, grid, g, cfg, equation)

    def h3(hdot):
        return solve_geometry(at(hdot))[0]

    x0 = -2.0 * geo.H ** 2  # R = 0
    try:
        hdot = newton(h3, x0, x1=x0 + 1e-3 * max(geo.H ** 2, 1e-6), tol=1e-15, maxiter=50)
    except RuntimeError:
        hdot = brentq(h3, x0 - 1.0, x0 + 1.0, xtol=1e-15)
    return init_state(spec, grid, replace(geo, Hdot=hdot, Hddot=-4.0 * geo.H * hdot), cfg, equation)
