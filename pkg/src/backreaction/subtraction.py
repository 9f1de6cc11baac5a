"""Hadamard mode counterterms and zero-mode terms on flat RW spacetime.

The large-``k`` expansion of the Hadamard modes is

    h_pp   = a^-2/(2k) + alpha3/(2k^3) + alpha5/(2k^5)
    h_ppi  = -a H/(2k) + beta3/(2k^3) + beta5/(2k^5)
    h_pipi = a^2 k/2 + (a^4 H^2 + gamma1)/(2k) + gamma3/(2k^3)

All coefficients are held as exact symbol polynomials (see
:mod:`backreaction.series`) and evaluated numerically from the same objects,
so the symbolic closure checks and the numbers used by the dynamics cannot
drift apart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction as F
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .hadamard import box_ricci, ricci_scalar, v1_trace_form
from .series import CoeffPoly, symbols

_a, _H, _Hd, _Hdd, _H3, _H4, _m2, _xi = symbols()


@dataclass(frozen=True)
class CouplingConfig:
    m: float = 1.0
    xi: float = 1.0 / 6.0
    lam: float = 1.0
    c: float = 0.0
    c_prime: float = 0.0
    c_dprime: float = 0.0
    G_N: float = 1.0 / (8.0 * math.pi)

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if self.m < 0:
            raise ValueError("mass must be non-negative")
        if not self.G_N > 0:
            raise ValueError("G_N must be positive")

    @property
    def m2(self) -> float:
        return self.m * self.m

    @property
    def conformal(self) -> bool:
        return abs(self.xi - 1.0 / 6.0) < 1e-15


@dataclass(frozen=True)
class GeometryState:
    t: float
    a: float
    H: float
    Hdot: float
    Hddot: float

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("scale factor must be positive")

    @property
    def R(self) -> float:
        return -6.0 * (self.Hdot + 2.0 * self.H ** 2)

    @property
    def Rdot(self) -> float:
        return -6.0 * (self.Hddot + 4.0 * self.H * self.Hdot)

    def Rddot(self, Hdddot: float) -> float:
        return -6.0 * (Hdddot + 4.0 * self.Hdot ** 2 + 4.0 * self.H * self.Hddot)

    def box_R(self, Hdddot: float) -> float:
        return self.Rddot(Hdddot) + 3.0 * self.H * self.Rdot

    def values(self, cfg: CouplingConfig, Hdddot: float = 0.0, H4: float = 0.0) -> dict:
        return {"a": self.a, "H": self.H, "Hd": self.Hdot, "Hdd": self.Hddot,
                "H3": Hdddot, "H4": H4, "m2": cfg.m2, "xi": cfg.xi}


# ---------------------------------------------------------------------------
# Closed forms (symbolic)
# ---------------------------------------------------------------------------

def _sixth():
    return CoeffPoly.const(F(1, 6)) - _xi


def _P():
    return _sixth() * ricci_scalar() + _m2


@lru_cache(maxsize=None)
def closed_forms(printed: bool = False) -> dict[str, CoeffPoly]:
    """Symbolic ``alpha3 .. gamma3`` with the integration constants set to zero.

    With ``printed=True`` the ``m^4`` terms of ``alpha5`` and ``gamma3`` carry
    the displayed signs (``-3 m^4`` and ``-m^4`` inside the braces); the
    default forms (``+3 m^4``, ``+m^4``) are the ones that solve the
    coefficient system.
    """
    R = ricci_scalar()
    Rd = R.derive()
    Rdd = Rd.derive()
    sixth, xi, m2, a, H, Hd = _sixth(), _xi, _m2, _a, _H, _Hd
    m4 = m2 * m2 * (-1 if printed else 1)
    alpha3 = _P() * F(-1, 2)
    beta3 = a ** 3 * sixth * Rd * F(-1, 4)
    gamma1 = a ** 4 * _P() * F(1, 2)
    alpha5 = a ** 2 * F(1, 8) * (
        sixth * (Rdd + H * Rd * 5 - Hd * R) - sixth * xi * R * R * 3
        - (Hd * 4 + H * H * 6 + xi * R * 6) * m2 + m4 * 3
    )
    beta5 = a ** 3 * alpha5.derive() * F(1, 2)
    gamma3 = a ** 6 * F(-1, 8) * (
        sixth * (Rdd + H * Rd + Hd * R) - sixth * xi * R * R
        - (H * H + xi * R) * m2 * 2 + m4
    )
    return {"alpha3": alpha3, "beta3": beta3, "gamma1": gamma1,
            "alpha5": alpha5, "beta5": beta5, "gamma3": gamma3}


def coefficient_system(forms: dict[str, CoeffPoly] | None = None) -> dict[str, CoeffPoly]:
    """Residuals of the two coefficient systems and the purity conditions.

    Each entry is zero iff the closed forms satisfy that equation exactly.
    The third equation of the second system is taken with ``gamma3`` (the
    ``k^-3`` order of the ``(phi pi)`` equation).
    """
    f = forms or closed_forms()
    a, H, R, m2, xi = _a, _H, ricci_scalar(), _m2, _xi
    mass = m2 - xi * R
    al3, be3, ga1 = f["alpha3"], f["beta3"], f["gamma1"]
    al5, be5, ga3 = f["alpha5"], f["beta5"], f["gamma3"]
    ainv = a.inverse()
    return {
        "a1": al3.derive() - ainv ** 3 * be3 * 2,
        "a2": ga1.derive() - (-a * be3 * 2 + a ** 4 * H * _P() * 2),
        "a3": al3 - (ainv ** 4 * ga1 - _sixth() * R - m2),
        "b1": al5.derive() - ainv ** 3 * be5 * 2,
        "b2": ga3.derive() - (-a * be5 * 2 - a ** 3 * be3 * mass * 2),
        "b3": al5 - (ainv ** 4 * ga3 - ainv * be3.derive() - a ** 2 * al3 * mass),
        "null1": ainv ** 2 * ga1 + a ** 2 * al3,
        "null2": (ainv ** 2 * ga3 + a ** 2 * al5 + a ** 4 * H * H * al3
                  + al3 * ga1 + a * H * be3 * 2),
    }


def with_integration_constant(A: float, exact: bool = False) -> dict[str, Callable]:
    """First-order coefficients with a nonzero integration constant ``A``.

    With ``exact`` the callables take and return rationals.
    """
    f = closed_forms()
    if exact:
        A = F(A)
        return {
            "alpha3": lambda v: f["alpha3"].evaluate_exact(v) + A * F(v["a"]) ** -2,
            "beta3": lambda v: f["beta3"].evaluate_exact(v) - A * F(v["H"]) * F(v["a"]),
            "gamma1": lambda v: f["gamma1"].evaluate_exact(v) + A * F(v["a"]) ** 2,
        }
    return {
        "alpha3": lambda v: f["alpha3"].evaluate(v) + A * v["a"] ** -2,
        "beta3": lambda v: f["beta3"].evaluate(v) - A * v["H"] * v["a"],
        "gamma1": lambda v: f["gamma1"].evaluate(v) + A * v["a"] ** 2,
    }


# ---------------------------------------------------------------------------
# Numeric evaluation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SubtractionCoefficients:
    alpha3: float
    beta3: float
    gamma1: float
    alpha5: float
    beta5: float
    gamma3: float
    needs_Hdddot: bool


def fourier_singular_modes(geo: GeometryState, k) -> tuple:
    """Leading singular modes ``(h_pp, h_ppi, h_pipi)`` at momentum ``k``."""
    k = np.asarray(k, dtype=float)
    if np.any(k <= 0):
        raise ValueError("momentum must be positive")
    a, H = geo.a, geo.H
    return (a ** -2 / (2 * k), -a * H / (2 * k), a ** 2 * k / 2 + a ** 4 * H ** 2 / (2 * k))


def subtraction_coefficients(geo: GeometryState, Hdddot: float, cfg: CouplingConfig,
                             H4: float = float("nan"), printed: bool = False) -> SubtractionCoefficients:
    """Evaluate the counterterm coefficients.

    ``beta5`` needs ``H''''`` unless ``xi = 1/6``; pass ``H4`` when it is
    known, otherwise ``beta5`` is NaN for non-conformal coupling.
    """
    f = closed_forms(printed)
    v = geo.values(cfg, Hdddot, 0.0 if math.isnan(H4) else H4)
    needs = not cfg.conformal
    beta5 = f["beta5"].evaluate(v)
    if math.isnan(H4) and needs:
        beta5 = float("nan")
    return SubtractionCoefficients(
        f["alpha3"].evaluate(v), f["beta3"].evaluate(v), f["gamma1"].evaluate(v),
        f["alpha5"].evaluate(v), beta5, f["gamma3"].evaluate(v), needs,
    )


def exact_coefficients(geo: GeometryState, Hdddot: float, H4: float, cfg: CouplingConfig) -> SubtractionCoefficients:
    """Counterterm coefficients in exact rational arithmetic.

    The float inputs are converted exactly, so identities between the
    coefficients (such as the purity conditions) hold without rounding.
    """
    f = closed_forms()
    v = {"a": F(geo.a), "H": F(geo.H), "Hd": F(geo.Hdot), "Hdd": F(geo.Hddot),
         "H3": F(Hdddot), "H4": F(H4), "m2": F(cfg.m) ** 2, "xi": F(cfg.xi)}
    vals = {name: f[name].evaluate_exact(v) for name in ("alpha3", "beta3", "gamma1", "alpha5", "beta5", "gamma3")}
    return SubtractionCoefficients(needs_Hdddot=not cfg.conformal, **vals)


def hadamard_modes(k, sc: SubtractionCoefficients, geo: GeometryState):
    k = np.asarray(k, dtype=float)
    if np.any(k <= 0):
        raise ValueError("momentum must be positive")
    a, H = geo.a, geo.H
    hpp = a ** -2 / (2 * k) + sc.alpha3 / (2 * k ** 3) + sc.alpha5 / (2 * k ** 5)
    hppi = -a * H / (2 * k) + sc.beta3 / (2 * k ** 3) + sc.beta5 / (2 * k ** 5)
    hpipi = a ** 2 * k / 2 + (a ** 4 * H ** 2 + sc.gamma1) / (2 * k) + sc.gamma3 / (2 * k ** 3)
    return hpp, hppi, hpipi


def purity_residual(k, sc: SubtractionCoefficients, geo: GeometryState):
    """``h_pp h_pipi - h_ppi^2 - 1/4``.

    Evaluated as a sum of exact order-by-order products so that the
    cancellations at large ``k`` do not drown in rounding.
    """
    k = np.asarray(k, dtype=float)
    a, H = geo.a, geo.H
    if isinstance(sc.alpha3, F):
        a, H = F(a), F(H)
    p = [a ** -2 / 2, sc.alpha3 / 2, sc.alpha5 / 2]          # k^-1, k^-3, k^-5
    q = [a ** 2 / 2, (a ** 4 * H ** 2 + sc.gamma1) / 2, sc.gamma3 / 2]  # k^1, k^-1, k^-3
    r = [-a * H / 2, sc.beta3 / 2, sc.beta5 / 2]             # k^-1, k^-3, k^-5
    # coefficients of k^0, k^-2, ..., k^-8 after removing the exact 1/4
    orders = [0] * 5
    for i in range(3):
        for j in range(3):
            orders[i + j] += p[i] * q[j]
            if i + j + 1 < 5:
                orders[i + j + 1] -= r[i] * r[j]
    orders[0] -= F(1, 4) if isinstance(orders[0], F) else 0.25
    return sum(float(c) * k ** (-2 * n) for n, c in enumerate(orders))


def v1_value(geo: GeometryState, Hdddot: float, cfg: CouplingConfig) -> float:
    """The trace-equation form of ``v1`` with ``box R = R'' + 3 H R'``."""
    return _v1_poly().evaluate(geo.values(cfg, Hdddot))


@lru_cache(maxsize=None)
def _v1_poly() -> CoeffPoly:
    return v1_trace_form()


# ---------------------------------------------------------------------------
# Zero-mode term
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def homogeneous_parts(display: str = "simplified") -> tuple[CoeffPoly, CoeffPoly]:
    """``(C0, C1)`` with the zero-mode term ``C0 + log(a^2/lambda^2) C1``.

    ``display="simplified"`` uses the compact form written through ``box R``,
    ``R``, ``H R'`` (the compact display prints ``R'`` where ``H R'`` is
    required); ``display="expanded"`` uses the form written through
    ``H^(n)``. The two agree exactly; see :func:`homogeneous_rewrite_residual`.
    """
    xi, m2, H, Hd, Hdd, H3 = _xi, _m2, _H, _Hd, _Hdd, _H3
    R = ricci_scalar()
    bR = box_ricci()
    HRd = H * R.derive()
    one6 = 1 - xi * 6
    if display == "simplified":
        c0 = (
            (bR * F(-2, 3) - HRd * F(25, 6) - R * R * F(5, 36) + Hd * H ** 2 * 13 + H ** 4 * 23) * F(-1, 30)
            + xi * (bR * F(-3, 2) - HRd * F(25, 3) - R * R * F(20, 9) + Hd * H ** 2 * 23 + H ** 4 * 43) * F(1, 5)
            - xi ** 2 * (bR * F(-1, 6) - HRd * F(5, 6) - R * R * F(1, 2) + Hd * H ** 2 * 2 + H ** 4 * 4) * 6
            - xi ** 3 * R * R * 3
            + m2 * ((R * F(-7, 2) + H ** 2 * 2) - xi * (R * F(-1, 2) + H ** 2 * 2) * 6 + xi ** 2 * R * 6) * F(1, 6)
            + m2 * m2 * one6 * F(1, 2)
        )
        c1 = (
            (bR * F(-1, 2) + R * R * F(5, 6) - Hd * H ** 2 * 4 - H ** 4 * 4) * F(-1, 60)
            + xi * (bR * F(-2, 3) + R * R * F(5, 12) - Hd * H ** 2 * 2 - H ** 4 * 2) * F(1, 5)
            - xi ** 2 * (bR * F(-1, 2) - R * R * F(1, 2))
            - xi ** 3 * R * R * 3
            + m2 * one6 * R * F(1, 4)
            - m2 * m2 * (1 - xi * 3)
        )
        return c0, c1
    if display == "expanded":
        L = Hd + H ** 2 * 2
        c0 = (
            (H3 * 4 + Hdd * H * 53 + Hd ** 2 * 11 + Hd * H ** 2 * 141 + H ** 4 * 3) * F(-1, 30)
            + xi * (H3 * 9 + Hdd * H * 113 - Hd ** 2 * 44 + Hd * H ** 2 * 11 - H ** 4 * 277) * F(1, 5)
            - xi ** 2 * (H3 + Hdd * H * 12 - Hd ** 2 * 14 - Hd * H ** 2 * 38 - H ** 4 * 68) * 6
            - xi ** 3 * L * L * 108
            + m2 * ((Hd * 21 + H ** 2 * 44) - xi * (Hd * 3 + H ** 2 * 8) * 6 - xi ** 2 * L * 36) * F(1, 6)
            + m2 * m2 * one6 * F(1, 2)
        )
        c1 = (
            (H3 * 3 + Hdd * H * 21 + Hd ** 2 * 42 + Hd * H ** 2 * 152 + H ** 4 * 116) * F(-1, 60)
            + xi * (H3 * 4 + Hdd * H * 28 + Hd ** 2 * 31 + Hd * H ** 2 * 106 + H ** 4 * 58) * F(1, 5)
            - xi ** 2 * (H3 * 3 + Hdd * H * 21 - Hd ** 2 * 6 - Hd * H ** 2 * 36 - H ** 4 * 72)
            - xi ** 3 * L * L * 108
            + m2 * one6 * L * F(3, 2)
            - m2 * m2 * (1 - xi * 3)
        )
        return c0, c1
    raise ValueError(f"unknown display {display!r}")


def homogeneous_rewrite_residual() -> tuple[CoeffPoly, CoeffPoly]:
    s0, s1 = homogeneous_parts("simplified")
    e0, e1 = homogeneous_parts("expanded")
    return s0 - e0, s1 - e1


def homogeneous_term(geo: GeometryState, Hdddot: float, cfg: CouplingConfig) -> float:
    c0, c1 = homogeneous_parts()
    v = geo.values(cfg, Hdddot)
    return c0.evaluate(v) + math.log(geo.a ** 2 / cfg.lam ** 2) * c1.evaluate(v)


def conformal_zero_mode(geo: GeometryState, cfg: CouplingConfig) -> float:
    """``R/72 - v0 log(a^2/lambda^2) / (4 pi^2)`` with ``v0 = -m^2/2``."""
    return geo.R / 72.0 + cfg.m2 / (8 * math.pi ** 2) * math.log(geo.a ** 2 / cfg.lam ** 2)


# ---------------------------------------------------------------------------
# Analytic test geometries and trajectory checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AnalyticGeometry:
    """``H(t) = h0 + h1 sin(w t + phase)``, ``a(t) = a0 exp(int_0^t H)``.

    All derivatives of ``H`` are known in closed form, which makes it a
    convenient oracle geometry (``h1 = 0`` gives de Sitter).
    """

    h0: float = 0.1
    h1: float = 0.0
    w: float = 1.0
    phase: float = 0.0
    a0: float = 1.0

    def H_deriv(self, n: int, t: float) -> float:
        if n == 0:
            return self.h0 + self.h1 * math.sin(self.w * t + self.phase)
        return self.h1 * self.w ** n * math.sin(self.w * t + self.phase + n * math.pi / 2)

    def a(self, t: float) -> float:
        integral = self.h0 * t
        if self.h1:
            integral += self.h1 / self.w * (math.cos(self.phase) - math.cos(self.w * t + self.phase))
        return self.a0 * math.exp(integral)

    def state(self, t: float) -> GeometryState:
        return GeometryState(t, self.a(t), self.H_deriv(0, t), self.H_deriv(1, t), self.H_deriv(2, t))

    def coefficients(self, t: float, cfg: CouplingConfig, printed: bool = False,
                     exact: bool = False) -> SubtractionCoefficients:
        if exact:
            return exact_coefficients(self.state(t), self.H_deriv(3, t), self.H_deriv(4, t), cfg)
        return subtraction_coefficients(self.state(t), self.H_deriv(3, t), cfg,
                                        H4=self.H_deriv(4, t), printed=printed)


def coefficient_ode_residual(trajectory: Sequence[tuple[GeometryState, SubtractionCoefficients]],
                             cfg: CouplingConfig) -> dict[str, float]:
    """Finite-difference check of the coefficient ODEs along a sampled trajectory.

    Samples must be uniformly spaced in time. Central differences give
    residuals of order ``dt^2``.
    """
    if len(trajectory) < 5:
        raise ValueError("need at least 5 samples")
    ts = np.array([g.t for g, _ in trajectory])
    dt = np.diff(ts)
    if not np.allclose(dt, dt[0], rtol=1e-9, atol=0):
        raise ValueError("trajectory must be uniformly sampled")
    h = dt[0]

    def series(name):
        return np.array([getattr(sc, name) for _, sc in trajectory])

    a = np.array([g.a for g, _ in trajectory])
    H = np.array([g.H for g, _ in trajectory])
    R = np.array([g.R for g, _ in trajectory])
    P = (1 / 6 - cfg.xi) * R + cfg.m2
    mass = cfg.m2 - cfg.xi * R
    al3, be3, ga1 = series("alpha3"), series("beta3"), series("gamma1")
    al5, be5, ga3 = series("alpha5"), series("beta5"), series("gamma3")

    def ddt(x):
        return (x[2:] - x[:-2]) / (2 * h)

    mid = slice(1, -1)
    res = {
        "a1": ddt(al3) - 2 * a[mid] ** -3 * be3[mid],
        "a2": ddt(ga1) - (-2 * a[mid] * be3[mid] + 2 * a[mid] ** 4 * H[mid] * P[mid]),
        "a3": al3 - (a ** -4 * ga1 - (1 / 6 - cfg.xi) * R - cfg.m2),
        "b1": ddt(al5) - 2 * a[mid] ** -3 * be5[mid],
        "b2": ddt(ga3) - (-2 * a[mid] * be5[mid] - 2 * a[mid] ** 3 * be3[mid] * mass[mid]),
        "b3": al5[mid] - (a[mid] ** -4 * ga3[mid] - ddt(be3) / a[mid] - a[mid] ** 2 * al3[mid] * mass[mid]),
    }
    return {k: float(np.max(np.abs(v))) for k, v in res.items()}
