"""Hadamard expansion on flat Robertson-Walker spacetime and its certification.

The catalog holds literal transcriptions of the short-distance expansions of
the squared geodesic distance ``S = 2 sigma``, the Van Vleck factor ``u`` and
the log coefficients ``v0``, ``v1`` (coincidence value only). Every entry is
then checked against independent identities computed by the series engine:

* the eikonal identity ``g(dS, dS) = 4 S``,
* symmetry under exchange of the two points,
* the Hadamard transport recursion for ``u``, ``v0`` and ``v1``.

The equal-time singular parts of the parametrix and its time derivatives are
derived from ``u / S`` and compared with the reference displays.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction as F

from .series import (
    CoeffPoly,
    TruncatedSeries,
    box,
    d0,
    grad_pair,
    series_mul,
    series_reciprocal,
    swap_arguments,
    symbols,
    taylor_shift,
    time_derive,
)

_a, _H, _Hd, _Hdd, _H3, _H4, _m2, _xi = symbols()


def ricci_scalar() -> CoeffPoly:
    """``R = -6 (Hd + 2 H^2)`` as a symbol polynomial."""
    return (_Hd + _H * _H * 2) * -6


def box_ricci() -> CoeffPoly:
    """``box R = R'' + 3 H R'`` on flat RW."""
    R = ricci_scalar()
    return R.derive().derive() + _H * R.derive() * 3


@dataclass(frozen=True)
class ExpansionCatalog:
    sigma2: TruncatedSeries
    u: TruncatedSeries
    v0: TruncatedSeries
    v1_coincidence: CoeffPoly

    def perturbed(self, name: str, slot: tuple[int, int], amount=F(1, 1000)) -> "ExpansionCatalog":
        """Copy with ``amount`` times the geometric monomial of the slot added.

        Used for mutation tests: a nonzero ``amount`` added to a certified
        coefficient must surface as a nonzero residual.
        """
        series = getattr(self, name)
        p, q = slot
        base = series.coeffs.get(slot)
        if base is None or base.is_zero():
            scale = _a ** (2 * q) * _H ** (p + 2 * q) if p + 2 * q else CoeffPoly.const(1)
        else:
            # reuse the first monomial so the mutation keeps the right dimension
            mono = sorted(base.terms, key=lambda m: repr(m))[0]
            scale = CoeffPoly({mono: 1})
        coeffs = dict(series.coeffs)
        coeffs[slot] = coeffs.get(slot, CoeffPoly()) + scale * F(amount)
        return replace(self, **{name: TruncatedSeries(coeffs, series.max_weight)})


def _sigma2() -> TruncatedSeries:
    aZ = _a * _a
    brace = {
        (0, 0): 1,
        (1, 0): _H,
        (2, 0): (_Hd + _H ** 2) * F(1, 3),
        (0, 1): _H ** 2 * aZ * F(1, 12),
        (3, 0): (_Hdd + _Hd * _H * 2) * F(1, 12),
        (1, 1): (_Hd * _H + _H ** 3 * 2) * aZ * F(1, 12),
        (4, 0): (_H3 * 3 + _Hdd * _H * 6 + _Hd ** 2 * 2 - _Hd * _H ** 2 * 8 - _H ** 4 * 4) * F(1, 180),
        (2, 1): (_Hdd * _H * 9 + _Hd ** 2 * 8 + _Hd * _H ** 2 * 74 + _H ** 4 * 48) * aZ * F(1, 360),
        (0, 2): (_Hd * _H ** 2 * 3 + _H ** 4 * 4) * aZ ** 2 * F(1, 360),
    }
    coeffs = {(p, q + 1): -aZ * c for (p, q), c in brace.items()}
    coeffs[(2, 0)] = CoeffPoly.const(1)
    return TruncatedSeries(coeffs, 6)


def _u() -> TruncatedSeries:
    aZ = _a * _a
    return TruncatedSeries({
        (0, 0): 1,
        (2, 0): (_Hd + _H ** 2) * F(-1, 4),
        (0, 1): (_Hd + _H ** 2 * 3) * aZ * F(1, 12),
        (3, 0): (_Hdd + _Hd * _H * 2) * F(-1, 8),
        (1, 1): (_Hdd + _Hd * _H * 8 + _H ** 3 * 6) * aZ * F(1, 24),
        (4, 0): (-_H3 * 18 - _Hdd * _H * 36 - _Hd ** 2 * 17 + _Hd * _H ** 2 * 38 + _H ** 4 * 19) * F(1, 480),
        (2, 1): (_H3 * 3 + _Hdd * _H * 26 + _Hd ** 2 * 17 + _Hd * _H ** 2 * 52 + _H ** 4) * aZ * F(1, 240),
        (0, 2): (_Hdd * _H * 4 + _Hd ** 2 * 3 + _Hd * _H ** 2 * 36 + _H ** 4 * 29) * aZ ** 2 * F(1, 480),
    }, 4)


def _v0(printed: bool = False) -> TruncatedSeries:
    xi, m2 = _xi, _m2
    R = ricci_scalar()
    sixth = CoeffPoly.const(F(1, 6)) - xi
    z02 = (
        _H3 * (21 - xi * 120) + _Hdd * _H * (87 - xi * 480) + _Hd ** 2 * (54 - xi * 300)
        - _Hd * _H ** 2 * (76 - xi * 540) - _H ** 4 * (58 - xi * 360) + m2 * (_Hd + _H ** 2) * 30
    ) * F(1, 240)
    Z1 = (
        -_H3 + _Hdd * _H * (3 - xi * 60) + _Hd ** 2 * (6 - xi * 60) + _Hd * _H ** 2 * (76 - xi * 540)
        + _H ** 4 * (58 - xi * 360) - m2 * (_Hd + _H ** 2 * 3) * 10
    ) * _a ** 2 * F(1, 240)
    return TruncatedSeries({
        (0, 0): (sixth * R + m2) * F(-1, 2),
        (1, 0): v0_z0_coefficient(printed),
        (2, 0): z02,
        (0, 1): Z1,
    }, 2)


def v0_z0_coefficient(printed: bool = False) -> CoeffPoly:
    """The ``z0`` coefficient of ``v0``.

    Symmetry fixes it to half the time derivative of the coincidence value,
    ``(1/4)(1 - 6 xi)(Hdd + 4 Hd H)``. The printed form lacks the
    ``(1 - 6 xi)`` factor and is kept for the certification report.
    """
    base = (_Hdd + _Hd * _H * 4) * F(1, 4)
    return base if printed else base * (1 - _xi * 6)


def v1_catalog() -> CoeffPoly:
    """Coincidence value of ``v1`` as transcribed from the expansion catalog."""
    xi, m2 = _xi, _m2
    R = ricci_scalar()
    one6 = 1 - xi * 6
    return (
        (1 - xi * 5) * box_ricci() + one6 * one6 * R * R * F(5, 12)
        - (_Hd + _H ** 2) * _H ** 2 * 2 + one6 * R * m2 * 5 + m2 * m2 * 15
    ) * F(1, 120)


def v1_trace_form() -> CoeffPoly:
    """Coincidence value of ``v1`` in the form used by the trace equation."""
    xi, m2 = _xi, _m2
    R = ricci_scalar()
    sixth = CoeffPoly.const(F(1, 6)) - xi
    return (
        (_Hd * _H ** 2 + _H ** 4) * F(1, 60)
        + (CoeffPoly.const(F(1, 5)) - xi) * box_ricci() * F(1, 24)
        - sixth * sixth * (_Hd ** 2 + _H ** 2 * _Hd * 4 + _H ** 4 * 4) * F(9, 2)
        - m2 * m2 * F(1, 8)
        + sixth * m2 * R * F(1, 4)
    )


def build_catalog(printed: bool = False) -> ExpansionCatalog:
    """The expansion catalog.

    ``printed=True`` keeps the ``v0`` slot ``z0^1`` exactly as displayed;
    the default uses the symmetric form certified by the recursion.
    """
    return ExpansionCatalog(_sigma2(), _u(), _v0(printed), v1_catalog())


def minkowski(c: CoeffPoly) -> CoeffPoly:
    """Set every ``H^(n)`` to zero and ``a`` to one."""
    out = {}
    for mono, val in c.terms.items():
        if any(s.kind == "H" for s, _ in mono):
            continue
        out[tuple((s, e) for s, e in mono if s.kind != "a")] = val
    return CoeffPoly(out)


def minkowski_series(s: TruncatedSeries) -> TruncatedSeries:
    return s.map_coeffs(minkowski)


# ---------------------------------------------------------------------------
# Residuals
# ---------------------------------------------------------------------------

def eikonal_residual(cat: ExpansionCatalog) -> TruncatedSeries:
    """``g(dS, dS) - 4 S`` with ``S = 2 sigma``, to weight 6."""
    S = cat.sigma2
    return (grad_pair(S, S) - S * 4).truncate(6)


def symmetry_residual(s: TruncatedSeries) -> TruncatedSeries:
    return s - swap_arguments(s)


def _shift_to_x(c: CoeffPoly, weight: int) -> TruncatedSeries:
    return taylor_shift(c, max(weight, 0))


RECURSION_WEIGHTS = {"u": 3, "v0": 1, "v1": 0}


def recursion_residual(which: str, cat: ExpansionCatalog, weight: int | None = None):
    """Left minus right side of the named transport equation.

    With ``sigma = S / 2``:

    * ``u``:  ``g(dS, du) + (box S / 2 - 4) u``
    * ``v0``: ``g(dS, dv0) + (box S / 2 - 2) v0 + (box + m2 - xi R(x)) u``

    For ``v1`` only the coincidence value is available, so the residual is
    the catalog value minus the value forced by the recursion,
    ``v1 = -(box v0 + (m2 - xi R) v0) / 4`` at ``z = 0``, returned as a
    :class:`CoeffPoly`.

    Series residuals are truncated to ``weight`` (default: the certified
    weight for each recursion); the result is zero iff the catalog satisfies
    the recursion to that order.
    """
    S = cat.sigma2
    boxS_half = box(S) / 2
    if which == "u":
        w = RECURSION_WEIGHTS["u"] if weight is None else weight
        res = grad_pair(S, cat.u) + series_mul(boxS_half - 4, cat.u)
        return _checked(res, w)
    if which == "v0":
        w = RECURSION_WEIGHTS["v0"] if weight is None else weight
        kg = box(cat.u) + series_mul(_shift_to_x(_m2 - _xi * ricci_scalar(), S.max_weight), cat.u)
        res = grad_pair(S, cat.v0) + series_mul(boxS_half - 2, cat.v0) + kg
        return _checked(res, w)
    if which == "v1":
        return cat.v1_coincidence - v1_from_recursion(cat)
    raise ValueError(f"unknown recursion {which!r}")


def _checked(res: TruncatedSeries, weight: int) -> TruncatedSeries:
    if res.max_weight is not None and res.max_weight < weight:
        raise ValueError(f"residual only known to weight {res.max_weight} < {weight}")
    return res.truncate(weight)


def supported_weight(which: str, cat: ExpansionCatalog) -> int:
    """Highest weight at which the recursion residual is determined by the catalog."""
    S = cat.sigma2
    if which == "u":
        res = grad_pair(S, cat.u) + series_mul(box(S) / 2 - 4, cat.u)
    elif which == "v0":
        kg = box(cat.u) + series_mul(_shift_to_x(_m2 - _xi * ricci_scalar(), S.max_weight), cat.u)
        res = grad_pair(S, cat.v0) + series_mul(box(S) / 2 - 2, cat.v0) + kg
    else:
        return 0
    return res.max_weight


def v1_from_recursion(cat: ExpansionCatalog) -> CoeffPoly:
    """Coincidence value of ``v1`` forced by the transport equation.

    At ``z = 0`` the gradient term drops and ``box sigma = 4``.
    """
    v0 = cat.v0
    rhs = box(v0) + series_mul(_shift_to_x(_m2 - _xi * ricci_scalar(), v0.max_weight), v0)
    if rhs.max_weight is not None and rhs.max_weight < 0:
        raise ValueError("v0 not known to sufficient weight for the v1 coincidence value")
    return rhs.coefficient(0, 0) * F(-1, 4)


@dataclass(frozen=True)
class V1Ruling:
    recursion: CoeffPoly
    catalog_residual: CoeffPoly
    trace_form_residual: CoeffPoly
    m4_recursion: CoeffPoly

    @property
    def m4_sign(self) -> int:
        c = self.m4_recursion.constant()
        return (c > 0) - (c < 0)


def v1_ruling(cat: ExpansionCatalog | None = None) -> V1Ruling:
    cat = cat or build_catalog()
    rec = v1_from_recursion(cat)
    m4 = rec.coefficient_of(_m2.symbols().pop(), 2)
    return V1Ruling(rec, cat.v1_coincidence - rec, v1_trace_form() - rec, m4)


# ---------------------------------------------------------------------------
# Equal-time singular parts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LaurentZ:
    """Finite Laurent expansion ``sum c[n] Z**n`` for ``n`` up to ``top``."""

    coeffs: dict
    top: int

    def __getitem__(self, n: int) -> CoeffPoly:
        if n > self.top:
            raise KeyError(f"order Z^{n} beyond known order Z^{self.top}")
        return self.coeffs.get(n, CoeffPoly())

    def orders(self):
        return sorted(self.coeffs)

    def render(self) -> str:
        lines = [f"known_to: Z^{self.top}"]
        for n in self.orders():
            lines.append(f"Z^{n}: {self.coeffs[n].render()}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class EqualTimeSingularParts:
    """``-4 pi^2`` times the parametrix leading part and its time derivatives at ``z0 = 0``."""

    h: LaurentZ
    h_dot: LaurentZ
    h_xy: LaurentZ


def _dy(s: TruncatedSeries) -> TruncatedSeries:
    """Derivative with respect to ``y0`` at fixed ``x``."""
    return time_derive(s) - d0(s)


def _fraction_terms(u: TruncatedSeries, S: TruncatedSeries, which: str):
    """Numerators ``N_j`` with the target equal to ``sum_j N_j / S**j``."""
    if which == "h":
        return {1: u}
    if which == "h_dot":
        return {1: d0(u), 2: -series_mul(u, d0(S))}
    ux, uy, Sx, Sy = d0(u), _dy(u), d0(S), _dy(S)
    return {
        1: d0(_dy(u)),
        2: -(series_mul(ux, Sy) + series_mul(uy, Sx) + series_mul(u, d0(_dy(S)))),
        3: series_mul(series_mul(u, Sx), Sy) * 2,
    }


def _laurent(terms: dict, S: TruncatedSeries) -> LaurentZ:
    S0 = S.at_equal_time()
    t = series_reciprocal(S0, leading=(0, 1))  # 1/S0 = t / Z
    coeffs: dict[int, CoeffPoly] = {}
    top = None
    for j, N in terms.items():
        prod = N.at_equal_time()
        for _ in range(j):
            prod = series_mul(prod, t)
        known = prod.max_weight // 2 - j
        top = known if top is None else min(top, known)
        for (p, q), c in prod.coeffs.items():
            coeffs[q - j] = coeffs.get(q - j, CoeffPoly()) + c
    return LaurentZ({n: c for n, c in coeffs.items() if n <= top and not c.is_zero()}, top)


def equal_time_singular_parts(cat: ExpansionCatalog) -> EqualTimeSingularParts:
    S, u = cat.sigma2, cat.u
    return EqualTimeSingularParts(
        _laurent(_fraction_terms(u, S, "h"), S),
        _laurent(_fraction_terms(u, S, "h_dot"), S),
        _laurent(_fraction_terms(u, S, "h_xy"), S),
    )


def reference_singular_parts() -> EqualTimeSingularParts:
    """The reference displays, with the ``Hd H^2`` exponent in the ``Z`` term of ``h``."""
    a2 = _a * _a
    h = LaurentZ({
        -1: -a2.inverse(),
        0: (_Hd + _H ** 2 * 2) * F(-1, 12),
        1: (_Hdd * _H * 12 + _Hd ** 2 * 9 + _Hd * _H ** 2 * 86 + _H ** 4 * 51) * a2 * F(-1, 1440),
    }, 1)
    h_dot = LaurentZ({
        -1: _H * a2.inverse(),
        0: (_Hdd + _Hd * _H * 4) * F(-1, 24),
    }, 0)
    h_xy = LaurentZ({
        -2: (a2 * a2).inverse() * 2,
        -1: -_H ** 2 * a2.inverse(),
        0: (_H3 * 4 + _Hdd * _H * 16 + _Hd ** 2 * 27 + _Hd * _H ** 2 * 30 + _H ** 4 * 17) * F(-1, 240),
    }, 0)
    return EqualTimeSingularParts(h, h_dot, h_xy)


def printed_h_Z1() -> CoeffPoly:
    """The ``Z`` coefficient of ``h`` exactly as printed (with ``Hd H^3``)."""
    return (_Hdd * _H * 12 + _Hd ** 2 * 9 + _Hd * _H ** 3 * 86 + _H ** 4 * 51) * _a ** 2 * F(-1, 1440)
