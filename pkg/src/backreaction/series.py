"""Exact truncated bivariate power series over geometry-symbol polynomials.

A :class:`TruncatedSeries` represents ``sum c[p, q] * z0**p * Z**q`` where
``z0 = x0 - y0`` is the time separation, ``Z = |x - y|**2`` the squared
spatial separation, and every coefficient ``c[p, q]`` is a :class:`CoeffPoly`,
a Laurent polynomial with exact rational coefficients in the symbols

    a, H, H', H'', ..., m2, xi

all evaluated at the base point ``y0``. The weight of ``z0**p * Z**q`` is
``p + 2q``; a series knows its coefficients exactly up to ``max_weight``.

Time derivatives of coefficients follow the closed derivation rule
``d/dt a = a H``, ``d/dt H^(n) = H^(n+1)``, ``d/dt m2 = d/dt xi = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, NamedTuple, Union

__all__ = [
    "GeomSymbol",
    "CoeffPoly",
    "TruncatedSeries",
    "NotInvertibleError",
    "DEFAULT_WEIGHT",
    "a_sym",
    "H_sym",
    "m2_sym",
    "xi_sym",
    "symbols",
    "series_add",
    "series_mul",
    "series_reciprocal",
    "series_log1p",
    "series_exp",
    "time_derive",
    "taylor_shift",
    "swap_arguments",
    "d0",
    "d_Z",
    "laplacian",
    "box",
    "grad_pair",
    "rw_operators",
]

DEFAULT_WEIGHT = 7

Number = Union[int, Fraction]


class NotInvertibleError(ArithmeticError):
    pass


@dataclass(frozen=True)
class GeomSymbol:
    """One of ``a``, ``H`` (with derivative order), ``m2`` or ``xi``."""

    kind: str
    order: int = 0

    def __post_init__(self):
        if self.kind not in ("a", "H", "m2", "xi"):
            raise ValueError(f"unknown symbol kind {self.kind!r}")
        if self.order < 0 or (self.kind != "H" and self.order != 0):
            raise ValueError(f"bad derivative order for {self.kind}")

    @property
    def rank(self) -> int:
        if self.kind == "a":
            return 0
        if self.kind == "H":
            return 1 + self.order
        return 1000 if self.kind == "m2" else 1001

    @property
    def name(self) -> str:
        if self.kind == "H":
            return {0: "H", 1: "Hd", 2: "Hdd"}.get(self.order, f"H{self.order}")
        return self.kind

    def derivative(self) -> "CoeffPoly":
        if self.kind == "a":
            return CoeffPoly({((A, 1), (H0, 1)): Fraction(1)})
        if self.kind == "H":
            return CoeffPoly({((GeomSymbol("H", self.order + 1), 1),): Fraction(1)})
        return CoeffPoly()


A = GeomSymbol("a")
H0 = GeomSymbol("H", 0)

Monomial = tuple  # sorted tuple of (GeomSymbol, nonzero int exponent)


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    if not m1:
        return m2
    if not m2:
        return m1
    exps = dict(m1)
    for s, e in m2:
        exps[s] = exps.get(s, 0) + e
    return tuple(sorted(((s, e) for s, e in exps.items() if e), key=lambda t: t[0].rank))


def _mono_key(m: Monomial):
    degree = sum(abs(e) for _, e in m)
    return (degree, tuple((s.rank, -e) for s, e in m))


class CoeffPoly:
    """Laurent polynomial in geometry symbols with exact rational coefficients.

    Zero coefficients are never stored, so structural equality is value
    equality.
    """

    __slots__ = ("terms", "_float_terms")

    def __init__(self, terms: Mapping[Monomial, Number] | None = None):
        self.terms: dict[Monomial, Fraction] = {}
        if terms:
            for mono, c in terms.items():
                c = Fraction(c)
                if c:
                    self.terms[mono] = c
        self._float_terms = None

    @classmethod
    def const(cls, c: Number) -> "CoeffPoly":
        return cls({(): c})

    @classmethod
    def symbol(cls, s: GeomSymbol, power: int = 1) -> "CoeffPoly":
        return cls({((s, power),): 1}) if power else cls.const(1)

    @classmethod
    def coerce(cls, other) -> "CoeffPoly":
        if isinstance(other, CoeffPoly):
            return other
        if isinstance(other, (int, Fraction)):
            return cls.const(other)
        raise TypeError(f"cannot coerce {type(other).__name__} to CoeffPoly")

    def is_zero(self) -> bool:
        return not self.terms

    def constant(self) -> Fraction:
        return self.terms.get((), Fraction(0))

    def symbols(self) -> set[GeomSymbol]:
        return {s for mono in self.terms for s, _ in mono}

    def __eq__(self, other):
        try:
            other = CoeffPoly.coerce(other)
        except TypeError:
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self):
        return bool(self.terms)

    def __neg__(self):
        return CoeffPoly({m: -c for m, c in self.terms.items()})

    def __add__(self, other):
        other = CoeffPoly.coerce(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return CoeffPoly(out)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-CoeffPoly.coerce(other))

    def __rsub__(self, other):
        return CoeffPoly.coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return CoeffPoly({m: c * other for m, c in self.terms.items()})
        other = CoeffPoly.coerce(other)
        out: dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                out[m] = out.get(m, 0) + c1 * c2
        return CoeffPoly(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return CoeffPoly({m: c / Fraction(other) for m, c in self.terms.items()})
        return self * CoeffPoly.coerce(other).inverse()

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        result = CoeffPoly.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def inverse(self) -> "CoeffPoly":
        """Inverse of a single-term polynomial (monomial times rational)."""
        if len(self.terms) != 1:
            raise NotInvertibleError("only monomials are invertible in CoeffPoly")
        (mono, c), = self.terms.items()
        return CoeffPoly({tuple((s, -e) for s, e in mono): 1 / c})

    def derive(self) -> "CoeffPoly":
        """Time derivative by the derivation rule of the geometry symbols."""
        out = CoeffPoly()
        for mono, c in self.terms.items():
            for i, (s, e) in enumerate(mono):
                ds = s.derivative()
                if ds.is_zero():
                    continue
                rest = mono[:i] + ((s, e - 1),) + mono[i + 1:] if e != 1 else mono[:i] + mono[i + 1:]
                rest = tuple(t for t in rest if t[1])
                out = out + CoeffPoly({rest: c * e}) * ds
        return out

    def coefficient_of(self, s: GeomSymbol, power: int = 1) -> "CoeffPoly":
        """Part of the polynomial carrying exactly ``s**power``, with ``s`` removed."""
        out = {}
        for mono, c in self.terms.items():
            exps = dict(mono)
            if exps.get(s, 0) == power:
                rest = tuple(t for t in mono if t[0] != s)
                out[rest] = c
        return CoeffPoly(out)

    def substitute(self, values: Mapping[GeomSymbol, "CoeffPoly | Number"]) -> "CoeffPoly":
        out = CoeffPoly()
        for mono, c in self.terms.items():
            term = CoeffPoly({(): c})
            keep = []
            for s, e in mono:
                if s in values:
                    term = term * CoeffPoly.coerce(values[s]) ** e
                else:
                    keep.append((s, e))
            out = out + term * CoeffPoly({tuple(keep): 1})
        return out

    def evaluate(self, values: Mapping[str, float]) -> float:
        """Float evaluation; ``values`` maps symbol names (``a``, ``H``, ``Hd``, ...)."""
        if self._float_terms is None:
            self._float_terms = [
                (float(c), tuple((s.name, e) for s, e in mono)) for mono, c in self.terms.items()
            ]
        total = 0.0
        for c, mono in self._float_terms:
            term = c
            for name, e in mono:
                term *= values[name] ** e
            total += term
        return total

    def evaluate_exact(self, values: Mapping[str, Fraction]) -> Fraction:
        """Exact rational evaluation (floats are converted exactly)."""
        total = Fraction(0)
        for mono, c in self.terms.items():
            term = Fraction(c)
            for s, e in mono:
                term *= Fraction(values[s.name]) ** e
            total += term
        return total

    def render(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for mono in sorted(self.terms, key=_mono_key):
            c = self.terms[mono]
            factors = []
            for s, e in mono:
                factors.append(s.name if e == 1 else f"{s.name}^{e}")
            body = "*".join(factors)
            mag = abs(c)
            if body:
                text = body if mag == 1 else f"{mag}*{body}"
            else:
                text = str(mag)
            parts.append(("- " if c < 0 else "+ ") + text)
        out = " ".join(parts)
        return out[2:] if out.startswith("+ ") else "-" + out[2:]

    def __repr__(self):
        return f"CoeffPoly({self.render()})"


def a_sym() -> CoeffPoly:
    return CoeffPoly.symbol(A)


def H_sym(order: int = 0) -> CoeffPoly:
    return CoeffPoly.symbol(GeomSymbol("H", order))


def m2_sym() -> CoeffPoly:
    return CoeffPoly.symbol(GeomSymbol("m2"))


def xi_sym() -> CoeffPoly:
    return CoeffPoly.symbol(GeomSymbol("xi"))


class Symbols(NamedTuple):
    a: CoeffPoly
    H: CoeffPoly
    Hd: CoeffPoly
    Hdd: CoeffPoly
    H3: CoeffPoly
    H4: CoeffPoly
    m2: CoeffPoly
    xi: CoeffPoly


def symbols() -> Symbols:
    """Convenience bundle of the common geometry symbols."""
    return Symbols(a_sym(), H_sym(0), H_sym(1), H_sym(2), H_sym(3), H_sym(4), m2_sym(), xi_sym())


# ---------------------------------------------------------------------------
# Truncated series
# ---------------------------------------------------------------------------

def _weight(pq) -> int:
    return pq[0] + 2 * pq[1]


class TruncatedSeries:
    """Bivariate series in ``(z0, Z)`` known exactly up to ``max_weight``.

    ``max_weight=None`` marks an exact (finite) polynomial. Precision follows
    the usual power-series rule: a product is known to
    ``min(prec_a + val_b, prec_b + val_a)``, which reduces to the minimum of
    the operand weights when both have a nonzero constant term.
    """

    __slots__ = ("coeffs", "max_weight")

    def __init__(self, coeffs: Mapping[tuple[int, int], CoeffPoly | Number] | None = None,
                 max_weight: int | None = DEFAULT_WEIGHT):
        self.max_weight = max_weight
        self.coeffs: dict[tuple[int, int], CoeffPoly] = {}
        for pq, c in (coeffs or {}).items():
            p, q = pq
            if p < 0 or q < 0:
                raise ValueError(f"negative exponent in slot {pq}")
            if max_weight is not None and _weight(pq) > max_weight:
                continue
            c = CoeffPoly.coerce(c)
            if not c.is_zero():
                self.coeffs[(p, q)] = c

    # construction helpers
    @classmethod
    def const(cls, c, max_weight: int | None = None) -> "TruncatedSeries":
        return cls({(0, 0): c}, max_weight)

    @classmethod
    def z0(cls, power: int = 1) -> "TruncatedSeries":
        return cls({(power, 0): 1}, None)

    @classmethod
    def Z(cls, power: int = 1) -> "TruncatedSeries":
        return cls({(0, power): 1}, None)

    @classmethod
    def coerce(cls, other) -> "TruncatedSeries":
        if isinstance(other, TruncatedSeries):
            return other
        return cls.const(CoeffPoly.coerce(other), None)

    @property
    def precision(self) -> float:
        return math.inf if self.max_weight is None else self.max_weight

    def valuation(self) -> float:
        """Lowest weight carrying a nonzero coefficient (``precision + 1`` if none)."""
        if not self.coeffs:
            return self.precision + 1
        return min(_weight(pq) for pq in self.coeffs)

    def coefficient(self, p: int, q: int) -> CoeffPoly:
        if self.max_weight is not None and p + 2 * q > self.max_weight:
            raise ValueError(f"slot ({p},{q}) beyond truncation weight {self.max_weight}")
        return self.coeffs.get((p, q), CoeffPoly())

    def truncate(self, weight: int | None) -> "TruncatedSeries":
        if weight is None:
            return self
        w = weight if self.max_weight is None else min(weight, self.max_weight)
        return TruncatedSeries(self.coeffs, w)

    def is_zero(self) -> bool:
        return not self.coeffs

    def map_coeffs(self, fn: Callable[[CoeffPoly], CoeffPoly]) -> "TruncatedSeries":
        return TruncatedSeries({pq: fn(c) for pq, c in self.coeffs.items()}, self.max_weight)

    def __eq__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return self.coeffs == other.coeffs and self.max_weight == other.max_weight

    def __neg__(self):
        return self.map_coeffs(lambda c: -c)

    def __add__(self, other):
        return series_add(self, TruncatedSeries.coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return series_add(self, -TruncatedSeries.coerce(other))

    def __rsub__(self, other):
        return series_add(TruncatedSeries.coerce(other), -self)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, CoeffPoly)):
            c = CoeffPoly.coerce(other)
            return self.map_coeffs(lambda x: x * c)
        return series_mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.map_coeffs(lambda x: x / other)
        if isinstance(other, CoeffPoly):
            inv = other.inverse()
            return self.map_coeffs(lambda x: x * inv)
        return series_mul(self, series_reciprocal(other))

    def __pow__(self, n: int):
        if n < 0:
            return series_reciprocal(self) ** (-n)
        result = TruncatedSeries.const(1)
        for _ in range(n):
            result = series_mul(result, self)
        return result

    def at_equal_time(self) -> "TruncatedSeries":
        """Restriction to ``z0 = 0``."""
        return TruncatedSeries({pq: c for pq, c in self.coeffs.items() if pq[0] == 0},
                               self.max_weight)

    def shift(self, p: int = 0, q: int = 0) -> "TruncatedSeries":
        """Multiply by ``z0**p * Z**q``; negative powers require divisibility."""
        out = {}
        for (pp, qq), c in self.coeffs.items():
            if pp + p < 0 or qq + q < 0:
                raise NotInvertibleError(f"term ({pp},{qq}) not divisible by z0^{-p} Z^{-q}")
            out[(pp + p, qq + q)] = c
        mw = None if self.max_weight is None else self.max_weight + p + 2 * q
        return TruncatedSeries(out, mw)

    def evaluate(self, values: Mapping[str, float], z0: float, Z: float) -> float:
        return sum(c.evaluate(values) * z0 ** p * Z ** q for (p, q), c in self.coeffs.items())

    def render(self) -> str:
        """Canonical deterministic text form, one slot per line."""
        lines = [f"max_weight: {self.max_weight}"]
        for pq in sorted(self.coeffs, key=lambda t: (_weight(t), -t[0])):
            lines.append(f"z0^{pq[0]} Z^{pq[1]}: {self.coeffs[pq].render()}")
        return "\n".join(lines) + "\n"

    def __repr__(self):
        body = ", ".join(f"{pq}: {c.render()}" for pq, c in sorted(self.coeffs.items()))
        return f"TruncatedSeries({{{body}}}, max_weight={self.max_weight})"


def _min_weight(*ws):
    finite = [w for w in ws if w is not None and w != math.inf]
    return min(finite) if finite else None


def series_add(lhs: TruncatedSeries, rhs: TruncatedSeries) -> TruncatedSeries:
    mw = _min_weight(lhs.max_weight, rhs.max_weight)
    out = dict(lhs.coeffs)
    for pq, c in rhs.coeffs.items():
        out[pq] = out[pq] + c if pq in out else c
    return TruncatedSeries(out, mw)


def series_mul(lhs: TruncatedSeries, rhs: TruncatedSeries) -> TruncatedSeries:
    lhs, rhs = TruncatedSeries.coerce(lhs), TruncatedSeries.coerce(rhs)
    bound = min(lhs.precision + rhs.valuation(), rhs.precision + lhs.valuation())
    mw = None if bound == math.inf else int(bound)
    out: dict[tuple[int, int], CoeffPoly] = {}
    for (p1, q1), c1 in lhs.coeffs.items():
        for (p2, q2), c2 in rhs.coeffs.items():
            pq = (p1 + p2, q1 + q2)
            if mw is not None and _weight(pq) > mw:
                continue
            out[pq] = out[pq] + c1 * c2 if pq in out else c1 * c2
    return TruncatedSeries(out, mw)


def series_reciprocal(s: TruncatedSeries, leading: tuple[int, int] = (0, 0),
                      max_weight: int | None = None) -> TruncatedSeries:
    """Reciprocal of ``s / (z0**p Z**q)`` for the declared leading factor ``(p, q)``.

    The returned series ``t`` satisfies ``s * t == z0**p * Z**q`` to truncation,
    i.e. ``1/s = z0**-p Z**-q * t``. The remaining constant term must be a
    single monomial (a nonzero rational times geometry symbols).
    """
    p, q = leading
    core = s.shift(-p, -q) if (p or q) else s
    c0 = core.coeffs.get((0, 0), CoeffPoly())
    if c0.is_zero():
        raise NotInvertibleError("not invertible at this truncation: zero leading coefficient")
    try:
        inv0 = c0.inverse()
    except NotInvertibleError:
        raise NotInvertibleError(
            "not invertible at this truncation: leading coefficient is not a monomial") from None
    weight = core.max_weight if max_weight is None else _min_weight(core.max_weight, max_weight)
    if weight is None:
        weight = DEFAULT_WEIGHT
    rest = TruncatedSeries({pq: c * inv0 for pq, c in core.coeffs.items() if pq != (0, 0)},
                           core.max_weight).truncate(weight)
    # 1/(c0 (1 + r)) = c0^-1 * sum (-r)^n
    term = TruncatedSeries.const(1, weight)
    total = term
    neg = -rest
    while True:
        term = series_mul(term, neg).truncate(weight)
        if term.is_zero():
            break
        total = series_add(total, term)
    return (total * inv0).truncate(weight)


def series_log1p(s: TruncatedSeries, max_weight: int | None = None) -> TruncatedSeries:
    """``log(1 + s)`` for a series with zero constant term."""
    if not s.coeffs.get((0, 0), CoeffPoly()).is_zero():
        raise ValueError("log1p requires a zero constant term")
    weight = _min_weight(s.max_weight, max_weight)
    if weight is None:
        weight = DEFAULT_WEIGHT
    total = TruncatedSeries({}, weight)
    power = TruncatedSeries.const(1, weight)
    n = 1
    while True:
        power = series_mul(power, s).truncate(weight)
        if power.is_zero():
            break
        total = series_add(total, power * Fraction((-1) ** (n + 1), n))
        n += 1
    return total


def series_exp(s: TruncatedSeries, max_weight: int | None = None) -> TruncatedSeries:
    """``exp(s)`` for a series with zero constant term."""
    if not s.coeffs.get((0, 0), CoeffPoly()).is_zero():
        raise ValueError("exp requires a zero constant term")
    weight = _min_weight(s.max_weight, max_weight)
    if weight is None:
        weight = DEFAULT_WEIGHT
    total = TruncatedSeries.const(1, weight)
    power = TruncatedSeries.const(1, weight)
    n = 1
    while True:
        power = series_mul(power, s).truncate(weight) * Fraction(1, n)
        if power.is_zero():
            break
        total = series_add(total, power)
        n += 1
    return total


def time_derive(s: TruncatedSeries) -> TruncatedSeries:
    """d/dt acting on the coefficients only."""
    return s.map_coeffs(CoeffPoly.derive)


def taylor_shift(c: CoeffPoly, max_weight: int) -> TruncatedSeries:
    """Expansion of ``c(x0)`` about ``y0``: ``sum_j z0**j / j! * (d/dt)**j c``."""
    out = {}
    deriv = c
    fact = 1
    for j in range(max_weight + 1):
        if j:
            deriv = deriv.derive()
            fact *= j
        if deriv.is_zero():
            break
        out[(j, 0)] = deriv * Fraction(1, fact)
    return TruncatedSeries(out, max_weight)


def swap_arguments(s: TruncatedSeries, max_weight: int | None = None) -> TruncatedSeries:
    """Exchange ``x <-> y``: ``z0 -> -z0`` and coefficients moved from ``y0`` to ``x0``.

    The moved coefficients are re-expanded about ``y0`` with
    :func:`taylor_shift`, so the result is again a series with coefficients
    at ``y0``.
    """
    weight = s.max_weight if max_weight is None else _min_weight(s.max_weight, max_weight)
    if weight is None:
        weight = DEFAULT_WEIGHT
    total = TruncatedSeries({}, weight)
    for (p, q), c in s.coeffs.items():
        w = p + 2 * q
        if w > weight:
            continue
        shifted = taylor_shift(c, weight - w).shift(p, q)
        if p % 2:
            shifted = -shifted
        total = series_add(total, shifted.truncate(weight))
    return total


# ---------------------------------------------------------------------------
# Differential operators on rotationally invariant series
# ---------------------------------------------------------------------------

def d0(s: TruncatedSeries) -> TruncatedSeries:
    """Partial derivative in ``z0`` (equivalently in ``x0`` at fixed ``y``)."""
    out = {(p - 1, q): c * p for (p, q), c in s.coeffs.items() if p}
    return TruncatedSeries(out, None if s.max_weight is None else s.max_weight - 1)


def d_Z(s: TruncatedSeries) -> TruncatedSeries:
    """Partial derivative in ``Z = |x - y|**2``."""
    out = {(p, q - 1): c * q for (p, q), c in s.coeffs.items() if q}
    return TruncatedSeries(out, None if s.max_weight is None else s.max_weight - 2)


def laplacian(s: TruncatedSeries) -> TruncatedSeries:
    """Flat 3d Laplacian of a radial function of ``Z``: ``6 s_Z + 4 Z s_ZZ``."""
    sz = d_Z(s)
    return sz * 6 + d_Z(sz).shift(0, 1) * 4


def _shifted(c: CoeffPoly, s: TruncatedSeries, extra: int = 0) -> TruncatedSeries:
    weight = s.max_weight if s.max_weight is not None else DEFAULT_WEIGHT
    return taylor_shift(c, max(weight + extra, 0))


def box(s: TruncatedSeries) -> TruncatedSeries:
    """D'Alembertian at ``x``: ``d0^2 s + 3 H(x0) d0 s - a(x0)^-2 Lap s``."""
    a_inv2 = _shifted(a_sym() ** -2, s)
    hx = _shifted(H_sym(), s)
    ds = d0(s)
    return d0(ds) + series_mul(hx, ds) * 3 - series_mul(a_inv2, laplacian(s))


def grad_pair(s: TruncatedSeries, u: TruncatedSeries) -> TruncatedSeries:
    """``g^{mu nu}(x) d_mu s d_nu u = d0 s d0 u - a(x0)^-2 4 Z s_Z u_Z``."""
    a_inv2 = _shifted(a_sym() ** -2, s, 2)
    spatial = series_mul(d_Z(s).shift(0, 1), d_Z(u)) * 4
    return series_mul(d0(s), d0(u)) - series_mul(a_inv2, spatial)


class RWOperators(NamedTuple):
    d0: TruncatedSeries
    laplacian: TruncatedSeries
    box: TruncatedSeries
    grad_pair: Callable[[TruncatedSeries], TruncatedSeries]


def rw_operators(s: TruncatedSeries) -> RWOperators:
    """Bundle of the Robertson-Walker differential operators applied to ``s``."""
    return RWOperators(d0(s), laplacian(s), box(s), lambda u: grad_pair(s, u))


def from_terms(terms: Iterable[tuple[int, int, CoeffPoly | Number]],
               max_weight: int | None = DEFAULT_WEIGHT) -> TruncatedSeries:
    out: dict[tuple[int, int], CoeffPoly] = {}
    for p, q, c in terms:
        c = CoeffPoly.coerce(c)
        out[(p, q)] = out[(p, q)] + c if (p, q) in out else c
    return TruncatedSeries(out, max_weight)
