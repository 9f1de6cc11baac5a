"""Radial momentum quadrature with infrared-regularized ``k^-3`` pairings.

Integrals over ``R^3`` of rotationally invariant integrands are computed on a
logarithmic grid. The radial measure ``4 pi k^2 dk`` is folded into the
weights, so ``sum(w * f(k))`` approximates ``int_{R^3} f(|k|) d^3k`` over the
grid range. The infrared cell ``[0, k_min]`` is handled by a short polynomial
extrapolation, the ultraviolet remainder by an analytic power-law tail.

``k^-3`` is not locally integrable in three dimensions; it is interpreted as
the Fourier transform of ``log r`` divided by ``-4 pi^(3/2) Gamma(3/2)``. With
the Gaussian ``chi(k) = exp(-beta k^2)`` the pairing becomes

    <k^-3_reg, f> = int k^-3 [f(k) - f(0) chi(k)] d^3k + f(0) Z0(beta),
    Z0(beta) = 2 pi (gamma_E - 2 - log(beta)),

and the result does not depend on ``beta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

CHI_BETA = 0.5


class TailError(RuntimeError):
    """The ultraviolet tail estimate exceeds the tolerance budget."""


@dataclass(frozen=True)
class ModeGrid:
    nodes: np.ndarray
    weights: np.ndarray
    ir_index: np.ndarray
    ir_weights: np.ndarray
    tail_order: int = 5

    @property
    def k_min(self) -> float:
        return float(self.nodes[0])

    @property
    def k_max(self) -> float:
        return float(self.nodes[-1])

    def __len__(self):
        return len(self.nodes)


def _gregory_weights(n: int) -> np.ndarray:
    """Fourth-order composite weights on a uniform unit-step grid."""
    if n < 8:
        raise ValueError("need at least 8 nodes for end-corrected weights")
    w = np.ones(n)
    ends = np.array([3 / 8, 7 / 6, 23 / 24])
    w[:3] = ends
    w[-3:] = ends[::-1]
    return w


def _ir_rule(nodes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Weights for ``int_0^k0 h(k) dk`` from a quartic through nodes in ``[k0, 3 k0]``.

    Acts on ``h = 4 pi k^2 f``; returned as weights on ``f``.
    """
    k0 = nodes[0]
    targets = k0 * np.array([1.0, 1.5, 2.0, 2.5, 3.0])
    idx = np.unique(np.minimum(np.searchsorted(nodes, targets), len(nodes) - 1))
    if len(idx) < 5:
        idx = np.arange(5)
    x = nodes[idx]
    n = len(x)
    # moments int_0^k0 k^j dk matched exactly for j < n
    V = np.vander(x, n, increasing=True).T
    w = np.linalg.solve(V, np.array([k0 ** (j + 1) / (j + 1) for j in range(n)]))
    return idx, w * 4 * math.pi * x ** 2


def grid_build(k_min: float = 1e-2, k_max: float = 1e3, points: int = 2048,
               spacing: str = "log") -> ModeGrid:
    if spacing != "log":
        raise ValueError("only log spacing is supported")
    if not (0 < k_min < k_max) or not math.isfinite(k_max):
        raise ValueError(f"invalid grid bounds [{k_min}, {k_max}]")
    if points < 16:
        raise ValueError("need at least 16 points")
    s = np.linspace(math.log(k_min), math.log(k_max), points)
    nodes = np.exp(s)
    nodes[0], nodes[-1] = k_min, k_max
    ds = s[1] - s[0]
    weights = _gregory_weights(points) * ds * nodes * 4 * math.pi * nodes ** 2
    ir_index, ir_weights = _ir_rule(nodes)
    return ModeGrid(nodes, weights, ir_index, ir_weights)


def default_grid() -> ModeGrid:
    return grid_build()


def zero_mode_constant(beta: float = CHI_BETA) -> float:
    """``<k^-3_reg, exp(-beta k^2)>``."""
    return 2 * math.pi * (np.euler_gamma - 2.0 - math.log(beta))


class QuadResult(NamedTuple):
    value: float
    tail: float
    tail_bound: float


def _tail(grid: ModeGrid, values: np.ndarray, p: float, coeff: float | None):
    K = grid.k_max
    if p <= 3:
        raise ValueError("tail exponent must exceed 3 for a convergent tail")
    gK = float(values[-1])
    c = gK * K ** p if coeff is None else coeff
    tail = 4 * math.pi * c * K ** (3 - p) / (p - 3)
    if coeff is None:
        bound = abs(tail)
    else:
        bound = 4 * math.pi * abs(gK - coeff * K ** -p) * K ** 3 / (p - 3)
    return tail, bound


def subtracted_integral(grid: ModeGrid, values, tail: float = 5, tail_coeff: float | None = None,
                        tol: float = math.inf, detail: bool = False):
    """``int_{R^3} g d^3k`` from node values ``g`` of a subtracted integrand.

    ``tail`` is the decay exponent of ``g`` beyond the grid; the remainder
    ``4 pi int_K^inf k^2 g`` is added analytically, with the coefficient of
    ``k^-tail`` either given (``tail_coeff``) or read off the last node.
    Summation is a fixed-order compensated sum, so the result does not
    depend on how the values were produced or chunked.
    """
    g = np.asarray(values, dtype=float)
    if g.shape != grid.nodes.shape:
        raise ValueError("values must be aligned with the grid nodes")
    if not np.all(np.isfinite(g)):
        raise ValueError("non-finite integrand value")
    t, bound = (0.0, 0.0) if tail is None else _tail(grid, g, tail, tail_coeff)
    if bound > tol:
        raise TailError(f"tail bound {bound:.3e} exceeds tolerance {tol:.3e} at k_max={grid.k_max:g}")
    body = math.fsum((grid.weights * g).tolist())
    ir = math.fsum((grid.ir_weights * g[grid.ir_index]).tolist())
    value = math.fsum([ir, body, t])
    return QuadResult(value, t, bound) if detail else value


def regularized_k3_pairing(f, grid: ModeGrid | None = None, f0: float | None = None,
                           beta: float = CHI_BETA, tail: float | None = None,
                           tail_coeff: float | None = None, tol: float = math.inf,
                           detail: bool = False):
    """``<k^-3_reg, f>`` for ``f`` smooth at the origin.

    ``f`` is a callable of ``k`` (vectorized) or an array of node values; in
    the latter case ``f0 = f(0)`` must be given. ``tail`` is the decay
    exponent of ``k^-3 f`` beyond the grid (default: no tail correction when
    ``f`` is a callable decaying fast; a fitted tail otherwise).
    """
    grid = grid or default_grid()
    k = grid.nodes
    if callable(f):
        vals = np.asarray(f(k), dtype=float)
        if f0 is None:
            f0 = float(np.asarray(f(np.array([0.0])), dtype=float)[0])
    else:
        vals = np.asarray(f, dtype=float)
        if f0 is None:
            raise ValueError("f0 is required when f is given as node values")
    chi = np.exp(-beta * k ** 2)
    g = (vals - f0 * chi) / k ** 3
    res = subtracted_integral(grid, g, tail=tail, tail_coeff=tail_coeff, tol=tol, detail=True)
    value = math.fsum([res.value, f0 * zero_mode_constant(beta)])
    return QuadResult(value, res.tail, res.tail_bound) if detail else value


def zeta_oracle(beta: float = CHI_BETA, steps: int = 6, h: float = 0.02, dps: int = 30) -> float:
    """Independent value of ``<k^-3_reg, exp(-beta k^2)>`` by analytic continuation.

    Differentiates ``zeta -> C(zeta) <k^(-zeta-3), chi>`` at ``zeta -> 0-``
    with ``C(zeta) = 2^(zeta+3) pi^(3/2) Gamma((zeta+3)/2) / Gamma(-zeta/2)``.
    The pairing is computed by numerical quadrature at ``zeta = -j h`` and
    the derivative at zero is extrapolated from a polynomial fit, then
    divided by ``-4 pi^(3/2) Gamma(3/2)``.
    """
    import mpmath as mp

    with mp.workdps(dps):
        def F(z):
            # split off int_0^1 k^(-z-1) dk = -1/z so the remaining integrands are regular
            inner = mp.quad(lambda k: k ** (-z - 1) * (mp.exp(-beta * k ** 2) - 1), [0, 1])
            outer = mp.quad(lambda k: k ** (-z - 1) * mp.exp(-beta * k ** 2), [1, mp.inf])
            pairing = 4 * mp.pi * (inner - 1 / z + outer)
            return 2 ** (z + 3) * mp.pi ** 1.5 * mp.gamma((z + 3) / 2) / mp.gamma(-z / 2) * pairing

        zs = [-(j + 1) * mp.mpf(h) for j in range(steps)]
        vals = [F(z) for z in zs]
        # derivative at 0 of the interpolating polynomial through (zs, vals)
        deriv = mp.mpf(0)
        for i, zi in enumerate(zs):
            others = [zj for j, zj in enumerate(zs) if j != i]
            denom = mp.fprod([zi - o for o in others])
            # d/dz prod(z - o) at z = 0
            d = mp.fsum(mp.fprod([-o for j, o in enumerate(others) if j != skip]) for skip in range(len(others)))
            deriv += vals[i] * d / denom
        return float(deriv / (-4 * mp.pi ** 1.5 * mp.gamma(1.5)))


def minkowski_phi2_integral(m: float) -> float:
    """Closed form of ``int [1/(2 w) - 1/(2k) + m^2/(4 k^3)]_reg d^3k``, ``w = sqrt(k^2 + m^2)``."""
    if m == 0:
        return 0.0
    return m * m * math.pi * (np.euler_gamma - 0.5 - math.log(2.0) + math.log(m))
