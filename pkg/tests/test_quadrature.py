import json
import math
from pathlib import Path

import numpy as np
import pytest

from backreaction import quadrature as qd

GOLDEN = json.loads((Path(__file__).parent / "golden" / "values.json").read_text())


def test_gaussian_moment():
    g = qd.default_grid()
    val = qd.subtracted_integral(g, np.exp(-g.nodes ** 2), tail=None)
    assert val == pytest.approx(math.pi ** 1.5, rel=1e-10)


def test_convergence_with_points():
    errs = []
    for n in (32, 64, 128):
        g = qd.grid_build(points=n, k_max=50)
        errs.append(abs(qd.subtracted_integral(g, np.exp(-g.nodes ** 2), tail=None) - math.pi ** 1.5))
    assert errs[0] > errs[1] > errs[2]


def test_zero_mode_constant_closed_form():
    assert qd.zero_mode_constant(0.5) == pytest.approx(2 * math.pi * (np.euler_gamma - 2 + math.log(2)))


def test_pairing_matches_frozen_oracle():
    val = qd.regularized_k3_pairing(lambda k: np.exp(-k ** 2 / 2))
    assert val == pytest.approx(GOLDEN["zeta_oracle_beta_half"]["value"], rel=1e-6)


def test_pairing_is_cutoff_independent():
    f = lambda k: np.exp(-k ** 2 / 3) * (1 + k ** 2)  # noqa: E731
    vals = [qd.regularized_k3_pairing(f, beta=b) for b in (0.1, 0.5, 3.0)]
    assert max(vals) - min(vals) < 1e-8 * abs(vals[0])


def test_minkowski_phi2():
    m = 1.0
    g = lambda k: k ** 3 * (1 / (2 * np.sqrt(k ** 2 + m * m)) - 1 / (2 * k)) + m * m / 4  # noqa: E731
    val = qd.regularized_k3_pairing(g, f0=0.25, tail=5, tail_coeff=3 / 16)
    assert val == pytest.approx(GOLDEN["minkowski_phi2_m1"]["value"], abs=1e-9)
    assert qd.minkowski_phi2_integral(0.0) == 0.0


def test_tail_budget_is_enforced():
    g = qd.default_grid()
    with pytest.raises(qd.TailError):
        qd.subtracted_integral(g, g.nodes ** -4.0, tail=4, tol=1e-12)


def test_node_values_need_f0():
    g = qd.default_grid()
    with pytest.raises(ValueError):
        qd.regularized_k3_pairing(np.zeros(len(g)), g)


def test_bad_grids_rejected():
    with pytest.raises(ValueError):
        qd.grid_build(k_min=0.0)
    with pytest.raises(ValueError):
        qd.grid_build(points=4)
    with pytest.raises(ValueError):
        qd.subtracted_integral(qd.default_grid(), np.full(2048, np.nan))


def test_summation_order_is_fixed():
    g = qd.default_grid()
    v = np.sin(g.nodes) * np.exp(-g.nodes)
    assert qd.subtracted_integral(g, v, tail=None) == qd.subtracted_integral(g, v.copy(), tail=None)
