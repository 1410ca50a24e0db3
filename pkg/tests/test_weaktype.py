import numpy as np
import pytest

from sparsedom.dyadic import Box, GridFunction
from sparsedom.weaktype import lambda_grid, psi2, weak_type_check


def test_lambda_grid():
    g = lambda_grid(3.0)
    assert g.size == 16
    assert g[0] == pytest.approx(0.03) and g[-1] == pytest.approx(30.0)
    assert np.allclose(np.diff(np.log(g)), np.log(g[1] / g[0]))
    with pytest.raises(ValueError):
        lambda_grid(0.0)


def test_psi2():
    assert psi2(0.0) == pytest.approx(1.0)
    assert psi2(np.e * (np.e - 1)) == pytest.approx(np.log(np.e ** 2) ** 2)


def test_level_above_max_gives_zero():
    box = Box.interval(0.0, 1.0)
    G = GridFunction.indicator(box, 4, 0.0, 0.5)
    chk = weak_type_check(G, G, [2.0, 5.0])
    assert np.all(chk.lhs == 0) and np.all(chk.ratios == 0)
    assert chk.constant == 0.0 and chk.holds(0.0)


def test_indicator_ratio_by_hand():
    box = Box.interval(0.0, 1.0)
    F = GridFunction.indicator(box, 4, 0.0, 0.5)
    chk = weak_type_check(F, F, [0.5], beta=1.0, base=np.e, prefactor=2.0)
    # |{F > 1/2}| = 1/2;  rhs = 2 * (1/2) * 2 log(e + 2)
    assert chk.lhs[0] == pytest.approx(0.5)
    assert chk.rhs[0] == pytest.approx(2 * 0.5 * 2 * np.log(np.e + 2))
    assert chk.holds(chk.constant)
    assert not chk.holds(0.9 * chk.constant)


def test_weights_enter_both_sides():
    box = Box.interval(0.0, 1.0)
    F = GridFunction.indicator(box, 2, 0.0, 0.5)
    w = GridFunction(box, 2, np.array([1.0, 3.0, 5.0, 7.0]))
    v = GridFunction(box, 2, np.ones(4))
    chk = weak_type_check(F, F, [0.5], beta=0.0, weight=w, rhs_weight=v)
    assert chk.lhs[0] == pytest.approx((1 + 3) / 4)
    assert chk.rhs[0] == pytest.approx(2 * 0.5)
