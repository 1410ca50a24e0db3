import numpy as np
import pytest
from hypothesis import given, strategies as st

from sparsedom.dyadic import Box, GridFunction
from sparsedom.errors import BudgetError
from sparsedom.maximal import (MatrixOperator, SublinearOperator, dyadic_maximal, grand_maximal,
                               hl_maximal, iterated_maximal, m_delta, orlicz_maximal, sharp_maximal,
                               sharp_maximal_delta, shifted_maximal)
from sparsedom.weaktype import lambda_grid, weak_type_check
from sparsedom.weights import lq_pointwise

from conftest import step_function

BOX = Box.interval(-1.0, 1.0)


def sparse_step(seed, m=8, n=1):
    rng = np.random.default_rng(seed)
    box = Box((-1.0,) * n, 2.0)
    f = step_function(box, m, rng, pieces=2 ** int(rng.integers(2, min(m, 6) + 1)))
    return f.with_values(f.values * (rng.random(f.values.shape) < 0.3))


def test_constant_is_fixed():
    f = GridFunction.constant(BOX, 6, 2.5)
    for g in (dyadic_maximal(f), shifted_maximal(f), hl_maximal(f), orlicz_maximal(f, 0.0)):
        assert np.allclose(g.values, 2.5, rtol=1e-14)
    assert np.all(sharp_maximal(f).values == 0)


def test_dyadic_maximal_of_half_indicator():
    box = Box.interval(0.0, 2.0)
    f = GridFunction.indicator(box, 5, 0.0, 1.0)
    g = dyadic_maximal(f).values
    assert np.all(g[:16] == 1.0) and np.all(g[16:] == 0.5)


def test_sharp_maximal_of_half_indicator():
    box = Box.interval(0.0, 2.0)
    f = GridFunction.indicator(box, 5, 0.0, 1.0)
    assert np.allclose(sharp_maximal(f).values, 0.5)


def brute_force_window_max(a, i):
    # uncentred: best mean over [lo, hi) containing cell i
    best = 0.0
    for lo in range(i + 1):
        for hi in range(i + 1, a.size + 1):
            best = max(best, a[lo:hi].mean())
    return best


def test_hl_maximal_far_from_the_support():
    box = Box.interval(-2.0, 4.0)
    m = 9
    f = GridFunction.indicator(box, m, 0.0, 1.0)
    h = box.side / 2 ** m
    i = int((2.0 - box.lower[0]) // h)
    got = hl_maximal(f).values[i]
    assert got == pytest.approx(brute_force_window_max(f.values, i), rel=1e-13)
    assert got == pytest.approx(0.5, abs=2 * h)


@given(seed=st.integers(0, 2 ** 31))
def test_hl_matches_brute_force(seed):
    full = np.r_[np.random.default_rng(seed).random(24) ** 3, np.zeros(8)]
    g = hl_maximal(GridFunction(Box.interval(0.0, 1.0), 5, full))
    for i in range(0, 32, 5):
        assert g.values[i] == pytest.approx(brute_force_window_max(full, i), rel=1e-12)


@given(seed=st.integers(0, 2 ** 31))
def test_one_third_comparability(seed):
    f = sparse_step(seed)
    if not f.values.any():
        return
    d = dyadic_maximal(f).values
    s = shifted_maximal(f).values
    hl = hl_maximal(f).values
    assert np.all(d <= hl * (1 + 1e-12))
    assert np.all(s <= hl * (1 + 1e-12))
    assert np.all(hl <= 6 * s)  # covering ratio of the shifted family
    assert np.all(d >= np.abs(f.values) * (1 - 1e-12))


@given(seed=st.integers(0, 2 ** 31), dim=st.sampled_from([1, 2]))
def test_sharp_below_twice_dyadic(seed, dim):
    f = sparse_step(seed, m=6 if dim == 1 else 4, n=dim)
    assert np.all(sharp_maximal(f).values <= 2 * dyadic_maximal(f).values + 1e-12)


def test_m_delta_tends_to_dyadic_maximal():
    box = Box.interval(0.0, 1.0)
    f = GridFunction(box, 4, np.where(np.arange(16) % 3 == 0, 4.0, 0.5))
    md = dyadic_maximal(f).values
    assert np.allclose(m_delta(f, 1.0).values, md, rtol=1e-14)
    errs = [np.abs(m_delta(f, d).values - md).max() for d in (0.5, 0.9, 0.99, 0.999)]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-2
    # power means increase with the exponent
    assert np.all(m_delta(f, 0.5).values <= m_delta(f, 0.9).values + 1e-12)
    with pytest.raises(ValueError):
        m_delta(f, 1.5)
    with pytest.raises(ValueError):
        sharp_maximal_delta(f, 1.0)


def test_orlicz_maximal_beta_zero_is_shifted_maximal():
    f = sparse_step(11)
    assert np.allclose(orlicz_maximal(f, 0.0).values, shifted_maximal(f).values, rtol=1e-13)


def test_llogl_maximal_comparable_to_iterated():
    lo, hi = np.inf, 0.0
    for seed in range(50):
        f = sparse_step(seed)
        if not f.values.any():
            continue
        r = orlicz_maximal(f, 1.0).values / iterated_maximal(f).values
        lo, hi = min(lo, r.min()), max(hi, r.max())
    # recorded comparability constants
    assert 0.5 < lo and hi < 1.0


@pytest.mark.parametrize("beta", [0.0, 1.0, 2.0])
def test_orlicz_maximal_weak_type(beta):
    worst = 0.0
    for seed in range(20):
        f = sparse_step(seed)
        if not f.values.any():
            continue
        chk = weak_type_check(orlicz_maximal(f, beta), f, lambda_grid(np.abs(f.values).max()), beta=beta)
        worst = max(worst, chk.constant)
    assert 0 < worst < 20


def test_vector_weak_type_for_llogl_maximal():
    worst = 0.0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        fs = [sparse_step(seed * 7 + k) for k in range(int(rng.integers(1, 5)))]
        F = lq_pointwise(fs, 2.0)
        if not F.values.any():
            continue
        G = lq_pointwise([orlicz_maximal(f, 1.0) for f in fs], 2.0)
        worst = max(worst, weak_type_check(G, F, lambda_grid(F.values.max())).constant)
    assert 0 < worst < 20


def test_grand_maximal_of_local_multiplier_vanishes():
    f = sparse_step(3, m=6)

    def restrict(values, support, rows):
        v = values if support is None else values * np.asarray(support)[:, None]
        return v[rows]

    T = SublinearOperator(restrict, name="cutoff")
    assert np.all(grand_maximal(T, f).values == 0)


def test_grand_maximal_by_hand():
    # T sums its input, so M_T f on Q is the mass of f outside 3Q
    box = Box.interval(0.0, 1.0)
    m = 3
    f = GridFunction(box, m, np.arange(1.0, 9.0))
    T = MatrixOperator(np.full((8, 8), 1.0))
    got = grand_maximal(T, f, shifts=[(0,)]).values
    expect = np.zeros(8)
    for level in range(m + 1):
        c = 2 ** (m - level)
        for j in range(2 ** level):
            lo, hi = j * c - c, j * c + 2 * c
            outside = [y for y in range(8) if not lo <= y < hi]
            val = f.values[outside].sum()
            expect[j * c:(j + 1) * c] = np.maximum(expect[j * c:(j + 1) * c], val)
    assert np.allclose(got, expect)


def test_grand_maximal_budget():
    f = sparse_step(1, m=6)
    T = MatrixOperator(np.eye(64))
    with pytest.raises(BudgetError):
        grand_maximal(T, f, budget=10)


def test_grand_maximal_rows_mask_and_sequences():
    f = sparse_step(5, m=6)
    g = sparse_step(6, m=6)
    T = MatrixOperator(np.random.default_rng(0).random((64, 64)))
    full = grand_maximal(T, [f, g])
    mask = np.zeros(64, dtype=bool)
    mask[10:20] = True
    part = grand_maximal(T, [f, g], rows=mask)
    for a, b in zip(full, part):
        assert np.allclose(a.values[mask], b.values[mask])
        assert np.all(b.values[~mask] == 0)
