import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from scipy.optimize import brentq

from sparsedom.dyadic import Box, DyadicCube, GridFunction
from sparsedom.errors import NonConvergenceError
from sparsedom.orlicz import (OrliczParams, exp_norm, luxemburg_norm, luxemburg_rows, modular,
                              orlicz_holder_pair, young)

from conftest import step_function

ROOT = DyadicCube.standard(0, 0)
# oracle: 1/t* with t* log(1 + t*) = 1, from an independent bracketing solve
LLOGL_ONE = 1.0 / brentq(lambda t: t * np.log1p(t) - 1.0, 0.1, 10.0, xtol=1e-15)


def test_beta_zero_is_the_mean(unit):
    f = GridFunction.indicator(unit, 8, 0.0, 0.5)
    assert luxemburg_norm(f, ROOT, 0.0) == pytest.approx(0.5, abs=1e-10)


def test_llogl_norm_of_one(unit):
    assert LLOGL_ONE == pytest.approx(0.80647, abs=1e-5)
    f = GridFunction.constant(unit, 4, 1.0)
    assert luxemburg_norm(f, ROOT, 1.0) == pytest.approx(LLOGL_ONE, abs=1e-8)


def test_zero_function_has_zero_norm(unit):
    z = GridFunction.zeros(unit, 4)
    assert luxemburg_norm(z, ROOT, 1.0) == 0.0
    assert exp_norm(z, ROOT) == 0.0


def test_exp_norm_of_constant(unit):
    h = GridFunction.constant(unit, 4, 3.0)
    assert exp_norm(h, ROOT) == pytest.approx(3.0 / np.log(2), rel=1e-9)


def test_exp_norm_of_log_singularity(unit):
    h = GridFunction.from_callable(unit, 14, lambda x: np.log(1 / x))
    assert exp_norm(h, ROOT) == pytest.approx(2.0, rel=1e-2)


def test_holder_pair_constants(unit):
    one = GridFunction.constant(unit, 4, 1.0)
    lhs, rhs = orlicz_holder_pair(one, one, ROOT)
    assert lhs == 1.0
    assert rhs == pytest.approx(LLOGL_ONE / np.log(2), rel=1e-8)
    lhs, rhs = orlicz_holder_pair(GridFunction.zeros(unit, 4), one, ROOT)
    assert lhs == 0.0 and rhs == 0.0


def test_holder_pair_random_seeds():
    box = Box.interval(0.0, 1.0)
    worst = 0.0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        f = step_function(box, 7, rng, pieces=16)
        h = step_function(box, 7, rng, pieces=16)
        lhs, rhs = orlicz_holder_pair(f, h, ROOT)
        worst = max(worst, lhs / rhs)
    assert worst <= 2.0


def test_params_validation():
    with pytest.raises(ValueError):
        OrliczParams(-1.0)
    with pytest.raises(ValueError):
        OrliczParams(1.0, tol=0.0)


def test_bracket_exhaustion_is_reported():
    with pytest.raises(NonConvergenceError):
        luxemburg_rows(np.r_[1.0, np.zeros(999)], 1.0, max_expansions=1)


def test_huge_values_do_not_overflow():
    assert luxemburg_rows(np.array([1e300, 1e300]), 1.0)[0] == pytest.approx(1e300 * LLOGL_ONE, rel=1e-9)


@given(seed=st.integers(0, 2 ** 31), c=st.floats(1e-3, 1e3), beta=st.floats(0.0, 3.0))
def test_homogeneity(seed, c, beta):
    f = step_function(Box.interval(0.0, 1.0), 6, np.random.default_rng(seed))
    a = luxemburg_norm(f, ROOT, beta)
    b = luxemburg_norm(f.with_values(c * f.values), ROOT, beta)
    assert b == pytest.approx(c * a, rel=1e-8)


def test_young_function_grows_in_beta_only_above_e_minus_one():
    t = np.array([0.5, np.e - 1, 3.0])
    assert young(t, 2.0)[0] < young(t, 1.0)[0]
    assert young(t, 2.0)[1] == pytest.approx(young(t, 1.0)[1])
    assert young(t, 2.0)[2] > young(t, 1.0)[2]


def test_norm_can_decrease_in_beta(unit):
    one = GridFunction.constant(unit, 3, 1.0)
    assert luxemburg_norm(one, ROOT, 1.0) < luxemburg_norm(one, ROOT, 0.0)


@given(seed=st.integers(0, 2 ** 31), b1=st.floats(0.0, 2.0), b2=st.floats(0.0, 2.0),
       support=st.integers(1, 9))
def test_monotone_in_beta_when_values_exceed_e_minus_one_times_norm(seed, b1, b2, support):
    # if |f| >= (e-1) ||f||_{beta1} wherever f != 0, then Phi_beta2 >= Phi_beta1 at that level
    b1, b2 = sorted((b1, b2))
    rng = np.random.default_rng(seed)
    vals = np.zeros(64)
    vals[rng.choice(64, support * 2, replace=False)] = 1 + rng.random(support * 2)
    f = GridFunction(Box.interval(0.0, 1.0), 6, vals)
    n1 = luxemburg_norm(f, ROOT, b1)
    assume(vals[vals > 0].min() >= (np.e - 1) * n1)
    assert n1 <= luxemburg_norm(f, ROOT, b2) * (1 + 1e-9)


@given(seed=st.integers(0, 2 ** 31), beta=st.floats(0.1, 3.0))
def test_defining_residual(seed, beta):
    tol = 1e-10
    f = step_function(Box.interval(0.0, 1.0), 6, np.random.default_rng(seed))
    lam = luxemburg_norm(f, ROOT, beta, tol=tol)
    avg = young(np.abs(f.values) / lam, beta).mean()
    assert abs(avg - 1.0) <= 10 * tol * max(1.0, beta * 10)


@given(seed=st.integers(0, 2 ** 31), lam=st.floats(1e-3, 1e3))
def test_norm_bounded_by_level_plus_modular(seed, lam):
    f = step_function(Box.interval(0.0, 1.0), 6, np.random.default_rng(seed))
    norm = luxemburg_norm(f, ROOT, 1.0)
    bound = lam + lam * young(np.abs(f.values) / lam, 1.0).mean()
    assert norm <= bound * (1 + 1e-9)


def test_modular_matches_direct_sum(unit):
    f = GridFunction.from_callable(unit, 5, lambda x: 3 * x)
    direct = (3 * f.midpoints() / 2 * np.log1p(3 * f.midpoints() / 2)).sum()
    assert modular(f.values, 2.0, 1.0) == pytest.approx(direct)
