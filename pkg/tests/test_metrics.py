import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from steinpc import metrics, shrink
from steinpc.errors import DegenerateInputError

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def naive_sum(xs):
    total = 0.0
    for x in xs:
        total += x
    return total


def two_pass_var(xs):
    m = naive_sum(xs) / len(xs)
    return naive_sum([(x - m) ** 2 for x in xs]) / len(xs)


# --- vector statistics -----------------------------------------------------

def test_ave_small():
    assert metrics.ave([1, 2, 3]) == 2
    assert metrics.ave([0, 0, 0, 0]) == 0


def test_ave_matches_naive_sum(rng):
    x = rng.normal(size=1000)
    assert metrics.ave(x) == pytest.approx(naive_sum(x) / 1000, abs=1e-12)


def test_var_small():
    assert metrics.var([1, 2, 3]) == pytest.approx(2 / 3, abs=1e-15)
    assert metrics.var([4.5] * 7) == 0


def test_var_population_divisor():
    # d, not d - 1
    assert metrics.var([0, 2]) == 1.0


def test_var_matches_two_pass(rng):
    x = rng.normal(3, 2, size=1000)
    assert metrics.var(x) == pytest.approx(two_pass_var(list(x)), abs=1e-12)


def test_cov_small():
    assert metrics.cov([1, 2], [2, 1]) == pytest.approx(-0.25)
    assert metrics.cov([1, -1], [1, 1]) == 0


def test_cov_self_is_var(rng):
    x = rng.normal(size=57)
    assert metrics.cov(x, x) == metrics.var(x)


@pytest.mark.parametrize("fn", [metrics.cov, metrics.mse, metrics.dot])
def test_length_mismatch(fn):
    with pytest.raises(ValueError):
        fn([1, 2, 3], [1, 2])


def test_empty_and_nonfinite():
    with pytest.raises(ValueError):
        metrics.ave([])
    with pytest.raises(ValueError):
        metrics.var([1.0, math.nan])


def test_mse_small():
    assert metrics.mse([1, 2], [1, 0]) == 2
    assert metrics.mse([1, 2, 3], [1, 2, 3]) == 0


def test_mse_matches_loop(rng):
    a, b = rng.normal(size=(2, 300))
    loop = naive_sum([(x - y) ** 2 for x, y in zip(a, b)]) / 300
    assert metrics.mse(a, b) == pytest.approx(loop, abs=1e-12)


def test_sph_small():
    assert metrics.sph([1, 0], [0, 1]) == 1
    assert metrics.sph([1, 2, 3], [1, 2, 3]) == 0
    assert metrics.sph([1, 1], [1, 0]) == pytest.approx(0.5, abs=1e-15)


def test_sph_zero_vector():
    with pytest.raises(DegenerateInputError):
        metrics.sph([0, 0], [1, 0])


@settings(max_examples=200, deadline=None)
@given(arrays(float, 6, elements=finite), arrays(float, 6, elements=finite),
       st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_sph_scale_and_sign_invariant(u, v, a, b):
    if np.linalg.norm(u) < 1e-3 or np.linalg.norm(v) < 1e-3:
        return
    base = metrics.sph(u, v)
    assert 0.0 <= base <= 1.0
    assert metrics.sph(a * u, b * v) == pytest.approx(base, abs=1e-12)
    assert metrics.sph(-u, -v) == pytest.approx(base, abs=1e-12)


# --- shrinkage closed forms ---------------------------------------------------

def _args(c, eta, theta):
    mo = metrics.Moments.of(eta, theta)
    return (c, mo.ave_eta, mo.ave_theta, mo.var_theta, mo.var_eta, mo.cov_eta_theta)


def test_mse_closed_form_examples():
    x = np.array([1.0, 2.0, 3.0])
    assert metrics.mse_shrunk_closed_form(*_args(1.0, x, x)) == pytest.approx(0, abs=1e-15)
    # c = 0 collapses eta to its mean vector
    assert metrics.mse_shrunk_closed_form(*_args(0.0, x, x)) == pytest.approx(2 / 3)
    assert metrics.mse(np.full(3, 2.0), x) == pytest.approx(2 / 3)


def test_sph_closed_form_examples():
    x = np.array([1.0, 2.0, 3.0])
    assert metrics.sph_shrunk_closed_form(*_args(1.0, x, x)) == pytest.approx(0, abs=1e-15)
    eta = np.array([1.0, -2.0, 0.5, 0.5])
    theta = np.array([0.3, -1.0, 1.0, -0.3])
    c = 1.7
    got = metrics.sph_shrunk_closed_form(*_args(c, eta, theta))
    want = 1 - metrics.cov(eta, theta) ** 2 / (metrics.var(eta) * metrics.var(theta))
    assert got == pytest.approx(want, abs=1e-14)


def test_sph_closed_form_zero_denominator():
    with pytest.raises(DegenerateInputError):
        metrics.sph_shrunk_closed_form(0.0, 0.0, 1.0, 1.0, 1.0, 0.0)


@settings(max_examples=300, deadline=None)
@given(st.integers(2, 40), st.floats(-2, 2), st.integers(0, 2**32 - 1))
def test_closed_forms_equal_direct(p, c, seed):
    r = np.random.default_rng(seed)
    theta = r.normal(r.normal(), r.uniform(0.1, 2), size=p)
    eta = theta + r.normal(size=p)
    args = _args(c, eta, theta)
    shrunk = shrink.shrink_vector(eta, c)
    direct = metrics.mse(shrunk, theta)
    closed = metrics.mse_shrunk_closed_form(*args)
    assert abs(direct - closed) <= 1e-10 * max(direct, 1.0)
    assert metrics.sph_shrunk_closed_form(*args) == pytest.approx(metrics.sph(shrunk, theta), abs=1e-10)


# --- limits -------------------------------------------------------------------

def test_limit_c_inf():
    assert metrics.limit_c_inf(1) == 0.5
    assert metrics.limit_c_inf(0) == 0
    assert metrics.limit_c_inf(3) == pytest.approx(0.9)
    with pytest.raises(ValueError):
        metrics.limit_c_inf(-1)


def test_limit_d_inf():
    for snr in (0.0, 0.3, 5.0):
        assert metrics.limit_d_inf(snr, 1.0) == pytest.approx(1.0)
    assert metrics.limit_d_inf(1, 1 / math.sqrt(2)) == pytest.approx(0.75)
    assert metrics.limit_d_inf(2.0, 1e-9) == pytest.approx(metrics.limit_c_inf(2.0))
    with pytest.raises(ValueError):
        metrics.limit_d_inf(1, 0)
    with pytest.raises(ValueError):
        metrics.limit_d_inf(1, 1.5)


@given(st.floats(0, 100), st.floats(1e-6, 1.0))
def test_d_inf_between_c_inf_and_one(snr, r):
    d = metrics.limit_d_inf(snr, r)
    assert metrics.limit_c_inf(snr) - 1e-15 <= d <= 1 + 1e-15


@given(st.floats(0, 50), st.floats(0, 50))
def test_c_inf_increasing(a, b):
    if a < b:
        assert metrics.limit_c_inf(a) <= metrics.limit_c_inf(b)


def test_predicted_raw_mse():
    assert metrics.predicted_raw_mse(1, 4) == 0.25
    assert metrics.predicted_raw_mse(2, 8) == 0.5
    assert metrics.predicted_raw_mse(1, 10**9) < 1e-8
    with pytest.raises(ValueError):
        metrics.predicted_raw_mse(1, 1)


def test_predicted_raw_mse_vs_beta():
    assert metrics.predicted_raw_mse_vs_beta(1, 4, 2, 0.5, 1.0) == 0.25
    got = metrics.predicted_raw_mse_vs_beta(1, 4, 2, 1 / math.sqrt(2), 2)
    assert got == pytest.approx(0.75)
    with pytest.raises(ValueError):
        metrics.predicted_raw_mse_vs_beta(1, 4, 2, 0.5, 0.0)


def test_predicted_raw_sph():
    assert metrics.predicted_raw_sph(0, 0.3) == 1
    assert metrics.predicted_raw_sph(1, 1) == 0.5
    assert metrics.predicted_raw_sph(2, 1 / math.sqrt(2)) == pytest.approx(1 / 9)


def test_snr_and_incoherence():
    tp = metrics.snr_and_incoherence(1, 1, 1, 4, 1)
    assert tp.snr == pytest.approx(2)
    assert tp.r_inf == pytest.approx(1 / math.sqrt(2))
    assert (tp.m, tp.xi, tp.nu) == pytest.approx((1, 1, 0.5))
    assert metrics.snr_and_incoherence(0, 2, 1, 4, 1.3).r_inf == 1
    assert metrics.snr_and_incoherence(1, 3, 3, 9, 1).snr == pytest.approx(3)
    with pytest.raises(ValueError):
        metrics.snr_and_incoherence(1, 0, 1, 4, 1)


def test_basic_moment_identities_converge():
    # eta = theta + w with independent centred w: the moment gaps shrink with p
    r = np.random.default_rng(7)
    gaps = []
    for p in (100, 10_000, 1_000_000):
        theta = r.normal(1, 1, size=p)
        w = r.normal(0, 0.5, size=p)
        eta = theta + w
        gaps.append(max(abs(metrics.ave(eta) - metrics.ave(theta)),
                        abs(metrics.cov(eta, theta) - metrics.var(theta)),
                        abs(metrics.var(eta) - metrics.var(theta) - metrics.var(w))))
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 5e-3
