import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from czmcal.errors import NumericalError
from czmcal.gp import (GPHyperparams, SearchConfig, correlation, correlation_matrix, fit,
                       fit_optimized, loo_error, loo_residuals, optimize_hyperparams, predict)


def dense_oracle(X, Y, ls, nugget, xs):
    """Textbook kriging with explicit inverses."""
    X = np.atleast_2d(X.T).T
    xs = np.atleast_2d(xs.T).T
    n = len(Y)
    R = np.array([[math.exp(-0.5 * np.sum(((a - b) / ls) ** 2)) for b in X] for a in X])
    R += nugget * np.eye(n)
    Ri = np.linalg.inv(R)
    F = np.ones(n)
    beta = (F @ Ri @ Y) / (F @ Ri @ F)
    s2 = (Y - beta) @ Ri @ (Y - beta) / n
    means, vars_ = [], []
    for x in xs:
        r = np.array([math.exp(-0.5 * np.sum(((x - b) / ls) ** 2)) for b in X])
        u = F @ Ri @ r - 1.0
        means.append(beta + r @ Ri @ (Y - beta))
        vars_.append(s2 * (1.0 - r @ Ri @ r + u * u / (F @ Ri @ F)))
    return beta, s2, np.array(means), np.array(vars_)


def test_correlation_examples():
    h = GPHyperparams((2.0,))
    assert correlation(1.3, 1.3, h) == 1.0
    assert correlation(0.0, 2.0, h) == pytest.approx(math.exp(-0.5), rel=1e-15)
    assert correlation(0.0, 1e3, h) == 0.0
    h2 = GPHyperparams((1.0, 3.0))
    assert correlation([0.0, 0.0], [1.0, 3.0], h2) == pytest.approx(math.exp(-1.0))
    R = correlation_matrix([[0.0, 0.0], [1.0, 3.0]], [[1.0, 3.0]], (1.0, 3.0))
    np.testing.assert_allclose(R.ravel(), [math.exp(-1.0), 1.0])


def test_hyperparams_validation():
    with pytest.raises(ValueError):
        GPHyperparams((1.0, 0.0))
    with pytest.raises(ValueError):
        GPHyperparams((1.0,), nugget=-1.0)


def test_constant_data():
    gp = fit(np.linspace(0, 1, 5), np.full(5, 3.5), GPHyperparams((0.3,)))
    assert gp.beta == pytest.approx(3.5, rel=1e-12)
    assert gp.sigma2 == pytest.approx(0.0, abs=1e-20)


def test_two_point_gls_mean():
    gp = fit(np.array([-1.0, 1.0]), np.array([2.0, 6.0]), GPHyperparams((0.7,)))
    assert gp.beta == pytest.approx(4.0, rel=1e-14)


@pytest.mark.parametrize("d", [1, 2])
def test_matches_dense_oracle(d):
    rng = np.random.default_rng(d)
    X = rng.uniform(0, 3, size=(9, d))
    Y = np.sin(X).sum(axis=1) + 0.1 * rng.normal(size=9)
    ls = np.array([[0.35], [0.8, 1.7]][d - 1])
    xs = rng.uniform(0, 3, size=(6, d))
    # the explicit-inverse oracle is only as accurate as cond(R)·eps
    assert np.linalg.cond(correlation_matrix(X, X, ls) + 1e-8 * np.eye(9)) < 1e6
    gp = fit(X, Y, GPHyperparams(tuple(ls), nugget=1e-8))
    beta, s2, mu, var = dense_oracle(X, Y, ls, 1e-8, xs)
    assert gp.beta == pytest.approx(beta, rel=1e-10)
    assert gp.sigma2 == pytest.approx(s2, rel=1e-10)
    m, v = predict(gp, xs)
    np.testing.assert_allclose(m, mu, rtol=1e-10)
    np.testing.assert_allclose(v, var, rtol=1e-8, atol=1e-10 * s2)


def test_interpolates_training_points():
    X = np.linspace(0, np.pi, 8)
    Y = np.cos(X) + 2.0
    gp = fit(X, Y, GPHyperparams((0.6,), nugget=1e-13))
    m, v = predict(gp, X)
    np.testing.assert_allclose(m, Y, rtol=1e-8)
    assert np.all(v <= 1e-8 * gp.sigma2)
    assert np.all(v >= 0)


def test_far_field_limit():
    X = np.linspace(0, 1, 6)
    gp = fit(X, X ** 2, GPHyperparams((0.4,)))
    m, v = predict(gp, 1e3)
    assert m == pytest.approx(gp.beta)
    assert v == pytest.approx(gp.sigma2 * (1 + 1 / gp.ones_Rinv_ones), rel=1e-12)


def test_sine_midpoints():
    X = np.linspace(0, np.pi, 10)
    gp = fit_optimized(X, np.sin(X), SearchConfig(seed=0))
    mid = 0.5 * (X[1:] + X[:-1])
    m, _ = predict(gp, mid)
    np.testing.assert_allclose(m, np.sin(mid), atol=1e-3)


def test_twenty_point_set_is_well_posed():
    X = np.linspace(0.5, 20.0, 20)
    Y = 1e4 * np.sin(X / 3.0)
    gp = fit_optimized(X, Y, SearchConfig(seed=1))
    R = correlation_matrix(X, X, gp.hyper.lengthscales) + gp.hyper.nugget * np.eye(20)
    assert np.isfinite(np.linalg.cond(R))


def test_singular_matrix_is_reported():
    with pytest.raises(NumericalError, match="nugget"):
        fit(np.array([0.0, 0.0, 1.0]), np.array([1.0, 2.0, 3.0]),
            GPHyperparams((1.0,), nugget=0.0))


def test_fit_validates_inputs():
    with pytest.raises(ValueError):
        fit(np.array([0.0]), np.array([1.0]), GPHyperparams((1.0,)))
    with pytest.raises(ValueError):
        fit(np.zeros((3, 2)), np.ones(3), GPHyperparams((1.0,)))


def test_loo_identity_matches_refits():
    rng = np.random.default_rng(5)
    X = rng.uniform(0, 5, 8)
    Y = np.sin(X) + 0.05 * rng.normal(size=8)
    h = GPHyperparams((1.1,), nugget=1e-10)
    e = loo_residuals(X, Y, h)
    direct = []
    for i in range(8):
        keep = np.arange(8) != i
        gp = fit(X[keep], Y[keep], h)
        direct.append(Y[i] - predict(gp, X[i])[0])
    np.testing.assert_allclose(e, direct, rtol=1e-6, atol=1e-9)
    assert loo_error(X, Y, h) == pytest.approx(np.mean(np.square(direct)), rel=1e-6)


def test_optimizer_beats_grid_scan():
    X = np.linspace(0, 4, 12)
    Y = np.exp(-X) * np.sin(3 * X)
    cfg = SearchConfig(seed=3)
    best = optimize_hyperparams(X, Y, cfg)
    lo, hi = math.log10(0.01 * 4), math.log10(10 * 4)
    grid = min(loo_error(X, Y, GPHyperparams((10 ** g,))) for g in np.linspace(lo, hi, 50))
    assert loo_error(X, Y, best) <= 2 * grid


def test_recovers_known_lengthscale():
    rng = np.random.default_rng(11)
    X = np.linspace(0, 10, 40)
    ell = 1.5
    K = correlation_matrix(X, X, (ell,)) + 1e-10 * np.eye(40)
    Y = np.linalg.cholesky(K) @ rng.normal(size=40)
    got = optimize_hyperparams(X, Y, SearchConfig(seed=0)).lengthscales[0]
    assert ell / 2 <= got <= ell * 2


def test_white_noise_has_no_structure():
    rng = np.random.default_rng(2)
    X = np.linspace(0, 10, 30)
    Y = rng.normal(size=30)
    h = optimize_hyperparams(X, Y, SearchConfig(seed=0))
    assert loo_error(X, Y, h) == pytest.approx(np.var(Y, ddof=1), rel=0.35)


def test_search_is_seeded():
    X = np.linspace(0, 3, 9)
    Y = np.cos(2 * X)
    a = optimize_hyperparams(X, Y, SearchConfig(seed=4))
    b = optimize_hyperparams(X, Y, SearchConfig(seed=4))
    assert a == b
    with pytest.raises(ValueError):
        optimize_hyperparams(X[:2], Y[:2])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31), st.floats(0.3, 3.0))
def test_permutation_invariance_and_nonnegative_variance(seed, ell):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 6, size=(7, 2))
    Y = rng.normal(size=7)
    h = GPHyperparams((ell, 2 * ell), nugget=1e-8)
    xs = rng.uniform(-1, 7, size=(5, 2))
    perm = rng.permutation(7)
    m1, v1 = predict(fit(X, Y, h), xs)
    m2, v2 = predict(fit(X[perm], Y[perm], h), xs)
    scale = max(1.0, np.max(np.abs(m1)))
    np.testing.assert_allclose(m1, m2, rtol=1e-12, atol=1e-12 * scale)
    np.testing.assert_allclose(v1, v2, rtol=1e-8, atol=1e-12)
    assert np.all(v1 >= 0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31), st.floats(-3, 3), st.floats(-3, 3))
def test_mean_is_linear_in_outputs(seed, a, b):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 5, 6)
    Y1, Y2 = rng.normal(size=6), rng.normal(size=6)
    h = GPHyperparams((0.9,), nugget=1e-8)
    xs = rng.uniform(0, 5, 4)
    m = predict(fit(X, a * Y1 + b * Y2, h), xs)[0]
    ref = a * predict(fit(X, Y1, h), xs)[0] + b * predict(fit(X, Y2, h), xs)[0]
    np.testing.assert_allclose(m, ref, atol=1e-9)
