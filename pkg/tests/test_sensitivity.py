import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from czmcal.dcb import DCBGeometry
from czmcal.errors import NumericalError
from czmcal.priors import REFERENCE_POSTERIOR_MEAN, default_prior
from czmcal.sensitivity import (PeakLoadQoI, SobolResult, ishigami, ishigami_sampler,
                                rank_parameters, saltelli_matrices, sobol_indices)

unit = lambda u: np.asarray(u)
NAMES3 = ("x1", "x2", "x3")


def ishigami_oracle(a=7.0, b=0.1):
    """Closed-form first-order and total indices of the Ishigami function."""
    pi = math.pi
    V1 = 0.5 * (1 + b * pi ** 4 / 5) ** 2
    V2 = a ** 2 / 8
    V13 = 8 * b ** 2 * pi ** 8 / 225
    V = V1 + V2 + V13
    return np.array([V1, V2, 0.0]) / V, np.array([V1 + V13, V2, V13]) / V


def test_ishigami_oracle_total_variance():
    a, b, pi = 7.0, 0.1, math.pi
    V = a ** 2 / 8 + b * pi ** 4 / 5 + b ** 2 * pi ** 8 / 18 + 0.5
    x = ishigami_sampler(np.random.default_rng(0).random((400_000, 3)))
    assert np.var(ishigami(x)) == pytest.approx(V, rel=0.01)
    S, ST = ishigami_oracle()
    assert S.sum() + ST[2] == pytest.approx(1.0)


def test_ishigami_indices():
    res = sobol_indices(ishigami, n_base=2 ** 14, seed=0, n_bootstrap=20,
                        sampler=ishigami_sampler, names=NAMES3)
    S, ST = ishigami_oracle()
    assert np.max(np.abs(res.S - S)) <= 0.02
    assert np.max(np.abs(res.ST - ST)) <= 0.02


def test_single_input_function():
    res = sobol_indices(lambda X: X[:, 0], n_base=1024, seed=1, sampler=unit, names=NAMES3,
                        sampling="mc")
    assert res.S[0] == pytest.approx(1.0, abs=3 * res.S_err[0] + 1e-12)
    assert np.all(np.abs(res.S[1:]) <= 3 * res.S_err[1:] + 1e-12)
    np.testing.assert_array_equal(res.ST[1:], 0.0)


def test_additive_function_has_no_interactions():
    f = lambda X: X[:, 0] + 2 * X[:, 1] ** 2 + np.sin(3 * X[:, 2])
    res = sobol_indices(f, n_base=4096, seed=2, sampler=unit, names=NAMES3)
    err = np.sqrt(res.S_err ** 2 + res.ST_err ** 2)
    assert np.all(np.abs(res.ST - res.S) <= 3 * err)
    assert res.S.sum() == pytest.approx(1.0, abs=3 * np.sqrt(np.sum(res.S_err ** 2)))


def test_product_ranks_above_inert_input():
    f = lambda X: (X[:, 0] - 0.2) * (X[:, 2] - 0.2)
    res = sobol_indices(f, n_base=2048, seed=3, sampler=unit, names=NAMES3)
    assert res.ST[0] == pytest.approx(res.ST[2], abs=3 * (res.ST_err[0] + res.ST_err[2]))
    assert rank_parameters(res)[-1] == "x2"


def test_rank_ties_keep_input_order():
    r = SobolResult(("a", "b", "c"), np.array([0.1, 0.1, 0.1]), np.zeros(3),
                    np.array([0.2, 0.2, 0.2]), np.zeros(3), 128)
    assert rank_parameters(r) == ["a", "b", "c"]
    r = SobolResult(("a", "b", "c"), np.array([0.1, 0.3, 0.2]), np.zeros(3),
                    np.array([0.5, 0.5, 0.9]), np.zeros(3), 128)
    assert rank_parameters(r) == ["c", "b", "a"]


@settings(max_examples=10, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.integers(0, 1000))
def test_index_bounds(c1, c2, c3, seed):
    f = lambda X: c1 * X[:, 0] + c2 * X[:, 1] ** 2 + c3 * X[:, 0] * X[:, 2] + 0.1 * X[:, 2]
    res = sobol_indices(f, n_base=512, seed=seed, n_bootstrap=50, sampler=unit, names=NAMES3,
                        sampling="mc")
    tol = 3 * np.sqrt(res.S_err ** 2 + res.ST_err ** 2) + 1e-12
    assert np.all(res.S >= -3 * res.S_err - 1e-12)
    assert np.all(res.S <= res.ST + tol)
    assert np.all(res.ST <= 1 + 3 * res.ST_err + 1e-12)
    assert res.S.sum() <= 1 + 3 * np.sqrt(np.sum(res.S_err ** 2)) + 1e-12
    assert np.all(res.S_err >= 0) and np.all(res.ST_err >= 0)


def test_errors_shrink_with_sample_size():
    f = lambda X: X[:, 0] * X[:, 1] + X[:, 2] ** 2
    small = sobol_indices(f, n_base=512, seed=4, n_bootstrap=200, sampler=unit, names=NAMES3,
                          sampling="mc")
    big = sobol_indices(f, n_base=2048, seed=4, n_bootstrap=200, sampler=unit, names=NAMES3,
                        sampling="mc")
    ratio = np.mean(small.ST_err) / np.mean(big.ST_err)
    assert 1.5 <= ratio <= 3.0


def test_seeded_determinism():
    kw = dict(n_base=256, seed=5, sampler=ishigami_sampler, names=NAMES3)
    a, b = sobol_indices(ishigami, **kw), sobol_indices(ishigami, **kw)
    assert a.S.tobytes() == b.S.tobytes() and a.ST_err.tobytes() == b.ST_err.tobytes()


def test_failure_modes():
    with pytest.raises(NumericalError):
        sobol_indices(lambda X: np.ones(len(X)), n_base=128, sampler=unit, names=NAMES3)
    with pytest.raises(NumericalError):
        sobol_indices(lambda X: np.full(len(X), np.nan), n_base=128, sampler=unit, names=NAMES3)
    with pytest.raises(ValueError, match="128"):
        sobol_indices(ishigami, n_base=64, sampler=ishigami_sampler, names=NAMES3)
    with pytest.raises(ValueError):
        sobol_indices(ishigami, n_base=128, sampler=ishigami_sampler)
    with pytest.raises(ValueError):
        saltelli_matrices(unit, 3, 8, 0, sampling="lhs")


def test_saltelli_matrices_are_independent_draws():
    A, B = saltelli_matrices(unit, 2, 1024, 0, sampling="qmc")
    assert A.shape == B.shape == (1024, 2)
    assert abs(np.corrcoef(A[:, 0], B[:, 0])[0, 1]) < 0.1
    assert np.all((A >= 0) & (A < 1))


def test_peak_load_qoi():
    q = PeakLoadQoI(geometry=DCBGeometry(n_elem=100))
    X = np.vstack([REFERENCE_POSTERIOR_MEAN, default_prior().sample(np.random.default_rng(0), 2)])
    y = q(X)
    assert y.shape == (3,) and np.all(y > 0)
    assert y[0] == q.one(REFERENCE_POSTERIOR_MEAN)
    assert "5.08" in q.label
