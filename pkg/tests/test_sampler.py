import math
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from scipy import stats

from czmcal.sampler import (PosteriorSamples, SamplerWarning, aies_run, diagnostics_export,
                            initial_ensemble, posterior_summary, running_mean,
                            stretch_variate)


def gauss(x):
    return -0.5 * float(np.dot(x, x))


def start(n, d, seed=0):
    return np.random.default_rng(seed).normal(size=(n, d))


def test_stretch_variate_distribution():
    a = 2.0
    z = stretch_variate(np.random.default_rng(1).random(50_000), a)
    assert z.min() >= 1 / a and z.max() <= a
    lo, hi = 1 / math.sqrt(a), math.sqrt(a)
    cdf = lambda v: (np.sqrt(v) - lo) / (hi - lo)
    assert stats.kstest(z, cdf).pvalue > 1e-3
    assert stretch_variate(0.0, a) == pytest.approx(1 / a)
    assert stretch_variate(1.0, a) == pytest.approx(a)


@pytest.mark.parametrize("n,kw,msg", [
    (5, {}, "even"),
    (2, {}, "at least"),
    (8, {"a": 1.0}, "exceed"),
])
def test_rejects_bad_configuration(n, kw, msg):
    with pytest.raises(ValueError, match=msg):
        aies_run(gauss, start(n, 2), 5, 0, **kw)


def test_rejects_non_finite_start():
    x0 = start(8, 2)
    lp = lambda x: -math.inf if x[0] > 0 else gauss(x)
    with pytest.raises(ValueError, match="non-finite"):
        aies_run(lp, x0, 5, 0)


def test_audit_log_is_consistent():
    res = aies_run(gauss, start(10, 3), 30, 4, audit=True)
    a = res.audit
    assert a["z"].size == 300
    np.testing.assert_allclose(
        a["log_ratio"], 2 * np.log(a["z"]) + a["log_prob_new"] - a["log_prob_old"])
    np.testing.assert_array_equal(a["accepted"], np.log(a["u"]) < a["log_ratio"])
    assert a["accepted"].sum() == res.accepted.sum()
    assert np.all((a["z"] >= 0.5) & (a["z"] <= 2.0))


def test_seeded_and_map_independent():
    x0 = start(12, 2)
    a = aies_run(gauss, x0, 40, 7)
    b = aies_run(gauss, x0, 40, 7)
    with ThreadPoolExecutor(3) as ex:
        c = aies_run(gauss, x0, 40, 7, map_fn=ex.map)
    assert a.chain.tobytes() == b.chain.tobytes() == c.chain.tobytes()
    d = aies_run(gauss, x0, 40, 8)
    assert not np.array_equal(a.chain, d.chain)


def test_affine_equivariance():
    rng = np.random.default_rng(3)
    A = np.array([[2.0, 0.3], [-0.4, 0.5]])
    b = np.array([10.0, -3.0])
    Ainv = np.linalg.inv(A)
    mean = np.array([0.5, -1.0])
    target = lambda x: -0.5 * float(np.sum((x - mean) ** 2)) - 0.1 * float(x[0] ** 4)
    mapped = lambda y: target(Ainv @ (y - b))
    x0 = rng.normal(size=(16, 2))
    rx = aies_run(target, x0, 200, 11)
    ry = aies_run(mapped, x0 @ A.T + b, 200, 11)
    np.testing.assert_array_equal(rx.accepted, ry.accepted)
    np.testing.assert_allclose(ry.chain, rx.chain @ A.T + b, rtol=1e-9, atol=1e-9)


def test_low_acceptance_warning():
    x0 = start(8, 2)
    pts = {tuple(r) for r in x0}
    lp = lambda x: 0.0 if tuple(x) in pts else -math.inf
    with pytest.warns(SamplerWarning):
        res = aies_run(lp, x0, 120, 0, reject_window=100)
    assert res.accepted.sum() == 0


def test_no_warning_on_healthy_run():
    with warnings.catch_warnings():
        warnings.simplefilter("error", SamplerWarning)
        aies_run(gauss, start(10, 2), 150, 0)


def test_burn_in_and_flattening():
    res = aies_run(gauss, start(10, 2), 21, 0, burn_in=0.5, names=("a", "b"))
    assert res.n_burn == 10
    assert res.flat().shape == (110, 2)
    assert res.flat(discard=False).shape == (210, 2)
    assert res.flat_log_prob().shape == (110,)
    np.testing.assert_allclose(res.flat_log_prob(), [gauss(r) for r in res.flat()])
    assert np.all((res.acceptance_fraction >= 0) & (res.acceptance_fraction <= 1))


def test_summary_and_diagnostics():
    chain = np.arange(24, dtype=float).reshape(4, 3, 2)
    s = PosteriorSamples(chain, np.zeros((4, 3)), np.zeros(3), ("p", "q"), burn_in=0.5)
    summ = posterior_summary(s)
    kept = chain[2:].reshape(-1, 2)
    np.testing.assert_allclose(summ.mean, kept.mean(0))
    np.testing.assert_allclose(summ.std, kept.std(0, ddof=1))
    assert summ.as_dict()["p"] == (kept[:, 0].mean(), kept[:, 0].std(ddof=1))
    rm = running_mean(s)
    np.testing.assert_allclose(rm[-1], chain.mean(axis=(0, 1)))
    diag = diagnostics_export(s, bins=5)
    cols, trace = diag["trace"]
    assert cols == ["step", "walker", "p", "q"] and trace.shape == (12, 4)
    assert diag["running_mean"][1].shape == (4, 3)
    dens = diag["density"][1]
    assert dens.shape == (10, 4)
    widths = dens[:, 2] - dens[:, 1]
    for j in range(2):
        assert np.sum(dens[dens[:, 0] == j, 3] * widths[dens[:, 0] == j]) == pytest.approx(1.0)


def test_initial_ensemble_filters_support():
    lp = lambda x: 0.0 if x[0] > 0 else -math.inf
    sample = lambda rng, n: rng.normal(size=(n, 2))
    w = initial_ensemble(sample, lp, 20, 0)
    assert w.shape == (20, 2) and np.all(w[:, 0] > 0)
    with pytest.raises(RuntimeError):
        initial_ensemble(sample, lambda x: -math.inf, 4, 0, max_tries=3)
