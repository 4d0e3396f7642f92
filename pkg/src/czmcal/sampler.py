"""Affine-invariant ensemble sampler (stretch move) and chain diagnostics."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

log = logging.getLogger(__name__)


class SamplerWarning(RuntimeWarning):
    pass


@dataclass
class PosteriorSamples:
    """Full ensemble history.

    ``chain`` has shape ``(n_steps, n_walkers, dim)``; ``log_prob`` holds the
    log-posterior of every recorded state. The first ``burn_in`` fraction of
    steps is dropped by :meth:`flat`.
    """

    chain: np.ndarray
    log_prob: np.ndarray
    accepted: np.ndarray
    names: tuple[str, ...]
    burn_in: float = 0.5
    audit: dict | None = field(default=None, repr=False)

    @property
    def n_steps(self) -> int:
        return self.chain.shape[0]

    @property
    def n_walkers(self) -> int:
        return self.chain.shape[1]

    @property
    def dim(self) -> int:
        return self.chain.shape[2]

    @property
    def n_burn(self) -> int:
        return int(math.floor(self.burn_in * self.n_steps))

    @property
    def acceptance_fraction(self) -> np.ndarray:
        return self.accepted / max(self.n_steps, 1)

    def kept(self) -> np.ndarray:
        return self.chain[self.n_burn:]

    def flat(self, discard: bool = True) -> np.ndarray:
        c = self.kept() if discard else self.chain
        return c.reshape(-1, self.dim)

    def flat_log_prob(self, discard: bool = True) -> np.ndarray:
        lp = self.log_prob[self.n_burn:] if discard else self.log_prob
        return lp.reshape(-1)


def stretch_variate(u: float, a: float) -> float:
    """Inverse-CDF draw from g(z) ∝ 1/√z on [1/a, a]."""
    return ((a - 1.0) * u + 1.0) ** 2 / a


def aies_run(log_prob: Callable[[np.ndarray], float], initial, n_steps: int, seed: int, *,
             a: float = 2.0, burn_in: float = 0.5, names: Sequence[str] | None = None,
             audit: bool = False, reject_window: int = 100,
             map_fn: Callable | None = None) -> PosteriorSamples:
    """Run the Goodman–Weare stretch-move ensemble.

    Walkers are split in two halves that are updated in turn, each walker
    against a random member of the other half. Every walker owns an RNG stream
    spawned from ``seed``, so the result does not depend on the order in which
    ``map_fn`` evaluates the proposals.

    Parameters
    ----------
    log_prob : callable
        Log target density of one position; ``-inf`` outside the support.
    initial : array, shape (n_walkers, dim)
        Starting positions, all with finite ``log_prob``.
    map_fn : callable, optional
        ``map``-like function used to evaluate a half-ensemble of proposals,
        e.g. ``ThreadPoolExecutor.map``.
    """
    x = np.array(initial, dtype=float)
    if x.ndim != 2:
        raise ValueError("initial walkers must be a 2-D array")
    n_walkers, dim = x.shape
    if n_walkers % 2:
        raise ValueError("the number of walkers must be even")
    if n_walkers < 2 * dim:
        raise ValueError(f"need at least {2 * dim} walkers for {dim} dimensions")
    if not a > 1.0:
        raise ValueError("stretch parameter a must exceed 1")
    mapper = map_fn or map
    streams = [np.random.default_rng(s)
               for s in np.random.SeedSequence(seed).spawn(n_walkers)]
    lp = np.array(list(mapper(log_prob, x)), dtype=float)
    if not np.all(np.isfinite(lp)):
        bad = np.flatnonzero(~np.isfinite(lp)).tolist()
        raise ValueError(f"initial walkers {bad} have non-finite log-probability")

    chain = np.empty((n_steps, n_walkers, dim))
    lp_hist = np.empty((n_steps, n_walkers))
    accepted = np.zeros(n_walkers, dtype=np.int64)
    step_acc = np.zeros(n_steps)
    records = [] if audit else None
    half = n_walkers // 2
    groups = (np.arange(half), np.arange(half, n_walkers))
    warned_at = -reject_window

    for t in range(n_steps):
        n_acc = 0
        for g in (0, 1):
            active, other = groups[g], groups[1 - g]
            z = np.empty(half)
            u = np.empty(half)
            prop = np.empty((half, dim))
            for k, j in enumerate(active):
                rng = streams[j]
                c = other[rng.integers(half)]
                z[k] = stretch_variate(rng.random(), a)
                u[k] = rng.random()
                prop[k] = x[c] + z[k] * (x[j] - x[c])
            lp_new = np.array(list(mapper(log_prob, prop)), dtype=float)
            log_ratio = (dim - 1) * np.log(z) + lp_new - lp[active]
            accept = np.log(u) < log_ratio
            for k, j in enumerate(active):
                if records is not None:
                    records.append((t, j, z[k], lp[j], lp_new[k], log_ratio[k], u[k],
                                    bool(accept[k])))
                if accept[k]:
                    x[j] = prop[k]
                    lp[j] = lp_new[k]
                    accepted[j] += 1
            n_acc += int(accept.sum())
        chain[t] = x
        lp_hist[t] = lp
        step_acc[t] = n_acc / n_walkers
        if t + 1 >= reject_window and t - warned_at >= reject_window:
            rate = step_acc[t + 1 - reject_window:t + 1].mean()
            if rate < 0.01:
                warned_at = t
                msg = (f"acceptance {rate:.2%} over steps {t + 1 - reject_window}-{t}; "
                       "the target may be pathological")
                log.warning(msg)
                warnings.warn(msg, SamplerWarning, stacklevel=2)

    audit_table = None
    if records is not None:
        cols = list(zip(*records)) if records else [[]] * 8
        keys = ("step", "walker", "z", "log_prob_old", "log_prob_new", "log_ratio",
                "u", "accepted")
        audit_table = {k: np.array(v) for k, v in zip(keys, cols)}
    if names is None:
        names = tuple(f"x{i}" for i in range(dim))
    return PosteriorSamples(chain, lp_hist, accepted, tuple(names), burn_in, audit_table)


def initial_ensemble(sample: Callable[[np.random.Generator, int], np.ndarray],
                     log_prob: Callable, n_walkers: int, seed: int,
                     max_tries: int = 100) -> np.ndarray:
    """Draw walkers with ``sample`` until every one has finite ``log_prob``."""
    rng = np.random.default_rng(seed)
    walkers = []
    for _ in range(max_tries):
        for row in sample(rng, n_walkers):
            if math.isfinite(log_prob(row)):
                walkers.append(row)
                if len(walkers) == n_walkers:
                    return np.array(walkers)
    raise RuntimeError(f"only {len(walkers)} of {n_walkers} initial draws had finite "
                       "log-probability")


@dataclass(frozen=True)
class Summary:
    names: tuple[str, ...]
    mean: np.ndarray
    std: np.ndarray

    def as_dict(self) -> dict[str, tuple[float, float]]:
        return {n: (float(m), float(s)) for n, m, s in zip(self.names, self.mean, self.std)}


def posterior_summary(samples: PosteriorSamples) -> Summary:
    flat = samples.flat()
    if flat.shape[0] == 0:
        raise ValueError("no samples left after burn-in")
    std = flat.std(axis=0, ddof=1) if flat.shape[0] > 1 else np.zeros(flat.shape[1])
    return Summary(samples.names, flat.mean(axis=0), std)


def running_mean(samples: PosteriorSamples) -> np.ndarray:
    """Cumulative mean over steps of the ensemble average, shape (n_steps, dim)."""
    per_step = samples.chain.mean(axis=1)
    return np.cumsum(per_step, axis=0) / np.arange(1, samples.n_steps + 1)[:, None]


def diagnostics_export(samples: PosteriorSamples, bins: int = 50) -> dict:
    """Trace, running-mean and density tables ready for plotting.

    Returns a dict of ``(columns, rows)`` pairs keyed ``"trace"``,
    ``"running_mean"`` and ``"density"``. Densities use the post-burn-in
    samples.
    """
    n_steps, n_walkers, dim = samples.chain.shape
    steps = np.repeat(np.arange(n_steps), n_walkers)
    walkers = np.tile(np.arange(n_walkers), n_steps)
    trace = np.column_stack([steps, walkers, samples.chain.reshape(-1, dim)])
    rm = np.column_stack([np.arange(n_steps), running_mean(samples)])

    flat = samples.flat()
    dens_rows = []
    for j in range(dim):
        hist, edges = np.histogram(flat[:, j], bins=bins, density=True)
        for b in range(bins):
            dens_rows.append((j, edges[b], edges[b + 1], hist[b]))
    density = np.array(dens_rows, dtype=float).reshape(-1, 4)
    names = list(samples.names)
    return {
        "trace": (["step", "walker", *names], trace),
        "running_mean": (["step", *names], rm),
        "density": (["param_index", "bin_lo", "bin_hi", "density"], density),
    }
