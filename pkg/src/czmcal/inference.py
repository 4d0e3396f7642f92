"""Modular Bayesian calibration of the interface parameters.

Observed loads are modelled as surrogate output plus i.i.d. Gaussian noise;
the discrepancy term is fitted afterwards (see :mod:`czmcal.gp`).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .czm import InterfaceParams
from .dcb import DCBGeometry, LoadingProgram, simulate_force
from .errors import DataError, NumericalError
from .priors import PARAM_NAMES, Prior, default_prior
from .sampler import PosteriorSamples, aies_run, initial_ensemble

log = logging.getLogger(__name__)

_LOG_2PI = math.log(2.0 * math.pi)

# Interface resolution used inside the sampler; the load error against a
# 4000-element reference stays near 1e-5 relative (see tests/test_dcb.py).
CALIBRATION_N_ELEM = 200


@dataclass
class ObservationSet:
    """Measured (Δ, F) points grouped by opening rate (mm/min)."""

    curves: dict[float, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for rate, (d, f) in self.curves.items():
            d = np.asarray(d, dtype=float)
            f = np.asarray(f, dtype=float)
            if d.shape != f.shape or d.ndim != 1:
                raise DataError(f"rate {rate}: Delta and F must be equal-length vectors")
            if d.size < 2:
                raise DataError(f"rate {rate}: need at least 2 points, got {d.size}")
            order = np.argsort(d, kind="stable")
            d, f = d[order], f[order]
            if np.any(np.diff(d) == 0):
                raise DataError(f"rate {rate}: duplicate Delta values")
            clean[float(rate)] = (d, f)
        self.curves = dict(sorted(clean.items()))

    @property
    def rates(self) -> list[float]:
        return list(self.curves)

    @property
    def n_points(self) -> int:
        return sum(d.size for d, _ in self.curves.values())

    def peak_force(self) -> float:
        return max(float(np.max(f)) for _, f in self.curves.values())

    def subset(self, rates) -> "ObservationSet":
        return ObservationSet({r: self.curves[r] for r in rates})

    def __getitem__(self, rate):
        return self.curves[float(rate)]


@dataclass(frozen=True)
class NoiseModel:
    """Measurement noise: a fixed ``sigma`` (N) or a sampled variance.

    In calibrated mode the variance carries a uniform prior on
    ``[0, (peak_fraction * peak observed load)**2]``.
    """

    sigma: float | None = None
    peak_fraction: float = 0.1

    @property
    def calibrated(self) -> bool:
        return self.sigma is None


def gaussian_loglik(residuals: np.ndarray, variance: float) -> float:
    """Σ log N(r | 0, σ²) for scalar outputs."""
    if not variance > 0:
        return -math.inf
    r = np.asarray(residuals, dtype=float)
    return float(-0.5 * r.size * (_LOG_2PI + math.log(variance))
                 - 0.5 * np.dot(r, r) / variance)


def model_loads(theta, data: ObservationSet, geometry: DCBGeometry | None = None,
                n_steps: int = 400, **param_kwargs) -> dict[float, np.ndarray]:
    """Surrogate loads at every observed opening, per rate."""
    geometry = geometry or DCBGeometry()
    params = InterfaceParams.from_vector(theta, **param_kwargs)
    out = {}
    for rate, (d, _) in data.curves.items():
        loading = LoadingProgram(rate, float(d[-1]), n_steps)
        out[rate] = np.interp(d, loading.openings(), simulate_force(params, geometry, loading))
    return out


def log_likelihood(theta, data: ObservationSet, noise_var: float,
                   geometry: DCBGeometry | None = None, n_steps: int = 400,
                   **param_kwargs) -> float:
    """Gaussian log-likelihood of the observations; ``-inf`` if the forward
    model cannot be evaluated at ``theta``."""
    try:
        pred = model_loads(theta, data, geometry, n_steps, **param_kwargs)
    except ValueError as exc:
        log.debug("parameters rejected: %s", exc)
        return -math.inf
    except NumericalError as exc:
        log.warning("forward model failed at theta=%s: %s", list(theta), exc)
        return -math.inf
    resid = np.concatenate([data.curves[r][1] - pred[r] for r in data.rates])
    return gaussian_loglik(resid, noise_var)


@dataclass
class CalibrationProblem:
    """Posterior over the eight parameters (plus the noise variance when
    calibrated)."""

    data: ObservationSet
    prior: Prior = field(default_factory=default_prior)
    noise: NoiseModel = field(default_factory=NoiseModel)
    geometry: DCBGeometry = field(
        default_factory=lambda: DCBGeometry(n_elem=CALIBRATION_N_ELEM))
    n_steps: int = 400
    theta_ref: float = 298.0

    def __post_init__(self):
        if self.data.n_points == 0:
            raise DataError("no observations")
        self._var_max = (self.noise.peak_fraction * self.data.peak_force()) ** 2

    @property
    def names(self) -> tuple[str, ...]:
        base = tuple(self.prior.names)
        return base + ("sigma2",) if self.noise.calibrated else base

    @property
    def dim(self) -> int:
        return len(self.names)

    @property
    def noise_var_max(self) -> float:
        return self._var_max

    def split(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.noise.calibrated:
            return theta[:-1], float(theta[-1])
        return theta, self.noise.sigma ** 2

    def log_prior(self, theta) -> float:
        params, var = self.split(theta)
        lp = self.prior.log_prob(params)
        if self.noise.calibrated:
            if not 0.0 < var <= self._var_max:
                return -math.inf
            lp -= math.log(self._var_max)
        return lp

    def log_likelihood(self, theta) -> float:
        params, var = self.split(theta)
        return log_likelihood(params, self.data, var, self.geometry, self.n_steps,
                              theta_ref=self.theta_ref)

    def __call__(self, theta) -> float:
        lp = self.log_prior(theta)
        if lp == -math.inf:
            return lp
        return lp + self.log_likelihood(theta)

    log_posterior = __call__

    def sample_prior(self, rng: np.random.Generator, n: int) -> np.ndarray:
        draws = self.prior.sample(rng, n)
        if self.noise.calibrated:
            var = rng.uniform(0.0, self._var_max, n)
            draws = np.column_stack([draws, var])
        return draws

    def for_rate(self, rate) -> "CalibrationProblem":
        return CalibrationProblem(self.data.subset([float(rate)]), self.prior, self.noise,
                                  self.geometry, self.n_steps, self.theta_ref)


def calibrate(problem: CalibrationProblem, n_walkers: int = 100, n_steps: int = 3000,
              seed: int = 0, *, a: float = 2.0, burn_in: float = 0.5,
              map_fn=None) -> PosteriorSamples:
    """Sample the posterior with the ensemble sampler started from prior draws."""
    ss = np.random.SeedSequence(seed)
    init_seed, run_seed = (int(s.generate_state(1)[0]) for s in ss.spawn(2))
    p0 = initial_ensemble(problem.sample_prior, problem, n_walkers, init_seed)
    return aies_run(problem, p0, n_steps, run_seed, a=a, burn_in=burn_in,
                    names=problem.names, map_fn=map_fn)


__all__ = ["ObservationSet", "NoiseModel", "CalibrationProblem", "log_likelihood",
           "model_loads", "gaussian_loglik", "calibrate", "PARAM_NAMES"]
