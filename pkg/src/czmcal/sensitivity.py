"""Variance-based global sensitivity (first-order and total Sobol indices)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import qmc

from .czm import InterfaceParams
from .dcb import DCBGeometry, LoadingProgram, simulate_force
from .errors import NumericalError
from .priors import Prior, default_prior


@dataclass(frozen=True)
class SobolResult:
    names: tuple[str, ...]
    S: np.ndarray
    S_err: np.ndarray
    ST: np.ndarray
    ST_err: np.ndarray
    n_base: int
    qoi: str = ""
    variance: float = float("nan")

    def table(self) -> tuple[list[str], list[tuple]]:
        rows = [(n, float(s), float(se), float(t), float(te)) for n, s, se, t, te
                in zip(self.names, self.S, self.S_err, self.ST, self.ST_err)]
        return ["name", "S_i", "S_i_err", "S_Ti", "S_Ti_err"], rows


def saltelli_matrices(sampler: Callable[[np.ndarray], np.ndarray], dim: int, n_base: int,
                      seed: int, sampling: str = "mc") -> tuple[np.ndarray, np.ndarray]:
    """Two independent ``n_base × dim`` input matrices.

    ``sampler`` maps uniforms in [0, 1)^dim to inputs (an inverse CDF).
    ``sampling="qmc"`` uses a scrambled Sobol' sequence of dimension 2·dim.
    """
    if sampling == "mc":
        u = np.random.default_rng(seed).random((n_base, 2 * dim))
    elif sampling == "qmc":
        u = qmc.Sobol(2 * dim, scramble=True, rng=np.random.default_rng(seed)).random(n_base)
    else:
        raise ValueError(f"unknown sampling scheme {sampling!r}")
    return sampler(u[:, :dim]), sampler(u[:, dim:])


def _jansen(fA, fB, fAB):
    var = np.var(np.concatenate([fA, fB]), ddof=1)
    if not var > 0:
        raise NumericalError("output variance estimate is not positive")
    first = (var - 0.5 * np.mean((fB[:, None] - fAB) ** 2, axis=0)) / var
    total = 0.5 * np.mean((fA[:, None] - fAB) ** 2, axis=0) / var
    return first, total, var


def sobol_indices(model: Callable[[np.ndarray], np.ndarray], prior: Prior | None = None,
                  n_base: int = 1024, seed: int = 0, n_bootstrap: int = 100, *,
                  sampling: str = "qmc", qoi: str = "", sampler=None, names=None,
                  min_base: int = 128) -> SobolResult:
    """Jansen estimates of S_i and S_Ti on a Saltelli A/B/A_B design.

    Parameters
    ----------
    model : callable
        Vectorized QoI, ``(n, d) -> (n,)``.
    prior : Prior, optional
        Input distributions (default: the interface-parameter priors).
    sampler : callable, optional
        Inverse CDF ``u -> x`` overriding ``prior.ppf``; used for test functions.
    sampling : {"mc", "qmc"}
        Plain Monte Carlo or scrambled Sobol' points for A and B.
    """
    if n_base < min_base:
        raise ValueError(f"n_base must be at least {min_base}")
    if sampler is None:
        prior = prior or default_prior()
        sampler, dim, names = prior.ppf, prior.dim, prior.names
    else:
        if names is None:
            raise ValueError("names are required with a custom sampler")
        dim = len(names)
    ss = np.random.SeedSequence(seed)
    design_seed, boot_seed = ss.spawn(2)
    A, B = saltelli_matrices(sampler, dim, n_base, design_seed, sampling)
    AB = np.repeat(A[None], dim, axis=0)
    for i in range(dim):
        AB[i, :, i] = B[:, i]
    f = np.asarray(model(np.vstack([A, B, AB.reshape(-1, dim)])), dtype=float)
    if not np.all(np.isfinite(f)):
        raise NumericalError(f"{np.count_nonzero(~np.isfinite(f))} model outputs are not finite")
    fA, fB = f[:n_base], f[n_base:2 * n_base]
    fAB = f[2 * n_base:].reshape(dim, n_base).T
    S, ST, var = _jansen(fA, fB, fAB)

    rng = np.random.default_rng(boot_seed)
    boots_S = np.empty((n_bootstrap, dim))
    boots_T = np.empty((n_bootstrap, dim))
    for b in range(n_bootstrap):
        idx = rng.integers(0, n_base, n_base)
        boots_S[b], boots_T[b], _ = _jansen(fA[idx], fB[idx], fAB[idx])
    ddof = 1 if n_bootstrap > 1 else 0
    return SobolResult(tuple(names), S, boots_S.std(axis=0, ddof=ddof), ST,
                       boots_T.std(axis=0, ddof=ddof), n_base, qoi, float(var))


def rank_parameters(result: SobolResult) -> list[str]:
    """Names by descending total index, ties by first-order index, then input order."""
    order = sorted(range(len(result.names)),
                   key=lambda i: (-result.ST[i], -result.S[i]))
    return [result.names[i] for i in order]


@dataclass(frozen=True)
class PeakLoadQoI:
    """Peak DCB load at one opening rate as a vectorized function of θ."""

    rate: float = 5.08
    geometry: DCBGeometry = DCBGeometry()
    delta_max: float = 20.0
    n_steps: int = 400
    theta_ref: float = 298.0
    map_fn: Callable | None = None

    def one(self, theta) -> float:
        params = InterfaceParams.from_vector(theta, theta_ref=self.theta_ref)
        loading = LoadingProgram(self.rate, self.delta_max, self.n_steps)
        return float(np.max(simulate_force(params, self.geometry, loading)))

    def __call__(self, X) -> np.ndarray:
        mapper = self.map_fn or map
        return np.fromiter(mapper(self.one, np.atleast_2d(X)), dtype=float)

    @property
    def label(self) -> str:
        return f"peak load at {self.rate:g} mm/min"


ISHIGAMI_A = 7.0
ISHIGAMI_B = 0.1


def ishigami(X, a: float = ISHIGAMI_A, b: float = ISHIGAMI_B) -> np.ndarray:
    X = np.atleast_2d(X)
    x1, x2, x3 = X[:, 0], X[:, 1], X[:, 2]
    return np.sin(x1) + a * np.sin(x2) ** 2 + b * x3 ** 4 * np.sin(x1)


def ishigami_sampler(u) -> np.ndarray:
    return -math.pi + 2.0 * math.pi * np.asarray(u)
