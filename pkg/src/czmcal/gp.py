"""Kriging model for the calibrated-model discrepancy.

Constant (zeroth-order) trend, anisotropic squared-exponential correlation,
generalized-least-squares trend coefficient and profiled process variance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize

from .errors import NumericalError


@dataclass(frozen=True)
class GPHyperparams:
    lengthscales: tuple[float, ...]
    nugget: float = 1e-10
    process_variance: float | None = None

    def __post_init__(self):
        ls = tuple(float(v) for v in np.atleast_1d(self.lengthscales))
        object.__setattr__(self, "lengthscales", ls)
        if not all(v > 0 for v in ls):
            raise ValueError("lengthscales must be positive")
        if self.nugget < 0:
            raise ValueError("nugget must be non-negative")


def _as_inputs(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return X[:, None] if X.ndim == 1 else X


def correlation(x, x_prime, hyper: GPHyperparams):
    """exp(−½ Σ_k ((x_k − x'_k)/ℓ_k)²), broadcasting over leading axes."""
    ls = np.asarray(hyper.lengthscales)
    d = (np.asarray(x, dtype=float) - np.asarray(x_prime, dtype=float)) / ls
    return np.exp(-0.5 * np.sum(np.atleast_1d(d) ** 2, axis=-1))


def correlation_matrix(A, B, lengthscales) -> np.ndarray:
    A = _as_inputs(A) / np.asarray(lengthscales)
    B = _as_inputs(B) / np.asarray(lengthscales)
    sq = np.sum((A[:, None, :] - B[None, :, :]) ** 2, axis=-1)
    return np.exp(-0.5 * sq)


@dataclass(frozen=True)
class TrainedGP:
    X: np.ndarray
    Y: np.ndarray
    hyper: GPHyperparams
    beta: float
    sigma2: float
    chol: np.ndarray
    alpha: np.ndarray  # R⁻¹ (Y − β)
    ones_Rinv_ones: float  # FᵀR⁻¹F

    @property
    def n(self) -> int:
        return self.Y.size

    def _solve(self, b):
        return linalg.cho_solve((self.chol, True), b)

    def predict(self, x):
        return predict(self, x)


def fit(X, Y, hyper: GPHyperparams) -> TrainedGP:
    X = _as_inputs(X)
    Y = np.asarray(Y, dtype=float).ravel()
    n = Y.size
    if n < 2:
        raise ValueError("need at least two training points")
    if X.shape != (n, len(hyper.lengthscales)):
        raise ValueError(f"inputs have shape {X.shape}, expected ({n}, "
                         f"{len(hyper.lengthscales)})")
    # canonical row order makes the fit exactly invariant to input ordering
    order = np.lexsort(np.column_stack([X, Y]).T[::-1])
    X, Y = X[order], Y[order]
    R = correlation_matrix(X, X, hyper.lengthscales)
    R[np.diag_indices(n)] += hyper.nugget
    try:
        L = linalg.cholesky(R, lower=True)
    except linalg.LinAlgError as exc:
        raise NumericalError(
            "correlation matrix is not positive definite; increase the nugget "
            f"(currently {hyper.nugget:g})") from exc
    ones = np.ones(n)
    Ri1 = linalg.cho_solve((L, True), ones)
    RiY = linalg.cho_solve((L, True), Y)
    s = ones @ Ri1
    beta = (ones @ RiY) / s
    resid = Y - beta
    alpha = RiY - beta * Ri1
    sigma2 = (float(resid @ alpha) / n if hyper.process_variance is None
              else hyper.process_variance)
    return TrainedGP(X, Y, hyper, float(beta), max(sigma2, 0.0), L, alpha, float(s))


def predict(gp: TrainedGP, x):
    """Kriging mean and variance at the rows of ``x``.

    Returns scalars for a single 1-D point and arrays otherwise.
    """
    xa = np.asarray(x, dtype=float)
    d = len(gp.hyper.lengthscales)
    scalar = xa.ndim == 0 or (xa.ndim == 1 and d > 1 and xa.size == d)
    Xs = xa.reshape(-1, d) if xa.ndim <= 1 else xa
    r = correlation_matrix(Xs, gp.X, gp.hyper.lengthscales)  # (m, n)
    mean = gp.beta + r @ gp.alpha
    Rinv_r = gp._solve(r.T)  # (n, m)
    quad = np.einsum("ij,ji->i", r, Rinv_r)
    u = Rinv_r.sum(axis=0) - 1.0
    var = gp.sigma2 * (1.0 - quad + u * u / gp.ones_Rinv_ones)
    var = np.where(var < 0.0, 0.0, var)
    if scalar:
        return float(mean[0]), float(var[0])
    return mean, var


def loo_residuals(X, Y, hyper: GPHyperparams) -> np.ndarray:
    """Leave-one-out residuals with the trend re-estimated in every fold.

    Uses e = QY / diag(Q) with Q = R⁻¹ − R⁻¹F(FᵀR⁻¹F)⁻¹FᵀR⁻¹.
    """
    X = _as_inputs(X)
    Y = np.asarray(Y, dtype=float).ravel()
    n = Y.size
    R = correlation_matrix(X, X, hyper.lengthscales)
    R[np.diag_indices(n)] += hyper.nugget
    L = linalg.cholesky(R, lower=True)
    Rinv = linalg.cho_solve((L, True), np.eye(n))
    Ri1 = Rinv.sum(axis=1)
    Q = Rinv - np.outer(Ri1, Ri1) / Ri1.sum()
    return (Q @ Y) / np.diag(Q)


def loo_error(X, Y, hyper: GPHyperparams) -> float:
    """Mean squared leave-one-out error; ``inf`` if the fold system is singular."""
    try:
        e = loo_residuals(X, Y, hyper)
    except (linalg.LinAlgError, ValueError):
        return np.inf
    err = float(np.mean(e * e))
    return err if np.isfinite(err) else np.inf


@dataclass(frozen=True)
class SearchConfig:
    """Global (differential evolution) then local (Nelder–Mead) search over
    log10 lengthscales, bounded relative to the input range."""

    seed: int = 0
    popsize: int = 15
    maxiter: int = 60
    lower_factor: float = 1e-2
    upper_factor: float = 10.0
    nugget: float = 1e-10


def default_bounds(X, cfg: SearchConfig) -> list[tuple[float, float]]:
    X = _as_inputs(X)
    span = np.ptp(X, axis=0)
    span = np.where(span > 0, span, 1.0)
    return [(np.log10(cfg.lower_factor * s), np.log10(cfg.upper_factor * s)) for s in span]


def optimize_hyperparams(X, Y, cfg: SearchConfig | None = None) -> GPHyperparams:
    cfg = cfg or SearchConfig()
    X = _as_inputs(X)
    Y = np.asarray(Y, dtype=float).ravel()
    if Y.size < 3:
        raise ValueError("need at least three points for leave-one-out search")
    bounds = default_bounds(X, cfg)

    def objective(log_ls):
        return loo_error(X, Y, GPHyperparams(tuple(10.0 ** np.asarray(log_ls)), cfg.nugget))

    glob = optimize.differential_evolution(
        objective, bounds, seed=cfg.seed, popsize=cfg.popsize, maxiter=cfg.maxiter,
        tol=1e-8, polish=False, updating="immediate")
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    local = optimize.minimize(lambda v: objective(np.clip(v, lo, hi)), glob.x,
                              method="Nelder-Mead",
                              options={"xatol": 1e-6, "fatol": 1e-12, "maxiter": 400})
    best = glob.x if glob.fun <= local.fun else np.clip(local.x, lo, hi)
    return GPHyperparams(tuple(10.0 ** best), cfg.nugget)


def fit_optimized(X, Y, cfg: SearchConfig | None = None) -> TrainedGP:
    return fit(X, Y, optimize_hyperparams(X, Y, cfg))
