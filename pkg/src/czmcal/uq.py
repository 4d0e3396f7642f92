"""Forward propagation of parameter uncertainty and predictive bands."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import stats

from .errors import NumericalError
from .gp import TrainedGP, predict
from .sampler import PosteriorSamples

log = logging.getLogger(__name__)

DEFAULT_ALPHAS = (0.05, 0.003)


def percentage_error(y_exp, y_pred) -> float:
    """100 ‖y_exp − y_pred‖₂ / ‖y_exp‖₂."""
    y_exp = np.asarray(y_exp, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if y_exp.shape != y_pred.shape:
        raise ValueError("y_exp and y_pred differ in shape")
    norm = np.linalg.norm(y_exp)
    if norm == 0:
        raise ValueError("experimental vector has zero norm")
    return float(100.0 * np.linalg.norm(y_exp - y_pred) / norm)


def confidence_interval(mean, variance, alpha: float):
    """Two-sided ``1 − alpha`` Gaussian interval ``mean ± Φ⁻¹(1 − α/2) σ``."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    variance = np.asarray(variance, dtype=float)
    if np.any(variance < 0):
        raise ValueError("variance must be non-negative")
    half = stats.norm.ppf(1.0 - alpha / 2.0) * np.sqrt(variance)
    mean = np.asarray(mean, dtype=float)
    return mean - half, mean + half


@dataclass
class Propagation:
    """Loads of the posterior draws on the grid and their pointwise variance."""

    grid: np.ndarray
    predictions: np.ndarray  # (n_ok, n_grid)
    thetas: np.ndarray
    n_skipped: int

    @property
    def variance(self) -> np.ndarray:
        # shifted by the first draw so that identical draws give exactly zero
        d = self.predictions - self.predictions[:1]
        n = d.shape[0]
        return (np.sum(d * d, axis=0) - np.sum(d, axis=0) ** 2 / n) / (n - 1)

    @property
    def mean(self) -> np.ndarray:
        return self.predictions.mean(axis=0)


def draw_posterior(posterior, n_samples: int, seed: int) -> np.ndarray:
    flat = posterior.flat() if isinstance(posterior, PosteriorSamples) else np.asarray(posterior)
    if flat.shape[0] == 0:
        raise ValueError("empty posterior")
    rng = np.random.default_rng(seed)
    idx = rng.choice(flat.shape[0], n_samples, replace=flat.shape[0] < n_samples)
    return flat[idx]


def propagate(posterior, forward: Callable, grid, n_samples: int = 1000, seed: int = 0,
              *, n_params: int = 8, max_skip: float = 0.05, map_fn=None) -> Propagation:
    """Run ``forward`` on ``n_samples`` posterior draws.

    ``forward(theta)`` returns loads on ``grid``; only the first ``n_params``
    columns of each draw are passed (the noise variance is dropped). Draws
    whose forward run fails are skipped; more than ``max_skip`` of them is an
    error.
    """
    thetas = draw_posterior(posterior, n_samples, seed)[:, :n_params]
    mapper = map_fn or map

    def run(theta):
        try:
            y = np.asarray(forward(theta), dtype=float)
        except (NumericalError, ValueError) as exc:
            log.warning("skipping posterior draw %s: %s", list(theta), exc)
            return None
        return y if np.all(np.isfinite(y)) else None

    results = list(mapper(run, thetas))
    ok = [i for i, y in enumerate(results) if y is not None]
    skipped = len(results) - len(ok)
    if skipped > max_skip * len(results):
        raise NumericalError(f"{skipped} of {len(results)} forward runs failed")
    preds = np.array([results[i] for i in ok]).reshape(len(ok), -1)
    return Propagation(np.asarray(grid, dtype=float), preds, thetas[ok], skipped)


def compose_prediction(theta_star, gp: TrainedGP | None, grid, forward: Callable):
    """Model output at ``theta_star`` corrected by the discrepancy mean."""
    y = np.asarray(forward(theta_star), dtype=float)
    if gp is None:
        return y
    mu, _ = predict(gp, np.asarray(grid, dtype=float))
    return y + mu


@dataclass
class PredictiveBand:
    delta: np.ndarray
    mean: np.ndarray
    var_c: np.ndarray
    var_delta: np.ndarray
    bounds: dict[float, tuple[np.ndarray, np.ndarray]]

    @property
    def total(self) -> np.ndarray:
        return self.var_c + self.var_delta

    def contains(self, delta, y, alpha: float) -> np.ndarray:
        lo, hi = self.bounds[alpha]
        return (y >= np.interp(delta, self.delta, lo)) & (y <= np.interp(delta, self.delta, hi))

    def table(self) -> tuple[list[str], np.ndarray]:
        cols = ["Delta_mm", "mean_N", "var_c", "var_delta", "var_total"]
        data = [self.delta, self.mean, self.var_c, self.var_delta, self.total]
        for alpha, (lo, hi) in self.bounds.items():
            tag = _alpha_tag(alpha)
            cols += [f"lo_{tag}", f"hi_{tag}"]
            data += [lo, hi]
        return cols, np.column_stack(data)


def _alpha_tag(alpha: float) -> str:
    # 0.05 -> "95", 0.003 -> "997"
    level = f"{100.0 * (1.0 - alpha):.10g}"
    return level.replace(".", "")


def predictive_band(theta_star, gp: TrainedGP | None, grid, forward: Callable,
                    var_c, alphas=DEFAULT_ALPHAS) -> PredictiveBand:
    grid = np.asarray(grid, dtype=float)
    mean = compose_prediction(theta_star, gp, grid, forward)
    var_d = predict(gp, grid)[1] if gp is not None else np.zeros_like(grid)
    var_c = np.asarray(var_c, dtype=float)
    total = var_c + var_d
    bounds = {a: confidence_interval(mean, total, a) for a in alphas}
    return PredictiveBand(grid, mean, var_c, var_d, bounds)


def posterior_predictive_tables(prop: Propagation, quantiles=(0.05, 0.25, 0.5, 0.75, 0.95),
                                bins: int = 30):
    """Per-opening quantiles and binned densities of the propagated loads
    (the data behind violin plots)."""
    q = np.quantile(prop.predictions, quantiles, axis=0).T
    qcols = ["Delta_mm"] + [f"q{100 * p:g}" for p in quantiles]
    qtab = np.column_stack([prop.grid, q])
    rows = []
    for j, d in enumerate(prop.grid):
        hist, edges = np.histogram(prop.predictions[:, j], bins=bins, density=True)
        rows += [(d, edges[b], edges[b + 1], hist[b]) for b in range(bins)]
    dtab = np.array(rows, dtype=float).reshape(-1, 4)
    return (qcols, qtab), (["Delta_mm", "F_lo", "F_hi", "density"], dtab)
