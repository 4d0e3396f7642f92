"""Per-rate discrepancy between observations and the calibrated surrogate."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dcb import CurveModel, DCBGeometry
from .gp import SearchConfig, TrainedGP, fit_optimized, predict
from .inference import ObservationSet
from .uq import percentage_error


def training_indices(n_points: int, n_train: int) -> np.ndarray:
    """``n_train`` uniformly spaced indices into ``n_points`` sorted openings."""
    if n_train < 2:
        raise ValueError("need at least two training points")
    if n_train > n_points:
        raise ValueError(f"n_train={n_train} exceeds the {n_points} observed points")
    return np.unique(np.round(np.linspace(0, n_points - 1, n_train)).astype(int))


@dataclass
class RateDiscrepancy:
    rate: float
    model: CurveModel
    gp: TrainedGP
    train_idx: np.ndarray
    test_idx: np.ndarray

    def predict(self, delta):
        return predict(self.gp, np.asarray(delta, dtype=float))


@dataclass
class DiscrepancyResult:
    theta_star: np.ndarray
    rates: dict[float, RateDiscrepancy] = field(default_factory=dict)

    def __getitem__(self, rate) -> RateDiscrepancy:
        return self.rates[float(rate)]


def discrepancy_pipeline(theta_star, observations: ObservationSet, n_train: int = 20,
                         geometry: DCBGeometry | None = None, n_steps: int = 400,
                         search: SearchConfig | None = None,
                         theta_ref: float = 298.0) -> DiscrepancyResult:
    """Fit one GP per rate to ``observed − model(θ*)`` at ``n_train`` uniformly
    spaced openings; the remaining points are kept as the held-out set."""
    geometry = geometry or DCBGeometry()
    theta_star = np.asarray(theta_star, dtype=float)
    out = DiscrepancyResult(theta_star)
    for rate, (d, f) in observations.curves.items():
        model = CurveModel(rate, d, geometry, n_steps, theta_ref, float(d[-1]))
        resid = f - model(theta_star)
        tr = training_indices(d.size, n_train)
        te = np.setdiff1d(np.arange(d.size), tr)
        gp = fit_optimized(d[tr], resid[tr], search)
        out.rates[rate] = RateDiscrepancy(rate, model, gp, tr, te)
    return out


def held_out_errors(result: DiscrepancyResult, observations: ObservationSet
                    ) -> dict[float, tuple[float, float]]:
    """Percentage error on held-out points, (without, with) discrepancy."""
    errs = {}
    for rate, rd in result.rates.items():
        d, f = observations[rate]
        if rd.test_idx.size == 0:
            raise ValueError(f"rate {rate}: no held-out points")
        y = rd.model(result.theta_star)[rd.test_idx]
        mu, _ = rd.predict(d[rd.test_idx])
        fe = f[rd.test_idx]
        errs[rate] = (percentage_error(fe, y), percentage_error(fe, y + mu))
    return errs


def training_size_study(theta_star, observations: ObservationSet, test_idx: dict,
                        sizes=(5, 10, 15, 20, 25), **kwargs) -> dict[int, dict[float, float]]:
    """Held-out error with discrepancy for several training-set sizes.

    Training points are drawn uniformly from the openings not in ``test_idx``
    (per-rate index arrays), so every size is scored on the same points.
    """
    out = {}
    for n in sizes:
        pool = {}
        for rate, (d, f) in observations.curves.items():
            keep = np.setdiff1d(np.arange(d.size), test_idx[rate])
            pool[rate] = keep[training_indices(keep.size, n)]
        errs = {}
        res = _fit_on(theta_star, observations, pool, **kwargs)
        for rate, (d, f) in observations.curves.items():
            te = np.asarray(test_idx[rate])
            y = res[rate][0][te]
            mu, _ = predict(res[rate][1], d[te])
            errs[rate] = percentage_error(f[te], y + mu)
        out[n] = errs
    return out


def _fit_on(theta_star, observations, train, geometry=None, n_steps=400, search=None,
            theta_ref=298.0):
    geometry = geometry or DCBGeometry()
    res = {}
    for rate, (d, f) in observations.curves.items():
        y = CurveModel(rate, d, geometry, n_steps, theta_ref, float(d[-1]))(theta_star)
        tr = train[rate]
        res[rate] = (y, fit_optimized(d[tr], (f - y)[tr], search))
    return res
