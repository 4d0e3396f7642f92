"""
Model discrepancy and predictive bands
======================================

Adds a known smooth discrepancy to synthetic data, calibrates, learns one
Gaussian-process discrepancy per rate from 20 training openings and checks
the composed prediction and its 95% band on the remaining openings.

Run with ``python notebooks/03_discrepancy_uq.py`` (about two minutes).
"""

# %%
import numpy as np

from czmcal.dcb import CurveModel, DCBGeometry
from czmcal.discrepancy import discrepancy_pipeline, held_out_errors, training_size_study
from czmcal.inference import CalibrationProblem, calibrate
from czmcal.io import generate_synthetic
from czmcal.priors import REFERENCE_POSTERIOR_MEAN
from czmcal.sampler import posterior_summary
from czmcal.uq import predictive_band, propagate

clean, _ = generate_synthetic(REFERENCE_POSTERIOR_MEAN, 0.0, n_points=60)
peak = clean.peak_force()
disc = {"kind": "sine", "amplitude": 0.1 * peak, "wavelength": 7.0, "phase": 0.5}
obs, _ = generate_synthetic(REFERENCE_POSTERIOR_MEAN, 0.005 * peak, disc, seed=7, n_points=60)

post = calibrate(CalibrationProblem(obs), n_walkers=40, n_steps=1000, seed=3)
theta = posterior_summary(post).mean[:8]

# %% [markdown]
# The calibrated model alone cannot follow the wave; the GP on the residuals
# can.

# %%
res = discrepancy_pipeline(theta, obs, n_train=20)
for rate, (without, with_) in held_out_errors(res, obs).items():
    print(f"{rate:6.2f} mm/min: held-out error {without:5.2f}% -> {with_:5.2f}%")

# %%
for rate, rd in res.rates.items():
    d, f = obs[rate]
    te = rd.test_idx
    model = CurveModel(rate, d[te], DCBGeometry(), 400, 298.0, float(d[-1]))
    prop = propagate(post, model, d[te], n_samples=1000, seed=1)
    band = predictive_band(theta, rd.gp, d[te], model, prop.variance)
    inside = band.contains(d[te], f[te], 0.05)
    share = np.mean(np.sqrt(prop.variance) / np.sqrt(band.total))
    print(f"{rate:6.2f} mm/min: {inside.mean():.0%} of held-out points in the 95% band; "
          f"parameter share of the band width {share:.2f}")

# %% [markdown]
# More training points help until the GP has resolved the discrepancy.

# %%
test_idx = {r: res[r].test_idx[::2] for r in obs.rates}
study = training_size_study(theta, obs, test_idx, sizes=(5, 10, 20, 30))
for n, errs in study.items():
    print(n, {r: round(e, 2) for r, e in errs.items()})
