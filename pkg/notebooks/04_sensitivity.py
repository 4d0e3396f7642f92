"""
Sobol sensitivity of the peak load
==================================

First checks the estimator on the Ishigami function, whose indices are known
in closed form, then ranks the eight interface parameters by their total
effect on the peak load at 5.08 mm/min with inputs drawn from the priors.

Run with ``python notebooks/04_sensitivity.py``.
"""

# %%
import math

import numpy as np

from czmcal.dcb import DCBGeometry
from czmcal.priors import default_prior
from czmcal.sensitivity import (PeakLoadQoI, ishigami, ishigami_sampler, rank_parameters,
                                sobol_indices)

a, b, pi = 7.0, 0.1, math.pi
V1, V2, V13 = 0.5 * (1 + b * pi ** 4 / 5) ** 2, a ** 2 / 8, 8 * b ** 2 * pi ** 8 / 225
V = V1 + V2 + V13
res = sobol_indices(ishigami, n_base=2 ** 14, sampler=ishigami_sampler, names=("x1", "x2", "x3"))
print("Ishigami S  ", np.round(res.S, 4), "exact", np.round([V1 / V, V2 / V, 0.0], 4))
print("Ishigami S_T", np.round(res.ST, 4), "exact", np.round([(V1 + V13) / V, V2 / V, V13 / V], 4))

# %% [markdown]
# The interface study. A coarser mesh keeps this demo to well under a
# minute; the ranking is the same at the default 1000 elements.

# %%
qoi = PeakLoadQoI(geometry=DCBGeometry(n_elem=200))
res = sobol_indices(qoi, default_prior(), n_base=256, qoi=qoi.label)
for name, s, st, st_err in zip(res.names, res.S, res.ST, res.ST_err):
    print(f"{name:8s} S {s:9.3g}  S_T {st:9.3g} +- {st_err:.2g}")
print("ranking by total index:", rank_parameters(res))

# %% [markdown]
# The elastic and damage parameters carry essentially all of the variance.
# With prior-scale reference flow rates (around 1e-6 /s) the viscoplastic
# parameters barely move the peak load, and gamma_0, which scales all plastic
# flow, retains a small but real effect that places it above the other plastic
# parameters rather than last.
