"""
Forward model: one interface point, then a whole DCB specimen
==============================================================

Runs the cohesive law at a single point under a slow opening ramp, then the
rigid-arm double cantilever beam at the three test rates. Everything prints to
the terminal; pipe the CSV written at the end into any plotting tool.

Run with ``python notebooks/01_forward_model.py``.
"""

# %%
from pathlib import Path

import numpy as np

from czmcal.czm import InterfaceParams, InterfaceState, step
from czmcal.dcb import (RATES_MM_PER_MIN, DCBGeometry, LoadingProgram, elastic_compliance_slope,
                        peak_load, simulate_curve)
from czmcal.io import write_table
from czmcal.priors import REFERENCE_POSTERIOR_MEAN

params = InterfaceParams.from_vector(REFERENCE_POSTERIOR_MEAN)
print(params)

# %% [markdown]
# A single point opened in pure mode I. Damage starts once the opening passes
# delta_0 and the traction falls to zero at delta_f.

# %%
state = InterfaceState()
for d in np.linspace(0.0, 20.0, 11)[1:]:
    state, t = step(state, d, 1.0, params)
    print(f"opening {d:5.1f} mm  traction {t.t_N:8.3f} MPa  damage {state.D:.3f}  "
          f"plastic {state.delta_p[0]:.2e} mm")

# %% [markdown]
# The specimen: with damage and plasticity switched off the load is linear in
# the opening, with slope B K_N L / 3.

# %%
geom = DCBGeometry()
elastic = simulate_curve(params.elastic_only(), geom, LoadingProgram(5.08, 10.0, 10))
print("elastic slope", elastic.force[-1] / elastic.delta[-1],
      "closed form", elastic_compliance_slope(params.K_N, geom))

# %%
rows = []
for rate in RATES_MM_PER_MIN:
    curve = simulate_curve(params, geom, LoadingProgram(rate, 20.0, 400))
    d_pk, f_pk = peak_load(curve)
    print(f"{rate:6.2f} mm/min: peak {f_pk:.6g} N at {d_pk:.2f} mm")
    rows += [(rate, d, f) for d, f in zip(curve.delta, curve.force)]

out = write_table(Path("out") / "demo_curves.csv", ["rate_mm_per_min", "Delta_mm", "F_N"],
                  rows)
print("wrote", out)
