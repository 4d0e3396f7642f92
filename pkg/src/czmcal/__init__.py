"""Rate-dependent cohesive interface model with Bayesian calibration.

Modules
-------
czm          cohesive law (elasticity, viscoplastic flow, damage) at one point
dcb          rigid-arm double cantilever beam surrogate
priors       parameter priors and reference posterior means
sampler      affine-invariant ensemble sampler and posterior diagnostics
inference    observations, likelihood and calibration
gp           kriging with leave-one-out hyperparameter search
discrepancy  per-rate model discrepancy
uq           forward propagation and predictive bands
sensitivity  Sobol indices
io, config, pipeline, cli   files, run configuration and the command line
"""

from .czm import InterfaceParams, InterfaceState, Traction, step
from .dcb import (RATES_MM_PER_MIN, CurveModel, DCBGeometry, LoadDisplacementCurve,
                  LoadingProgram, peak_load, simulate_curve, simulate_force)
from .discrepancy import discrepancy_pipeline, held_out_errors
from .errors import ConfigError, CZMError, DataError, NumericalError
from .gp import GPHyperparams, SearchConfig, TrainedGP, fit, fit_optimized, predict
from .inference import CalibrationProblem, NoiseModel, ObservationSet, calibrate
from .priors import PARAM_NAMES, REFERENCE_POSTERIOR_MEAN, Prior, default_prior
from .sampler import PosteriorSamples, aies_run, posterior_summary
from .sensitivity import PeakLoadQoI, SobolResult, rank_parameters, sobol_indices
from .uq import PredictiveBand, percentage_error, predictive_band, propagate

__version__ = "0.1.0"

__all__ = [
    "InterfaceParams", "InterfaceState", "Traction", "step",
    "RATES_MM_PER_MIN", "CurveModel", "DCBGeometry", "LoadDisplacementCurve",
    "LoadingProgram", "peak_load", "simulate_curve", "simulate_force",
    "discrepancy_pipeline", "held_out_errors",
    "ConfigError", "CZMError", "DataError", "NumericalError",
    "GPHyperparams", "SearchConfig", "TrainedGP", "fit", "fit_optimized", "predict",
    "CalibrationProblem", "NoiseModel", "ObservationSet", "calibrate",
    "PARAM_NAMES", "REFERENCE_POSTERIOR_MEAN", "Prior", "default_prior",
    "PosteriorSamples", "aies_run", "posterior_summary",
    "PeakLoadQoI", "SobolResult", "rank_parameters", "sobol_indices",
    "PredictiveBand", "percentage_error", "predictive_band", "propagate",
]
