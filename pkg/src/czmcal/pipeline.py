"""Stage runners shared by the command line and the demo scripts.

Each stage reads what it needs from a :class:`RunConfig`, writes its tables
into ``out_dir`` and returns the list of files it produced.
"""

from __future__ import annotations

import dataclasses
import logging
import platform
import time
from importlib import metadata
from pathlib import Path
from typing import Callable

import numpy as np

from .config import STAGES, RunConfig
from .dcb import CurveModel, LoadingProgram, simulate_curve
from .discrepancy import discrepancy_pipeline, held_out_errors
from .gp import SearchConfig, predict
from .inference import CalibrationProblem, NoiseModel, calibrate
from .io import (digest_tree, file_digest, generate_synthetic, gp_from_dict, gp_to_dict,
                 load_observations, read_json, read_numeric_table, read_table,
                 write_json, write_observations, write_table)
from .priors import PARAM_NAMES
from .sampler import diagnostics_export, posterior_summary
from .sensitivity import PeakLoadQoI, rank_parameters, sobol_indices
from .uq import posterior_predictive_tables, predictive_band, propagate

log = logging.getLogger(__name__)

MapFn = Callable | None


def rate_tag(rate: float) -> str:
    return f"{rate:g}".replace(".", "p")


def _obs(cfg: RunConfig):
    return load_observations(cfg.paths.observations, expected_rates=cfg.model.rates)


def run_simulate(cfg: RunConfig, out_dir: Path, map_fn: MapFn = None) -> list[Path]:
    params = cfg.params()
    geom = cfg.geometry.build()
    rows = []
    for rate in cfg.model.rates:
        curve = simulate_curve(params, geom,
                               LoadingProgram(rate, cfg.model.delta_max, cfg.model.n_steps))
        rows += [(rate, d, f) for d, f in zip(curve.delta, curve.force)]
    return [write_table(out_dir / "curve.csv", ("rate_mm_per_min", "Delta_mm", "F_N"), rows)]


def run_synth(cfg: RunConfig, out_dir: Path, map_fn: MapFn = None) -> list[Path]:
    s, m = cfg.synth, cfg.model
    kw = dict(n_points=s.n_points, rates=m.rates, geometry=cfg.geometry.build(),
              delta_max=m.delta_max, n_steps=m.n_steps, theta_ref=m.theta_ref)
    sigma = s.noise_sigma
    if s.noise_fraction is not None:
        clean, _ = generate_synthetic(cfg.theta(), 0.0, None, 0, **kw)
        sigma = s.noise_fraction * clean.peak_force()
    obs, truth = generate_synthetic(cfg.theta(), sigma, s.discrepancy,
                                    cfg.stage_seed("synth"), **kw)
    return [write_observations(out_dir / "observations.csv", obs),
            write_json(out_dir / "truth.json", truth)]


def _write_posterior(samples, out_dir: Path, suffix: str, write_trace: bool) -> list[Path]:
    names = list(samples.names)
    summ = posterior_summary(samples)
    paths = [
        write_table(out_dir / f"posterior_samples{suffix}.csv", names, samples.flat()),
        write_table(out_dir / f"posterior_summary{suffix}.csv", ("name", "mean", "std"),
                    [(n, m, s) for n, m, s in zip(names, summ.mean, summ.std)]),
    ]
    diag = diagnostics_export(samples)
    keys = ["running_mean", "density"] + (["trace"] if write_trace else [])
    for key in keys:
        cols, data = diag[key]
        paths.append(write_table(out_dir / f"{key}{suffix}.csv", cols, data))
    acc = samples.acceptance_fraction
    paths.append(write_table(out_dir / f"acceptance{suffix}.csv", ("walker", "fraction"),
                             zip(range(acc.size), acc)))
    return paths


def run_calibrate(cfg: RunConfig, out_dir: Path, map_fn: MapFn = None) -> list[Path]:
    s = cfg.sampler
    problem = CalibrationProblem(
        _obs(cfg), cfg.build_prior(), NoiseModel(s.noise_sigma, s.noise_peak_fraction),
        cfg.geometry.build(s.n_elem), cfg.model.n_steps, cfg.model.theta_ref)
    seed = cfg.stage_seed("sampler")
    jobs = [("", problem)]
    if s.per_rate:
        jobs = [(f"_{rate_tag(r)}", problem.for_rate(r)) for r in problem.data.rates]
    seeds = np.random.SeedSequence(seed).spawn(len(jobs))
    paths = []
    for (suffix, prob), ss in zip(jobs, seeds):
        sub_seed = seed if len(jobs) == 1 else int(ss.generate_state(1)[0])
        t0 = time.perf_counter()
        samples = calibrate(prob, s.n_walkers, s.n_steps, sub_seed, a=s.a,
                            burn_in=s.burn_in, map_fn=map_fn)
        log.info("calibration%s finished in %.1f s, mean acceptance %.3f", suffix,
                 time.perf_counter() - t0, samples.acceptance_fraction.mean())
        paths += _write_posterior(samples, out_dir, suffix, s.write_trace)
    return paths


def read_summary(path) -> np.ndarray:
    """Posterior means of the eight interface parameters from a summary table."""
    _, rows = read_table(path)
    means = {r[0]: float(r[1]) for r in rows}
    missing = [n for n in PARAM_NAMES if n not in means]
    if missing:
        raise ValueError(f"{path}: summary lacks {missing}")
    return np.array([means[n] for n in PARAM_NAMES])


def _search(cfg: RunConfig) -> SearchConfig:
    g = cfg.gp
    return SearchConfig(seed=cfg.stage_seed("gp"), popsize=g.popsize, maxiter=g.maxiter,
                        nugget=g.nugget)


def run_discrepancy(cfg: RunConfig, out_dir: Path, map_fn: MapFn = None) -> list[Path]:
    obs = _obs(cfg)
    theta = read_summary(cfg.paths.summary)
    res = discrepancy_pipeline(theta, obs, cfg.gp.n_train, cfg.geometry.build(),
                               cfg.model.n_steps, _search(cfg), cfg.model.theta_ref)
    paths, pred_rows, err_rows = [], [], []
    for rate, rd in res.rates.items():
        paths.append(write_json(out_dir / f"gp_{rate_tag(rate)}.json", gp_to_dict(rd.gp, rate)))
        d = obs[rate][0]
        grid = np.linspace(0.0, d[-1], cfg.uq.n_grid)
        mu, var = predict(rd.gp, grid)
        pred_rows += [(rate, x, a, b) for x, a, b in zip(grid, mu, var)]
    paths.append(write_table(out_dir / "discrepancy_prediction.csv",
                             ("rate_mm_per_min", "Delta_mm", "mean_N", "variance_N2"),
                             pred_rows))
    if all(rd.test_idx.size for rd in res.rates.values()):
        for rate, (e0, e1) in held_out_errors(res, obs).items():
            rd = res[rate]
            err_rows.append((rate, e0, e1, rd.train_idx.size, rd.test_idx.size))
        paths.append(write_table(out_dir / "heldout_errors.csv",
                                 ("rate_mm_per_min", "error_model_pct",
                                  "error_with_discrepancy_pct", "n_train", "n_test"),
                                 err_rows))
    return paths


def run_uq(cfg: RunConfig, out_dir: Path, map_fn: MapFn = None) -> list[Path]:
    obs = _obs(cfg)
    theta = read_summary(cfg.paths.summary)
    _, samples = read_numeric_table(cfg.paths.samples)
    seeds = np.random.SeedSequence(cfg.stage_seed("uq")).spawn(len(obs.rates))
    geom = cfg.geometry.build()
    paths = []
    for rate, ss in zip(obs.rates, seeds):
        gp = gp_from_dict(read_json(Path(cfg.paths.gp_dir) / f"gp_{rate_tag(rate)}.json"))
        d_max = float(obs[rate][0][-1])
        grid = np.linspace(d_max / cfg.uq.n_grid, d_max, cfg.uq.n_grid)
        model = CurveModel(rate, grid, geom, cfg.model.n_steps, cfg.model.theta_ref, d_max)
        prop = propagate(samples, model, grid, cfg.uq.n_samples,
                         int(ss.generate_state(1)[0]), n_params=len(PARAM_NAMES),
                         map_fn=map_fn)
        band = predictive_band(theta, gp, grid, model, prop.variance, tuple(cfg.uq.alphas))
        tag = rate_tag(rate)
        cols, data = band.table()
        paths.append(write_table(out_dir / f"band_{tag}.csv", cols, data))
        (qc, qt), (dc, dt) = posterior_predictive_tables(prop)
        paths.append(write_table(out_dir / f"predictive_quantiles_{tag}.csv", qc, qt))
        paths.append(write_table(out_dir / f"predictive_density_{tag}.csv", dc, dt))
    return paths


def run_sobol(cfg: RunConfig, out_dir: Path, map_fn: MapFn = None) -> list[Path]:
    sb, m = cfg.sobol, cfg.model
    qoi = PeakLoadQoI(sb.rate, cfg.geometry.build(sb.n_elem), m.delta_max, m.n_steps,
                      m.theta_ref, map_fn)
    res = sobol_indices(qoi, cfg.build_prior(), sb.n_base, cfg.stage_seed("sobol"),
                        sb.n_bootstrap, sampling=sb.sampling, qoi=qoi.label)
    cols, rows = res.table()
    log.info("sensitivity ranking: %s", ", ".join(rank_parameters(res)))
    return [write_table(out_dir / "sobol.csv", cols, rows)]


STAGE_RUNNERS = {
    "simulate": run_simulate, "synth": run_synth, "calibrate": run_calibrate,
    "discrepancy": run_discrepancy, "uq": run_uq, "sobol": run_sobol,
}

# stage name -> config block carrying its seed
SEED_BLOCKS = {"synth": "synth", "calibrate": "sampler", "discrepancy": "gp", "uq": "uq",
               "sobol": "sobol"}


def run_pipeline(cfg: RunConfig, out_dir: Path, map_fn: MapFn = None) -> dict[str, list[Path]]:
    """Synthetic data, calibration, discrepancy, propagation and sensitivity,
    each in its own subdirectory, wired together through ``cfg.paths``."""
    cfg = dataclasses.replace(cfg, paths=dataclasses.replace(cfg.paths))
    out = {}
    for stage in STAGES:
        sub = out_dir / stage
        out[stage] = STAGE_RUNNERS[stage](cfg, sub, map_fn)
        if stage == "synth":
            cfg.paths.observations = str(sub / "observations.csv")
        elif stage == "calibrate":
            cfg.paths.samples = str(sub / "posterior_samples.csv")
            cfg.paths.summary = str(sub / "posterior_summary.csv")
        elif stage == "discrepancy":
            cfg.paths.gp_dir = str(sub)
    return out


def versions() -> dict[str, str]:
    out = {"python": platform.python_version()}
    for pkg in ("artifact", "numpy", "scipy", "numba"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = "unknown"
    return out


def stage_seeds(cfg: RunConfig, stages) -> dict[str, int]:
    return {s: cfg.stage_seed(SEED_BLOCKS[s]) for s in stages if s in SEED_BLOCKS}


def build_manifest(command: str, cfg: RunConfig, out_dir: Path, artifacts: dict,
                   wall_time: float, threads: int) -> dict:
    inputs = [p for p in (cfg.paths.observations, cfg.paths.samples, cfg.paths.summary)
              if p is not None and Path(p).is_file()]
    stages = list(artifacts) if command == "pipeline" else [command]
    return {
        "command": command,
        "config": cfg.to_dict(),
        "seeds": {"global": cfg.seed, **stage_seeds(cfg, stages)},
        "inputs": {str(p): file_digest(p) for p in inputs},
        "artifacts": {stage: digest_tree(paths, out_dir) for stage, paths in artifacts.items()},
        "versions": versions(),
        "threads": threads,
        "wall_time_s": wall_time,
    }
