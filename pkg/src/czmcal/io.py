"""Delimited-text tables, observation files, synthetic data and manifests."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .czm import InterfaceParams
from .dcb import RATES_MM_PER_MIN, DCBGeometry, LoadingProgram, simulate_force
from .errors import DataError
from .gp import GPHyperparams, TrainedGP, fit
from .inference import ObservationSet
from .priors import PARAM_NAMES

log = logging.getLogger(__name__)

OBS_COLUMNS = ("rate_mm_per_min", "Delta_mm", "F_N")


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def write_table(path, columns: Sequence[str], rows: Iterable) -> Path:
    """Comma-separated table with a header; floats at 17 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([format_value(v) for v in row])
    return path


def _parse(v: str):
    try:
        return float(v)
    except ValueError:
        return v


def read_table(path) -> tuple[list[str], list[list]]:
    """Inverse of :func:`write_table`; numeric cells become floats."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return [], []
        return header, [[_parse(v) for v in row] for row in reader if row]


def read_numeric_table(path) -> tuple[list[str], np.ndarray]:
    header, rows = read_table(path)
    return header, np.array(rows, dtype=float).reshape(-1, len(header))


def load_observations(path, expected_rates: Sequence[float] | None = RATES_MM_PER_MIN,
                      rate_tol: float = 1e-9) -> ObservationSet:
    """Read a ``rate_mm_per_min,Delta_mm,F_N`` file into an :class:`ObservationSet`.

    ``expected_rates=None`` accepts any set of rates.
    """
    groups: dict[float, list[tuple[float, float]]] = {}
    seen = set()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: no observations")
        if [h.strip() for h in header] != list(OBS_COLUMNS):
            raise DataError(f"{path}:1: expected header {','.join(OBS_COLUMNS)}, "
                            f"got {','.join(header)}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise DataError(f"{path}:{line}: expected 3 fields, got {len(row)}")
            try:
                rate, d, f = (float(c) for c in row)
            except ValueError:
                raise DataError(f"{path}:{line}: non-numeric field in {row}") from None
            if not all(math.isfinite(v) for v in (rate, d, f)):
                raise DataError(f"{path}:{line}: non-finite value")
            if rate <= 0 or d < 0:
                raise DataError(f"{path}:{line}: rate must be positive and Delta non-negative")
            if (rate, d) in seen:
                raise DataError(f"{path}:{line}: duplicate (rate, Delta) = ({rate:g}, {d:g})")
            seen.add((rate, d))
            if f < 0:
                log.warning("%s:%d: negative load %g accepted", path, line, f)
            groups.setdefault(rate, []).append((d, f))
    if not groups:
        raise DataError(f"{path}: no observations")
    if expected_rates is not None:
        got = sorted(groups)
        want = sorted(float(r) for r in expected_rates)
        if len(got) != len(want) or any(abs(a - b) > rate_tol * b for a, b in zip(got, want)):
            raise DataError(f"{path}: rates {got} differ from the expected {want}")
    curves = {r: (np.array([p[0] for p in pts]), np.array([p[1] for p in pts]))
              for r, pts in groups.items()}
    return ObservationSet(curves)


def write_observations(path, obs: ObservationSet) -> Path:
    rows = [(rate, d, f) for rate, (ds, fs) in obs.curves.items() for d, f in zip(ds, fs)]
    return write_table(path, OBS_COLUMNS, rows)


# -- synthetic data ---------------------------------------------------------

def discrepancy_function(spec: dict | None):
    """Known additive discrepancy Δ -> N described by a small dict.

    ``{"kind": "sine", "amplitude": A, "wavelength": w, "phase": p}`` gives
    ``A sin(2πΔ/w + p)``; ``{"kind": "poly", "coef": [c0, c1, ...]}`` gives
    ``Σ c_k Δ^k``; ``None`` or ``{"kind": "none"}`` gives zero.
    """
    if spec is None or spec.get("kind", "none") == "none":
        return lambda d: np.zeros_like(np.asarray(d, dtype=float))
    kind = spec["kind"]
    if kind == "sine":
        A, w, p = float(spec["amplitude"]), float(spec["wavelength"]), float(spec.get("phase", 0))
        if w <= 0:
            raise ValueError("wavelength must be positive")
        return lambda d: A * np.sin(2.0 * np.pi * np.asarray(d, dtype=float) / w + p)
    if kind == "poly":
        coef = np.asarray(spec["coef"], dtype=float)
        return lambda d: np.polynomial.polynomial.polyval(np.asarray(d, dtype=float), coef)
    raise ValueError(f"unknown discrepancy kind {kind!r}")


def synthetic_openings(delta_max: float, n_points: int) -> np.ndarray:
    """``n_points`` uniformly spaced openings in (0, delta_max]."""
    return np.linspace(delta_max / n_points, delta_max, n_points)


def generate_synthetic(theta_star, noise_sigma: float, discrepancy: dict | None = None,
                       seed: int = 0, *, n_points: int = 20, rates=RATES_MM_PER_MIN,
                       geometry: DCBGeometry | None = None, delta_max: float = 20.0,
                       n_steps: int = 400, theta_ref: float = 298.0
                       ) -> tuple[ObservationSet, dict]:
    """Noisy surrogate curves at known parameters plus a ground-truth record."""
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be non-negative")
    geometry = geometry or DCBGeometry()
    theta_star = np.asarray(theta_star, dtype=float)
    params = InterfaceParams.from_vector(theta_star, theta_ref=theta_ref)
    disc = discrepancy_function(discrepancy)
    rng = np.random.default_rng(seed)
    d = synthetic_openings(delta_max, n_points)
    curves = {}
    for rate in rates:
        loading = LoadingProgram(float(rate), delta_max, n_steps)
        clean = np.interp(d, loading.openings(), simulate_force(params, geometry, loading))
        f = clean + disc(d) + noise_sigma * rng.standard_normal(d.size)
        curves[float(rate)] = (d.copy(), f)
    truth = {
        "theta_star": dict(zip(PARAM_NAMES, theta_star.tolist())),
        "noise_sigma": float(noise_sigma),
        "discrepancy": discrepancy,
        "seed": int(seed),
        "n_points": int(n_points),
        "delta_max": float(delta_max),
        "rates": [float(r) for r in rates],
        "geometry": {"L": geometry.L, "B": geometry.B, "a0": geometry.a0,
                     "n_elem": geometry.n_elem},
        "n_steps": int(n_steps),
        "theta_ref": float(theta_ref),
    }
    return ObservationSet(curves), truth


# -- GP dumps ---------------------------------------------------------------

def gp_to_dict(gp: TrainedGP, rate: float | None = None) -> dict:
    return {
        "rate_mm_per_min": rate,
        "X": gp.X.tolist(),
        "Y": gp.Y.tolist(),
        "lengthscales": list(gp.hyper.lengthscales),
        "nugget": gp.hyper.nugget,
        "process_variance": gp.sigma2,
        "beta": gp.beta,
        "trend": "constant",
        "correlation": "anisotropic squared exponential",
    }


def gp_from_dict(data: dict) -> TrainedGP:
    """Rebuild a GP from its dump by refitting with the stored hyperparameters."""
    hyper = GPHyperparams(tuple(data["lengthscales"]), float(data["nugget"]))
    return fit(np.asarray(data["X"]), np.asarray(data["Y"]), hyper)


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")
    return path


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def digest_tree(paths: Iterable, root=None) -> dict[str, str]:
    out = {}
    for p in paths:
        p = Path(p)
        key = os.path.relpath(p, root) if root is not None else str(p)
        out[key] = file_digest(p)
    return dict(sorted(out.items()))
