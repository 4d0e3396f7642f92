"""Rigid double-cantilever-beam surrogate.

Both arms are rigid, so the opening grows linearly from the pivot to the load
line and the applied force follows from the moment balance
``B ∫₀ᴸ x t_N(x) dx = L F``, evaluated with the midpoint rule.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from numba import njit

from .czm import (DEFAULT_SUBSTEP_FRACTION, InterfaceParams, InterfaceState,
                  _advance, _kernel_args)
from .errors import NumericalError

RATES_MM_PER_MIN = (5.08, 50.8, 508.0)


@dataclass(frozen=True)
class DCBGeometry:
    """Bonded length ``L``, width ``B`` and recorded pre-crack ``a0`` (mm)."""

    L: float = 216.0 - 101.6
    B: float = 25.0
    a0: float = 101.6
    n_elem: int = 1000

    def __post_init__(self):
        if not (self.L > 0 and self.B > 0):
            raise ValueError("L and B must be positive")
        if self.a0 < 0:
            raise ValueError("a0 must be non-negative")
        if int(self.n_elem) != self.n_elem or self.n_elem < 10:
            raise ValueError("n_elem must be an integer >= 10")

    @property
    def element_length(self) -> float:
        return self.L / self.n_elem

    def midpoints(self) -> np.ndarray:
        return (np.arange(self.n_elem) + 0.5) * self.element_length


@dataclass(frozen=True)
class LoadingProgram:
    """Monotone opening at ``rate`` (mm/min) up to ``delta_max_applied`` (mm)."""

    rate: float
    delta_max_applied: float = 20.0
    n_steps: int = 400

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("rate must be positive")
        if not self.delta_max_applied > 0:
            raise ValueError("delta_max_applied must be positive")
        if int(self.n_steps) != self.n_steps or self.n_steps < 2:
            raise ValueError("n_steps must be an integer >= 2")

    def openings(self) -> np.ndarray:
        return np.linspace(0.0, self.delta_max_applied, self.n_steps + 1)

    @property
    def dt(self) -> float:
        """Seconds per step."""
        return (self.delta_max_applied / self.n_steps) / (self.rate / 60.0)


@dataclass
class LoadDisplacementCurve:
    rate: float
    delta: np.ndarray
    force: np.ndarray
    metadata: dict = field(default_factory=dict)
    trace: dict | None = None

    def __post_init__(self):
        self.delta = np.asarray(self.delta, dtype=float)
        self.force = np.asarray(self.force, dtype=float)
        if self.delta.shape != self.force.shape or self.delta.ndim != 1:
            raise ValueError("delta and force must be 1-D arrays of equal length")

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.delta.tolist(), self.force.tolist()))

    def __len__(self):
        return self.delta.size

    def at(self, delta) -> np.ndarray:
        """Load linearly interpolated at the given openings."""
        return np.interp(delta, self.delta, self.force)


def params_digest(params: InterfaceParams) -> str:
    text = repr(sorted(asdict(params).items()))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def opening_profile(Delta: float, geom: DCBGeometry) -> np.ndarray:
    if Delta < 0:
        raise ValueError("Delta must be non-negative")
    return geom.midpoints() * (Delta / geom.L)


def simulate_curve(params: InterfaceParams, geom: DCBGeometry, loading: LoadingProgram,
                   *, fraction: float = DEFAULT_SUBSTEP_FRACTION,
                   trace: bool = False) -> LoadDisplacementCurve:
    """Load–opening curve for a monotone opening program.

    With ``trace=True`` the per-element state after every step is kept in
    ``curve.trace`` (arrays of shape ``(n_steps + 1, n_elem)``).
    """
    deltas = loading.openings()
    force, rec = _march(params, geom, deltas, loading.dt, fraction, trace)
    meta = {"params_digest": params_digest(params), "geometry": asdict(geom),
            "loading": asdict(loading)}
    out = LoadDisplacementCurve(loading.rate, deltas, force, meta)
    if trace:
        out.trace = {"delta_p_N": rec[0], "kappa": rec[1], "delta_max": rec[2],
                     "D": rec[3]}
    return out


def simulate_force(params: InterfaceParams, geom: DCBGeometry,
                   loading: LoadingProgram) -> np.ndarray:
    """Loads at ``loading.openings()`` without building a curve object."""
    return _march(params, geom, loading.openings(), loading.dt,
                  DEFAULT_SUBSTEP_FRACTION, False)[0]


def _march(params, geom, deltas, dt, fraction, trace):
    force = np.empty(deltas.size)
    rec = np.zeros((4, deltas.size if trace else 1, geom.n_elem))
    status = _dcb_march(geom.midpoints(), geom.L, geom.B, deltas, dt,
                        *_kernel_args(params), fraction, trace, force, rec)
    if status[0]:
        where = f"element {status[2]}" if status[2] >= 0 else "moment sum"
        raise NumericalError(
            f"non-finite interface state at step {status[1]} "
            f"(Delta={deltas[status[1]]:.6g} mm), {where}")
    return force, rec


def peak_load(curve: LoadDisplacementCurve) -> tuple[float, float]:
    """``(Δ_peak, F_peak)``; the first maximum wins ties."""
    if len(curve) == 0:
        raise ValueError("empty curve")
    i = int(np.argmax(curve.force))
    return float(curve.delta[i]), float(curve.force[i])


def elastic_compliance_slope(K_N: float, geom: DCBGeometry) -> float:
    """Exact dF/dΔ of a purely elastic interface, ``B K_N L / 3``."""
    return geom.B * K_N * geom.L / 3.0


def element_states(curve: LoadDisplacementCurve, step: int) -> list[InterfaceState]:
    """Per-element states from a traced curve."""
    if curve.trace is None:
        raise ValueError("curve was simulated without trace=True")
    t = curve.trace
    return [InterfaceState(np.array([t["delta_p_N"][step, i], 0.0]), t["kappa"][step, i],
                           t["D"][step, i], t["delta_max"][step, i])
            for i in range(t["D"].shape[1])]


@njit(cache=True, nogil=True)
def _dcb_march(x, L, B, deltas, dt, K_N, K_T, mu, d0, df, H, S0, gamma_0, act, inv_m,
               plastic, damage, fraction, keep, force, rec):
    n = x.size
    h = L / n
    dp = np.zeros(n)
    kappa = np.zeros(n)
    dmax = np.zeros(n)
    dmg = np.zeros(n)
    status = np.zeros(3, dtype=np.int64)
    force[0] = 0.0
    for k in range(1, deltas.size):
        moment = 0.0
        scale = deltas[k] / L
        for i in range(n):
            d_N = x[i] * scale
            if dmg[i] >= 1.0:
                if d_N > dmax[i]:
                    dmax[i] = d_N
                continue
            p_N, _, kap, dm, D, bad = _advance(
                d_N, 0.0, dp[i], 0.0, kappa[i], dmax[i], dt, K_N, K_T, mu, d0, df, H, S0,
                gamma_0, act, inv_m, plastic, damage, fraction, 0)
            if bad:
                status[0] = 1
                status[1] = k
                status[2] = i
                return status
            dp[i] = p_N
            kappa[i] = kap
            dmax[i] = dm
            dmg[i] = D
            moment += x[i] * (1.0 - D) * K_N * (d_N - p_N)
        f = B * moment * h / L
        if not math.isfinite(f):
            status[0] = 1
            status[1] = k
            status[2] = -1
            return status
        force[k] = f
        if keep:
            rec[0, k] = dp
            rec[1, k] = kappa
            rec[2, k] = dmax
            rec[3, k] = dmg
    return status


@dataclass(frozen=True)
class CurveModel:
    """Forward map from the 8-parameter vector to loads at fixed openings."""

    rate: float
    grid: np.ndarray
    geometry: DCBGeometry = field(default_factory=DCBGeometry)
    n_steps: int = 400
    theta_ref: float = 298.0
    delta_max: float | None = None  # defaults to the grid maximum

    def loading(self) -> LoadingProgram:
        top = float(np.max(self.grid)) if self.delta_max is None else self.delta_max
        return LoadingProgram(self.rate, top, self.n_steps)

    def __call__(self, theta) -> np.ndarray:
        grid = np.asarray(self.grid, dtype=float)
        params = InterfaceParams.from_vector(theta, theta_ref=self.theta_ref)
        loading = self.loading()
        return np.interp(grid, loading.openings(), simulate_force(params, self.geometry, loading))
