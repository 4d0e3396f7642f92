"""Rate-dependent elastic-viscoplastic cohesive law with scalar damage.

The scalar kernels at the bottom of this module are compiled with numba and
shared by the single-point API (:func:`step`) and the interface-wide loop in
:mod:`czmcal.dcb`, so both paths run exactly the same arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .errors import NumericalError

BOLTZMANN_N_MM = 1.380649e-20  # N·mm/K
DEFAULT_THETA_REF = 298.0  # K
DEFAULT_SUBSTEP_FRACTION = 1e-3
MAX_SUBSTEPS = 1_000_000


@dataclass(frozen=True)
class InterfaceParams:
    """Cohesive interface parameters.

    Units are mm, N, MPa and s throughout. ``K_T`` defaults to ``K_N``.
    ``plastic`` and ``damage`` switch the two dissipative mechanisms off,
    which is only meant for verification runs.
    """

    K_N: float
    delta_0: float
    delta_f: float
    H: float
    S_0: float
    gamma_0: float
    Q: float
    m: float
    K_T: float | None = None
    mu: float = 1.0
    k_B: float = BOLTZMANN_N_MM
    theta_ref: float = DEFAULT_THETA_REF
    plastic: bool = True
    damage: bool = True

    def __post_init__(self):
        if self.K_T is None:
            object.__setattr__(self, "K_T", self.K_N)
        for name in ("K_N", "K_T", "mu", "delta_0", "delta_f", "H", "S_0",
                     "gamma_0", "Q", "m", "k_B", "theta_ref"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"{name} must be finite and positive, got {value!r}")
        if self.delta_f <= self.delta_0:
            raise ValueError(
                f"delta_f ({self.delta_f}) must exceed delta_0 ({self.delta_0})")
        if self.m < 1.0:
            raise ValueError(f"m must be >= 1, got {self.m}")

    @property
    def activation_ratio(self) -> float:
        """Q / (k_B θ_ref), the dimensionless activation barrier."""
        return self.Q / (self.k_B * self.theta_ref)

    @classmethod
    def from_vector(cls, theta, **kwargs) -> "InterfaceParams":
        """Build from the 8-vector ``(K_N, δ⁰, δᶠ, H, S₀, γ₀, Q, m)``."""
        theta = [float(v) for v in theta]
        if len(theta) != 8:
            raise ValueError(f"expected 8 calibration parameters, got {len(theta)}")
        return cls(*theta, **kwargs)

    def to_vector(self) -> np.ndarray:
        return np.array([self.K_N, self.delta_0, self.delta_f, self.H,
                         self.S_0, self.gamma_0, self.Q, self.m])

    def elastic_only(self) -> "InterfaceParams":
        return replace(self, plastic=False, damage=False)


@dataclass
class InterfaceState:
    """History variables of one interface point."""

    delta_p: np.ndarray = field(default_factory=lambda: np.zeros(2))
    kappa: float = 0.0
    D: float = 0.0
    delta_max: float = 0.0

    def __post_init__(self):
        self.delta_p = np.asarray(self.delta_p, dtype=float).reshape(2)
        if not 0.0 <= self.D <= 1.0:
            raise ValueError(f"damage must lie in [0, 1], got {self.D}")
        if self.kappa < 0.0:
            raise ValueError(f"kappa must be non-negative, got {self.kappa}")

    def copy(self) -> "InterfaceState":
        return InterfaceState(self.delta_p.copy(), self.kappa, self.D, self.delta_max)


@dataclass(frozen=True)
class Traction:
    """Normal traction and tangential magnitude τ (MPa).

    ``sign_T`` keeps the orientation of the tangential component, which the
    flow direction needs.
    """

    t_N: float
    t_T: float
    sign_T: float = 1.0

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.t_N, self.sign_T * self.t_T])


def macaulay(x):
    return 0.5 * (x + abs(x))


def _as_opening(delta) -> np.ndarray:
    delta = np.asarray(delta, dtype=float)
    if delta.ndim == 0:
        return np.array([float(delta), 0.0])
    return delta.reshape(2)


def elastic_traction(delta, state: InterfaceState, params: InterfaceParams) -> Traction:
    delta = _as_opening(delta)
    t_N, t_T = _traction(delta[0], delta[1], state.delta_p[0], state.delta_p[1],
                         state.D, params.K_N, params.K_T)
    return Traction(t_N, abs(t_T), 1.0 if t_T >= 0.0 else -1.0)


def yield_function(t: Traction, S_yp: float, mu: float) -> float:
    return t.t_T + mu * macaulay(t.t_N) - S_yp


def hardened_strength(kappa: float, params: InterfaceParams) -> float:
    return params.S_0 + params.H * kappa


def viscoplastic_rate(t: Traction, S_yp: float, params: InterfaceParams) -> float:
    """Thermally activated plastic rate, saturating at γ₀ at and above yield."""
    return _flow_rate(t.t_T, t.t_N, S_yp, params.gamma_0, params.activation_ratio,
                      1.0 / params.m, params.mu)


def flow_direction(t: Traction, mu: float) -> np.ndarray:
    """Plastic flow direction as ``(normal, tangential)`` components."""
    m_N, m_T = _flow_direction(t.sign_T * t.t_T, mu)
    return np.array([m_N, m_T])


def damage_value(delta_max: float, params: InterfaceParams) -> float:
    if delta_max < 0.0:
        raise ValueError("delta_max must be non-negative")
    return _damage(delta_max, params.delta_0, params.delta_f)


def free_energy(delta, state: InterfaceState, params: InterfaceParams) -> float:
    """½(1−D) δᵉ·K·δᵉ + Hκ²."""
    e = _as_opening(delta) - state.delta_p
    return (0.5 * (1.0 - state.D) * (params.K_N * e[0] ** 2 + params.K_T * e[1] ** 2)
            + params.H * state.kappa ** 2)


def dissipation_increment(delta_a, state_a: InterfaceState, delta_b,
                          state_b: InterfaceState, params: InterfaceParams) -> float:
    """Work minus free-energy change over one :func:`step`.

    :func:`step` applies the new opening with the history frozen and only then
    updates damage and plastic opening, so the work is the exact elastic work
    of that jump (trapezoid of the frozen-state traction, which is linear in
    the opening).
    """
    a, b = _as_opening(delta_a), _as_opening(delta_b)
    ta = elastic_traction(a, state_a, params).vector
    tb = elastic_traction(b, state_a, params).vector
    work = 0.5 * float((ta + tb) @ (b - a))
    return work - (free_energy(b, state_b, params) - free_energy(a, state_a, params))


def substep_count(delta, dt: float, params: InterfaceParams,
                  fraction: float = DEFAULT_SUBSTEP_FRACTION) -> int:
    """Substeps needed so one plastic increment stays below ``fraction·|δ|``."""
    d = _as_opening(delta)
    return _substep_count(math.hypot(d[0], d[1]), dt, params.gamma_0, fraction)


def step(state: InterfaceState, delta_new, dt: float, params: InterfaceParams, *,
         fraction: float = DEFAULT_SUBSTEP_FRACTION,
         n_substeps: int | None = None) -> tuple[InterfaceState, Traction]:
    """Advance one point to the opening ``delta_new`` over ``dt`` seconds.

    The opening is applied at the start of the step (it sets the damage
    history) and held while the plastic opening relaxes by explicit Euler
    substeps. ``n_substeps`` overrides the adaptive count.
    """
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    d = _as_opening(delta_new)
    dp_N, dp_T, kappa, dmax, D, bad = _advance(
        d[0], d[1], state.delta_p[0], state.delta_p[1], state.kappa, state.delta_max,
        dt, *_kernel_args(params), fraction, 0 if n_substeps is None else int(n_substeps))
    if bad:
        raise NumericalError(
            f"non-finite interface state at opening {d.tolist()} (dt={dt})")
    new_state = InterfaceState(np.array([dp_N, dp_T]), kappa, D, dmax)
    t = elastic_traction(d, new_state, params)
    if not (math.isfinite(t.t_N) and math.isfinite(t.t_T)):
        raise NumericalError(f"non-finite traction at opening {d.tolist()}")
    return new_state, t


def _kernel_args(params: InterfaceParams) -> tuple:
    return (params.K_N, params.K_T, params.mu, params.delta_0, params.delta_f,
            params.H, params.S_0, params.gamma_0, params.activation_ratio,
            1.0 / params.m, params.plastic, params.damage)


# --- compiled kernels -------------------------------------------------------

@njit(cache=True, nogil=True)
def _traction(d_N, d_T, dp_N, dp_T, D, K_N, K_T):
    s = 1.0 - D
    return s * K_N * (d_N - dp_N), s * K_T * (d_T - dp_T)


@njit(cache=True, nogil=True)
def _flow_rate(tau, t_N, S_yp, gamma_0, act, inv_m, mu):
    over = 1.0 - (tau + mu * max(t_N, 0.0)) / S_yp
    if over <= 0.0:
        return gamma_0
    return gamma_0 * math.exp(-act * over ** inv_m)


@njit(cache=True, nogil=True)
def _flow_direction(t_T, mu):
    c = 1.0 / math.sqrt(1.0 + mu * mu)
    if t_T > 0.0:
        return mu * c, c
    if t_T < 0.0:
        return mu * c, -c
    return mu * c, 0.0


@njit(cache=True, nogil=True, inline="always")
def _damage(delta_max, d0, df):
    if delta_max <= d0:
        return 0.0
    if delta_max >= df:
        return 1.0
    return df * (delta_max - d0) / (delta_max * (df - d0))


@njit(cache=True, nogil=True, inline="always")
def _substep_count(d_abs, dt, gamma_0, fraction):
    # γ₀ bounds the flow rate and |m_flow| <= 1
    need = gamma_0 * dt
    if need <= fraction * d_abs:
        return 1
    if need >= fraction * d_abs * MAX_SUBSTEPS:
        return MAX_SUBSTEPS
    return int(math.ceil(need / (fraction * d_abs)))


@njit(cache=True, nogil=True, inline="always")
def _advance(d_N, d_T, dp_N, dp_T, kappa, dmax, dt, K_N, K_T, mu, d0, df, H, S0,
             gamma_0, act, inv_m, plastic, damage, fraction, n_fixed):
    """One constitutive step.

    Returns ``(δᵖ_N, δᵖ_T, κ, δ_max, D, bad)`` where ``bad`` flags a
    non-finite plastic state.
    """
    d_abs = abs(d_N) if d_T == 0.0 else math.sqrt(d_N * d_N + d_T * d_T)
    if d_abs > dmax:
        dmax = d_abs
    D = 0.0
    if damage:
        D = _damage(dmax, d0, df)
    if plastic and D < 1.0:
        n = n_fixed
        if n <= 0:
            n = _substep_count(d_abs, dt, gamma_0, fraction)
        h = dt / n
        s = 1.0 - D
        c = 1.0 / math.sqrt(1.0 + mu * mu)
        for _ in range(n):
            t_N = s * K_N * (d_N - dp_N)
            t_T = s * K_T * (d_T - dp_T)
            tau = abs(t_T)
            drive = tau + mu * max(t_N, 0.0)
            # no driving stress, no flow (compression, unloaded, fully open)
            if drive <= 0.0:
                break
            S_yp = S0 + H * kappa
            if drive >= S_yp:
                rate = gamma_0
            else:
                rate = gamma_0 * math.exp(-act * (1.0 - drive / S_yp) ** inv_m)
            g = rate * h
            dp_N += g * mu * c
            if t_T > 0.0:
                dp_T += g * c
            elif t_T < 0.0:
                dp_T -= g * c
            kappa += g
    bad = not (math.isfinite(dp_N) and math.isfinite(dp_T) and math.isfinite(kappa))
    return dp_N, dp_T, kappa, dmax, D, bad
