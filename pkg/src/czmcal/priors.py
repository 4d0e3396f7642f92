"""Prior distributions for the calibration parameters."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

PARAM_NAMES = ("K_N", "delta_0", "delta_f", "H", "S_0", "gamma_0", "Q", "m")
PARAM_UNITS = ("MPa/mm", "mm", "mm", "MPa/mm", "MPa", "mm/s", "N*mm", "-")

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class DistributionSpec:
    """A Gaussian truncated at zero (``a`` = mean, ``b`` = std) or a uniform
    distribution on ``[a, b]``."""

    family: str
    a: float
    b: float

    def __post_init__(self):
        family = self.family.lower()
        object.__setattr__(self, "family", family)
        if family == "gaussian":
            if not self.b > 0:
                raise ValueError("Gaussian std must be positive")
        elif family == "uniform":
            if not self.b > self.a:
                raise ValueError("uniform upper bound must exceed the lower bound")
            if self.a < 0:
                raise ValueError("support must lie in [0, inf)")
        else:
            raise ValueError(f"unknown distribution family {self.family!r}")

    @classmethod
    def gaussian(cls, mean, std):
        return cls("gaussian", mean, std)

    @classmethod
    def uniform(cls, low, high):
        return cls("uniform", low, high)

    @property
    def _log_mass(self) -> float:
        # log P(X >= 0) of the untruncated Gaussian
        return float(special.log_ndtr(self.a / self.b))

    def logpdf(self, x: float) -> float:
        if self.family == "uniform":
            if self.a <= x <= self.b:
                return -math.log(self.b - self.a)
            return -math.inf
        if not x >= 0.0:
            return -math.inf
        z = (x - self.a) / self.b
        return -0.5 * z * z - math.log(self.b) - _LOG_SQRT_2PI - self._log_mass

    def ppf(self, u):
        """Inverse CDF on the truncated support."""
        u = np.asarray(u, dtype=float)
        if self.family == "uniform":
            return self.a + (self.b - self.a) * u
        lo = stats.norm.cdf(-self.a / self.b)
        return self.a + self.b * stats.norm.ppf(lo + (1.0 - lo) * u)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw ``size`` values; truncated Gaussians by rejection."""
        if self.family == "uniform":
            return rng.uniform(self.a, self.b, size)
        out = np.empty(0)
        while out.size < size:
            draw = rng.normal(self.a, self.b, max(2 * (size - out.size), 16))
            out = np.concatenate([out, draw[draw >= 0.0]])
        return out[:size]

    @property
    def mean(self) -> float:
        if self.family == "uniform":
            return 0.5 * (self.a + self.b)
        return float(stats.truncnorm.mean(-self.a / self.b, np.inf, self.a, self.b))

    def to_dict(self) -> dict:
        return {"family": self.family, "a": self.a, "b": self.b}


@dataclass(frozen=True)
class Prior:
    """Independent product prior over named parameters."""

    names: tuple[str, ...]
    specs: tuple[DistributionSpec, ...]

    def __post_init__(self):
        if len(self.names) != len(self.specs):
            raise ValueError("names and specs differ in length")

    @property
    def dim(self) -> int:
        return len(self.names)

    def log_prob(self, theta) -> float:
        total = 0.0
        for spec, x in zip(self.specs, theta):
            lp = spec.logpdf(float(x))
            if lp == -math.inf:
                return -math.inf
            total += lp
        return total

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.column_stack([s.sample(rng, n) for s in self.specs])

    def ppf(self, u) -> np.ndarray:
        u = np.atleast_2d(u)
        return np.column_stack([s.ppf(u[:, j]) for j, s in enumerate(self.specs)])

    def means(self) -> np.ndarray:
        return np.array([s.a if s.family == "gaussian" else s.mean for s in self.specs])

    def to_dict(self) -> dict:
        return {n: s.to_dict() for n, s in zip(self.names, self.specs)}

    @classmethod
    def from_dict(cls, data: dict, names=PARAM_NAMES) -> "Prior":
        missing = [n for n in names if n not in data]
        if missing:
            raise ValueError(f"prior is missing parameters: {missing}")
        return cls(tuple(names),
                   tuple(DistributionSpec(data[n]["family"], float(data[n]["a"]),
                                          float(data[n]["b"])) for n in names))


def default_prior() -> Prior:
    """Default priors of the eight interface parameters."""
    g, u = DistributionSpec.gaussian, DistributionSpec.uniform
    return Prior(PARAM_NAMES, (
        g(240.0, 40.0),
        u(0.0, 10.0),
        u(10.0, 20.0),
        g(58.0, 9.67),
        g(60.7, 10.12),
        g(1e-6, 0.33e-6),
        g(1.5e-19, 0.5e-19),
        g(25.0, 4.17),
    ))


# Posterior means reported for the reference calibration.
REFERENCE_POSTERIOR_MEAN = np.array(
    [326.81, 5.83, 17.91, 0.3376, 78.87, 3.7e-7, 1.58e-19, 47.06])
REFERENCE_POSTERIOR_STD = np.array(
    [0.1815, 1.72e-3, 0.0594, 0.0805, 11.87, 5.75e-8, 3.02e-20, 6.01])
