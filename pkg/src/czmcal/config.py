"""JSON run configuration with validation before any computation starts."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .czm import InterfaceParams
from .dcb import RATES_MM_PER_MIN, DCBGeometry
from .errors import ConfigError
from .inference import CALIBRATION_N_ELEM
from .priors import PARAM_NAMES, REFERENCE_POSTERIOR_MEAN, Prior, default_prior

STAGES = ("synth", "calibrate", "discrepancy", "uq", "sobol")
SEEDED_BLOCKS = ("synth", "sampler", "gp", "uq", "sobol")


@dataclass
class GeometryBlock:
    L: float = 114.4
    B: float = 25.0
    a0: float = 101.6
    n_elem: int = 1000

    def build(self, n_elem: int | None = None) -> DCBGeometry:
        return DCBGeometry(self.L, self.B, self.a0, n_elem or self.n_elem)


@dataclass
class ModelBlock:
    rates: list[float] = field(default_factory=lambda: list(RATES_MM_PER_MIN))
    delta_max: float = 20.0
    n_steps: int = 400
    theta_ref: float = 298.0


@dataclass
class SynthBlock:
    noise_sigma: float = 0.0
    noise_fraction: float | None = None  # of the peak clean load; overrides noise_sigma
    n_points: int = 20
    discrepancy: dict | None = None
    seed: int | None = None


@dataclass
class SamplerBlock:
    n_walkers: int = 100
    n_steps: int = 3000
    burn_in: float = 0.5
    a: float = 2.0
    n_elem: int = CALIBRATION_N_ELEM
    noise_sigma: float | None = None  # None: sample the noise variance
    noise_peak_fraction: float = 0.1
    per_rate: bool = False
    write_trace: bool = False
    seed: int | None = None


@dataclass
class GPBlock:
    n_train: int = 20
    nugget: float = 1e-10
    popsize: int = 15
    maxiter: int = 60
    seed: int | None = None


@dataclass
class UQBlock:
    n_samples: int = 1000
    alphas: list[float] = field(default_factory=lambda: [0.05, 0.003])
    n_grid: int = 100
    seed: int | None = None


@dataclass
class SobolBlock:
    n_base: int = 1024
    rate: float = 5.08
    n_bootstrap: int = 100
    sampling: str = "qmc"
    n_elem: int | None = None
    seed: int | None = None


@dataclass
class PathsBlock:
    observations: str | None = None
    samples: str | None = None
    summary: str | None = None
    gp_dir: str | None = None


@dataclass
class RunConfig:
    geometry: GeometryBlock = field(default_factory=GeometryBlock)
    model: ModelBlock = field(default_factory=ModelBlock)
    parameters: dict[str, float] = field(
        default_factory=lambda: dict(zip(PARAM_NAMES, REFERENCE_POSTERIOR_MEAN.tolist())))
    prior: dict | None = None
    synth: SynthBlock = field(default_factory=SynthBlock)
    sampler: SamplerBlock = field(default_factory=SamplerBlock)
    gp: GPBlock = field(default_factory=GPBlock)
    uq: UQBlock = field(default_factory=UQBlock)
    sobol: SobolBlock = field(default_factory=SobolBlock)
    paths: PathsBlock = field(default_factory=PathsBlock)
    seed: int = 0

    # -- construction ------------------------------------------------------
    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        kwargs = {}
        hints = {f.name: f for f in dataclasses.fields(cls)}
        for key, value in data.items():
            if key not in hints:
                raise ConfigError(f"unknown configuration key {key!r}")
            block_type = _BLOCKS.get(key)
            if block_type is not None:
                if not isinstance(value, dict):
                    raise ConfigError(f"{key!r} must be an object")
                allowed = {f.name for f in dataclasses.fields(block_type)}
                extra = set(value) - allowed
                if extra:
                    raise ConfigError(f"unknown keys in {key!r}: {sorted(extra)}")
                kwargs[key] = block_type(**value)
            else:
                kwargs[key] = value
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"configuration file {path} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    # -- derived objects ---------------------------------------------------
    def theta(self) -> np.ndarray:
        return np.array([float(self.parameters[n]) for n in PARAM_NAMES])

    def params(self) -> InterfaceParams:
        return InterfaceParams.from_vector(self.theta(), theta_ref=self.model.theta_ref)

    def build_prior(self) -> Prior:
        return default_prior() if self.prior is None else Prior.from_dict(self.prior)

    def stage_seed(self, block_name: str) -> int:
        """Seed of a stochastic block: its own ``seed`` if set, else derived
        from the global seed and the block name."""
        block = getattr(self, block_name)
        if block.seed is not None:
            return int(block.seed)
        ss = np.random.SeedSequence([int(self.seed), SEEDED_BLOCKS.index(block_name)])
        return int(ss.generate_state(1, dtype=np.uint32)[0])

    # -- validation --------------------------------------------------------
    def validate(self, stage: str | None = None) -> None:
        try:
            self.geometry.build()
            self.geometry.build(self.sampler.n_elem)
            self.params()
            self.build_prior()
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"invalid configuration: {exc}") from None
        missing = [n for n in PARAM_NAMES if n not in self.parameters]
        if missing:
            raise ConfigError(f"parameters missing {missing}")
        m = self.model
        if not m.rates or any(r <= 0 for r in m.rates):
            raise ConfigError("rates must be a non-empty list of positive values")
        if m.delta_max <= 0 or m.n_steps < 2:
            raise ConfigError("delta_max must be positive and n_steps >= 2")
        s = self.sampler
        if s.n_walkers % 2 or s.n_walkers < 2 * (len(PARAM_NAMES) + 1):
            raise ConfigError("n_walkers must be even and at least twice the dimension")
        if s.n_steps < 1 or not 0 <= s.burn_in < 1 or s.a <= 1:
            raise ConfigError("sampler needs n_steps >= 1, burn_in in [0, 1), a > 1")
        if s.noise_sigma is not None and s.noise_sigma <= 0:
            raise ConfigError("sampler.noise_sigma must be positive or null")
        if self.synth.noise_sigma < 0 or self.synth.n_points < 2:
            raise ConfigError("synth needs noise_sigma >= 0 and n_points >= 2")
        if self.gp.n_train < 3 or self.gp.nugget < 0:
            raise ConfigError("gp needs n_train >= 3 and nugget >= 0")
        if self.uq.n_samples < 2 or not all(0 < a < 1 for a in self.uq.alphas):
            raise ConfigError("uq needs n_samples >= 2 and alphas in (0, 1)")
        if self.sobol.n_base < 128 or self.sobol.sampling not in ("mc", "qmc"):
            raise ConfigError("sobol needs n_base >= 128 and sampling 'mc' or 'qmc'")
        if stage is not None:
            self._check_paths(stage)

    def _check_paths(self, stage: str) -> None:
        needs = {
            "calibrate": ["observations"],
            "discrepancy": ["observations", "summary"],
            "uq": ["observations", "samples", "summary", "gp_dir"],
        }.get(stage, [])
        for key in needs:
            value = getattr(self.paths, key)
            if value is None:
                raise ConfigError(f"stage {stage!r} needs paths.{key}")
            if not Path(value).exists():
                raise ConfigError(f"paths.{key} = {value} does not exist")


_BLOCKS = {
    "geometry": GeometryBlock, "model": ModelBlock, "synth": SynthBlock,
    "sampler": SamplerBlock, "gp": GPBlock, "uq": UQBlock, "sobol": SobolBlock,
    "paths": PathsBlock,
}
