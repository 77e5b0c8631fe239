"""Configuration dataclasses, default values and JSON (de)serialization.

Defaults reproduce the published experimental setup: 30 agents in a 500 m
square fence flying at 6 m/s with 0.2 s communication delay.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import ConfigError

PARAM_NAMES = (
    "r0_rep",
    "p_rep",
    "r0_frict",
    "a_frict",
    "p_frict",
    "v_frict",
    "c_frict",
    "r0_shill",
    "v_shill",
    "a_shill",
    "p_shill",
    "c_shill",
)

# Optimization box, (lower, upper) per decision variable.
PARAM_BOUNDS = {
    "r0_rep": (30.8, 51.0),
    "p_rep": (0.02, 0.10),
    "r0_frict": (58.5, 100.0),
    "a_frict": (5.04, 10.0),
    "p_frict": (0.38, 9.67),
    "v_frict": (0.3, 2.7),
    "c_frict": (0.03, 0.22),
    "r0_shill": (-10.0, 0.0),
    "v_shill": (10.0, 15.0),
    "a_shill": (1.54, 6.55),
    "p_shill": (0.48, 9.96),
    "c_shill": (0.3, 1.0),
}


def bounds_arrays(bounds: dict | None = None) -> tuple[np.ndarray, np.ndarray]:
    bounds = PARAM_BOUNDS if bounds is None else bounds
    lower = np.array([bounds[name][0] for name in PARAM_NAMES], dtype=float)
    upper = np.array([bounds[name][1] for name in PARAM_NAMES], dtype=float)
    return lower, upper


@dataclass(frozen=True)
class FlockParams:
    """The twelve controller gains, cutoffs and slopes."""

    r0_rep: float
    p_rep: float
    r0_frict: float
    a_frict: float
    p_frict: float
    v_frict: float
    c_frict: float
    r0_shill: float
    v_shill: float
    a_shill: float
    p_shill: float
    c_shill: float

    def __post_init__(self):
        for name in PARAM_NAMES:
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ConfigError(f"parameter {name} must be finite, got {value}")

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in PARAM_NAMES], dtype=float)

    @classmethod
    def from_array(cls, values) -> "FlockParams":
        values = np.asarray(values, dtype=float)
        if values.shape != (len(PARAM_NAMES),):
            raise ConfigError(f"expected {len(PARAM_NAMES)} parameters, got shape {values.shape}")
        return cls(**{name: float(v) for name, v in zip(PARAM_NAMES, values)})

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    @classmethod
    def from_dict(cls, data: dict) -> "FlockParams":
        missing = [name for name in PARAM_NAMES if name not in data]
        unknown = sorted(set(data) - set(PARAM_NAMES))
        if missing or unknown:
            raise ConfigError(f"flock parameters: missing {missing}, unknown {unknown}")
        return cls(**{name: float(data[name]) for name in PARAM_NAMES})

    def in_bounds(self, bounds: dict | None = None) -> bool:
        lower, upper = bounds_arrays(bounds)
        x = self.to_array()
        return bool(np.all(x >= lower) and np.all(x <= upper))


# Extreme points of the published Pareto front. Point B lies outside the
# optimization box in v_frict and c_frict; it is used as given.
POINT_A = FlockParams(
    r0_rep=33.69, p_rep=0.023, r0_frict=59.26, a_frict=5.38, p_frict=4.62, v_frict=1.73,
    c_frict=0.035, r0_shill=-2.45, v_shill=12.93, a_shill=4.84, p_shill=4.83, c_shill=0.55,
)
POINT_B = FlockParams(
    r0_rep=33.45, p_rep=0.028, r0_frict=58.95, a_frict=8.223, p_frict=2.67, v_frict=3.00,
    c_frict=1.84, r0_shill=-0.21, v_shill=12.93, a_shill=2.57, p_shill=1.30, c_shill=0.43,
)


@dataclass(frozen=True)
class SimConfig:
    n_agents: int = 30
    arena_side: float = 500.0
    v_flock: float = 6.0
    v_max: float = 6.0
    t_del: float = 0.2
    sigma_inner: float = 0.005
    r_coll: float = 3.0
    r_comm: float = 80.0
    dt: float = 0.05
    duration: float = 300.0
    seed: int = 0
    a_max: float = 6.0
    tau_gps: float = 1.0

    def __post_init__(self):
        if self.n_agents < 2:
            raise ConfigError("n_agents must be >= 2")
        if not self.arena_side > 0:
            raise ConfigError("arena_side must be positive")
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        # t_del == 0 is accepted as an undelayed link.
        if self.t_del < 0 or (self.t_del > 0 and self.dt > self.t_del + 1e-12):
            raise ConfigError("require t_del == 0 or 0 < dt <= t_del")
        if not (self.v_max >= self.v_flock > 0):
            raise ConfigError("require v_max >= v_flock > 0")
        if self.duration < 10 * self.t_del or self.duration < self.dt:
            raise ConfigError("duration must cover at least 10 delays and one step")
        if self.sigma_inner < 0 or self.r_coll < 0 or self.r_comm < 0:
            raise ConfigError("sigma_inner, r_coll and r_comm must be nonnegative")
        if not (self.a_max > 0 and self.tau_gps > 0):
            raise ConfigError("a_max and tau_gps must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.duration / self.dt + 1e-9))

    @property
    def delay_steps(self) -> int:
        return int(math.ceil(self.t_del / self.dt - 1e-9))

    def replace(self, **changes) -> "SimConfig":
        data = asdict(self)
        data.update(changes)
        return SimConfig(**data)


@dataclass(frozen=True)
class TransferParams:
    v_tol: float = 3.75
    a_tol: float = 0.0003
    r_tol: float = 5.0
    # None means n_agents / 5.
    n_tol: float | None = None

    def __post_init__(self):
        values = [self.v_tol, self.a_tol, self.r_tol]
        if self.n_tol is not None:
            values.append(self.n_tol)
        if any(not v > 0 for v in values):
            raise ConfigError("transfer tolerances must be positive")

    def agent_tol(self, n_agents: int) -> float:
        return self.n_tol if self.n_tol is not None else n_agents / 5.0


@dataclass(frozen=True)
class EvolutionConfig:
    pop_size: int = 100
    generations: int = 50
    crossover_prob: float = 0.9
    crossover_eta: float = 15.0
    mutation_prob: float | None = None  # None means 1 / n_var
    mutation_eta: float = 20.0
    tournament_size: int = 2
    evals_per_individual: int = 1
    master_seed: int = 0

    def __post_init__(self):
        if self.pop_size < 2 or self.pop_size % 2:
            raise ConfigError("pop_size must be even and >= 2")
        if self.generations < 0:
            raise ConfigError("generations must be >= 0")
        if self.tournament_size < 2:
            raise ConfigError("tournament_size must be >= 2")
        if not 0 <= self.crossover_prob <= 1:
            raise ConfigError("crossover_prob must lie in [0, 1]")
        if self.mutation_prob is not None and not 0 <= self.mutation_prob <= 1:
            raise ConfigError("mutation_prob must lie in [0, 1]")
        if not (self.crossover_eta > 0 and self.mutation_eta > 0):
            raise ConfigError("distribution indices must be positive")
        if self.evals_per_individual < 1:
            raise ConfigError("evals_per_individual must be >= 1")


def _build(cls, data, section):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"section {section!r} must be a JSON object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"section {section!r}: unknown keys {unknown}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"section {section!r}: {exc}") from exc


@dataclass(frozen=True)
class RunConfig:
    """Everything a pipeline needs, as loaded from one JSON document."""

    sim: SimConfig = field(default_factory=SimConfig)
    transfer: TransferParams = field(default_factory=TransferParams)
    evolution: EvolutionConfig = field(default_factory=EvolutionConfig)
    bounds: dict = field(default_factory=lambda: dict(PARAM_BOUNDS))

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config document must be a JSON object")
        unknown = sorted(set(data) - {"sim", "transfer", "evolution", "bounds"})
        if unknown:
            raise ConfigError(f"unknown config sections {unknown}")
        bounds = dict(PARAM_BOUNDS)
        for name, pair in (data.get("bounds") or {}).items():
            if name not in PARAM_BOUNDS:
                raise ConfigError(f"bounds: unknown parameter {name!r}")
            lo, hi = (float(v) for v in pair)
            if not lo <= hi:
                raise ConfigError(f"bounds: {name} has lower > upper")
            bounds[name] = (lo, hi)
        return cls(
            sim=_build(SimConfig, data.get("sim"), "sim"),
            transfer=_build(TransferParams, data.get("transfer"), "transfer"),
            evolution=_build(EvolutionConfig, data.get("evolution"), "evolution"),
            bounds=bounds,
        )

    def to_dict(self) -> dict:
        return {
            "sim": asdict(self.sim),
            "transfer": asdict(self.transfer),
            "evolution": asdict(self.evolution),
            "bounds": {name: list(self.bounds[name]) for name in PARAM_NAMES},
        }


def read_json(path) -> dict:
    """Parse a JSON file; raise ConfigError with line/column on bad syntax."""
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def load_run_config(path=None) -> RunConfig:
    if path is None:
        return RunConfig()
    return RunConfig.from_dict(read_json(path))


def load_params(path) -> FlockParams:
    data = read_json(path)
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: flock parameters must be a JSON object")
    return FlockParams.from_dict(data)
