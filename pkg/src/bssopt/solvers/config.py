from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field, replace

from ..coverage import EvaluationReport
from ..model import Deployment, InputError


class SolverConfigError(InputError):
    """Solver configuration is invalid or cannot be applied to the instance."""


class Algorithm(enum.Enum):
    GREEDY = "greedy"
    SA = "sa"
    PSO = "pso"


class ObjectiveMode(enum.Enum):
    COST_FIRST = "cost"
    COVERAGE_FIRST = "coverage"

    @classmethod
    def parse(cls, value) -> "ObjectiveMode":
        if isinstance(value, cls):
            return value
        key = str(value).replace("_", "").replace("-", "").lower()
        aliases = {"cost": cls.COST_FIRST, "costfirst": cls.COST_FIRST,
                   "coverage": cls.COVERAGE_FIRST, "coveragefirst": cls.COVERAGE_FIRST}
        if key not in aliases:
            raise SolverConfigError(f"unknown objective mode {value!r}")
        return aliases[key]


@dataclass(frozen=True)
class SAParams:
    t0: float | None = None  # None: 10 * C_h of the instance
    alpha: float = 0.95
    moves_per_temp: int = 50


@dataclass(frozen=True)
class PSOParams:
    swarm_size: int = 40
    inertia: float = 0.72
    c1: float = 1.49
    c2: float = 1.49
    v_max: float = 4.0


@dataclass(frozen=True)
class SolverConfig:
    algorithm: Algorithm = Algorithm.GREEDY
    seed: int = 0
    max_evaluations: int = 20000
    objective_mode: ObjectiveMode = ObjectiveMode.COST_FIRST
    penalty_weight: float = 1000.0
    coverage_epsilon: float = 1e-3
    sa: SAParams = field(default_factory=SAParams)
    pso: PSOParams = field(default_factory=PSOParams)

    def __post_init__(self):
        object.__setattr__(self, "algorithm", _parse_algorithm(self.algorithm))
        object.__setattr__(self, "objective_mode", ObjectiveMode.parse(self.objective_mode))
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise SolverConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if not isinstance(self.max_evaluations, int) or self.max_evaluations <= 0:
            raise SolverConfigError("max_evaluations must be a positive integer")
        _positive("penalty_weight", self.penalty_weight)
        _positive("coverage_epsilon", self.coverage_epsilon)
        if self.sa.t0 is not None:
            _positive("sa.t0", self.sa.t0)
        if not 0 < self.sa.alpha < 1:
            raise SolverConfigError("sa.alpha must lie strictly inside (0, 1)")
        if not isinstance(self.sa.moves_per_temp, int) or self.sa.moves_per_temp <= 0:
            raise SolverConfigError("sa.moves_per_temp must be a positive integer")
        if not isinstance(self.pso.swarm_size, int) or self.pso.swarm_size <= 0:
            raise SolverConfigError("pso.swarm_size must be a positive integer")
        _positive("pso.v_max", self.pso.v_max)
        for name in ("inertia", "c1", "c2"):
            if not math.isfinite(getattr(self.pso, name)):
                raise SolverConfigError(f"pso.{name} must be finite")

    def replace(self, **changes) -> "SolverConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm.value,
            "seed": self.seed,
            "max_evaluations": self.max_evaluations,
            "objective_mode": self.objective_mode.value,
            "penalty_weight": self.penalty_weight,
            "coverage_epsilon": self.coverage_epsilon,
            "sa": asdict(self.sa),
            "pso": asdict(self.pso),
        }

    @classmethod
    def from_dict(cls, d: dict, **overrides) -> "SolverConfig":
        """Build from a JSON-style mapping; absent keys keep their defaults."""
        if not isinstance(d, dict):
            raise SolverConfigError("solver config must be a mapping")
        known = {"algorithm", "seed", "max_evaluations", "objective_mode",
                 "penalty_weight", "coverage_epsilon", "sa", "pso"}
        kwargs = {k: v for k, v in d.items() if k in known}
        try:
            if "sa" in kwargs:
                kwargs["sa"] = SAParams(**kwargs["sa"])
            if "pso" in kwargs:
                kwargs["pso"] = PSOParams(**kwargs["pso"])
        except TypeError as exc:
            raise SolverConfigError(str(exc)) from None
        kwargs.update(overrides)
        return cls(**kwargs)


def _parse_algorithm(value) -> Algorithm:
    if isinstance(value, Algorithm):
        return value
    try:
        return Algorithm(str(value).lower())
    except ValueError:
        raise SolverConfigError(f"unknown algorithm {value!r}") from None


def _positive(name, value):
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise SolverConfigError(f"{name} must be a positive number, got {value!r}")


@dataclass(frozen=True)
class SolveResult:
    deployment: Deployment
    report: EvaluationReport
    evaluations_used: int
    wall_time: float  # seconds, solver only
    trace: tuple[tuple[int, float], ...] | None = None
    coverage_trace: tuple[float, ...] | None = None
