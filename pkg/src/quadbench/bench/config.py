"""Suite configuration and its JSON form."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..backend.optimizer import OptimizerConfig
from ..envgen.maze import MazeSpec
from ..envgen.obstacles import ObstacleSpec
from ..envgen.scenario import DEFAULT_INFLATION, DEFAULT_MIN_SEPARATION
from ..errors import ConfigError
from ..frontend.common import PlannerBudget
from ..world import Bounds, QuadrotorSpec

FRONTENDS = ("jps", "rrt_star", "mpl")
BACKENDS = ("flatness", "none")
FAMILIES = ("maze", "obstacle")


@dataclass(frozen=True)
class FamilyConfig:
    """``count`` feasible cases of one family; ``spec`` overrides the family defaults."""

    family: str
    count: int
    spec: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if not isinstance(self.count, int) or self.count < 0:
            raise ConfigError("family count must be a non-negative integer")
        self.make_spec(0)

    def make_spec(self, seed: int):
        cls = MazeSpec if self.family == "maze" else ObstacleSpec
        d = {k: v for k, v in self.spec.items() if k != "seed"}
        try:
            return cls.from_dict(d | {"seed": seed})
        except TypeError as e:
            raise ConfigError(f"bad {self.family} spec: {e}") from None


@dataclass(frozen=True)
class SuiteConfig:
    families: tuple[FamilyConfig, ...]
    planners: tuple[tuple[str, str], ...]
    seed_base: int = 0
    quad: QuadrotorSpec = QuadrotorSpec()
    budget: PlannerBudget = PlannerBudget()
    inflation: float = DEFAULT_INFLATION
    parallelism: int = 1
    bounds: Bounds = Bounds()
    min_separation: float = DEFAULT_MIN_SEPARATION
    simplify: bool = True
    optimizer: OptimizerConfig = OptimizerConfig()
    # Seeds tried per requested case before giving up on a family.
    max_attempts_factor: int = 10

    def __post_init__(self):
        fams = tuple(f if isinstance(f, FamilyConfig) else FamilyConfig(**f) for f in self.families)
        object.__setattr__(self, "families", fams)
        pairs = tuple(tuple(p) for p in self.planners)
        object.__setattr__(self, "planners", pairs)
        if not fams or sum(f.count for f in fams) == 0:
            raise ConfigError("a suite needs at least one case")
        if not pairs:
            raise ConfigError("a suite needs at least one planner pair")
        for pair in pairs:
            if len(pair) != 2 or pair[0] not in FRONTENDS or pair[1] not in BACKENDS:
                raise ConfigError(f"bad planner pair {pair!r}; front-ends {FRONTENDS}, back-ends {BACKENDS}")
        if not isinstance(self.parallelism, int) or self.parallelism < 1:
            raise ConfigError("parallelism must be a positive integer")
        if self.inflation < 0:
            raise ConfigError("inflation must be non-negative")
        if self.max_attempts_factor < 1:
            raise ConfigError("max_attempts_factor must be >= 1")

    def to_dict(self) -> dict:
        return {
            "families": [asdict(f) for f in self.families],
            "planners": [list(p) for p in self.planners],
            "seed_base": self.seed_base,
            "quad": asdict(self.quad),
            "budget": asdict(self.budget),
            "inflation": self.inflation,
            "parallelism": self.parallelism,
            "bounds": self.bounds.to_dict(),
            "min_separation": self.min_separation,
            "simplify": self.simplify,
            "optimizer": self.optimizer.to_dict(),
            "max_attempts_factor": self.max_attempts_factor,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SuiteConfig":
        if not isinstance(d, dict):
            raise ConfigError("suite config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown suite config fields: {sorted(unknown)}")
        kw = dict(d)
        try:
            if "families" in kw:
                kw["families"] = tuple(FamilyConfig(**f) for f in kw["families"])
            if "quad" in kw:
                kw["quad"] = QuadrotorSpec(**kw["quad"])
            if "budget" in kw:
                kw["budget"] = PlannerBudget(**kw["budget"])
            if "bounds" in kw:
                kw["bounds"] = Bounds.from_dict(kw["bounds"])
            if "optimizer" in kw:
                kw["optimizer"] = OptimizerConfig(**kw["optimizer"])
            return cls(**kw)
        except (TypeError, KeyError) as e:
            raise ConfigError(f"bad suite config: {e}") from None

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def load(cls, path) -> "SuiteConfig":
        try:
            d = json.loads(Path(path).read_text())
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON: {e}") from None
        return cls.from_dict(d)
