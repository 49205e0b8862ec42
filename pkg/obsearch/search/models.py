from __future__ import annotations

from dataclasses import dataclass, field

from django.db import models

from observations.models import ObservationSpace
from observations.presets import SEARCH_GROUPS
from envs.models import EnvId
from learner.models import TrainConfig
from permtest.models import PermTestConfig
from search.exceptions import SearchConfigError


class Metric(models.TextChoices):
    TEST = "test", "Fresh evaluation episodes"
    ALL = "all", "All training episodes"
    HALF = "half", "Later half of training"


class Grouping(models.TextChoices):
    SEMANTIC = "semantic", "Semantic groups"
    RANDOM = "random", "Random channel subsets"


# Training steps per iteration when the config does not say.
DEFAULT_STEPS = {EnvId.PENDULUM: 30_000, EnvId.DIAGNOSTIC: 20_000}


@dataclass
class SearchConfig:
    metric: str = Metric.ALL
    grouping: str = Grouping.SEMANTIC
    steps: int = 200_000
    max_iterations: int | None = None
    patience: int = 5
    groups: list[str] = field(default_factory=lambda: list(SEARCH_GROUPS))
    prune: bool = True
    eval_episodes: int = 20
    train: TrainConfig | None = None
    permtest: PermTestConfig = field(default_factory=PermTestConfig)

    def __post_init__(self):
        if self.steps <= 0:
            raise SearchConfigError(f"search steps must be positive, got {self.steps}")
        if self.patience < 1:
            raise SearchConfigError(f"patience must be >= 1, got {self.patience}")
        if not self.groups:
            raise SearchConfigError("search needs at least one candidate group")
        unknown = [g for g in self.groups if g not in SEARCH_GROUPS]
        if unknown:
            raise SearchConfigError(f"unknown search groups {unknown}")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise SearchConfigError(f"max_iterations must be >= 1, got {self.max_iterations}")

    @classmethod
    def for_env(cls, env_id: str, **overrides) -> SearchConfig:
        overrides.setdefault("steps", DEFAULT_STEPS.get(env_id, 200_000))
        return cls(**overrides)

    def iteration_limit(self, group_count: int) -> int:
        return self.max_iterations or 3 * max(group_count, 1)


@dataclass
class TraceEntry:
    iteration: int
    group: str
    candidate_channels: list[str]
    score: float
    accepted: bool
    pruned: list[str] = field(default_factory=list)
    best_score: float = float("-inf")


@dataclass
class SearchState:
    best_obs: ObservationSpace
    best_score: float
    baseline_score: float = float("-inf")
    trace: list[TraceEntry] = field(default_factory=list)
    stop_reason: str = ""

    @property
    def accepted(self) -> list[TraceEntry]:
        return [e for e in self.trace if e.accepted]

    @property
    def accepted_groups(self) -> list[str]:
        return [e.group for e in self.accepted]
