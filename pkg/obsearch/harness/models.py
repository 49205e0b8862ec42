from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

import pandas as pd
from django.db import models

from observations.models import ObservationSpace, PresetName
from observations.presets import preset, space_from_names
from envs.registry import make_env
from harness.exceptions import HarnessError
from learner.models import TrainConfig
from permtest.models import PermTestConfig
from search.models import DEFAULT_STEPS, SearchConfig


class Command(models.TextChoices):
    BENCH = "bench", "Benchmark presets"
    SEARCH = "search", "Observation search"
    PERMTEST = "permtest", "Dropout-permutation test"
    REPORT = "report", "Report"


class Stream(models.IntegerChoices):
    """Sub-streams of one run seed. Environment episodes use a child of the learner stream."""

    LEARNER = 0, "Learner"
    SEARCH = 1, "Search"
    PERMTEST = 2, "Permutation test"


def content_hash(snapshot: dict) -> str:
    """Git blob hash of the canonical JSON of ``snapshot``, first 12 hex digits."""
    content = json.dumps(snapshot, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha1(b"blob %d\0" % len(content) + content).hexdigest()[:12]


@dataclass
class ExperimentConfig:
    command: str
    env_id: str
    env_options: dict = field(default_factory=dict)
    presets: list[str] = field(default_factory=list)
    space: str = PresetName.RS
    channels: list[str] = field(default_factory=list)
    steps: int | None = None
    seeds: int = 10
    root_seed: int = 0
    workers: int = 1
    out_dir: str = "out"
    sweep: bool = False
    trajectories: bool = False
    sweep_rates: list[float] = field(default_factory=list)
    train: TrainConfig | None = None
    search: SearchConfig | None = None
    permtest: PermTestConfig | None = None
    snapshot: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.seeds < 1:
            raise HarnessError(f"seeds must be >= 1, got {self.seeds}")
        if self.workers < 1:
            raise HarnessError(f"workers must be >= 1, got {self.workers}")
        if self.command == Command.SEARCH and self.search is None:
            self.search = SearchConfig.for_env(self.env_id, **({"steps": self.steps} if self.steps else {}))
        if self.permtest is None:
            self.permtest = PermTestConfig()

    @property
    def training_steps(self) -> int:
        if self.steps:
            return self.steps
        if self.search is not None:
            return self.search.steps
        return DEFAULT_STEPS.get(self.env_id, SearchConfig.steps)

    @property
    def config_hash(self) -> str:
        return content_hash(self.snapshot)

    @property
    def run_dir(self) -> Path:
        return Path(self.out_dir) / self.command / self.env_id / self.config_hash

    def make_env(self):
        return make_env(self.env_id, **self.env_options)

    def initial_space(self, env) -> ObservationSpace:
        """The space search starts from and permtest examines: explicit ``channels`` win over ``space``."""
        if self.channels:
            return space_from_names(env, self.channels, name="custom")
        return preset(self.space, env)


@dataclass
class SeedResult:
    """What one seed hands back to the parent process; ``curves`` maps label to (step, return) rows."""

    seed_index: int
    curves: dict[str, list[tuple[int, float]]] = field(default_factory=dict)
    failures: dict[str, str] = field(default_factory=dict)
    wall_seconds: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def labels(self) -> list[str]:
        return list(self.curves)

    @property
    def failed(self) -> bool:
        return not self.curves


@dataclass
class RunRecord:
    command: str
    env_id: str
    config_hash: str
    run_dir: Path
    snapshot: dict
    bucket_steps: int
    seeds: int = 0
    curves: dict[str, dict[int, pd.DataFrame]] = field(default_factory=dict)
    aggregates: dict[str, pd.DataFrame] = field(default_factory=dict)
    failed_seeds: list[dict] = field(default_factory=list)
    started: datetime | None = None
    finished: datetime | None = None
    outputs: dict[str, Path] = field(default_factory=dict)

    @property
    def labels(self) -> list[str]:
        return list(self.curves)

    @property
    def completed_seeds(self) -> list[int]:
        return sorted({seed for per_seed in self.curves.values() for seed in per_seed})

    @property
    def wall_seconds(self) -> float:
        if self.started is None or self.finished is None:
            return 0.0
        return (self.finished - self.started).total_seconds()
