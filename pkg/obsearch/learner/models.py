from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import pandas as pd

from envs.models import EnvId
from learner.exceptions import LearnerError

if TYPE_CHECKING:
    from observations.models import ObservationSpace
    from learner.buffer import ReplayBuffer
    from learner.sac import SoftActorCritic


@dataclass
class TrainConfig:
    """Learner hyperparameters.

    Only the learning rate and network sizes come from the published setup; batch
    size, discount, smoothing, warmup and buffer capacity are local choices.
    """

    learning_rate: float = 0.003
    hidden_sizes: tuple[int, ...] = (256, 256)
    batch_size: int = 256
    gamma: float = 0.99
    tau: float = 0.005
    steps_per_update: int = 1
    warmup_steps: int = 1000
    buffer_capacity: int = 100_000
    eval_episodes: int = 20

    def __post_init__(self):
        self.hidden_sizes = tuple(int(h) for h in self.hidden_sizes)
        positive = {
            "learning_rate": self.learning_rate, "batch_size": self.batch_size, "tau": self.tau,
            "steps_per_update": self.steps_per_update, "warmup_steps": self.warmup_steps,
            "buffer_capacity": self.buffer_capacity, "eval_episodes": self.eval_episodes,
        }
        bad = [name for name, value in positive.items() if value <= 0]
        if not self.hidden_sizes or min(self.hidden_sizes) <= 0:
            bad.append("hidden_sizes")
        if bad:
            raise LearnerError(f"train config fields must be positive: {', '.join(bad)}")
        if not 0.0 < self.gamma < 1.0:
            raise LearnerError(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.tau > 1.0:
            raise LearnerError(f"tau must be <= 1, got {self.tau}")

    @classmethod
    def for_env(cls, env_id: str, **overrides) -> TrainConfig:
        if env_id == EnvId.PENDULUM:
            overrides.setdefault("hidden_sizes", (64, 64))
        return cls(**overrides)


@dataclass
class TrainedModel:
    agent: SoftActorCritic
    space: ObservationSpace
    config: TrainConfig
    reward_history: list[tuple[int, float]] = field(default_factory=list)
    dropout_rate: float = 0.0
    seed: int = 0
    steps: int = 0
    action_low: tuple[float, ...] = ()
    action_high: tuple[float, ...] = ()
    buffer: ReplayBuffer | None = field(default=None, repr=False)

    @property
    def alpha(self) -> float:
        return self.agent.alpha

    def history_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.reward_history, columns=["step", "return"])
