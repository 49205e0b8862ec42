from __future__ import annotations

from dataclasses import dataclass, field

import pandas as pd
from django.db import models

from learner.models import TrainConfig
from permtest.exceptions import PermTestError


class Verdict(models.TextChoices):
    ESSENTIAL = "essential", "Essential"
    NEUTRAL = "neutral", "Neutral"
    MALICIOUS = "malicious", "Malicious"


@dataclass
class PermTestConfig:
    """``aux_train_steps=None`` trains the auxiliary model for the caller's K steps."""

    dropout_rate: float = 0.1
    eval_episodes: int = 100
    keep_threshold: float = 0.05
    aux_train_steps: int | None = None
    train: TrainConfig | None = None

    def __post_init__(self):
        if not 0.0 <= self.dropout_rate < 1.0:
            raise PermTestError(f"dropout rate must lie in [0, 1), got {self.dropout_rate}")
        if self.keep_threshold <= 0.0:
            raise PermTestError(f"keep threshold must be positive, got {self.keep_threshold}")
        if self.eval_episodes < 1:
            raise PermTestError(f"eval_episodes must be >= 1, got {self.eval_episodes}")
        if self.aux_train_steps is not None and self.aux_train_steps < 1:
            raise PermTestError(f"aux_train_steps must be >= 1, got {self.aux_train_steps}")


@dataclass
class ImportanceReport:
    base_score: float
    importances: dict[str, float]
    verdicts: dict[str, str]
    dropout_rate: float
    threshold: float
    seed: int = 0
    scores: dict[str, float] = field(default_factory=dict)
    aux_return: float = float("nan")
    aux_history: list[tuple[int, float]] = field(default_factory=list)

    @property
    def channels(self) -> list[str]:
        return list(self.importances)

    def frame(self) -> pd.DataFrame:
        rows = [(name, self.importances[name], self.verdicts[name]) for name in self.importances]
        return pd.DataFrame(rows, columns=["channel", "importance", "verdict"])


@dataclass
class SweepResult:
    """One report per dropout rate, in the order the rates were given."""

    reports: list[ImportanceReport]

    @property
    def rates(self) -> list[float]:
        return [r.dropout_rate for r in self.reports]

    def importance_matrix(self) -> pd.DataFrame:
        columns = {r.dropout_rate: pd.Series(r.importances) for r in self.reports}
        return pd.DataFrame(columns).rename_axis(index="channel", columns="dropout_rate")

    def aux_returns(self) -> pd.DataFrame:
        return pd.DataFrame({"dropout_rate": self.rates, "aux_return": [r.aux_return for r in self.reports]})
