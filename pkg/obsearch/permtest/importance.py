"""Dropout-permutation test.

An auxiliary policy is trained with input dropout so it tolerates missing
coordinates. Each channel is then replaced, one at a time, by uniform draws from
its recorded range; the relative change of the evaluation score is the channel's
importance. Negative means the channel carries information the policy needs,
positive means the policy does better without it.
"""
from __future__ import annotations

import dataclasses
import logging

import numpy as np

from observations.models import ObservationSpace
from observations.observation import ChannelOverride, RangeSampler
from learner.exceptions import TrainingDiverged
from learner.sac import evaluate, train
from permtest.exceptions import PermTestError
from permtest.models import ImportanceReport, PermTestConfig, SweepResult, Verdict

logger = logging.getLogger(__name__)


def compute_importance(score: float, base_score: float) -> float:
    if base_score > 0.0:
        return (score - base_score) / base_score
    # a non-positive base would flip the sign of the ratio
    return (score - base_score) / (abs(base_score) + 1.0)


def classify(importance: float, threshold: float) -> str:
    if importance <= -threshold:
        return Verdict.ESSENTIAL
    if importance >= threshold:
        return Verdict.MALICIOUS
    return Verdict.NEUTRAL


def run_permtest(env, space: ObservationSpace, config: PermTestConfig, seed: int = 0,
                 steps: int | None = None, trainer=train, evaluator=evaluate) -> ImportanceReport:
    steps = config.aux_train_steps or steps
    if not steps:
        raise PermTestError("no training length for the auxiliary model: set aux_train_steps or pass steps")
    try:
        model = trainer(env, space.copy(), steps, config.train, dropout=config.dropout_rate, seed=seed)
    except TrainingDiverged as exc:
        raise PermTestError(f"auxiliary model failed to train: {exc}") from exc

    episodes = config.eval_episodes
    base = evaluator(model, env, episodes)
    importances, verdicts, scores = {}, {}, {}
    for channel in model.space.channels:
        override = ChannelOverride(channel.name, RangeSampler(channel))
        score = evaluator(model, env, episodes, override)
        importance = compute_importance(score, base)
        scores[channel.name] = score
        importances[channel.name] = importance
        verdicts[channel.name] = classify(importance, config.keep_threshold)
        logger.info("permtest %s d=%.2f %s: score=%.3f importance=%+.3f %s", space.name,
                    config.dropout_rate, channel.name, score, importance, verdicts[channel.name])

    history = [r for _, r in model.reward_history]
    return ImportanceReport(
        base_score=base,
        importances=importances,
        verdicts=verdicts,
        dropout_rate=config.dropout_rate,
        threshold=config.keep_threshold,
        seed=seed,
        scores=scores,
        aux_return=float(np.mean(history)) if history else float("nan"),
        aux_history=list(model.reward_history),
    )


def prune(space: ObservationSpace, report: ImportanceReport, config: PermTestConfig | None = None) -> ObservationSpace:
    """Keep only essential channels; never return an empty space."""
    missing = [name for name in space.channel_names if name not in report.importances]
    if missing:
        raise PermTestError(f"report has no importance for channels {missing}")
    threshold = config.keep_threshold if config is not None else report.threshold
    keep = [n for n in space.channel_names if classify(report.importances[n], threshold) == Verdict.ESSENTIAL]
    if not keep:
        best = min(space.channel_names, key=lambda n: report.importances[n])
        logger.warning("no channel of %s is essential; keeping %s (importance %+.3f)",
                       space.name, best, report.importances[best])
        keep = [best]
    removed = [n for n in space.channel_names if n not in keep]
    return space.without(removed)


def dropout_sweep(env, space: ObservationSpace, rates, config: PermTestConfig, seed: int = 0,
                  steps: int | None = None, trainer=train, evaluator=evaluate) -> SweepResult:
    reports = []
    for rate in rates:
        rate_config = dataclasses.replace(config, dropout_rate=float(rate))
        reports.append(run_permtest(env, space, rate_config, seed, steps, trainer, evaluator))
        logger.info("sweep d=%.2f: auxiliary return %.3f", rate, reports[-1].aux_return)
    return SweepResult(reports)
