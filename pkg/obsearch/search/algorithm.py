"""Add-only hill climbing over observation spaces.

Each iteration extends the best space with one candidate group, trains a fresh
model for K steps and keeps the candidate only if it scores strictly higher.
Accepted candidates are pruned with the dropout-permutation test before the
next proposal extends them.
"""
from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from observations.models import ObservationSpace, SensorGroup
from observations.presets import semantic_groups
from learner.exceptions import TrainingDiverged
from learner.sac import evaluate, train
from permtest.exceptions import PermTestError
from permtest.importance import prune, run_permtest
from search.exceptions import GroupsExhausted
from search.models import Grouping, Metric, SearchConfig, SearchState, TraceEntry
from search.serializer import append_trace

logger = logging.getLogger(__name__)


def accept(candidate_score: float, best_score: float) -> bool:
    return candidate_score > best_score


def score(model, metric: str, env=None, episodes: int = 20, evaluator=evaluate) -> float:
    """Scalar quality of a trained model; ``-inf`` when the metric has nothing to average."""
    if metric == Metric.TEST:
        return float(evaluator(model, env, episodes))
    history = model.reward_history
    if metric == Metric.HALF:
        history = [(step, r) for step, r in history if step >= model.steps / 2]
    if not history:
        return float("-inf")
    return float(np.mean([r for _, r in history]))


def iteration_seed(seed: int, iteration: int) -> int:
    """Training seed shared by every candidate trained at the same iteration index."""
    return int(np.random.SeedSequence([seed, iteration]).generate_state(1)[0])


def propose(env, best_obs: ObservationSpace, groups: list[SensorGroup], rng: np.random.Generator,
            grouping: str = Grouping.SEMANTIC) -> tuple[str, ObservationSpace]:
    """Return ``(label, best_obs plus one group)``; raises :class:`GroupsExhausted`."""
    registry = {c.name: c for c in env.channel_registry()}
    if grouping == Grouping.RANDOM:
        pool = [n for n in dict.fromkeys(m for g in groups for m in g.members) if n not in best_obs]
        if not pool:
            raise GroupsExhausted(f"every candidate channel is already in {best_obs.name!r}")
        size = min(len(pool), max(1, round(np.mean([len(g.members) for g in groups]))))
        picked = sorted(rng.choice(len(pool), size=size, replace=False))
        members = [pool[i] for i in picked]
        label = "random:" + ",".join(members)
    else:
        available = [g for g in groups if not g.contained_in(best_obs)]
        if not available:
            raise GroupsExhausted(f"every candidate group is already in {best_obs.name!r}")
        group = available[int(rng.integers(len(available)))]
        members, label = list(group.members), group.name
    return label, best_obs.union([registry[m] for m in members])


def run_search(env, init_space: ObservationSpace, config: SearchConfig, seed: int = 0,
               trace_path=None, trainer=train, permtester=run_permtest, evaluator=evaluate):
    """Search from ``init_space``; returns the best space and the full :class:`SearchState`."""
    groups = semantic_groups(env, config.groups)
    limit = config.iteration_limit(len(groups))
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5EA]))
    if trace_path is not None:
        trace_path = Path(trace_path)
        trace_path.parent.mkdir(parents=True, exist_ok=True)
        trace_path.write_text("")

    def trained_score(space, iteration):
        try:
            model = trainer(env, space, config.steps, config.train, seed=iteration_seed(seed, iteration))
        except TrainingDiverged as exc:
            logger.warning("search seed %d iteration %d: %s", seed, iteration, exc)
            return float("-inf")
        return score(model, config.metric, env, config.eval_episodes, evaluator)

    best = init_space.copy()
    baseline = trained_score(best, 0)
    state = SearchState(best_obs=best, best_score=baseline, baseline_score=baseline)
    logger.info("search %s seed=%d baseline %s score=%.3f", env.spec.env_id, seed, best.name, baseline)

    rejections = 0
    state.stop_reason = "max_iterations"
    for iteration in range(1, limit + 1):
        try:
            label, candidate = propose(env, state.best_obs, groups, rng, config.grouping)
        except GroupsExhausted as exc:
            logger.info("search seed=%d stops: %s", seed, exc)
            state.stop_reason = "exhausted"
            break
        candidate = candidate.copy(name=f"{init_space.name}+search-{iteration}")
        candidate_score = trained_score(candidate, iteration)
        accepted = accept(candidate_score, state.best_score)
        removed: list[str] = []
        if accepted:
            state.best_score = candidate_score
            kept = candidate
            if config.prune:
                kept = _pruned(env, candidate, config, iteration_seed(seed, iteration), permtester)
                removed = [n for n in candidate.channel_names if n not in kept]
            state.best_obs = kept
            rejections = 0
        else:
            rejections += 1

        entry = TraceEntry(iteration=iteration, group=label, candidate_channels=candidate.channel_names,
                           score=candidate_score, accepted=accepted, pruned=removed,
                           best_score=state.best_score)
        state.trace.append(entry)
        if trace_path is not None:
            append_trace(entry, trace_path)
        logger.info("search seed=%d iter=%d +%s score=%.3f %s%s", seed, iteration, label, candidate_score,
                    "accepted" if accepted else "rejected", f" pruned={removed}" if removed else "")
        if rejections >= config.patience:
            state.stop_reason = "patience"
            break
    return state.best_obs, state


def _pruned(env, candidate, config, seed, permtester):
    try:
        report = permtester(env, candidate, config.permtest, seed=seed, steps=config.steps)
    except PermTestError as exc:
        logger.warning("keeping %s unpruned: %s", candidate.name, exc)
        return candidate
    return prune(candidate, report, config.permtest)
