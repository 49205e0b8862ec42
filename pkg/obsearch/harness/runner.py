"""Multi-seed experiment runs.

A run lives in ``out/{command}/{env}/{config-hash}/``. Each seed works in its own
``seed-{n}/`` directory, in-process or on a worker pool, and writes nothing
outside it. Curves are aggregated afterwards in the parent process, which also
writes every file at the run root.
"""
from __future__ import annotations

import logging
import math
import os
import shutil
import time
from collections import Counter
from dataclasses import dataclass
from multiprocessing import Pool
from pathlib import Path

import django
import numpy as np
import pandas as pd
from django.conf import settings
from django.utils import timezone

from observations.exceptions import ObsearchError
from observations.models import PresetName
from observations.observation import ObservationBuilder
from observations.presets import preset
from observations.serializer import write_space_json
from envs.rollout import dump_trajectory
from harness.aggregate import CURVE_COLUMNS, aggregate_curves, write_aggregates
from harness.exceptions import AllSeedsFailed, HarnessError, RunExistsError
from harness.models import Command, ExperimentConfig, RunRecord, SeedResult, Stream
from harness.plots import plot_counts, plot_curves
from harness.serializer import RunMetadataSerializer, SeedMetadataSerializer, write_json
from learner.exceptions import TrainingDiverged
from learner.sac import act, train
from permtest.importance import dropout_sweep, run_permtest
from permtest.plots import heatmap_export, sweep_heatmap_export
from search.algorithm import run_search

logger = logging.getLogger(__name__)


def derive_seed(root_seed: int, seed_index: int, stream: int) -> int:
    """Integer seed of one sub-stream of one run seed.

    ``SeedSequence(root_seed, spawn_key=(seed_index, stream))`` is the node a
    spawn tree rooted at ``root_seed`` has at that position, so the value does not
    depend on how many seeds or workers the run has.
    """
    sequence = np.random.SeedSequence(root_seed, spawn_key=(seed_index, int(stream)))
    return int(sequence.generate_state(1)[0])


def _finite(value):
    value = float(value)
    return value if math.isfinite(value) else None


@dataclass(frozen=True)
class SeedTask:
    config: ExperimentConfig
    seed_index: int
    seed_dir: Path


def _init_worker():
    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "obsearch.settings")
    django.setup()


def map_seeds(fn, tasks: list, workers: int = 1) -> list:
    """``[fn(t) for t in tasks]``, on a process pool when ``workers > 1``. Order is kept."""
    if workers <= 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]
    with Pool(min(workers, len(tasks)), initializer=_init_worker) as pool:
        return pool.map(fn, tasks)


def prepare_run_dir(path, force: bool = False) -> Path:
    path = Path(path)
    if path.exists() and any(path.iterdir()):
        if not force:
            raise RunExistsError(path)
        logger.warning("overwriting %s", path)
        shutil.rmtree(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _train_curve(result: SeedResult, label: str, env, space, steps: int, config, seed: int):
    try:
        model = train(env, space, steps, config, seed=seed)
    except TrainingDiverged as exc:
        logger.warning("seed %d %s failed: %s", result.seed_index, label, exc)
        result.failures[label] = str(exc)
        return None
    result.curves[label] = list(model.reward_history)
    return model


def _greedy_policy(model):
    """``state -> action`` for a trained model, keeping its observation history across one episode."""
    builder = ObservationBuilder(model.space)

    def policy(state):
        if state.t == 0:
            builder.reset()
        action = act(model, builder.observe(state))
        builder.record_action(action)
        return action

    return policy


def _bench_seed(task: SeedTask, env, result: SeedResult):
    config = task.config
    seed = derive_seed(config.root_seed, task.seed_index, Stream.LEARNER)
    result.extra["learner_seed"] = seed
    for name in config.presets:
        space = preset(name, env)
        model = _train_curve(result, name, env, space, config.training_steps, config.train, seed)
        if model is None:
            continue
        write_space_json(space, task.seed_dir / f"space-{name}.json")
        if config.trajectories:
            dump_trajectory(env, task.seed_dir / f"trajectory-{name}.csv", _greedy_policy(model), seed=seed)


def _search_seed(task: SeedTask, env, result: SeedResult):
    config = task.config
    search_seed = derive_seed(config.root_seed, task.seed_index, Stream.SEARCH)
    learner_seed = derive_seed(config.root_seed, task.seed_index, Stream.LEARNER)
    best, state = run_search(env, config.initial_space(env), config.search, seed=search_seed,
                             trace_path=task.seed_dir / "search-trace.jsonl")
    write_space_json(best, task.seed_dir / "space.json")
    result.extra.update(
        search_seed=search_seed,
        learner_seed=learner_seed,
        accepted_groups=state.accepted_groups,
        final_channels=best.channel_names,
        baseline_score=_finite(state.baseline_score),
        best_score=_finite(state.best_score),
        stop_reason=state.stop_reason,
        iterations=len(state.trace),
    )
    comparison = [("search", best.copy()), (PresetName.RS, preset(PresetName.RS, env)),
                  (PresetName.OAI, preset(PresetName.OAI, env))]
    for label, space in comparison:
        _train_curve(result, str(label), env, space, config.training_steps, config.search.train, learner_seed)


def _permtest_seed(task: SeedTask, env, result: SeedResult):
    config = task.config
    seed = derive_seed(config.root_seed, task.seed_index, Stream.PERMTEST)
    space = config.initial_space(env)
    report = run_permtest(env, space, config.permtest, seed=seed, steps=config.training_steps)
    heatmap_export(report, task.seed_dir / "importance.csv")
    result.curves["auxiliary"] = list(report.aux_history)
    result.extra.update(
        permtest_seed=seed,
        base_score=_finite(report.base_score),
        aux_return=_finite(report.aux_return),
        dropout_rate=report.dropout_rate,
        importances={k: _finite(v) for k, v in report.importances.items()},
        verdicts={k: str(v) for k, v in report.verdicts.items()},
    )
    if config.sweep:
        sweep = dropout_sweep(env, space, config.sweep_rates, config.permtest, seed=seed,
                              steps=config.training_steps)
        sweep_heatmap_export(sweep, task.seed_dir)
        for rate_report in sweep.reports:
            result.curves[f"d={rate_report.dropout_rate:g}"] = list(rate_report.aux_history)
        result.extra["sweep_returns"] = {f"{r.dropout_rate:g}": _finite(r.aux_return) for r in sweep.reports}


_SEED_RUNNERS = {
    Command.BENCH: _bench_seed,
    Command.SEARCH: _search_seed,
    Command.PERMTEST: _permtest_seed,
}


def run_seed(task: SeedTask) -> SeedResult:
    """Run one seed of ``task.config`` and write its private files."""
    started = time.perf_counter()
    task.seed_dir.mkdir(parents=True, exist_ok=True)
    result = SeedResult(task.seed_index)
    try:
        _SEED_RUNNERS[task.config.command](task, task.config.make_env(), result)
    except ObsearchError as exc:
        logger.warning("seed %d of %s failed: %s", task.seed_index, task.config.command, exc)
        result.failures[str(task.config.command)] = str(exc)
    result.wall_seconds = time.perf_counter() - started

    rows = [(label, step, ret) for label, curve in result.curves.items() for step, ret in curve]
    pd.DataFrame(rows, columns=["label", *CURVE_COLUMNS]).to_csv(task.seed_dir / "curves.csv", index=False)
    write_json(SeedMetadataSerializer, result, task.seed_dir / "metadata.json")
    logger.info("seed %d done in %.1fs: %d curves, %d failures", task.seed_index, result.wall_seconds,
                len(result.curves), len(result.failures))
    return result


def _seed_annotations(record: RunRecord, seeds: int) -> dict[str, str]:
    notes = {}
    for label, per_seed in record.curves.items():
        if len(per_seed) < seeds:
            logger.warning("%s: %s has %d of %d seeds", record.run_dir, label, len(per_seed), seeds)
            notes[label] = f"{len(per_seed)}/{seeds} seeds"
    return notes


def _search_summary(config: ExperimentConfig, results: list[SeedResult], run_dir: Path) -> dict[str, Path]:
    finished = [r for r in results if "accepted_groups" in r.extra]
    groups = Counter(g for r in finished for g in set(r.extra["accepted_groups"]))
    names = list(config.search.groups) + sorted(g for g in groups if g not in config.search.groups)
    selection = pd.DataFrame({"group": names, "count": [groups.get(g, 0) for g in names]})
    channels = Counter(c for r in finished for c in r.extra["final_channels"])
    final = pd.DataFrame(sorted(channels.items(), key=lambda kv: (-kv[1], kv[0])), columns=["channel", "count"])
    paths = {
        "selection_counts": run_dir / "selection-counts.csv",
        "final_channels": run_dir / "final-channels.csv",
    }
    selection.to_csv(paths["selection_counts"], index=False)
    final.to_csv(paths["final_channels"], index=False)
    paths["selection_plot"] = plot_counts(selection, run_dir / "selection-counts.png", "group", len(finished),
                                          title=f"groups accepted, {config.env_id}")
    return paths


def _permtest_summary(config: ExperimentConfig, results: list[SeedResult], run_dir: Path) -> dict[str, Path]:
    finished = [r for r in results if "importances" in r.extra]
    rows = [(r.seed_index, channel, value, r.extra["verdicts"][channel])
            for r in finished for channel, value in r.extra["importances"].items()]
    frame = pd.DataFrame(rows, columns=["seed", "channel", "importance", "verdict"])
    grouped = frame.groupby("channel", sort=False)
    summary = grouped["importance"].agg(["mean", "std", "count"]).rename(columns={"count": "n"})
    summary["stderr"] = (summary["std"] / np.sqrt(summary["n"])).where(summary["n"] > 1, 0.0)
    verdicts = pd.crosstab(frame["channel"], frame["verdict"]) if len(frame) else pd.DataFrame()
    summary = summary.drop(columns="std").join(verdicts).fillna({v: 0 for v in verdicts.columns})
    paths = {"importance_summary": run_dir / "importance-summary.csv"}
    summary.rename_axis("channel").reset_index().to_csv(paths["importance_summary"], index=False)

    sweeps = [(r.seed_index, float(rate), value) for r in finished
              for rate, value in r.extra.get("sweep_returns", {}).items()]
    if sweeps:
        sweep = pd.DataFrame(sweeps, columns=["seed", "dropout_rate", "aux_return"])
        table = sweep.groupby("dropout_rate", sort=False)["aux_return"].agg(["mean", "std", "count"])
        table["stderr"] = (table["std"] / np.sqrt(table["count"])).where(table["count"] > 1, 0.0)
        paths["sweep_summary"] = run_dir / "sweep-summary.csv"
        table.rename(columns={"count": "n"}).drop(columns="std").reset_index().to_csv(
            paths["sweep_summary"], index=False)
    return paths


_SUMMARIES = {
    Command.SEARCH: _search_summary,
    Command.PERMTEST: _permtest_summary,
}


def run_experiment(config: ExperimentConfig, force: bool = False) -> RunRecord:
    """Run every seed of ``config``, aggregate the completed ones and write the run files.

    Raises :class:`RunExistsError` for an existing run unless ``force`` and
    :class:`AllSeedsFailed` when no seed produced a curve.
    """
    if config.command not in _SEED_RUNNERS:
        raise HarnessError(f"{config.command!r} is not an experiment command")
    run_dir = prepare_run_dir(config.run_dir, force)
    record = RunRecord(command=config.command, env_id=config.env_id, config_hash=config.config_hash,
                       run_dir=run_dir, snapshot=config.snapshot, seeds=config.seeds,
                       bucket_steps=settings.OBSEARCH['BUCKET_STEPS'], started=timezone.now())
    logger.info("%s %s: %d seeds on %d workers into %s", config.command, config.env_id, config.seeds,
                config.workers, run_dir)
    tasks = [SeedTask(config, index, run_dir / f"seed-{index}") for index in range(config.seeds)]
    results = map_seeds(run_seed, tasks, config.workers)

    for result in results:
        for label, error in result.failures.items():
            record.failed_seeds.append({"seed": result.seed_index, "label": label, "error": error})
        for label, rows in result.curves.items():
            record.curves.setdefault(label, {})[result.seed_index] = pd.DataFrame(rows, columns=CURVE_COLUMNS)

    if all(result.failed for result in results):
        record.finished = timezone.now()
        write_json(RunMetadataSerializer, record, run_dir / "metadata.json")
        raise AllSeedsFailed(run_dir, record.failed_seeds)

    record.aggregates = {label: aggregate_curves(per_seed, record.bucket_steps, config.training_steps)
                         for label, per_seed in record.curves.items()}
    seed_counts = {label: len(per_seed) for label, per_seed in record.curves.items()}
    record.outputs.update(write_aggregates(record.aggregates, seed_counts, run_dir))
    record.outputs["plot"] = plot_curves(record.aggregates, run_dir / "curves.png",
                                         title=f"{config.command} {config.env_id}",
                                         annotations=_seed_annotations(record, config.seeds))
    if config.command in _SUMMARIES:
        record.outputs.update(_SUMMARIES[config.command](config, results, run_dir))
    record.finished = timezone.now()
    record.outputs["metadata"] = write_json(RunMetadataSerializer, record, run_dir / "metadata.json")
    logger.info("%s finished in %.1fs; %d failures", run_dir, record.wall_seconds, len(record.failed_seeds))
    return record


def _checked(config: ExperimentConfig, command: str) -> ExperimentConfig:
    if config.command != command:
        raise HarnessError(f"config is for {config.command!r}, not {command!r}")
    return config


def run_bench(config: ExperimentConfig, force: bool = False) -> RunRecord:
    """Train every preset on every seed and compare the learning curves."""
    return run_experiment(_checked(config, Command.BENCH), force)


def run_search_cmd(config: ExperimentConfig, force: bool = False) -> RunRecord:
    """Search on every seed, count accepted groups and retrain the found spaces against RS and OAI."""
    return run_experiment(_checked(config, Command.SEARCH), force)


def run_permtest_cmd(config: ExperimentConfig, force: bool = False) -> RunRecord:
    """Permutation test of ``config.space`` on every seed, optionally across the dropout sweep."""
    return run_experiment(_checked(config, Command.PERMTEST), force)
