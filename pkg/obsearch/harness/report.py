"""Cross-run report over the run directories below one output directory."""
from __future__ import annotations

import json
import logging
from pathlib import Path

import pandas as pd
from rest_framework.exceptions import ValidationError

from harness.aggregate import CURVE_COLUMNS, aggregate_curves, comparison_table, long_frame, read_csv
from harness.exceptions import HarnessError
from harness.models import RunRecord
from harness.plots import plot_curves
from harness.serializer import RunMetadataSerializer

logger = logging.getLogger(__name__)


def find_runs(directory) -> list[Path]:
    """Directories holding a run-level ``metadata.json`` (seed directories excluded)."""
    return sorted(path.parent for path in Path(directory).rglob("metadata.json")
                  if not path.parent.name.startswith("seed-"))


def _seed_index(seed_dir: Path) -> int | None:
    try:
        return int(seed_dir.name.split("-", 1)[1])
    except (IndexError, ValueError):
        return None


def read_seed_curves(path) -> pd.DataFrame | None:
    path = Path(path)
    try:
        frame = read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        logger.warning("skipping %s: %s", path, exc)
        return None
    missing = {"label", *CURVE_COLUMNS} - set(frame.columns)
    if missing:
        logger.warning("skipping %s: missing columns %s", path, sorted(missing))
        return None
    if not pd.api.types.is_numeric_dtype(frame["step"]) or not pd.api.types.is_numeric_dtype(frame["return"]):
        logger.warning("skipping %s: non-numeric curve values", path)
        return None
    return frame


def load_run(run_dir) -> RunRecord | None:
    """Rebuild a :class:`RunRecord` from disk; ``None`` (with a warning) when the metadata is unusable."""
    run_dir = Path(run_dir)
    try:
        serializer = RunMetadataSerializer(data=json.loads((run_dir / "metadata.json").read_text()))
        serializer.is_valid(raise_exception=True)
    except (OSError, json.JSONDecodeError, ValidationError) as exc:
        logger.warning("skipping run %s: %s", run_dir, exc)
        return None
    data = serializer.validated_data
    record = RunRecord(
        command=data['command'],
        env_id=data['env_id'],
        config_hash=data['config_hash'],
        run_dir=run_dir,
        snapshot=dict(data['snapshot']),
        bucket_steps=data['bucket_steps'],
        seeds=data['seeds'],
        failed_seeds=[dict(f) for f in data['failed_seeds']],
        started=data['started'],
        finished=data['finished'],
    )
    seed_dirs = [(index, path) for path in run_dir.glob("seed-*") if (index := _seed_index(path)) is not None]
    for index, seed_dir in sorted(seed_dirs):
        frame = read_seed_curves(seed_dir / "curves.csv")
        if frame is None:
            continue
        for label, rows in frame.groupby("label", sort=False):
            record.curves.setdefault(str(label), {})[index] = rows[CURVE_COLUMNS].reset_index(drop=True)
    return record


def run_report(directory, out=None) -> dict[str, Path]:
    """Aggregate every run below ``directory`` and plot one overlay per environment.

    Bands use the seeds that are present; labels with missing seeds are
    annotated with ``n/N seeds``. Raises :class:`HarnessError` when there is no
    readable run.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise HarnessError(f"{directory} is not a directory")
    runs = [run for run in map(load_run, find_runs(directory)) if run is not None]
    if not runs:
        raise HarnessError(f"no run records under {directory}")
    out = Path(out) if out is not None else directory
    out.mkdir(parents=True, exist_ok=True)

    by_env: dict[str, dict[str, pd.DataFrame]] = {}
    notes: dict[str, dict[str, str]] = {}
    counts: dict[str, int] = {}
    for run in runs:
        for label, per_seed in run.curves.items():
            key = f"{run.command}:{label} [{run.config_hash[:6]}]"
            by_env.setdefault(run.env_id, {})[key] = aggregate_curves(per_seed, run.bucket_steps)
            counts[key] = len(per_seed)
            if len(per_seed) < run.seeds:
                logger.warning("%s %s: %d of %d seeds available", run.run_dir, label, len(per_seed), run.seeds)
                notes.setdefault(run.env_id, {})[key] = f"{len(per_seed)}/{run.seeds} seeds"

    paths: dict[str, Path] = {}
    tables, comparisons = [], []
    for env_id, aggregates in by_env.items():
        tables.append(long_frame(aggregates).assign(env=env_id))
        comparisons.append(comparison_table(aggregates, counts).assign(env=env_id))
        paths[f"plot:{env_id}"] = plot_curves(aggregates, out / f"report-{env_id}.png", title=env_id,
                                              annotations=notes.get(env_id))
    paths["aggregate"] = out / "report.csv"
    paths["comparison"] = out / "report-comparison.csv"
    if tables:
        pd.concat(tables, ignore_index=True).to_csv(paths["aggregate"], index=False)
        pd.concat(comparisons, ignore_index=True).to_csv(paths["comparison"], index=False)
    else:
        logger.warning("runs under %s hold no readable curves", directory)
        pd.DataFrame(columns=["label", "step", "mean", "stderr", "n", "env"]).to_csv(paths["aggregate"], index=False)
        pd.DataFrame(columns=["label", "seeds", "final_mean", "final_stderr", "auc", "env"]).to_csv(
            paths["comparison"], index=False)
    logger.info("report of %d runs written to %s", len(runs), out)
    return paths
