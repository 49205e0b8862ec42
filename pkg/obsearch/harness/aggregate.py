"""Learning-curve bucketing and statistics over seeds."""
from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import pandas as pd

from harness.exceptions import HarnessError

logger = logging.getLogger(__name__)

CURVE_COLUMNS = ["step", "return"]
AGGREGATE_COLUMNS = ["step", "mean", "stderr", "n"]


def read_csv(path, **kwargs) -> pd.DataFrame:
    """``pd.read_csv`` that gives back exactly the floats ``to_csv`` wrote."""
    return pd.read_csv(path, float_precision="round_trip", **kwargs)


def bucket_curve(curve: pd.DataFrame, bucket_steps: int, last_step: int | None = None) -> pd.Series:
    """Mean episode return per bucket of ``bucket_steps`` environment steps.

    An episode belongs to the bucket its final step falls in. Buckets without a
    finished episode repeat the previous bucket; buckets before the first
    episode are NaN.
    """
    if bucket_steps < 1:
        raise HarnessError(f"bucket width must be >= 1, got {bucket_steps}")
    if curve.empty:
        return pd.Series(dtype=float, name="return", index=pd.Index([], name="step", dtype=int))
    steps = curve["step"].to_numpy(dtype=np.int64)
    buckets = ((steps - 1) // bucket_steps + 1) * bucket_steps
    means = curve["return"].astype(float).groupby(buckets).mean()
    end = int(buckets.max()) if last_step is None else max(int(buckets.max()), last_step)
    index = pd.RangeIndex(bucket_steps, end + 1, bucket_steps, name="step")
    return means.reindex(index).ffill().rename("return")


def aggregate_curves(per_seed: dict[int, pd.DataFrame], bucket_steps: int,
                     last_step: int | None = None) -> pd.DataFrame:
    """Mean and standard error (ddof=1) of the bucketed curves of every seed given."""
    if not per_seed:
        return pd.DataFrame(columns=AGGREGATE_COLUMNS)
    table = pd.concat({seed: bucket_curve(per_seed[seed], bucket_steps, last_step) for seed in sorted(per_seed)},
                      axis=1)
    n = table.count(axis=1)
    mean = table.mean(axis=1)
    stderr = (table.std(axis=1, ddof=1) / np.sqrt(n)).where(n > 1, 0.0)
    frame = pd.DataFrame({"mean": mean, "stderr": stderr, "n": n}).dropna(subset=["mean"])
    return frame.rename_axis("step").reset_index()[AGGREGATE_COLUMNS]


def curve_auc(aggregate: pd.DataFrame) -> float:
    """Trapezoidal area under the mean curve."""
    if len(aggregate) < 2:
        return 0.0
    return float(np.trapezoid(aggregate["mean"].to_numpy(dtype=float), aggregate["step"].to_numpy(dtype=float)))


def comparison_table(aggregates: dict[str, pd.DataFrame], seed_counts: dict[str, int]) -> pd.DataFrame:
    rows = []
    for label, frame in aggregates.items():
        last = frame.iloc[-1] if len(frame) else None
        rows.append({
            "label": label,
            "seeds": seed_counts.get(label, 0),
            "final_mean": float(last["mean"]) if last is not None else float("nan"),
            "final_stderr": float(last["stderr"]) if last is not None else float("nan"),
            "auc": curve_auc(frame),
        })
    return pd.DataFrame(rows, columns=["label", "seeds", "final_mean", "final_stderr", "auc"])


def long_frame(aggregates: dict[str, pd.DataFrame]) -> pd.DataFrame:
    frames = [frame.assign(label=label) for label, frame in aggregates.items() if len(frame)]
    if not frames:
        return pd.DataFrame(columns=["label", *AGGREGATE_COLUMNS])
    return pd.concat(frames, ignore_index=True)[["label", *AGGREGATE_COLUMNS]]


def label_filename(label: str) -> str:
    return "curves-" + "".join(ch if ch.isalnum() or ch in "+-=." else "_" for ch in label) + ".csv"


def write_aggregates(aggregates: dict[str, pd.DataFrame], seed_counts: dict[str, int], directory) -> dict[str, Path]:
    """``aggregate.csv`` (all labels), one ``curves-<label>.csv`` per label and ``comparison.csv``."""
    directory = Path(directory)
    paths = {"aggregate": directory / "aggregate.csv", "comparison": directory / "comparison.csv"}
    long_frame(aggregates).to_csv(paths["aggregate"], index=False)
    for label, frame in aggregates.items():
        paths[f"curves:{label}"] = directory / label_filename(label)
        frame[AGGREGATE_COLUMNS].to_csv(paths[f"curves:{label}"], index=False)
    comparison_table(aggregates, seed_counts).to_csv(paths["comparison"], index=False)
    logger.info("wrote %s, %s and %d per-label curves", paths["aggregate"], paths["comparison"], len(aggregates))
    return paths
