import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

logger = logging.getLogger(__name__)


def plot_curves(aggregates: dict[str, pd.DataFrame], path, title: str = "",
                annotations: dict[str, str] | None = None) -> Path:
    """Overlay of mean curves with a shaded band of one standard error."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    annotations = annotations or {}
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for label, frame in aggregates.items():
        if frame.empty:
            continue
        name = f"{label} ({annotations[label]})" if label in annotations else label
        steps, mean, stderr = frame["step"], frame["mean"], frame["stderr"]
        (line,) = ax.plot(steps, mean, label=name, linewidth=1.5)
        ax.fill_between(steps, mean - stderr, mean + stderr, color=line.get_color(), alpha=0.25, linewidth=0)
    ax.set_xlabel("environment steps")
    ax.set_ylabel("episode return")
    if title:
        ax.set_title(title)
    if ax.lines:
        ax.legend(loc="best", fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    logger.info("wrote %s", path)
    return path


def plot_counts(counts: pd.DataFrame, path, column: str, seeds: int, title: str = "") -> Path:
    """Horizontal bars of how many seeds picked each entry of ``column``."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6.0, 0.4 * max(len(counts), 3) + 1.2))
    ax.barh(counts[column].astype(str), counts["count"], color="tab:blue")
    ax.set_xlim(0, max(seeds, 1))
    ax.set_xlabel(f"runs (of {seeds})")
    ax.invert_yaxis()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
