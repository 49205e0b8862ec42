import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.colors import Normalize  # noqa: E402

from permtest.models import ImportanceReport, SweepResult  # noqa: E402

logger = logging.getLogger(__name__)

# Red for positive importance (malicious), green for negative (essential).
CMAP = "RdYlGn_r"


def _centered(values) -> Normalize:
    limit = float(np.max(np.abs(values))) if np.size(values) else 0.0
    limit = max(limit, 1e-9)
    return Normalize(vmin=-limit, vmax=limit)


def heatmap_export(report: ImportanceReport, path) -> tuple[Path, Path | None]:
    """Write ``path`` as CSV (channel, importance, verdict) and a PNG next to it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = report.frame()
    frame.to_csv(path, index=False)
    if frame.empty:
        logger.warning("importance report is empty; wrote header only to %s", path)
        return path, None

    values = frame["importance"].to_numpy()[None, :]
    fig, ax = plt.subplots(figsize=(max(4.0, 0.6 * frame.shape[0]), 1.8))
    image = ax.imshow(values, cmap=CMAP, norm=_centered(values), aspect="auto")
    ax.set_xticks(range(frame.shape[0]), frame["channel"], rotation=45, ha="right")
    ax.set_yticks([0], [f"d={report.dropout_rate:g}"])
    for i, value in enumerate(frame["importance"]):
        ax.text(i, 0, f"{value:+.2f}", ha="center", va="center", fontsize=8)
    fig.colorbar(image, ax=ax, label="importance")
    fig.tight_layout()
    image_path = path.with_suffix(".png")
    fig.savefig(image_path, dpi=120)
    plt.close(fig)
    logger.info("wrote %s and %s", path, image_path)
    return path, image_path


def sweep_heatmap_export(result: SweepResult, directory) -> dict[str, Path]:
    """Channel x dropout-rate importance grid plus the auxiliary return per rate."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    matrix = result.importance_matrix()
    paths = {
        "importance": directory / "dropout-sweep.csv",
        "returns": directory / "dropout-returns.csv",
        "image": directory / "dropout-sweep.png",
    }
    matrix.to_csv(paths["importance"])
    result.aux_returns().to_csv(paths["returns"], index=False)

    values = matrix.to_numpy(dtype=float)
    fig, ax = plt.subplots(figsize=(1.2 * max(len(result.rates), 2) + 2, 0.45 * max(len(matrix), 2) + 1.5))
    image = ax.imshow(values, cmap=CMAP, norm=_centered(np.nan_to_num(values)), aspect="auto")
    ax.set_xticks(range(len(matrix.columns)), [f"{c:g}" for c in matrix.columns])
    ax.set_yticks(range(len(matrix.index)), list(matrix.index))
    ax.set_xlabel("dropout rate")
    fig.colorbar(image, ax=ax, label="importance")
    fig.tight_layout()
    fig.savefig(paths["image"], dpi=120)
    plt.close(fig)
    logger.info("wrote dropout sweep to %s", directory)
    return paths
