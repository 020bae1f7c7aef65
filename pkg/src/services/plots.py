import logging
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from src.schemas.schemas import Burst, DailySeries  # noqa: E402

logger = logging.getLogger(__name__)

matplotlib.rcParams["svg.hashsalt"] = "recurring-cascades"


def plot_series(series: DailySeries, bursts: Sequence[Burst], path: str | Path, title: str = "") -> Path:
    """
    Writes an SVG line chart of a daily series with its peaks marked and its
    bursts shaded. The file carries no creation date, so reruns give
    identical bytes.
    """
    path = Path(path)
    days = range(1, series.t + 1)
    figure, axes = plt.subplots(figsize=(8, 3))
    try:
        axes.plot(days, series.counts, color="tab:blue", linewidth=1)
        for burst in bursts:
            axes.axvspan(burst.start_day - 0.5, burst.end_day + 0.5, color="tab:orange", alpha=0.2)
        axes.plot([burst.peak.day for burst in bursts], [burst.peak.height for burst in bursts],
                  "v", color="tab:red")
        axes.axhline(series.mean, color="grey", linestyle=":", linewidth=0.8)
        axes.set_xlabel("day")
        axes.set_ylabel("reshares")
        if title:
            axes.set_title(title)
        figure.tight_layout()
        figure.savefig(path, format="svg", metadata={"Date": None})
    finally:
        plt.close(figure)
    logger.debug("wrote chart %s", path)
    return path
