import json
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import pandas as pd
from pydantic import ValidationError

from src.models.cascade import CascadeCluster
from src.schemas.schemas import Burst, DailySeries, EventKind, ReshareEvent
from src.services.errors import StorageError

logger = logging.getLogger(__name__)

SERIES_COLUMNS = ["day", "count"]
PEAK_COLUMNS = ["peak_day", "height", "start", "end", "width", "reshares"]


def write_events(clusters: Iterable[CascadeCluster], path: str | Path) -> Path:
    """Writes every event as one JSON object per line, clusters in the given order."""
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8", newline="\n") as file:
            for cluster in clusters:
                for event in cluster.events:
                    record = {"cluster": cluster.cluster_id, "copy": event.copy_id, "actor": event.actor,
                              "day": event.day, "kind": event.kind.value}
                    if event.parent_actor is not None:
                        record["parent"] = event.parent_actor
                    file.write(json.dumps(record) + "\n")
    except OSError as err:
        raise StorageError(f"cannot write events {path}: {err}")
    return path


def read_events(path: str | Path) -> Dict[str, List[ReshareEvent]]:
    """
    Reads a JSON-lines event log.

    Returns:
        Dict[str, List[ReshareEvent]]: Events per cluster, clusters in order
        of first appearance.

    Raises:
        StorageError: If the file is unreadable or a line is not a valid event.
    """
    path = Path(path)
    events: Dict[str, List[ReshareEvent]] = {}
    try:
        with path.open(encoding="utf-8") as file:
            for number, line in enumerate(file, start=1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                    event = ReshareEvent(actor=record["actor"], copy_id=record["copy"], day=record["day"],
                                         kind=EventKind(record.get("kind", EventKind.RESHARE.value)),
                                         parent_actor=record.get("parent"))
                    cluster_id = str(record["cluster"])
                except (ValueError, KeyError, TypeError, ValidationError) as err:
                    raise StorageError(f"{path}:{number}: bad event record: {err}")
                events.setdefault(cluster_id, []).append(event)
    except OSError as err:
        raise StorageError(f"cannot read events {path}: {err}")
    logger.info("read %d clusters from %s", len(events), path)
    return events


def clusters_from_events(events: Dict[str, Sequence[ReshareEvent]]) -> List[CascadeCluster]:
    return [CascadeCluster.from_events(cluster_id, cluster_events) for cluster_id, cluster_events in events.items()]


def read_clusters(path: str | Path) -> List[CascadeCluster]:
    return clusters_from_events(read_events(path))


def write_series(series: DailySeries, path: str | Path) -> Path:
    path = Path(path)
    frame = pd.DataFrame({"day": range(1, series.t + 1), "count": series.counts}, columns=SERIES_COLUMNS)
    try:
        frame.to_csv(path, index=False, lineterminator="\n")
    except OSError as err:
        raise StorageError(f"cannot write series {path}: {err}")
    return path


def read_series(path: str | Path, horizon: Optional[int] = None) -> DailySeries:
    """
    Reads a `day,count` table. Missing days count as zero; repeated days add
    up. The series runs to `horizon`, or to the last listed day.

    Raises:
        StorageError: If the table is unreadable or lacks its columns.
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as err:
        raise StorageError(f"cannot read series {path}: {err}")
    if list(frame.columns) != SERIES_COLUMNS:
        raise StorageError(f"{path}: expected columns {SERIES_COLUMNS}, got {list(frame.columns)}")
    if frame.empty:
        raise StorageError(f"{path}: series has no rows")
    t = horizon or int(frame["day"].max())
    try:
        return DailySeries.from_days(frame.groupby("day")["count"].sum().astype(int).to_dict(), t)
    except (ValueError, ValidationError) as err:
        raise StorageError(f"{path}: {err}")


def peaks_frame(bursts: Sequence[Burst]) -> pd.DataFrame:
    return pd.DataFrame([[burst.peak.day, burst.peak.height, burst.start_day, burst.end_day, burst.width,
                          burst.reshares] for burst in bursts], columns=PEAK_COLUMNS)


def write_peaks(bursts: Sequence[Burst], path: str | Path) -> Path:
    path = Path(path)
    try:
        peaks_frame(bursts).to_csv(path, index=False, lineterminator="\n")
    except OSError as err:
        raise StorageError(f"cannot write peaks {path}: {err}")
    return path
