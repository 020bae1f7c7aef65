from argparse import Namespace
from pathlib import Path

import pandas as pd

from src.commands.common import CommandResult, sidecar
from src.repository.configs import read_config_data
from src.repository.events import PEAK_COLUMNS, peaks_frame, read_clusters, read_series, write_peaks
from src.repository.reports import write_table
from src.schemas.schemas import DetectorConfig
from src.services.burst import find_bursts
from src.services.cascade import build_series
from src.services.errors import UsageError
from src.services.plots import plot_series


def detector_config(args: Namespace) -> DetectorConfig:
    return DetectorConfig.model_validate(read_config_data(args.config)) if args.config else DetectorConfig()


def cmd_detect(args: Namespace) -> CommandResult:
    """
    Detects bursts in a `day,count` series (.csv) or in every cluster of an
    event log (.jsonl, one `cluster` column added) and writes the peaks table.
    """
    if not args.input or not args.out:
        raise UsageError("detect needs --input and --out")
    detector = detector_config(args).detector
    source, out = Path(args.input), Path(args.out)
    outputs = []

    if source.suffix.lower() == ".csv":
        series = read_series(source, horizon=args.horizon)
        bursts = find_bursts(series, detector)
        outputs.append(write_peaks(bursts, out))
        if args.plot:
            outputs.append(plot_series(series, bursts, sidecar(out, ".svg"), title=source.stem))
    else:
        frames = []
        for cluster in read_clusters(source):
            series = build_series(cluster, max(args.horizon or 0, cluster.last_day))
            frame = peaks_frame(find_bursts(series, detector))
            frame.insert(0, "cluster", cluster.cluster_id)
            frames.append(frame)
        table = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=["cluster", *PEAK_COLUMNS])
        outputs.append(write_table(table, out))
    return CommandResult(outputs=outputs, inputs=[source])
