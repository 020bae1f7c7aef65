import logging
from argparse import Namespace
from pathlib import Path
from typing import Callable, List, Optional

import numpy as np
import pandas as pd

from src.commands.common import CommandResult, sidecar
from src.commands.detect import detector_config
from src.models.cascade import CascadeCluster
from src.models.graph import SocialGraph
from src.repository.events import read_clusters
from src.repository.graphs import read_graph
from src.repository.reports import write_table, write_text
from src.schemas.schemas import DetectorConfig
from src.services.burst import find_bursts, inter_burst_gaps, is_evergreen, subsequent_recurrence_probability
from src.services.cascade import (attribute_copies, bootstrap_pearson, build_series, burst_populations,
                                  copy_introduction_correlation, copy_share_distribution, cross_burst_edges,
                                  demographic_shift, demographic_summary, entropy_speed_correlation,
                                  exposure_overlap, jaccard, matched_compare, mean_internal_degree, reupload_rates,
                                  top_copy, top_copy_repeats)
from src.services.errors import InvalidInputError, UsageError
from config import settings

logger = logging.getLogger(__name__)

METRIC_COLUMNS = [
    "cluster_id", "events", "copies", "first_day", "last_day", "peaks", "recurred", "evergreen", "gaps",
    "first_burst_reshares", "second_burst_reshares", "first_burst_width", "persons_first", "pages_first",
    "jaccard_persons", "jaccard_pages", "exposure_overlap",
    "friend_within_first", "follow_within_first", "friend_within_second", "follow_within_second",
    "friend_across", "follow_across", "internal_degree_first",
    "country_entropy_first", "country_entropy_second", "age_change", "female_change", "majority_country_changed",
    "entropy_speed_r", "entropy_speed_degenerate", "attributable_copies", "top_copy_share_first",
    "top_copy_repeats", "page_reupload_rate", "person_reupload_rate", "copy_introduction_r",
]


def _optional(compute: Callable, *args, **kwargs):
    """Metrics undefined for a cascade are reported empty."""
    try:
        return compute(*args, **kwargs)
    except InvalidInputError as err:
        logger.debug("%s skipped: %s", compute.__name__, err.detail)
        return None


def cluster_metrics(cluster: CascadeCluster, graph: SocialGraph, config: DetectorConfig,
                    horizon: Optional[int] = None) -> dict:
    """One row of recurrence characteristics for a cascade."""
    series = build_series(cluster, max(horizon or 0, cluster.last_day))
    bursts = find_bursts(series, config.detector)
    populations = burst_populations(cluster, bursts, graph)
    page_rate, person_rate = reupload_rates(cluster, graph)
    correlation = _optional(entropy_speed_correlation, cluster, graph, config.window)
    introductions = copy_introduction_correlation(cluster, series.t)

    row = dict.fromkeys(METRIC_COLUMNS)
    row.update({
        "cluster_id": cluster.cluster_id,
        "events": len(cluster),
        "copies": len(cluster.copies),
        "first_day": cluster.first_day,
        "last_day": cluster.last_day,
        "peaks": len(bursts),
        "recurred": len(bursts) >= 2,
        "evergreen": is_evergreen(series),
        "gaps": ";".join(str(gap) for gap in inter_burst_gaps([burst.peak for burst in bursts])),
        "entropy_speed_r": correlation.value if correlation else None,
        "entropy_speed_degenerate": correlation.degenerate if correlation else None,
        "attributable_copies": _optional(attribute_copies, cluster, graph),
        "page_reupload_rate": page_rate,
        "person_reupload_rate": person_rate,
        "copy_introduction_r": introductions.value,
    })
    if bursts:
        first = populations[0]
        summary = _optional(demographic_summary, first.persons, graph)
        distribution = copy_share_distribution(cluster, bursts[0])
        row.update({
            "first_burst_reshares": bursts[0].reshares,
            "first_burst_width": bursts[0].width,
            "persons_first": len(first.persons),
            "pages_first": len(first.pages),
            "internal_degree_first": mean_internal_degree(graph, first),
            "country_entropy_first": summary.country_entropy if summary else None,
            "top_copy_share_first": distribution[top_copy(distribution)] / sum(distribution.values()),
        })
    if len(bursts) >= 2:
        first, second = populations[0], populations[1]
        summary = _optional(demographic_summary, second.persons, graph)
        shift = _optional(demographic_shift, graph, first, second)
        row.update({
            "second_burst_reshares": bursts[1].reshares,
            "jaccard_persons": jaccard(first.persons, second.persons),
            "jaccard_pages": jaccard(first.pages, second.pages),
            "exposure_overlap": exposure_overlap(graph, first, second),
            **cross_burst_edges(graph, first, second).model_dump(),
            "country_entropy_second": summary.country_entropy if summary else None,
            "age_change": shift.age_change if shift else None,
            "female_change": shift.female_change if shift else None,
            "majority_country_changed": shift.majority_country_changed if shift else None,
            "top_copy_repeats": sum(top_copy_repeats(cluster, bursts)),
        })
    return row


def _entropy_comparison(metrics: pd.DataFrame) -> List[str]:
    """Country entropy of recurring against non-recurring initial bursts, matched on burst shape."""
    usable = metrics.dropna(subset=["first_burst_reshares", "country_entropy_first"])
    groups = []
    for recurred in (True, False):
        part = usable[usable["recurred"] == recurred]
        groups.append([((row.first_burst_width, row.first_burst_reshares, row.events), row.country_entropy_first)
                       for row in part.itertuples()])
    if not groups[0] or not groups[1]:
        return ["matched country entropy comparison: needs recurring and non-recurring cascades"]
    try:
        result = matched_compare(groups[0], groups[1], k_controls=3)
    except InvalidInputError as err:
        return [f"matched country entropy comparison: {err.detail}"]
    return [f"matched country entropy comparison (recurring - non-recurring): W={result.statistic:.1f} "
            f"p={result.p_value:.4g} r={result.effect_size_r:.4f}"]


def _overlap_correlation(metrics: pd.DataFrame, rng_seed: int) -> List[str]:
    """First-burst size against the exposure overlap of the first two bursts, over recurring cascades."""
    usable = metrics.dropna(subset=["first_burst_reshares", "exposure_overlap"])
    result = bootstrap_pearson(usable["first_burst_reshares"].astype(float).tolist(),
                               usable["exposure_overlap"].astype(float).tolist(), rng_seed=rng_seed)
    if result.degenerate:
        return [f"first burst size vs exposure overlap: degenerate (n={len(usable)})"]
    return [f"first burst size vs exposure overlap: r={result.value:.4f} "
            f"95% CI [{result.ci_low:.4f}, {result.ci_high:.4f}] (n={len(usable)})"]


def cmd_analyze(args: Namespace) -> CommandResult:
    """
    Characterizes every cascade of an event log: one metrics row per cluster
    in --out, the corpus-level recurrence probabilities in
    `<stem>.recurrence.csv` and a text summary in `<stem>.summary.txt`.
    """
    if not args.events or not args.graph or not args.out:
        raise UsageError("analyze needs --events, --graph and --out")
    seed = settings.SEED if args.seed is None else args.seed
    config = detector_config(args)
    graph = read_graph(args.graph)
    clusters = read_clusters(args.events)
    metrics = pd.DataFrame([cluster_metrics(cluster, graph, config, args.horizon) for cluster in clusters],
                           columns=METRIC_COLUMNS)

    probabilities = subsequent_recurrence_probability(metrics["peaks"].astype(int).tolist())
    recurrence = pd.DataFrame({"peaks_at_least": np.arange(1, len(probabilities) + 1),
                               "probability_next": probabilities})
    recurring = int(metrics["recurred"].astype(bool).sum())
    lines = [f"clusters {len(metrics)}", f"recurring {recurring}"]
    if len(metrics):
        lines.append(f"with a burst {int((metrics['peaks'] > 0).sum())}")
        lines.append(f"evergreen {int(metrics['evergreen'].astype(bool).sum())}")
        lines.extend(_entropy_comparison(metrics))
        lines.extend(_overlap_correlation(metrics, seed))

    out = Path(args.out)
    outputs = [write_table(metrics, out), write_table(recurrence, sidecar(out, ".recurrence.csv")),
               write_text("\n".join(lines) + "\n", sidecar(out, ".summary.txt"))]
    return CommandResult(outputs=outputs, seeds={"bootstrap": seed}, inputs=[Path(args.events), Path(args.graph)])
