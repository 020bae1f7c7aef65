import logging
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from src.models.cascade import CascadeCluster
from src.models.dataset import Dataset
from src.models.graph import SocialGraph
from src.schemas.schemas import Burst, FeatureVector, Labels, PeakParams, RawLabels, Task
from src.services.burst import DEFAULT_PARAMS, find_bursts
from src.services.cascade import (build_series, copy_share_distribution, demographic_summary, entropy_bits,
                                  top_copy)
from src.services.errors import InvalidInputError
from src.services.graph import exposed_population, induced_subgraph
from config import settings

logger = logging.getLogger(__name__)

MIN_PER_CLASS = 2


def _temporal(cluster: CascadeCluster, burst: Burst) -> dict:
    series = build_series(cluster, max(cluster.last_day, burst.end_day))
    peak = burst.peak
    days_before = peak.day - burst.start_day
    days_after = burst.end_day - peak.day
    return {
        "days_before_peak": days_before,
        "days_after_peak": days_after,
        "reshares_before_peak": series.total(burst.start_day, peak.day - 1) if days_before else 0,
        "reshares_after_peak": series.total(peak.day + 1, burst.end_day) if days_after else 0,
        "peak_height": peak.height,
        "gradient_before": (peak.height - series.count(burst.start_day)) / max(1, days_before),
        "gradient_after": (peak.height - series.count(burst.end_day)) / max(1, days_after),
    }


def _demographic(persons: np.ndarray, graph: SocialGraph) -> dict:
    if persons.size == 0:
        return dict.fromkeys(("mean_age", "prop_female", "age_entropy", "gender_entropy", "country_entropy"), 0.0)
    return demographic_summary(persons, graph).model_dump()


def _network(actors: np.ndarray, persons: np.ndarray, pages: np.ndarray, graph: SocialGraph) -> dict:
    sub = induced_subgraph(graph, actors)
    return {
        "friend_edges": len(sub.friend_edges),
        "follow_edges": len(sub.follow_edges),
        "exposed_count": len(exposed_population(graph, actors)),
        "n_users": persons.size,
        "n_pages": pages.size,
        "prop_pages": pages.size / actors.size,
    }


def _multiple_copy(cluster: CascadeCluster, burst: Burst, graph: SocialGraph) -> dict:
    distribution = copy_share_distribution(cluster, burst)
    total = sum(distribution.values())
    page_copies = {copy_id for copy_id in distribution if graph.is_page[cluster.copies[copy_id].creator]}

    window = cluster.window_mask(burst.start_day, burst.end_day)
    window_copies = cluster.copy_ids[window]
    by_page = graph.is_page[cluster.actors[window]]
    leader = top_copy(distribution)
    return {
        "n_copies": len(distribution),
        "copy_reshare_entropy": entropy_bits(distribution.values()),
        "mean_reshares_per_copy": total / len(distribution),
        "top_copy_share": distribution[leader] / total,
        "prop_copies_by_pages": len(page_copies) / len(distribution),
        "prop_reshares_by_pages": float(by_page.mean()),
        "prop_reshares_page_copies": float(np.isin(window_copies, list(page_copies)).mean()),
        "top_copy_by_page": float(leader in page_copies),
    }


def extract_features(cluster: CascadeCluster, graph: SocialGraph, initial_burst: Burst) -> FeatureVector:
    """
    Describes the initial burst of a cascade with 26 features in four groups.

    Temporal features come from the daily series inside the burst: days and
    events before and after the peak (the peak day itself excluded), the peak
    height and the average slope of the rise and of the fall. Demographic
    features summarize the people active in the burst, network features the
    subgraph of burst actors and its exposed audience, and multiple-copy
    features the spread of burst events over copies and the role of pages.

    Args:
        cluster (CascadeCluster): The cascade.
        graph (SocialGraph): Graph holding every actor.
        initial_burst (Burst): First burst detected on the cascade's series.

    Returns:
        FeatureVector: The features; a burst without people gets zero
        demographic features.

    Raises:
        InvalidInputError: If no event falls inside the burst window.
    """
    window = cluster.window_mask(initial_burst.start_day, initial_burst.end_day)
    if not window.any():
        raise InvalidInputError(
            f"cluster {cluster.cluster_id} has no events in days {initial_burst.start_day}-{initial_burst.end_day}")
    actors = np.unique(graph.check_nodes(cluster.actors[window]))
    pages = actors[graph.is_page[actors]]
    persons = actors[~graph.is_page[actors]]
    return FeatureVector(
        **_temporal(cluster, initial_burst),
        **_demographic(persons, graph),
        **_network(actors, persons, pages, graph),
        **_multiple_copy(cluster, initial_burst, graph),
    )


def make_labels(cluster: CascadeCluster, bursts: Sequence[Burst]) -> RawLabels:
    """
    Raw prediction targets of a cascade: whether a second burst follows, the
    ratio of second to first burst events and the days between their peaks.
    """
    if len(bursts) < 2:
        return RawLabels(recurred=False)
    first, second = bursts[0], bursts[1]
    return RawLabels(recurred=True, size_ratio=second.reshares / first.reshares,
                     gap=second.peak.day - first.peak.day)


def split_by_copy(cluster: CascadeCluster) -> List[CascadeCluster]:
    """One cascade per copy, named `<cluster_id>/<copy_id>`, to study copies individually."""
    clusters = []
    for copy_id in cluster.copy_order():
        mask = cluster.copy_ids == copy_id
        clusters.append(CascadeCluster(f"{cluster.cluster_id}/{copy_id}", cluster.actors[mask],
                                       cluster.copy_ids[mask], cluster.days[mask], cluster.is_create[mask],
                                       cluster.parents[mask]))
    return clusters


def _describe(cluster: CascadeCluster, graph: SocialGraph, detector: PeakParams,
              horizon: Optional[int]) -> Optional[Tuple[str, np.ndarray, RawLabels]]:
    series = build_series(cluster, max(horizon or 0, cluster.last_day))
    bursts = find_bursts(series, detector)
    if not bursts:
        return None
    features = extract_features(cluster, graph, bursts[0])
    return cluster.cluster_id, features.as_array(), make_labels(cluster, bursts)


def binarize_labels(raw: RawLabels, size_median: Optional[float] = None,
                    gap_median: Optional[float] = None) -> Labels:
    """Binary labels of one cascade against pool medians; a median left out leaves its label unset."""
    if not raw.recurred:
        return Labels(recurred=False)
    return Labels(recurred=True,
                  rel_size_large=None if size_median is None else raw.size_ratio > size_median,
                  late_recurrence=None if gap_median is None else raw.gap > gap_median)


def _binary_labels(raw: List[RawLabels], task: Task) -> Tuple[np.ndarray, np.ndarray]:
    """Rows taking part in the task and their labels; size and timing split at the pool median."""
    if task == Task.RECUR:
        return np.arange(len(raw)), np.array([labels.recurred for labels in raw], dtype=np.int64)
    rows = np.array([i for i, labels in enumerate(raw) if labels.recurred], dtype=np.int64)
    if rows.size == 0:
        raise InvalidInputError(f"task {task.value} needs recurring cascades")
    size_median = float(np.median([raw[i].size_ratio for i in rows]))
    gap_median = float(np.median([raw[i].gap for i in rows]))
    logger.info("medians over %d recurring cascades: size ratio %.4g, gap %.4g days",
                rows.size, size_median, gap_median)
    labels = [binarize_labels(raw[i], size_median, gap_median) for i in rows]
    if task == Task.SIZE:
        return rows, np.array([label.rel_size_large for label in labels], dtype=np.int64)
    return rows, np.array([label.late_recurrence for label in labels], dtype=np.int64)


def build_dataset(clusters: Iterable[CascadeCluster], graph: SocialGraph, detector: PeakParams = DEFAULT_PARAMS,
                  task: Task = Task.RECUR, rng_seed: int = 0, horizon: Optional[int] = None,
                  n_jobs: Optional[int] = None) -> Dataset:
    """
    Builds a balanced dataset for one prediction task.

    Every cascade with a detectable burst contributes the features of its
    initial burst. For `recur` the label is whether a second burst exists; for
    `size` and `when` only recurring cascades take part and the label says
    whether the burst-size ratio or the peak gap lies above the median of the
    whole labelled pool. The majority class is then downsampled, with the
    given seed, to the size of the minority class.

    Args:
        clusters (Iterable[CascadeCluster]): The corpus.
        graph (SocialGraph): Graph holding every actor.
        detector (PeakParams): Peak detector parameters.
        task (Task): recur, size or when.
        rng_seed (int): Seed of the downsampling.
        horizon (Optional[int]): Series length; defaults to each cascade's last day.
        n_jobs (Optional[int]): Workers for feature extraction.

    Returns:
        Dataset: Balanced rows in corpus order.

    Raises:
        InvalidInputError: If a class has fewer than two cascades.
    """
    described = Parallel(n_jobs=n_jobs or settings.THREADS)(
        delayed(_describe)(cluster, graph, detector, horizon) for cluster in clusters
    )
    described = [row for row in described if row is not None]
    if not described:
        raise InvalidInputError("no cascade has a detectable burst")
    cluster_ids, rows, raw = zip(*described)

    members, labels = _binary_labels(list(raw), task)
    positives = np.flatnonzero(labels == 1)
    negatives = np.flatnonzero(labels == 0)
    if min(positives.size, negatives.size) < MIN_PER_CLASS:
        raise InvalidInputError(f"need at least {MIN_PER_CLASS} cascades per class, "
                                f"got {negatives.size} negative and {positives.size} positive")

    rng = np.random.default_rng(rng_seed)
    size = min(positives.size, negatives.size)
    keep = np.sort(np.concatenate([
        rng.choice(positives, size=size, replace=False),
        rng.choice(negatives, size=size, replace=False),
    ]))
    chosen = members[keep]
    logger.info("%s dataset: %d rows from %d labelled cascades", task.value, keep.size, members.size)
    return Dataset(np.vstack([rows[i] for i in chosen]), labels[keep], tuple(cluster_ids[i] for i in chosen))
