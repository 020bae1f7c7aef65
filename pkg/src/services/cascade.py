import logging
from collections import Counter
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np
from scipy import stats
from scipy.spatial.distance import cdist

from src.models.cascade import CascadeCluster
from src.models.graph import SocialGraph
from src.schemas.schemas import (Burst, BurstPopulation, CorrelationResult, DailySeries, DemographicShift,
                                 DemographicSummary, EdgeCounts, TestResult)
from src.services.errors import InvalidInputError
from src.services.graph import exposed_population, induced_subgraph

logger = logging.getLogger(__name__)

AGE_BIN_YEARS = 5
MIN_WILCOXON_PAIRS = 6
EXACT_WILCOXON_LIMIT = 25
ATTRIBUTES = ("country", "gender", "age")


def build_series(cluster: CascadeCluster, horizon: int) -> DailySeries:
    """
    Counts every event of the cluster, creations and reshares alike, per day
    over days 1 ... horizon.

    Raises:
        InvalidInputError: If an event falls after the horizon.
    """
    if horizon < cluster.last_day:
        raise InvalidInputError(f"horizon {horizon} ends before the last event on day {cluster.last_day}")
    counts = np.bincount(cluster.days, minlength=horizon + 1)[1:]
    return DailySeries(counts=counts.tolist())


def burst_populations(cluster: CascadeCluster, bursts: Sequence[Burst], graph: SocialGraph) -> List[BurstPopulation]:
    """
    Assigns every actor with at least one event inside a burst window to that
    burst's people or pages. An actor can belong to several bursts.
    """
    populations = []
    for burst in bursts:
        actors = np.unique(graph.check_nodes(cluster.actors[cluster.window_mask(burst.start_day, burst.end_day)]))
        pages = graph.is_page[actors]
        populations.append(BurstPopulation(burst=burst, persons=frozenset(actors[~pages].tolist()),
                                           pages=frozenset(actors[pages].tolist())))
    return populations


def jaccard(a: Set, b: Set) -> float:
    union = len(a | b)
    if union == 0:
        return 0.0
    return len(a & b) / union


def entropy_bits(counts: Iterable[float]) -> float:
    """Shannon entropy in bits of an unnormalized distribution."""
    values = np.asarray(list(counts), dtype=float)
    values = values[values > 0]
    if values.size <= 1:
        return 0.0
    return float(stats.entropy(values, base=2))


def category_entropy(values: Iterable) -> float:
    return entropy_bits(Counter(values).values())


def _person_ids(actors: Iterable[int], graph: SocialGraph) -> np.ndarray:
    ids = np.unique(graph.check_nodes(actors))
    return ids[~graph.is_page[ids]]


def demographic_summary(actors: Iterable[int], graph: SocialGraph) -> DemographicSummary:
    """
    Summarizes the people among `actors`; pages carry no demographics and are
    left out. Ages are binned into 5-year bins for the age entropy.

    Raises:
        InvalidInputError: If no person is among the actors.
    """
    persons = _person_ids(actors, graph)
    if persons.size == 0:
        raise InvalidInputError("demographic summary needs at least one person")
    ages = graph.ages[persons]
    female = graph.female[persons]
    return DemographicSummary(
        mean_age=float(ages.mean()),
        prop_female=float(female.mean()),
        age_entropy=category_entropy((ages // AGE_BIN_YEARS).tolist()),
        gender_entropy=category_entropy(female.tolist()),
        country_entropy=category_entropy(graph.countries[persons].tolist()),
    )


def pearson(x: Sequence[float], y: Sequence[float]) -> CorrelationResult:
    """
    Pearson correlation. Constant inputs leave it undefined; they are reported
    as 0 with the degenerate flag set.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size:
        raise InvalidInputError("correlation needs sequences of equal length")
    if x.size < 2 or np.ptp(x) == 0 or np.ptp(y) == 0:
        return CorrelationResult(value=0.0, degenerate=True)
    return CorrelationResult(value=float(stats.pearsonr(x, y)[0]))


def _pearson_along(x: np.ndarray, y: np.ndarray, axis: int = -1) -> np.ndarray:
    x = x - x.mean(axis=axis, keepdims=True)
    y = y - y.mean(axis=axis, keepdims=True)
    scale = np.sqrt((x ** 2).sum(axis=axis) * (y ** 2).sum(axis=axis))
    # constant resamples count as no correlation
    safe = np.where(scale > 0, scale, 1.0)
    return np.where(scale > 0, (x * y).sum(axis=axis) / safe, 0.0)


def bootstrap_pearson(x: Sequence[float], y: Sequence[float], resamples: int = 1000,
                      confidence: float = 0.95, rng_seed: int = 0) -> CorrelationResult:
    """
    Pearson correlation with a percentile bootstrap interval over resampled
    (x, y) pairs. Degenerate inputs get no interval.
    """
    result = pearson(x, y)
    if result.degenerate:
        return result
    interval = stats.bootstrap((np.asarray(x, dtype=float), np.asarray(y, dtype=float)), _pearson_along,
                               paired=True, vectorized=True, n_resamples=resamples, confidence_level=confidence,
                               method="percentile", random_state=np.random.default_rng(rng_seed)).confidence_interval
    return result.model_copy(update={"ci_low": float(interval.low), "ci_high": float(interval.high)})


def _attribute_codes(graph: SocialGraph, attribute: str) -> np.ndarray:
    """Integer category per node for a demographic attribute, -1 for pages."""
    if attribute == "country":
        _, codes = np.unique(graph.countries.astype(str), return_inverse=True)
    elif attribute == "gender":
        codes = graph.female.astype(np.int64)
    elif attribute == "age":
        codes = np.maximum(graph.ages, 0) // AGE_BIN_YEARS
    else:
        raise InvalidInputError(f"unknown attribute {attribute!r}, expected one of {ATTRIBUTES}")
    codes = np.asarray(codes, dtype=np.int64).copy()
    codes[graph.is_page] = -1
    return codes


def entropy_speed_correlation(cluster: CascadeCluster, graph: SocialGraph, window: int = 100,
                              attribute: str = "country") -> CorrelationResult:
    """
    Slides a window of `window` consecutive events over the cascade (step 1)
    and correlates the demographic entropy of each window's people with the
    days the window spans.

    Raises:
        InvalidInputError: If the window is shorter than 2 or longer than the
            cascade.
    """
    if window < 2:
        raise InvalidInputError("window must hold at least 2 events")
    if len(cluster) < window:
        raise InvalidInputError(f"cascade has {len(cluster)} events, fewer than the window of {window}")

    graph.check_nodes(cluster.actors)
    codes = _attribute_codes(graph, attribute)[cluster.actors]
    counts = np.zeros(int(codes.max()) + 2, dtype=np.int64)
    np.add.at(counts, codes[:window] + 1, 1)

    n_windows = len(cluster) - window + 1
    entropies = np.empty(n_windows)
    for start in range(n_windows):
        if start:
            counts[codes[start - 1] + 1] -= 1
            counts[codes[start + window - 1] + 1] += 1
        entropies[start] = entropy_bits(counts[1:])
    elapsed = cluster.days[window - 1:] - cluster.days[:n_windows]
    return pearson(entropies, elapsed)


def attribute_copies(cluster: CascadeCluster, graph: SocialGraph) -> float:
    """
    Share of copies, after the first, whose creator has a friend, or follows a
    page, that shared the content strictly before the copy was created. A
    page creator has neither, so its own followers never count.

    Raises:
        InvalidInputError: If the cluster holds a single copy.
    """
    if len(cluster.copies) < 2:
        raise InvalidInputError("attribution needs at least two copies")
    graph.check_nodes(cluster.actors)
    first_share = np.full(graph.node_count, np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(first_share, cluster.actors, cluster.days)

    later_copies = cluster.copy_order()[1:]
    attributable = 0
    for copy_id in later_copies:
        info = cluster.copies[copy_id]
        sources = np.concatenate([graph.friends(info.creator), graph.followed_pages(info.creator)])
        if sources.size and first_share[sources].min() < info.created_day:
            attributable += 1
    return attributable / len(later_copies)


def _exact_signed_rank_pvalue(w_plus: float, n: int) -> float:
    max_sum = n * (n + 1) // 2
    ways = np.zeros(max_sum + 1)
    ways[0] = 1.0
    for rank in range(1, n + 1):
        ways[rank:] = ways[rank:] + ways[:-rank].copy()
    distribution = ways / ways.sum()
    w = int(round(w_plus))
    lower = distribution[:w + 1].sum()
    upper = distribution[w:].sum()
    return float(min(1.0, 2.0 * min(lower, upper)))


def wilcoxon_signed_rank(pairs: Sequence[Tuple[float, float]]) -> TestResult:
    """
    Two-sided Wilcoxon signed-rank test on paired samples.

    Zero differences are dropped and tied magnitudes get average ranks. The
    statistic is W+, the rank sum of positive differences. The p-value is exact
    for up to 25 untied differences and otherwise comes from the
    continuity- and tie-corrected normal approximation, which also gives the
    effect size r = Z / sqrt(n) (positive when the first sample is larger).

    Raises:
        InvalidInputError: If every difference is zero or fewer than 6
            differences are non-zero.
    """
    values = np.asarray(pairs, dtype=float).reshape(-1, 2)
    differences = values[:, 0] - values[:, 1]
    differences = differences[differences != 0]
    n = differences.size
    if n == 0:
        raise InvalidInputError("all paired differences are zero")
    if n < MIN_WILCOXON_PAIRS:
        raise InvalidInputError(f"signed-rank test needs {MIN_WILCOXON_PAIRS} non-zero differences, got {n}")

    magnitudes = np.abs(differences)
    ranks = stats.rankdata(magnitudes)
    w_plus = float(ranks[differences > 0].sum())

    _, ties = np.unique(magnitudes, return_counts=True)
    mean = n * (n + 1) / 4
    variance = n * (n + 1) * (2 * n + 1) / 24 - np.sum(ties ** 3 - ties) / 48
    deviation = w_plus - mean
    z = np.sign(deviation) * max(abs(deviation) - 0.5, 0.0) / np.sqrt(variance)

    if n <= EXACT_WILCOXON_LIMIT and np.all(ties == 1):
        p_value = _exact_signed_rank_pvalue(w_plus, n)
    else:
        p_value = float(min(1.0, 2.0 * stats.norm.sf(abs(z))))
    return TestResult(statistic=w_plus, p_value=p_value, effect_size_r=float(z / np.sqrt(n)))


def matched_compare(group_a: Sequence[Tuple[Sequence[float], float]],
                    group_b: Sequence[Tuple[Sequence[float], float]],
                    k_controls: int) -> TestResult:
    """
    Compares a target between two groups after matching on control variables.

    Controls (non-negative counts such as burst width, peak height and
    reshares) are log1p-transformed and z-normalized over both groups. Every
    member of `group_a`, in input order, takes the nearest unmatched member of
    `group_b` by Euclidean distance (ties to the lowest index); the matched
    targets then go through the signed-rank test.

    Args:
        group_a: (controls, target) pairs.
        group_b: (controls, target) pairs.
        k_controls (int): Number of control variables per member.

    Returns:
        TestResult: The signed-rank result, positive effect when group_a is
        larger. Identical matched targets give W=0, p=1, r=0.

    Raises:
        InvalidInputError: If a group is empty, a control vector has the wrong
            dimension or a control is negative.
    """
    if not group_a or not group_b:
        raise InvalidInputError("both groups need members")

    def split(group):
        try:
            controls = np.array([np.asarray(c, dtype=float) for c, _ in group], dtype=float)
        except ValueError as err:
            raise InvalidInputError(f"control vectors differ in length: {err}")
        if controls.ndim != 2 or controls.shape[1] != k_controls:
            raise InvalidInputError(f"control vectors must have {k_controls} entries")
        if np.any(controls < 0):
            raise InvalidInputError("controls must be non-negative counts")
        return controls, np.array([target for _, target in group], dtype=float)

    controls_a, targets_a = split(group_a)
    controls_b, targets_b = split(group_b)

    pooled = np.log1p(np.vstack([controls_a, controls_b]))
    scale = pooled.std(axis=0)
    scale[scale == 0] = 1.0
    normalized = (pooled - pooled.mean(axis=0)) / scale
    distances = cdist(normalized[:len(group_a)], normalized[len(group_a):])

    available = np.ones(len(group_b), dtype=bool)
    matched = []
    for i in range(len(group_a)):
        if not available.any():
            break
        j = int(np.argmin(np.where(available, distances[i], np.inf)))
        available[j] = False
        matched.append((targets_a[i], targets_b[j]))

    logger.debug("matched %d of %d pairs", len(matched), len(group_a))
    if all(a == b for a, b in matched):
        return TestResult(statistic=0.0, p_value=1.0, effect_size_r=0.0)
    return wilcoxon_signed_rank(matched)


def copy_share_distribution(cluster: CascadeCluster, burst: Burst) -> Dict[int, int]:
    """Events per copy inside the burst window, keyed by copy id."""
    copy_ids, counts = np.unique(cluster.copy_ids[cluster.window_mask(burst.start_day, burst.end_day)],
                                 return_counts=True)
    return {int(copy_id): int(count) for copy_id, count in zip(copy_ids, counts)}


def top_copy(distribution: Dict[int, int]) -> Optional[int]:
    if not distribution:
        return None
    return max(distribution, key=lambda copy_id: (distribution[copy_id], -copy_id))


def exposure_overlap(graph: SocialGraph, first: BurstPopulation, second: BurstPopulation) -> float:
    """Share of the second burst's exposed population already exposed by the first."""
    exposed_second = exposed_population(graph, second.members)
    if not exposed_second:
        return 0.0
    exposed_first = exposed_population(graph, first.members)
    return len(exposed_first & exposed_second) / len(exposed_second)


def cross_burst_edges(graph: SocialGraph, first: BurstPopulation, second: BurstPopulation) -> EdgeCounts:
    """
    Counts friend and follow edges inside each burst and between the two, on
    the subgraph induced by both bursts' members.
    """
    sub = induced_subgraph(graph, first.members | second.members)
    in_first = np.isin(sub.origin_ids, list(first.members))
    in_second = np.isin(sub.origin_ids, list(second.members))

    def count(edges):
        pairs = np.array(edges, dtype=np.int64).reshape(-1, 2)
        u, v = pairs[:, 0], pairs[:, 1]
        within_first = in_first[u] & in_first[v]
        within_second = in_second[u] & in_second[v]
        across = ((in_first[u] & in_second[v]) | (in_second[u] & in_first[v])) & ~within_first & ~within_second
        return int(within_first.sum()), int(within_second.sum()), int(across.sum())

    friend = count(sub.friend_edges)
    follow = count(sub.follow_edges)
    return EdgeCounts(friend_within_first=friend[0], follow_within_first=follow[0],
                      friend_within_second=friend[1], follow_within_second=follow[1],
                      friend_across=friend[2], follow_across=follow[2])


def mean_internal_degree(graph: SocialGraph, population: BurstPopulation) -> float:
    """Mean number of connections a burst's people have to other members of the burst."""
    if not population.persons:
        return 0.0
    sub = induced_subgraph(graph, population.members)
    degrees = sub.degrees()[~sub.is_page]
    return float(degrees.mean())


def majority_country(actors: Iterable[int], graph: SocialGraph) -> Optional[str]:
    persons = _person_ids(actors, graph)
    if persons.size == 0:
        return None
    tally = Counter(graph.countries[persons].tolist())
    return min(tally, key=lambda country: (-tally[country], country))


def demographic_shift(graph: SocialGraph, first: BurstPopulation, second: BurstPopulation) -> DemographicShift:
    before = demographic_summary(first.persons, graph)
    after = demographic_summary(second.persons, graph)
    return DemographicShift(
        age_change=abs(after.mean_age - before.mean_age),
        female_change=abs(after.prop_female - before.prop_female),
        majority_country_changed=majority_country(first.persons, graph) != majority_country(second.persons, graph),
    )


def copy_introduction_correlation(cluster: CascadeCluster, horizon: int) -> CorrelationResult:
    """Correlates new copies per day with events per day."""
    events = build_series(cluster, horizon).array
    created = np.bincount(cluster.days[cluster.is_create], minlength=horizon + 1)[1:]
    return pearson(created, events)


def reupload_rates(cluster: CascadeCluster, graph: SocialGraph) -> Tuple[float, float]:
    """Shares of page events and of person events that upload a new copy instead of resharing."""
    graph.check_nodes(cluster.actors)
    by_page = graph.is_page[cluster.actors]

    def rate(mask):
        return float(cluster.is_create[mask].mean()) if mask.any() else 0.0

    return rate(by_page), rate(~by_page)


def top_copy_repeats(cluster: CascadeCluster, bursts: Sequence[Burst]) -> List[bool]:
    """For every burst after the first: was its top copy already the top copy of an earlier burst?"""
    seen = set()
    repeats = []
    for index, burst in enumerate(bursts):
        leader = top_copy(copy_share_distribution(cluster, burst))
        if index:
            repeats.append(leader in seen)
        seen.add(leader)
    return repeats
