import logging
from typing import Iterable, List

import numpy as np
from scipy.ndimage import maximum_filter1d

from src.schemas.schemas import Burst, DailySeries, Peak, PeakParams

logger = logging.getLogger(__name__)

DEFAULT_PARAMS = PeakParams()


def _candidate_days(counts: np.ndarray, mean: float, params: PeakParams) -> List[int]:
    window_max = maximum_filter1d(counts, size=2 * params.w + 1, mode="constant", cval=-1)
    floor = max(params.h0, params.m_mult * mean)
    candidates = []
    for index in np.flatnonzero((counts >= floor) & (counts >= window_max)):
        earlier = counts[max(0, index - params.w):index]
        # plateaus keep their earliest day only
        if earlier.size and earlier.max() >= counts[index]:
            continue
        candidates.append(int(index))
    return candidates


def _has_valley(counts: np.ndarray, left: int, right: int, v: float) -> bool:
    between = counts[left + 1:right]
    return between.size > 0 and between.min() < v * min(counts[left], counts[right])


def detect_peaks(series: DailySeries, params: PeakParams = DEFAULT_PARAMS) -> List[Peak]:
    """
    Finds the peaks of a daily reshare series.

    A peak is at least `h0` high, at least `m_mult` times the mean, and a local
    maximum within +-`w` days (ties go to the earlier day). Between two adjacent
    peaks some day must fall below `v` times the lower of the two heights. While
    an adjacent pair breaks that valley rule, the lower peak of the violating
    pair with the smallest minimum height is dropped (equal heights drop the
    later peak, equal pairs resolve leftmost first).

    Args:
        series (DailySeries): Reshares per day.
        params (PeakParams): Detector parameters.

    Returns:
        List[Peak]: Peaks in increasing day order, possibly empty.
    """
    counts = series.array
    peaks = _candidate_days(counts, series.mean, params)

    while len(peaks) > 1:
        violations = [(min(counts[a], counts[b]), i)
                      for i, (a, b) in enumerate(zip(peaks, peaks[1:]))
                      if not _has_valley(counts, a, b, params.v)]
        if not violations:
            break
        _, i = min(violations)
        left, right = peaks[i], peaks[i + 1]
        peaks.remove(right if counts[right] <= counts[left] else left)

    return [Peak(day=index + 1, height=int(counts[index])) for index in peaks]


def burst_extent(series: DailySeries, peak: Peak) -> Burst:
    """
    Grows the burst around a peak: backwards while the earlier day is no higher
    than the current one and still strictly above the mean, and symmetrically
    forwards while counts do not rise and stay above the mean.
    """
    counts = series.array
    mean = series.mean
    start = end = peak.day - 1
    while start > 0 and counts[start - 1] <= counts[start] and counts[start - 1] > mean:
        start -= 1
    while end < series.t - 1 and counts[end + 1] <= counts[end] and counts[end + 1] > mean:
        end += 1
    return Burst(peak=peak, start_day=start + 1, end_day=end + 1, reshares=int(counts[start:end + 1].sum()))


def find_bursts(series: DailySeries, params: PeakParams = DEFAULT_PARAMS) -> List[Burst]:
    """
    Detects peaks and grows one burst per peak. Valley days above the mean can
    be reached from both neighbouring peaks; they stay with the earlier burst
    and the later burst starts the day after, so bursts never share a day.
    """
    bursts: List[Burst] = []
    for peak in detect_peaks(series, params):
        burst = burst_extent(series, peak)
        if bursts and burst.start_day <= bursts[-1].end_day:
            start = bursts[-1].end_day + 1
            burst = Burst(peak=peak, start_day=start, end_day=burst.end_day,
                          reshares=series.total(start, burst.end_day))
        bursts.append(burst)
    return bursts


def recurs(series: DailySeries, params: PeakParams = DEFAULT_PARAMS) -> bool:
    return len(detect_peaks(series, params)) >= 2


def inter_burst_gaps(peaks: List[Peak]) -> List[int]:
    return [later.day - earlier.day for earlier, later in zip(peaks, peaks[1:])]


def is_evergreen(series: DailySeries) -> bool:
    """Content with activity on both the first and the last observed day."""
    return series.counts[0] > 0 and series.counts[-1] > 0


def subsequent_recurrence_probability(peak_counts: Iterable[int]) -> List[float]:
    """
    For k = 1, 2, ... returns the share of cascades with at least k peaks that
    go on to show at least k + 1, stopping at the largest k some cascade reaches.
    """
    counts = np.asarray(list(peak_counts), dtype=int)
    if counts.size == 0:
        return []
    probabilities = []
    for k in range(1, int(counts.max()) + 1):
        reached = np.count_nonzero(counts >= k)
        probabilities.append(np.count_nonzero(counts >= k + 1) / reached)
    return probabilities
