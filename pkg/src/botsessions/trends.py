"""Per-position behavioral trend measurement with SEM bands and a
deterministic increasing/decreasing/flat verdict.

The analysis is restricted to sessions of similar length (default 20-25
posts) and, for all measures except the retweet fraction, retweets are
removed before aggregation since their content is not authored by the poster.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, DomainError, InsufficientDataError
from .sessionize import SessionizedTweet


class Measure(Enum):
    RETWEET_FRACTION = "retweet_fraction"
    REPLY_FRACTION = "reply_fraction"
    MENTIONS_PER_TWEET = "mentions_per_tweet"
    TEXT_LENGTH = "text_length"

    @property
    def excludes_retweets(self) -> bool:
        return self is not Measure.RETWEET_FRACTION

    def value_of(self, st: SessionizedTweet) -> float:
        t = st.tweet
        if self is Measure.RETWEET_FRACTION:
            return float(t.is_retweet)
        if self is Measure.REPLY_FRACTION:
            return float(t.is_reply)
        if self is Measure.MENTIONS_PER_TWEET:
            return float(t.n_mentions)
        return float(t.stripped_length)


class Verdict(Enum):
    INCREASING = "increasing"
    DECREASING = "decreasing"
    FLAT = "flat"


@dataclass(frozen=True)
class TrendPoint:
    position: int
    mean: float
    sem: float
    n: int


@dataclass(frozen=True)
class TrendSeries:
    measure: Measure
    class_name: str
    points: tuple[TrendPoint, ...]
    omitted_positions: tuple[int, ...] = ()


@dataclass(frozen=True)
class TrendTest:
    slope: float
    spearman_rho: float
    verdict: Verdict


def filter_sessions(
    sessionized: Iterable[SessionizedTweet], min_len: int, max_len: int
) -> list[SessionizedTweet]:
    """Keep tweets belonging to sessions with min_len <= length <= max_len."""
    if min_len > max_len:
        raise ConfigError(f"min_len {min_len} > max_len {max_len}")
    return [st for st in sessionized if min_len <= st.session_length <= max_len]


def _sem(values: np.ndarray) -> float:
    # sample std with the (n-1) divisor; defined as 0 for a single observation
    n = len(values)
    if n <= 1:
        return 0.0
    return float(values.std(ddof=1) / math.sqrt(n))


def per_position_series(
    sessionized: Iterable[SessionizedTweet],
    measure: Measure,
    max_position: int = 20,
    class_name: str = "",
) -> TrendSeries:
    """Mean, SEM, and count of one measure at each session position 1..max_position.

    Positions with zero qualifying tweets (e.g. all retweets for a
    retweet-excluding measure) are omitted and flagged on the series.
    """
    if max_position < 1:
        raise ConfigError("max_position must be >= 1")
    buckets: dict[int, list[float]] = {}
    for st in sessionized:
        if st.position_in_session > max_position:
            continue
        if measure.excludes_retweets and st.tweet.is_retweet:
            continue
        buckets.setdefault(st.position_in_session, []).append(measure.value_of(st))
    points = []
    omitted = []
    for pos in range(1, max_position + 1):
        values = buckets.get(pos)
        if not values:
            omitted.append(pos)
            continue
        arr = np.asarray(values, dtype=np.float64)
        points.append(TrendPoint(pos, float(arr.mean()), _sem(arr), len(arr)))
    return TrendSeries(measure, class_name, tuple(points), tuple(omitted))


def _average_ranks(a: np.ndarray) -> np.ndarray:
    order = np.argsort(a, kind="stable")
    ranks = np.empty(len(a), dtype=np.float64)
    ranks[order] = np.arange(1, len(a) + 1, dtype=np.float64)
    # average ranks over ties
    sorted_a = a[order]
    i = 0
    while i < len(a):
        j = i
        while j + 1 < len(a) and sorted_a[j + 1] == sorted_a[i]:
            j += 1
        if j > i:
            ranks[order[i : j + 1]] = (i + j + 2) / 2.0
        i = j + 1
    return ranks


def spearman_rho(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman rank correlation with average ranks; 0 when either side is constant."""
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if len(xa) != len(ya) or len(xa) < 2:
        raise DomainError("spearman_rho needs two equal-length series of >= 2 points")
    rx = _average_ranks(xa)
    ry = _average_ranks(ya)
    sx = rx.std()
    sy = ry.std()
    if sx == 0.0 or sy == 0.0:
        return 0.0
    return float(((rx - rx.mean()) * (ry - ry.mean())).mean() / (sx * sy))


def weighted_slope(x: Sequence[float], y: Sequence[float], w: Sequence[float]) -> float:
    """Least-squares slope of y on x with observation weights w."""
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    wa = np.asarray(w, dtype=np.float64)
    wsum = wa.sum()
    if wsum <= 0:
        raise DomainError("weights must have positive sum")
    xm = (wa * xa).sum() / wsum
    ym = (wa * ya).sum() / wsum
    denom = (wa * (xa - xm) ** 2).sum()
    if denom == 0.0:
        return 0.0
    return float((wa * (xa - xm) * (ya - ym)).sum() / denom)


def trend_test(series: TrendSeries, slope_epsilon: float) -> TrendTest:
    """Classify a series as increasing/decreasing/flat.

    Increasing needs both slope > slope_epsilon and Spearman rho > 0.5;
    decreasing is symmetric; everything else is flat.
    """
    if len(series.points) < 5:
        raise InsufficientDataError(
            f"trend_test needs >= 5 points, got {len(series.points)}"
        )
    positions = [p.position for p in series.points]
    means = [p.mean for p in series.points]
    weights = [p.n for p in series.points]
    slope = weighted_slope(positions, means, weights)
    rho = spearman_rho(positions, means)
    if slope > slope_epsilon and rho > 0.5:
        verdict = Verdict.INCREASING
    elif slope < -slope_epsilon and rho < -0.5:
        verdict = Verdict.DECREASING
    else:
        verdict = Verdict.FLAT
    return TrendTest(slope, rho, verdict)
