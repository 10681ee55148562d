"""Activity-session segmentation and the descriptive gap/position statistics.

A session is a maximal run of one user's consecutive posts where every
internal inactivity gap is below the threshold; a gap of at least the
threshold starts a new session.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Sequence

from .errors import ConfigError, DomainError, SchemaError
from .ingest import TweetRecord


@dataclass(frozen=True)
class SessionizerConfig:
    gap_threshold_seconds: int = 3600

    def __post_init__(self):
        if self.gap_threshold_seconds < 1:
            raise ConfigError(
                f"gap_threshold_seconds must be >= 1, got {self.gap_threshold_seconds}"
            )


@dataclass(frozen=True)
class SessionizedTweet:
    """A post annotated with its session ordinal, 1-based position, and session length."""

    tweet: TweetRecord
    session_ordinal: int
    position_in_session: int
    session_length: int

    @property
    def user_id(self) -> str:
        return self.tweet.user_id

    @property
    def created_at(self) -> int:
        return self.tweet.created_at

    @property
    def is_retweet(self) -> bool:
        return self.tweet.is_retweet


def sessionize_user(
    tweets: Sequence[TweetRecord], config: SessionizerConfig
) -> list[SessionizedTweet]:
    """Partition one user's posts into sessions; split where gap >= threshold.

    Sorts defensively by created_at (stable, so equal timestamps keep input
    order and stay in one session). Single streaming pass.
    """
    if not tweets:
        return []
    user_ids = {t.user_id for t in tweets}
    if len(user_ids) > 1:
        raise DomainError(f"sessionize_user: mixed user_ids {sorted(user_ids)}")
    ordered = sorted(tweets, key=lambda t: t.created_at)
    threshold = config.gap_threshold_seconds

    out: list[SessionizedTweet] = []
    ordinal = 1
    session: list[TweetRecord] = [ordered[0]]

    def flush(sess: list[TweetRecord], ordinal: int) -> None:
        length = len(sess)
        for pos, rec in enumerate(sess, start=1):
            out.append(SessionizedTweet(rec, ordinal, pos, length))

    for rec in ordered[1:]:
        if rec.created_at - session[-1].created_at >= threshold:
            flush(session, ordinal)
            ordinal += 1
            session = [rec]
        else:
            session.append(rec)
    flush(session, ordinal)
    return out


def group_by_user(tweets: Iterable[TweetRecord]) -> dict[str, list[TweetRecord]]:
    """Group records by user_id, preserving encounter order."""
    groups: dict[str, list[TweetRecord]] = {}
    for t in tweets:
        groups.setdefault(t.user_id, []).append(t)
    return groups


def sessionize_all(
    tweets: Iterable[TweetRecord], config: SessionizerConfig
) -> list[SessionizedTweet]:
    """Sessionize every user; output ordered by first encounter of each user."""
    out: list[SessionizedTweet] = []
    for user_tweets in group_by_user(tweets).values():
        out.extend(sessionize_user(user_tweets, config))
    return out


def intertweet_gaps(tweets_by_user: dict[str, Sequence[TweetRecord]]) -> list[int]:
    """Per-user consecutive time differences; a user with k tweets contributes k-1 gaps."""
    gaps: list[int] = []
    for user_tweets in tweets_by_user.values():
        ordered = sorted(user_tweets, key=lambda t: t.created_at)
        for prev, cur in zip(ordered, ordered[1:]):
            gaps.append(cur.created_at - prev.created_at)
    return gaps


def intersession_gaps(sessionized: Iterable[SessionizedTweet]) -> list[int]:
    """Gaps between the end of one session and the start of the next, per user."""
    last_in_session: dict[str, list[tuple[int, int, int]]] = {}
    for st in sessionized:
        last_in_session.setdefault(st.user_id, []).append(
            (st.session_ordinal, st.position_in_session, st.created_at)
        )
    gaps: list[int] = []
    for rows in last_in_session.values():
        rows.sort()
        # last tweet of each session, first tweet of the next
        ends: dict[int, int] = {}
        starts: dict[int, int] = {}
        for ordinal, pos, ts in rows:
            if pos == 1:
                starts[ordinal] = ts
            ends[ordinal] = ts
        for ordinal in sorted(starts):
            if ordinal + 1 in starts:
                gaps.append(starts[ordinal + 1] - ends[ordinal])
    return gaps


def position_frequency(
    sessionized: Iterable[SessionizedTweet],
    user_filter: Callable[[str], bool] | None = None,
) -> dict[int, float]:
    """Fraction of tweets appearing at each 1-based session position.

    Fractions sum to 1 over observed positions; empty input gives an empty map.
    """
    counts: dict[int, int] = {}
    total = 0
    for st in sessionized:
        if user_filter is not None and not user_filter(st.user_id):
            continue
        counts[st.position_in_session] = counts.get(st.position_in_session, 0) + 1
        total += 1
    if total == 0:
        return {}
    return {pos: counts[pos] / total for pos in sorted(counts)}


@dataclass(frozen=True)
class Histogram:
    bin_width_seconds: int
    lower_bound: int
    counts: tuple[int, ...]

    @property
    def upper_bound(self) -> int:
        return self.lower_bound + self.bin_width_seconds * len(self.counts)

    def bin_start(self, i: int) -> int:
        return self.lower_bound + i * self.bin_width_seconds


def histogram(
    values: Iterable[int], bin_width_seconds: int, lower_bound: int, upper_bound: int
) -> Histogram:
    """Fixed-width histogram over [lower_bound, upper_bound); out-of-range values dropped."""
    if bin_width_seconds < 1:
        raise ConfigError("bin_width_seconds must be >= 1")
    if upper_bound <= lower_bound:
        raise ConfigError("upper_bound must exceed lower_bound")
    n_bins = (upper_bound - lower_bound) // bin_width_seconds
    counts = [0] * n_bins
    for v in values:
        if lower_bound <= v < lower_bound + n_bins * bin_width_seconds:
            counts[(v - lower_bound) // bin_width_seconds] += 1
    return Histogram(bin_width_seconds, lower_bound, tuple(counts))


def periodic_excess_ratio(hist: Histogram, period_seconds: int) -> float:
    """Total count excess in period-aligned bins over the average adjacent-bin count.

    For each bin whose start is a multiple of ``period_seconds``, the excess is
    its count minus the mean of its adjacent bins; the statistic is the summed
    excess divided by the mean adjacent-bin count. Returns 0.0 when no
    period-aligned bin has populated neighbors.
    """
    spikes_excess = 0.0
    neighbor_counts: list[float] = []
    for i in range(len(hist.counts)):
        if hist.bin_start(i) % period_seconds != 0:
            continue
        adj = [hist.counts[j] for j in (i - 1, i + 1) if 0 <= j < len(hist.counts)]
        # a zero neighbor marks the edge of the distribution's support
        if not adj or any(a == 0 for a in adj):
            continue
        mean_adj = sum(adj) / len(adj)
        spikes_excess += hist.counts[i] - mean_adj
        neighbor_counts.append(mean_adj)
    if not neighbor_counts:
        return 0.0
    baseline = sum(neighbor_counts) / len(neighbor_counts)
    if baseline == 0:
        return 0.0
    return spikes_excess / baseline


def max_neighbor_ratio(hist: Histogram, min_neighbor_mean: float = 8.0) -> float:
    """Max over bins of count / mean(adjacent bins), skipping bins whose
    neighborhood is too sparse to give a stable ratio."""
    best = 0.0
    for i in range(len(hist.counts)):
        adj = [hist.counts[j] for j in (i - 1, i + 1) if 0 <= j < len(hist.counts)]
        if not adj or any(a == 0 for a in adj):
            continue
        mean_adj = sum(adj) / len(adj)
        if mean_adj < min_neighbor_mean:
            continue
        best = max(best, hist.counts[i] / mean_adj)
    return best


# ---------------------------------------------------------------------------
# JSONL round-trip for sessionized output


def sessionized_to_json(st: SessionizedTweet) -> str:
    obj = {
        "tweet_id": st.tweet.tweet_id,
        "user_id": st.tweet.user_id,
        "created_at": st.tweet.created_at,
        "text": st.tweet.text,
        "is_retweet": st.tweet.is_retweet,
        "is_reply": st.tweet.is_reply,
        "n_mentions": st.tweet.n_mentions,
        "n_hashtags": st.tweet.n_hashtags,
        "n_urls": st.tweet.n_urls,
        "session_ordinal": st.session_ordinal,
        "position_in_session": st.position_in_session,
        "session_length": st.session_length,
    }
    return json.dumps(obj, ensure_ascii=False)


def read_sessionized(path) -> Iterator[SessionizedTweet]:
    from .ingest import parse_event_line

    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = parse_event_line(line)
            obj = json.loads(line)
            for name in ("session_ordinal", "position_in_session", "session_length"):
                if name not in obj:
                    raise SchemaError(f"missing required field '{name}'")
            yield SessionizedTweet(
                rec,
                int(obj["session_ordinal"]),
                int(obj["position_in_session"]),
                int(obj["session_length"]),
            )
