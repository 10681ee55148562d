"""Tests for per-position aggregation, SEM bands, and trend verdicts."""
import math

import numpy as np
import pytest

from botsessions.errors import ConfigError, DomainError, InsufficientDataError
from botsessions.ingest import TweetRecord
from botsessions.sessionize import SessionizedTweet
from botsessions.trends import (
    Measure,
    TrendPoint,
    TrendSeries,
    Verdict,
    filter_sessions,
    per_position_series,
    spearman_rho,
    trend_test,
    weighted_slope,
)


def _st(position, length, user="u1", **tweet_kwargs):
    defaults = dict(tweet_id=f"t{position}", user_id=user, created_at=position)
    defaults.update(tweet_kwargs)
    return SessionizedTweet(TweetRecord(**defaults), 1, position, length)


def _series(means, ns=None):
    ns = ns or [10] * len(means)
    points = tuple(
        TrendPoint(i + 1, m, 0.0, n) for i, (m, n) in enumerate(zip(means, ns))
    )
    return TrendSeries(Measure.TEXT_LENGTH, "test", points)


class TestFilterSessions:
    def test_length_window(self):
        sts = [_st(1, 5), _st(1, 20), _st(1, 25), _st(1, 26)]
        kept = filter_sessions(sts, 20, 25)
        assert [s.session_length for s in kept] == [20, 25]

    def test_bad_window(self):
        with pytest.raises(ConfigError):
            filter_sessions([], 25, 20)


class TestPerPositionSeries:
    def test_mean_and_sem(self):
        sts = [
            _st(1, 2, text="ab"),
            _st(1, 2, text="abcd"),
            _st(2, 2, text="abc"),
        ]
        series = per_position_series(sts, Measure.TEXT_LENGTH, max_position=2)
        p1, p2 = series.points
        assert p1.mean == pytest.approx(3.0)
        # sample std of [2, 4] is sqrt(2); SEM = sqrt(2)/sqrt(2) = 1
        assert p1.sem == pytest.approx(1.0)
        assert p2.sem == 0.0 and p2.n == 1

    def test_binary_sem_value(self):
        sts = [_st(1, 1, text="x" * n) for n in (0, 0, 1, 1)]
        series = per_position_series(sts, Measure.TEXT_LENGTH, max_position=1)
        assert series.points[0].sem == pytest.approx(0.28867513, abs=1e-8)

    def test_retweets_excluded_except_for_retweet_fraction(self):
        sts = [_st(1, 1, is_retweet=True, text="abc"), _st(1, 1, text="a")]
        rt = per_position_series(sts, Measure.RETWEET_FRACTION, max_position=1)
        assert rt.points[0].mean == pytest.approx(0.5)
        ln = per_position_series(sts, Measure.TEXT_LENGTH, max_position=1)
        assert ln.points[0].n == 1 and ln.points[0].mean == 1.0

    def test_positions_beyond_max_dropped_and_empty_omitted(self):
        sts = [_st(1, 3, is_retweet=True), _st(3, 3, text="ab")]
        series = per_position_series(sts, Measure.TEXT_LENGTH, max_position=3)
        assert [p.position for p in series.points] == [3]
        assert series.omitted_positions == (1, 2)

    def test_reply_and_mention_measures(self):
        sts = [_st(1, 1, is_reply=True, text="a @b @c", n_mentions=2)]
        rep = per_position_series(sts, Measure.REPLY_FRACTION, max_position=1)
        men = per_position_series(sts, Measure.MENTIONS_PER_TWEET, max_position=1)
        assert rep.points[0].mean == 1.0
        assert men.points[0].mean == 2.0


class TestRankStatistics:
    def test_spearman_perfect_monotone(self):
        assert spearman_rho([1, 2, 3, 4], [10, 20, 30, 40]) == pytest.approx(1.0)
        assert spearman_rho([1, 2, 3, 4], [5, 4, 3, 2]) == pytest.approx(-1.0)

    def test_spearman_is_rank_based(self):
        # monotone but nonlinear: rho is still exactly 1
        x = [1, 2, 3, 4, 5]
        y = [math.exp(v) for v in x]
        assert spearman_rho(x, y) == pytest.approx(1.0)

    def test_spearman_ties_use_average_ranks(self):
        rho = spearman_rho([1, 2, 3, 4], [1, 1, 2, 2])
        assert rho == pytest.approx(0.8944271909999159, abs=1e-12)

    def test_spearman_constant_side_is_zero(self):
        assert spearman_rho([1, 2, 3], [5, 5, 5]) == 0.0

    def test_spearman_length_errors(self):
        with pytest.raises(DomainError):
            spearman_rho([1], [1])

    def test_weighted_slope_exact_line(self):
        assert weighted_slope([1, 2, 3], [2, 4, 6], [1, 1, 1]) == pytest.approx(2.0)

    def test_weighted_slope_weights_matter(self):
        # heavy weight on two collinear points pins the slope toward their line
        light = weighted_slope([1, 2, 3], [0, 0, 9], [1, 1, 1])
        heavy = weighted_slope([1, 2, 3], [0, 0, 9], [100, 100, 1])
        assert heavy < light

    def test_weighted_slope_degenerate(self):
        assert weighted_slope([2, 2, 2], [1, 5, 9], [1, 1, 1]) == 0.0
        with pytest.raises(DomainError):
            weighted_slope([1, 2], [1, 2], [0, 0])


class TestTrendTest:
    def test_linear_increasing(self):
        means = [0.1 + 0.01 * k for k in range(1, 11)]
        result = trend_test(_series(means), slope_epsilon=0.001)
        assert result.verdict is Verdict.INCREASING
        assert result.slope == pytest.approx(0.01)
        assert result.spearman_rho == pytest.approx(1.0)

    def test_constant_is_flat(self):
        result = trend_test(_series([0.5] * 10), slope_epsilon=0.001)
        assert result.verdict is Verdict.FLAT
        assert result.slope == pytest.approx(0.0)

    def test_decreasing(self):
        means = [10 - 0.5 * k for k in range(1, 11)]
        result = trend_test(_series(means), slope_epsilon=0.01)
        assert result.verdict is Verdict.DECREASING

    def test_slope_below_epsilon_is_flat(self):
        means = [0.1 + 0.001 * k for k in range(1, 11)]
        assert trend_test(_series(means), slope_epsilon=0.01).verdict is Verdict.FLAT

    def test_monotonic_but_weak_rho_is_flat(self):
        # large slope driven by one point; rank correlation stays low
        means = [1.0, 0.9, 1.1, 0.8, 1.0, 0.9, 1.05, 0.85, 1.0, 9.0]
        result = trend_test(_series(means), slope_epsilon=0.01)
        assert result.spearman_rho <= 0.5
        assert result.verdict is Verdict.FLAT

    def test_affine_rescaling_preserves_verdict(self):
        rng = np.random.default_rng(3)
        means = list(np.cumsum(rng.uniform(0.0, 1.0, size=12)))
        eps = 0.05
        base = trend_test(_series(means), eps)
        for c in (0.01, 7.0):
            scaled = trend_test(_series([c * m + 3.0 for m in means]), c * eps)
            assert scaled.verdict is base.verdict

    def test_too_few_points(self):
        with pytest.raises(InsufficientDataError):
            trend_test(_series([1, 2, 3, 4]), 0.01)
