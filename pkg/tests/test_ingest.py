"""Tests for parsing, entity extraction, and score-based labeling."""
import io
import math

import pytest
from hypothesis import given, strategies as st

from botsessions.errors import (
    ConfigError,
    DomainError,
    ParseError,
    SchemaError,
    ValidationError,
)
from botsessions.ingest import (
    Label,
    TweetRecord,
    UserLabel,
    UserScore,
    extract_entities,
    label_counts,
    label_users,
    parse_event_line,
    quantile_threshold,
    read_labels_csv,
    write_labels_csv,
)


class TestExtractEntities:
    def test_plain_text(self):
        assert extract_entities("hello world") == (0, 0, 0, "hello world", 11)

    def test_mention_hashtag_url(self):
        m, h, u, stripped, n = extract_entities("hi @bob see #news at https://a.example/x")
        assert (m, h, u) == (1, 1, 1)
        assert stripped == "hi see at"
        assert n == 9

    def test_trailing_punctuation_ignored_for_classification(self):
        m, h, u, stripped, _ = extract_entities("thanks @bob! great #win.")
        assert (m, h, u) == (1, 1, 0)
        assert stripped == "thanks great"

    def test_bare_sigils_are_not_entities(self):
        m, h, u, stripped, _ = extract_entities("a @ b # c @! d")
        assert (m, h, u) == (0, 0, 0)
        assert stripped == "a @ b # c @! d"

    def test_punctuation_after_sigil_not_entity(self):
        # '@.' strips to '@', which has no handle character after it
        assert extract_entities("@.")[:3] == (0, 0, 0)

    def test_http_prefix_required(self):
        m, h, u, _, _ = extract_entities("ftp://x.example http:/half https://ok.example")
        assert u == 1

    def test_underscore_handles(self):
        assert extract_entities("@_bob #_tag")[:3] == (1, 1, 0)

    def test_unicode_scalar_length(self):
        m, h, u, stripped, n = extract_entities("café @bob")
        assert stripped == "café"
        assert n == 4

    def test_empty(self):
        assert extract_entities("") == (0, 0, 0, "", 0)

    def test_internal_whitespace_collapses(self):
        _, _, _, stripped, n = extract_entities("a   b\t c")
        assert stripped == "a b c"
        assert n == 5

    @given(st.text(max_size=80))
    def test_counts_never_negative_and_stripped_consistent(self, text):
        m, h, u, stripped, n = extract_entities(text)
        assert m >= 0 and h >= 0 and u >= 0
        assert n == len(stripped)
        # stripping is idempotent: kept tokens are never entities
        assert extract_entities(stripped)[:3] == (0, 0, 0)


class TestTweetRecord:
    def test_stripped_length_derived_from_text(self):
        rec = TweetRecord("t1", "u1", 100, text="hi @bob")
        assert rec.stripped_length == 2

    def test_explicit_stripped_length_kept(self):
        rec = TweetRecord("t1", "u1", 100, text="hi @bob", stripped_length=40)
        assert rec.stripped_length == 40

    def test_negative_created_at_rejected(self):
        with pytest.raises(ValidationError):
            TweetRecord("t1", "u1", -1)

    def test_negative_counts_rejected(self):
        with pytest.raises(ValidationError):
            TweetRecord("t1", "u1", 0, n_mentions=-1)


class TestParseEventLine:
    def test_minimal_line(self):
        rec = parse_event_line('{"tweet_id": "t1", "user_id": "u1", "created_at": 5}')
        assert rec.tweet_id == "t1"
        assert rec.created_at == 5
        assert rec.text == ""

    def test_counts_derived_from_text(self):
        rec = parse_event_line(
            '{"tweet_id": "t", "user_id": "u", "created_at": 1, "text": "x @a #b"}'
        )
        assert (rec.n_mentions, rec.n_hashtags, rec.n_urls) == (1, 1, 0)
        assert rec.stripped_length == 1

    def test_explicit_counts_override_derived(self):
        rec = parse_event_line(
            '{"tweet_id": "t", "user_id": "u", "created_at": 1,'
            ' "text": "x @a", "n_mentions": 7}'
        )
        assert rec.n_mentions == 7

    def test_malformed_json_is_parse_error(self):
        with pytest.raises(ParseError, match="byte offset"):
            parse_event_line('{"tweet_id": ')

    def test_non_object_rejected(self):
        with pytest.raises(SchemaError):
            parse_event_line("[1, 2]")

    @pytest.mark.parametrize("missing", ["tweet_id", "user_id", "created_at"])
    def test_missing_required_field(self, missing):
        obj = {"tweet_id": "t", "user_id": "u", "created_at": 1}
        del obj[missing]
        import json

        with pytest.raises(SchemaError, match=missing):
            parse_event_line(json.dumps(obj))

    def test_boolean_created_at_rejected(self):
        with pytest.raises(SchemaError):
            parse_event_line('{"tweet_id": "t", "user_id": "u", "created_at": true}')

    def test_non_string_text_rejected(self):
        with pytest.raises(SchemaError):
            parse_event_line('{"tweet_id": "t", "user_id": "u", "created_at": 1, "text": 3}')


class TestQuantileThreshold:
    def test_nearest_rank_examples(self):
        scores = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
        assert quantile_threshold(scores, 0.10) == 1.0
        assert quantile_threshold(scores, 0.25) == 0.9
        assert quantile_threshold(scores, 0.5) == 0.6

    def test_small_fraction_takes_top_one(self):
        assert quantile_threshold([0.2, 0.8, 0.5], 0.01) == 0.8

    def test_empty_rejected(self):
        with pytest.raises(DomainError):
            quantile_threshold([], 0.5)

    @pytest.mark.parametrize("f", [0.0, 1.0, -0.1, 2.0])
    def test_bad_fraction_rejected(self, f):
        with pytest.raises(ConfigError):
            quantile_threshold([0.5], f)

    @given(
        st.lists(st.floats(0, 1, allow_nan=False), min_size=1, max_size=60),
        st.floats(0.01, 0.99),
    )
    def test_top_set_has_at_least_rank_members(self, scores, frac):
        thr = quantile_threshold(scores, frac)
        rank = max(1, math.floor(len(scores) * frac))
        assert thr in scores
        assert sum(1 for s in scores if s >= thr) >= rank


class TestLabeling:
    def test_threshold_boundaries_inclusive(self):
        scores = [UserScore("a", 0.53), UserScore("b", 0.4), UserScore("c", 0.45)]
        labels = {ul.user_id: ul.label for ul in label_users(scores, 0.53, 0.4)}
        assert labels == {"a": Label.BOT, "b": Label.HUMAN, "c": Label.UNLABELED}

    def test_invalid_threshold_order(self):
        with pytest.raises(ConfigError):
            label_users([], 0.4, 0.53)

    def test_score_out_of_range(self):
        with pytest.raises(ValidationError):
            UserScore("a", 1.5)

    def test_label_counts(self):
        labels = [UserLabel("a", Label.BOT), UserLabel("b", Label.BOT), UserLabel("c", Label.HUMAN)]
        assert label_counts(labels) == {"bot": 2, "human": 1, "unlabeled": 0}


class TestLabelsCsv:
    def test_round_trip(self, tmp_path):
        labels = [UserLabel("u1", Label.BOT), UserLabel("u2", Label.HUMAN)]
        buf = io.StringIO()
        write_labels_csv(labels, buf)
        path = tmp_path / "labels.csv"
        path.write_text(buf.getvalue())
        assert read_labels_csv(path) == {"u1": Label.BOT, "u2": Label.HUMAN}

    def test_bad_header(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("user,lab\nu1,bot\n")
        with pytest.raises(SchemaError):
            read_labels_csv(path)
