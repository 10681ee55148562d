"""Event-log parsing, token-level entity extraction, and score-based account labeling.

Input is UTF-8 JSONL, one post per line. Entity detection is deliberately
token-based (whitespace split plus prefix rules) so the whole pipeline is
deterministic and testable without a platform grammar.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Sequence

from .errors import ConfigError, DomainError, ParseError, SchemaError, ValidationError

# Trailing punctuation ignored when classifying a token, removed with it.
_TRAILING_PUNCT = ".,!?:;"
_REQUIRED_FIELDS = ("tweet_id", "user_id", "created_at")


def _is_handle_char(ch: str) -> bool:
    return ch.isalnum() or ch == "_"


def extract_entities(text: str) -> tuple[int, int, int, str, int]:
    """Count mentions/hashtags/urls in ``text`` and strip them out.

    Tokenizes on Unicode whitespace. A token is a mention iff it starts with
    '@' followed by at least one alphanumeric/underscore character, a hashtag
    iff '#' likewise, a url iff it starts with http:// or https://. Trailing
    punctuation (.,!?:;) does not affect classification but goes away with
    the token. Returns (n_mentions, n_hashtags, n_urls, stripped_text,
    stripped_length); the length counts Unicode scalar values, not bytes.
    """
    n_mentions = n_hashtags = n_urls = 0
    kept: list[str] = []
    for token in text.split():
        core = token.rstrip(_TRAILING_PUNCT)
        if len(core) > 1 and core[0] == "@" and _is_handle_char(core[1]):
            n_mentions += 1
        elif len(core) > 1 and core[0] == "#" and _is_handle_char(core[1]):
            n_hashtags += 1
        elif core.startswith("http://") or core.startswith("https://"):
            n_urls += 1
        else:
            kept.append(token)
    stripped = " ".join(kept)
    return n_mentions, n_hashtags, n_urls, stripped, len(stripped)


@dataclass(frozen=True)
class TweetRecord:
    """One timestamped post event.

    ``stripped_length`` is derived from ``text`` via :func:`extract_entities`
    when not supplied, so every record carries the content-length measure
    downstream modules need.
    """

    tweet_id: str
    user_id: str
    created_at: int
    text: str = ""
    is_retweet: bool = False
    is_reply: bool = False
    n_mentions: int = 0
    n_hashtags: int = 0
    n_urls: int = 0
    stripped_length: int | None = None

    def __post_init__(self):
        if self.created_at < 0:
            raise ValidationError(f"created_at must be >= 0, got {self.created_at}")
        for name in ("n_mentions", "n_hashtags", "n_urls"):
            if getattr(self, name) < 0:
                raise ValidationError(f"negative count for {name}")
        if self.stripped_length is None:
            object.__setattr__(self, "stripped_length", extract_entities(self.text)[4])
        elif self.stripped_length < 0:
            raise ValidationError("negative stripped_length")


def parse_event_line(line: str) -> TweetRecord:
    """Parse one JSONL line into a validated TweetRecord.

    Explicit n_mentions / n_hashtags / n_urls fields override values derived
    from the text; missing ones are filled from :func:`extract_entities`.
    """
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON at byte offset {exc.pos}: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise SchemaError("line is not a JSON object")
    for name in _REQUIRED_FIELDS:
        if name not in obj:
            raise SchemaError(f"missing required field '{name}'")
    created_at = obj["created_at"]
    if not isinstance(created_at, int) or isinstance(created_at, bool):
        raise SchemaError("created_at must be an integer (epoch seconds)")
    text = obj.get("text", "")
    if not isinstance(text, str):
        raise SchemaError("text must be a string")
    derived_m, derived_h, derived_u, _, stripped_len = extract_entities(text)
    counts = {}
    for name, derived in (
        ("n_mentions", derived_m),
        ("n_hashtags", derived_h),
        ("n_urls", derived_u),
    ):
        value = obj.get(name, derived)
        if not isinstance(value, int) or isinstance(value, bool):
            raise SchemaError(f"{name} must be an integer")
        counts[name] = value
    return TweetRecord(
        tweet_id=str(obj["tweet_id"]),
        user_id=str(obj["user_id"]),
        created_at=created_at,
        text=text,
        is_retweet=bool(obj.get("is_retweet", False)),
        is_reply=bool(obj.get("is_reply", False)),
        stripped_length=stripped_len,
        **counts,
    )


class Label(Enum):
    BOT = "bot"
    HUMAN = "human"
    UNLABELED = "unlabeled"


@dataclass(frozen=True)
class UserScore:
    user_id: str
    bot_score: float

    def __post_init__(self):
        if not 0.0 <= self.bot_score <= 1.0:
            raise ValidationError(f"bot_score outside [0,1]: {self.bot_score}")


@dataclass(frozen=True)
class UserLabel:
    user_id: str
    label: Label


def quantile_threshold(scores: Sequence[float], top_fraction: float) -> float:
    """Nearest-rank descending quantile: the score at rank max(1, floor(n*f))
    counting from the highest. Every score >= the returned value is in the
    top set."""
    if len(scores) == 0:
        raise DomainError("quantile_threshold: empty score list")
    if not 0.0 < top_fraction < 1.0:
        raise ConfigError(f"top_fraction must be in (0,1), got {top_fraction}")
    ordered = sorted(scores, reverse=True)
    rank = max(1, math.floor(len(ordered) * top_fraction))
    return ordered[rank - 1]


def label_users(
    scores: Iterable[UserScore],
    bot_threshold: float,
    human_threshold: float,
) -> list[UserLabel]:
    """Label each account: Bot iff score >= bot_threshold, Human iff
    score <= human_threshold, Unlabeled in between."""
    if not (0.0 <= human_threshold < bot_threshold <= 1.0):
        raise ConfigError(
            f"need 0 <= human_threshold < bot_threshold <= 1, "
            f"got ({human_threshold}, {bot_threshold})"
        )
    out = []
    for s in scores:
        if s.bot_score >= bot_threshold:
            label = Label.BOT
        elif s.bot_score <= human_threshold:
            label = Label.HUMAN
        else:
            label = Label.UNLABELED
        out.append(UserLabel(s.user_id, label))
    return out


def label_counts(labels: Iterable[UserLabel]) -> dict[str, int]:
    counts = {lab.value: 0 for lab in Label}
    for ul in labels:
        counts[ul.label.value] += 1
    return counts


# ---------------------------------------------------------------------------
# file I/O


def read_tweets(path) -> Iterator[TweetRecord]:
    """Stream TweetRecords from a JSONL file."""
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield parse_event_line(line)


def read_scores(path) -> list[UserScore]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"malformed JSON at byte offset {exc.pos}: {exc.msg}") from exc
            for name in ("user_id", "bot_score"):
                if name not in obj:
                    raise SchemaError(f"missing required field '{name}'")
            out.append(UserScore(str(obj["user_id"]), float(obj["bot_score"])))
    return out


def write_labels_csv(labels: Iterable[UserLabel], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["user_id", "label"])
    for ul in labels:
        writer.writerow([ul.user_id, ul.label.value])


def read_labels_csv(path) -> dict[str, Label]:
    out: dict[str, Label] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["user_id", "label"]:
            raise SchemaError("labels CSV must start with header 'user_id,label'")
        for row in reader:
            if len(row) != 2:
                raise SchemaError(f"bad labels row: {row!r}")
            out[row[0]] = Label(row[1])
    return out
