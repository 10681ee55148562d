"""Per-tweet feature vectors: 3 session features + 6 behavioral features + label.

Column order is fixed; the baseline set drops the three session columns.
Values stay raw integers -- scaling is the consumer's job (kNN standardizes,
trees do not).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping

import numpy as np

from .errors import SchemaError, ValidationError
from .ingest import Label
from .sessionize import SessionizedTweet

FEATURE_NAMES = (
    "session_ordinal",
    "position_in_session",
    "session_length",
    "is_retweet",
    "is_reply",
    "n_mentions",
    "n_hashtags",
    "n_urls",
    "text_length",
)
N_SESSION_FEATURES = 3
BASELINE_NAMES = FEATURE_NAMES[N_SESSION_FEATURES:]
LABEL_NAME = "label"


class FeatureSet(Enum):
    FULL = "full"
    BASELINE = "baseline"

    @property
    def names(self) -> tuple[str, ...]:
        return FEATURE_NAMES if self is FeatureSet.FULL else BASELINE_NAMES


@dataclass(frozen=True)
class FeatureVector:
    session_ordinal: int
    position_in_session: int
    session_length: int
    is_retweet: int
    is_reply: int
    n_mentions: int
    n_hashtags: int
    n_urls: int
    text_length: int
    label: int

    def __post_init__(self):
        if not 1 <= self.position_in_session <= self.session_length:
            raise ValidationError("position_in_session must be in [1, session_length]")
        if self.is_retweet not in (0, 1) or self.is_reply not in (0, 1):
            raise ValidationError("is_retweet/is_reply must be 0 or 1")
        for name in ("session_ordinal", "n_mentions", "n_hashtags", "n_urls", "text_length"):
            if getattr(self, name) < 0:
                raise ValidationError(f"negative value for {name}")
        if self.label not in (0, 1):
            raise ValidationError("label must be 0 (human) or 1 (bot)")


def featurize(st: SessionizedTweet, label: int) -> FeatureVector:
    """One vector per tweet; text_length is the stripped length."""
    t = st.tweet
    return FeatureVector(
        session_ordinal=st.session_ordinal,
        position_in_session=st.position_in_session,
        session_length=st.session_length,
        is_retweet=int(t.is_retweet),
        is_reply=int(t.is_reply),
        n_mentions=t.n_mentions,
        n_hashtags=t.n_hashtags,
        n_urls=t.n_urls,
        text_length=t.stripped_length,
        label=label,
    )


def project(v: FeatureVector, fs: FeatureSet) -> tuple[float, ...]:
    """Ordered values for the chosen feature set (label excluded)."""
    return tuple(float(getattr(v, name)) for name in fs.names)


def project_matrix(X: np.ndarray, fs: FeatureSet) -> np.ndarray:
    """Column-drop a full 9-column matrix down to the chosen set."""
    if X.shape[1] != len(FEATURE_NAMES):
        raise ValidationError(
            f"expected a full matrix with {len(FEATURE_NAMES)} columns, got {X.shape[1]}"
        )
    if fs is FeatureSet.FULL:
        return X
    return X[:, N_SESSION_FEATURES:]


def build_matrix(
    sessionized: Iterable[SessionizedTweet],
    labels_by_user: Mapping[str, Label],
) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Full feature matrix, label vector, and per-row user ids.

    Tweets from users that are unlabeled or absent from the map are skipped:
    they carry no class to train against.
    """
    rows: list[tuple[float, ...]] = []
    labels: list[int] = []
    users: list[str] = []
    for st in sessionized:
        lab = labels_by_user.get(st.user_id)
        if lab is None or lab is Label.UNLABELED:
            continue
        y = 1 if lab is Label.BOT else 0
        rows.append(project(featurize(st, y), FeatureSet.FULL))
        labels.append(y)
        users.append(st.user_id)
    X = np.array(rows, dtype=np.float64).reshape(len(rows), len(FEATURE_NAMES))
    return X, np.array(labels, dtype=np.int64), users


def write_matrix_csv(X: np.ndarray, y: np.ndarray, fs: FeatureSet, fh) -> None:
    """CSV with canonical header, one row per tweet, label column last."""
    names = fs.names
    if X.shape[1] == len(FEATURE_NAMES) and fs is FeatureSet.BASELINE:
        X = project_matrix(X, fs)
    if X.shape[1] != len(names):
        raise ValidationError(f"matrix has {X.shape[1]} columns, expected {len(names)}")
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(list(names) + [LABEL_NAME])
    for row, label in zip(X, y):
        writer.writerow([_fmt(v) for v in row] + [int(label)])


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def read_matrix_csv(path) -> tuple[np.ndarray, np.ndarray, FeatureSet]:
    """Read a feature CSV back; detects full vs baseline from the header."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header == list(FEATURE_NAMES) + [LABEL_NAME]:
            fs = FeatureSet.FULL
        elif header == list(BASELINE_NAMES) + [LABEL_NAME]:
            fs = FeatureSet.BASELINE
        else:
            raise SchemaError(f"unrecognized feature CSV header: {header}")
        rows = []
        labels = []
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise SchemaError(f"feature CSV row has {len(row)} fields, expected {len(header)}")
            rows.append([float(v) for v in row[:-1]])
            labels.append(int(row[-1]))
    X = np.array(rows, dtype=np.float64).reshape(len(rows), len(header) - 1)
    return X, np.array(labels, dtype=np.int64), fs
