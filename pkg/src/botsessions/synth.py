"""Seeded generator of labeled bot/human timelines.

Humans carry saturating-exponential per-position trends (fast change over the
first few posts, then slower); bots post with flat parameters, engage in
longer sessions, and with probability q snap their between-session gaps to
the nearest multiple of 300 s. Generated text round-trips exactly through
ingest.extract_entities: the intended entity counts and stripped length are
recovered verbatim.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict
from typing import Iterable

import numpy as np

from .errors import ConfigError
from .ingest import Label, TweetRecord, UserLabel, UserScore

MAX_TEXT_LENGTH = 280
_FILLER_LETTERS = "etaoinshrdlucmf"


@dataclass(frozen=True)
class GeneratorConfig:
    n_humans: int = 120
    n_bots: int = 60
    sessions_per_user: int = 24
    # session length = min(shifted geometric, max_session_length); bots get a
    # smaller p, hence longer sessions
    session_length_p_human: float = 0.08
    session_length_p_bot: float = 0.05
    max_session_length: int = 25
    # human per-position trends
    p_rt0: float = 0.45
    d_rt: float = 0.35
    tau_rt: float = 3.0
    p_rep0: float = 0.05
    d_rep: float = 0.25
    tau_rep: float = 3.0
    lam_m0: float = 0.5
    beta_m: float = 0.06
    mu_len0: float = 80.0
    gamma_len: float = 3.0
    sigma_len: float = 15.0
    # bot flat parameters (defaults: the human position-1 values)
    bot_p_rt: float = 0.45
    bot_p_rep: float = 0.05
    bot_lam_m: float = 0.56
    bot_mu_len: float = 77.0
    bot_sigma_len: float = 15.0
    # hashtag / url rates, shared by both classes
    lam_h: float = 0.3
    lam_u: float = 0.2
    # gap laws
    gap_threshold_seconds: int = 3600
    intersession_gap_log_mu: float = math.log(5400.0)
    intersession_gap_log_sigma: float = 0.5
    intrasession_gap_log_mu: float = math.log(40.0)
    intrasession_gap_log_sigma: float = 1.0
    bot_spike_q: float = 0.3
    spike_period_seconds: int = 300
    # account score ranges
    human_score_range: tuple[float, float] = (0.0, 0.4)
    bot_score_range: tuple[float, float] = (0.53, 1.0)
    seed: int = 99

    def __post_init__(self):
        if self.n_humans < 0 or self.n_bots < 0 or self.n_humans + self.n_bots == 0:
            raise ConfigError("need at least one user")
        if self.sessions_per_user < 1:
            raise ConfigError("sessions_per_user must be >= 1")
        for name in ("session_length_p_human", "session_length_p_bot"):
            p = getattr(self, name)
            if not 0.0 < p <= 1.0:
                raise ConfigError(f"{name} must be in (0,1], got {p}")
        for name in ("p_rt0", "d_rt", "p_rep0", "d_rep", "bot_p_rt", "bot_p_rep", "bot_spike_q"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must be in [0,1], got {v}")
        if self.tau_rt <= 0 or self.tau_rep <= 0:
            raise ConfigError("trend time constants must be positive")
        if self.mu_len0 - self.gamma_len * self.max_session_length < 0:
            raise ConfigError("mean text length would go negative at the last position")
        if self.gap_threshold_seconds < 1:
            raise ConfigError("gap_threshold_seconds must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")


@dataclass(frozen=True)
class GeneratedCorpus:
    tweets: list[TweetRecord]
    labels: list[UserLabel]
    account_scores: list[UserScore]


def human_trend(k: int, p0: float, delta: float, tau: float) -> float:
    """Saturating trend p0 + delta*(1 - exp(-(k-1)/tau)), clamped to [0,1]."""
    if k < 1:
        raise ConfigError("position k must be >= 1")
    value = p0 + delta * (1.0 - math.exp(-(k - 1) / tau))
    return min(1.0, max(0.0, value))


def make_text(stripped_length: int, n_mentions: int, n_hashtags: int, n_urls: int) -> str:
    """Deterministic text whose entity counts and stripped length are exact.

    Filler words are plain letters (never entity-shaped); entity tokens are
    appended after the filler.
    """
    words: list[str] = []
    remaining = stripped_length
    pos = 0
    while remaining > 0:
        if words:
            remaining -= 1  # joining space
        size = min(8, remaining)
        if remaining - size == 1:
            size -= 1  # leave room for a final space + 1-char word
        word = "".join(
            _FILLER_LETTERS[(pos + i) % len(_FILLER_LETTERS)] for i in range(size)
        )
        words.append(word)
        pos += size
        remaining -= size
    tokens = list(words)
    tokens += [f"@u{i}" for i in range(n_mentions)]
    tokens += [f"#t{i}" for i in range(n_hashtags)]
    tokens += [f"http://x.test/{i}" for i in range(n_urls)]
    return " ".join(tokens)


def _draw_intersession_gap(rng: np.random.Generator, cfg: GeneratorConfig, is_bot: bool) -> int:
    threshold = cfg.gap_threshold_seconds
    while True:
        gap = int(round(rng.lognormal(cfg.intersession_gap_log_mu, cfg.intersession_gap_log_sigma)))
        if gap >= threshold:
            break
    if is_bot and rng.random() < cfg.bot_spike_q:
        period = cfg.spike_period_seconds
        gap = int(round(gap / period)) * period
        gap = max(gap, threshold)
    return gap


def _draw_intrasession_gap(rng: np.random.Generator, cfg: GeneratorConfig) -> int:
    threshold = cfg.gap_threshold_seconds
    while True:
        gap = max(1, int(round(rng.lognormal(cfg.intrasession_gap_log_mu, cfg.intrasession_gap_log_sigma))))
        if gap < threshold:
            return gap


def _generate_user(
    user_id: str, user_index: int, is_bot: bool, cfg: GeneratorConfig, seed: int
) -> tuple[list[TweetRecord], UserScore]:
    rng = np.random.default_rng([seed, user_index])
    lo, hi = cfg.bot_score_range if is_bot else cfg.human_score_range
    score = UserScore(user_id, float(rng.uniform(lo, hi)))
    p_len = cfg.session_length_p_bot if is_bot else cfg.session_length_p_human
    tweets: list[TweetRecord] = []
    # spread users out in time; inter-user spacing is irrelevant downstream
    t = 1_600_000_000 + user_index * 50_000_000
    n = 0
    for s in range(cfg.sessions_per_user):
        if s > 0:
            t += _draw_intersession_gap(rng, cfg, is_bot)
        length = min(int(rng.geometric(p_len)), cfg.max_session_length)
        for k in range(1, length + 1):
            if k > 1:
                t += _draw_intrasession_gap(rng, cfg)
            if is_bot:
                p_rt = cfg.bot_p_rt
                p_rep = cfg.bot_p_rep
                lam_m = cfg.bot_lam_m
                mu_len = cfg.bot_mu_len
                sigma_len = cfg.bot_sigma_len
            else:
                p_rt = human_trend(k, cfg.p_rt0, cfg.d_rt, cfg.tau_rt)
                p_rep = human_trend(k, cfg.p_rep0, cfg.d_rep, cfg.tau_rep)
                lam_m = cfg.lam_m0 + cfg.beta_m * k
                mu_len = cfg.mu_len0 - cfg.gamma_len * k
                sigma_len = cfg.sigma_len
            is_retweet = bool(rng.random() < p_rt)
            is_reply = False if is_retweet else bool(rng.random() < p_rep)
            n_mentions = int(rng.poisson(lam_m))
            n_hashtags = int(rng.poisson(cfg.lam_h))
            n_urls = int(rng.poisson(cfg.lam_u))
            text_length = int(min(MAX_TEXT_LENGTH, max(0, round(rng.normal(mu_len, sigma_len)))))
            text = make_text(text_length, n_mentions, n_hashtags, n_urls)
            n += 1
            tweets.append(
                TweetRecord(
                    tweet_id=f"{user_id}-{n:05d}",
                    user_id=user_id,
                    created_at=t,
                    text=text,
                    is_retweet=is_retweet,
                    is_reply=is_reply,
                    n_mentions=n_mentions,
                    n_hashtags=n_hashtags,
                    n_urls=n_urls,
                )
            )
    return tweets, score


def generate_corpus(config: GeneratorConfig, seed: int | None = None) -> GeneratedCorpus:
    """Full labeled corpus; byte-identical for identical (config, seed)."""
    seed = config.seed if seed is None else seed
    if seed < 0:
        raise ConfigError("seed must be non-negative")
    tweets: list[TweetRecord] = []
    labels: list[UserLabel] = []
    scores: list[UserScore] = []
    user_index = 0
    for i in range(config.n_humans):
        user_tweets, score = _generate_user(f"h{i:04d}", user_index, False, config, seed)
        tweets.extend(user_tweets)
        labels.append(UserLabel(score.user_id, Label.HUMAN))
        scores.append(score)
        user_index += 1
    for i in range(config.n_bots):
        user_tweets, score = _generate_user(f"b{i:04d}", user_index, True, config, seed)
        tweets.extend(user_tweets)
        labels.append(UserLabel(score.user_id, Label.BOT))
        scores.append(score)
        user_index += 1
    return GeneratedCorpus(tweets=tweets, labels=labels, account_scores=scores)


# ---------------------------------------------------------------------------
# config + corpus I/O


def config_from_dict(obj: dict) -> GeneratorConfig:
    known = set(GeneratorConfig.__dataclass_fields__)
    unknown = set(obj) - known
    if unknown:
        raise ConfigError(f"unknown generator config fields: {sorted(unknown)}")
    if "human_score_range" in obj:
        obj = {**obj, "human_score_range": tuple(obj["human_score_range"])}
    if "bot_score_range" in obj:
        obj = {**obj, "bot_score_range": tuple(obj["bot_score_range"])}
    return GeneratorConfig(**obj)


def load_config(path) -> GeneratorConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_dict(json.load(fh))


def config_to_dict(cfg: GeneratorConfig) -> dict:
    out = asdict(cfg)
    out["human_score_range"] = list(cfg.human_score_range)
    out["bot_score_range"] = list(cfg.bot_score_range)
    return out


def tweet_to_json(t: TweetRecord) -> str:
    return json.dumps(
        {
            "tweet_id": t.tweet_id,
            "user_id": t.user_id,
            "created_at": t.created_at,
            "text": t.text,
            "is_retweet": t.is_retweet,
            "is_reply": t.is_reply,
            "n_mentions": t.n_mentions,
            "n_hashtags": t.n_hashtags,
            "n_urls": t.n_urls,
        },
        ensure_ascii=False,
    )


def write_corpus(corpus: GeneratedCorpus, tweets_fh, scores_fh) -> None:
    for t in corpus.tweets:
        tweets_fh.write(tweet_to_json(t) + "\n")
    for s in corpus.account_scores:
        scores_fh.write(json.dumps({"user_id": s.user_id, "bot_score": s.bot_score}) + "\n")


def labels_by_user(corpus: GeneratedCorpus) -> dict[str, Label]:
    return {ul.user_id: ul.label for ul in corpus.labels}
