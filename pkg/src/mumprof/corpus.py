"""Tweet ingestion: normalization, hashtag extraction, hashtag-based labels.

The same tokenizer feeds both the embedding path and the tf-idf baseline;
stopwords are only dropped on the baseline side (see ``baseline``).
"""

from __future__ import annotations

import csv
import json
import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .errors import ConfigError, DataError

_LEAD = re.compile(r"^[^\w#@]+")
_TRAIL = re.compile(r"[^\w]+$")
_LEAD_WORD = re.compile(r"^[^\w]+")


@dataclass(frozen=True)
class RawTweet:
    id: str
    user_id: str
    text: str
    hashtags: tuple[str, ...] | None = None


@dataclass(frozen=True)
class TokenizedTweet:
    id: str
    user_id: str
    tokens: tuple[str, ...]
    hashtags: tuple[str, ...] = None  # type: ignore[assignment]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if self.hashtags is None:
            tags = tuple(t for t in self.tokens if t.startswith("#"))
        else:
            tags = tuple(h if h.startswith("#") else "#" + h for h in self.hashtags)
        object.__setattr__(self, "hashtags", tags)


@dataclass
class TopicLabelMap:
    topics: list[str]
    hashtag_map: dict[str, str]

    def __post_init__(self):
        if len(set(self.topics)) != len(self.topics):
            raise ConfigError("topic names must be unique")
        index = {t: i for i, t in enumerate(self.topics)}
        clean = {}
        for tag, topic in self.hashtag_map.items():
            if topic not in index:
                raise ConfigError(f"hashtag {tag!r} maps to unknown topic {topic!r}")
            key = _normalize(tag).lstrip("#")
            if clean.get(key, topic) != topic:
                raise ConfigError(f"hashtag {key!r} maps to more than one topic")
            clean[key] = topic
        self.hashtag_map = clean
        self._index = index

    def topic_index(self, hashtag: str) -> int | None:
        topic = self.hashtag_map.get(hashtag)
        return None if topic is None else self._index[topic]

    @classmethod
    def load(cls, path) -> "TopicLabelMap":
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        try:
            return cls(list(obj["topics"]), dict(obj["hashtag_map"]))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"{path}: bad label map ({exc})") from None


@dataclass(frozen=True)
class LabeledTweet:
    tweet_id: str
    topic: int


@dataclass
class LabelReport:
    labeled: int = 0
    ambiguous_ids: list[str] = field(default_factory=list)
    unmatched: int = 0

    @property
    def ambiguous_count(self) -> int:
        return len(self.ambiguous_ids)


def _normalize(text: str) -> str:
    # lower() can decompose (e.g. U+0130), so renormalize afterwards
    return unicodedata.normalize("NFC", unicodedata.normalize("NFC", text).lower())


def _clean_token(raw: str) -> str | None:
    # also catches text glued to a link, e.g. "(mira:http://..."
    if "://" in raw:
        return None
    tok = _TRAIL.sub("", _LEAD.sub("", raw))
    if not tok or tok.startswith("@"):
        return None
    if tok.startswith("#"):
        body = _LEAD_WORD.sub("", tok)
        return "#" + body if body else None
    return _LEAD_WORD.sub("", tok) or None


def tokenize(text: str) -> list[str]:
    """Split a tweet into lowercase tokens.

    URLs and @mentions are dropped, hashtags keep their '#', punctuation is
    stripped from token edges only, and leading retweet markers ("rt") are
    removed.
    """
    tokens = []
    for raw in _normalize(text).split():
        tok = _clean_token(raw)
        if tok:
            tokens.append(tok)
    while tokens and tokens[0] == "rt":
        tokens.pop(0)
    return tokens


def tokenize_tweet(tweet: RawTweet) -> TokenizedTweet:
    tokens = tokenize(tweet.text)
    tags = None
    if tweet.hashtags is not None:
        tags = tuple("#" + _normalize(h).lstrip("#") for h in tweet.hashtags if h.strip("#"))
    return TokenizedTweet(tweet.id, tweet.user_id, tuple(tokens), tags)


def extract_hashtags(tweet: TokenizedTweet) -> list[str]:
    seen = {}
    for tag in tweet.hashtags:
        seen.setdefault(tag.lstrip("#").lower(), None)
    return [t for t in seen if t]


def label_by_hashtag(tweets: Iterable[TokenizedTweet], label_map: TopicLabelMap):
    """Single-label ground truth from hashtags.

    Returns ``(labeled, report)``. Tweets whose mapped hashtags point at two
    or more topics are dropped and listed in the report; tweets without any
    mapped hashtag are dropped and only counted.
    """
    if not label_map.hashtag_map:
        raise ConfigError("label map has no hashtags")
    labeled = []
    report = LabelReport()
    for tweet in tweets:
        topics = {label_map.topic_index(h) for h in extract_hashtags(tweet)}
        topics.discard(None)
        if len(topics) == 1:
            labeled.append(LabeledTweet(tweet.id, topics.pop()))
        elif topics:
            report.ambiguous_ids.append(tweet.id)
        else:
            report.unmatched += 1
    report.labeled = len(labeled)
    return labeled, report


def group_by_user(tweets: Iterable) -> dict[str, list[str]]:
    groups: dict[str, list[str]] = {}
    for tweet in tweets:
        groups.setdefault(tweet.user_id, []).append(tweet.id)
    return groups


# file formats

def read_raw_jsonl(path) -> list[RawTweet]:
    tweets = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                tid, uid = str(obj["id"]), str(obj["user_id"])
                text = obj.get("text") or ""
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: bad tweet record ({exc})") from None
            if not tid:
                raise DataError(f"{path}:{lineno}: empty tweet id")
            if tid in seen:
                raise DataError(f"{path}:{lineno}: duplicate tweet id {tid!r}")
            seen.add(tid)
            tags = obj.get("hashtags")
            tweets.append(RawTweet(tid, uid, text, None if tags is None else tuple(tags)))
    return tweets


def write_tokenized_jsonl(tweets: Iterable[TokenizedTweet], path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for t in tweets:
            rec = {"id": t.id, "user_id": t.user_id, "tokens": list(t.tokens),
                   "hashtags": list(t.hashtags)}
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
            n += 1
    return n


def read_tokenized_jsonl(path) -> list[TokenizedTweet]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                obj = json.loads(line)
                out.append(TokenizedTweet(obj["id"], obj["user_id"], obj["tokens"],
                                          obj.get("hashtags")))
    return out


def write_labels_csv(labels: Iterable[LabeledTweet], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tweet_id", "topic_index"])
        for lab in labels:
            w.writerow([lab.tweet_id, lab.topic])


def read_labels_csv(path) -> list[LabeledTweet]:
    with open(Path(path), encoding="utf-8", newline="") as fh:
        return [LabeledTweet(row["tweet_id"], int(row["topic_index"]))
                for row in csv.DictReader(fh)]
