"""Synthetic data with known structure, for tests and demos.

``topic_corpus`` builds a complete tweet corpus: a word-vector table in which
every topic owns a block of words scattered around a topic direction, users
with known topic mixtures, hashtags that identify topics, and a cohort of
users concentrated on one topic. The other helpers draw plain point clouds.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .baseline import load_keywords
from .embedding import EmbeddingTable

FILLER = ["de", "la", "que", "el", "en", "y", "los", "con", "por", "para"]


@dataclass
class SyntheticCorpus:
    records: list[dict]
    table: EmbeddingTable
    topics: list[str]
    hashtag_map: dict[str, str]
    cohort_ids: list[str]
    user_mix: dict[str, np.ndarray]
    tweet_topic: dict[str, int] = field(repr=False, default_factory=dict)
    cohort_topic: int = 0


def topic_corpus(n_background=360, n_cohort=39, n_topics=22, dim=50, tweets_per_user=(300, 700),
                 cohort_topic=0, cohort_mass=(0.7, 0.9), words_per_topic=30, words_per_tweet=(6, 12),
                 word_noise=0.6, offtopic_rate=0.25, hashtag_rate=0.2, ambiguous_rate=0.01,
                 oov_rate=0.01, seed=0) -> SyntheticCorpus:
    """Background users draw topic mixes from Dirichlet(1); cohort users put
    ``cohort_mass`` (uniform in the given range) on ``cohort_topic`` and spread
    the rest with Dirichlet(1). Each tweet picks one topic from its author's
    mix and draws its words from that topic's vocabulary, except that each
    word comes from a random other topic with probability ``offtopic_rate``."""
    rng = np.random.default_rng(seed)
    keywords = load_keywords()

    topics = [f"topic_{t:02d}" for t in range(n_topics)]
    topic_words = []
    for t in range(n_topics):
        words = [f"t{t:02d}w{i:02d}" for i in range(words_per_topic)]
        if t == cohort_topic:
            words[:len(keywords)] = keywords
        topic_words.append(words)
    hashtags = [[f"#tema{t:02d}a", f"#tema{t:02d}b"] for t in range(n_topics)]

    centers = rng.standard_normal((n_topics, dim))
    words, vecs = [], []
    for t in range(n_topics):
        for w in topic_words[t]:
            words.append(w)
            vecs.append(centers[t] + word_noise * rng.standard_normal(dim))
        # the "a" tag is stored with its '#', the "b" tag only as a bare word
        words += [hashtags[t][0], hashtags[t][1][1:]]
        vecs += [centers[t] + word_noise * rng.standard_normal(dim) for _ in range(2)]
    for w in FILLER:
        words.append(w)
        vecs.append(0.2 * rng.standard_normal(dim))
    table = EmbeddingTable(words, np.array(vecs))
    hashtag_map = {h[1:]: topics[t] for t in range(n_topics) for h in hashtags[t]}

    users, cohort, mixes = [], [], {}
    for i in range(n_background):
        u = f"user{i:04d}"
        users.append(u)
        mixes[u] = rng.dirichlet(np.ones(n_topics))
    for i in range(n_cohort):
        u = f"cohort{i:03d}"
        users.append(u)
        cohort.append(u)
        mass = rng.uniform(*cohort_mass)
        rest = rng.dirichlet(np.ones(n_topics - 1)) * (1 - mass)
        mixes[u] = np.insert(rest, cohort_topic, mass)

    records, tweet_topic = [], {}
    n_tw = 0
    for u in users:
        count = int(rng.integers(tweets_per_user[0], tweets_per_user[1] + 1))
        tweet_topics = rng.choice(n_topics, size=count, p=mixes[u])
        for t in tweet_topics:
            tid = f"tw{n_tw:07d}"
            n_tw += 1
            text = _tweet_text(rng, int(t), topic_words, hashtags, n_topics, words_per_tweet,
                               offtopic_rate, hashtag_rate, ambiguous_rate, oov_rate)
            records.append({"id": tid, "user_id": u, "text": text})
            tweet_topic[tid] = int(t)
    return SyntheticCorpus(records, table, topics, hashtag_map, cohort, mixes, tweet_topic, cohort_topic)


def _tweet_text(rng, t, topic_words, hashtags, n_topics, words_per_tweet, offtopic_rate,
                hashtag_rate, ambiguous_rate, oov_rate) -> str:
    if rng.random() < oov_rate:
        return f"zzq{rng.integers(1000)} https://t.co/{rng.integers(10**6)}"
    n = int(rng.integers(words_per_tweet[0], words_per_tweet[1] + 1))
    src = np.full(n, t)
    off = rng.random(n) < offtopic_rate
    src[off] = (t + 1 + rng.integers(n_topics - 1, size=int(off.sum()))) % n_topics
    parts = [topic_words[s][int(rng.integers(len(topic_words[s])))] for s in src]
    for _ in range(int(rng.integers(0, 3))):
        parts.insert(int(rng.integers(len(parts) + 1)), FILLER[int(rng.integers(len(FILLER)))])
    if rng.random() < hashtag_rate:
        parts.append(hashtags[t][int(rng.integers(2))].upper())
        if rng.random() < ambiguous_rate:
            other = (t + 1 + int(rng.integers(n_topics - 1))) % n_topics
            parts.append(hashtags[other][0])
    parts[0] = parts[0].capitalize()
    text = " ".join(parts) + "."
    r = rng.random()
    if r < 0.1:
        text = f"RT @cuenta{rng.integers(100)}: " + text
    elif r < 0.2:
        text += f" https://t.co/{rng.integers(10**6):x}"
    elif r < 0.25:
        text = f"@amigo{rng.integers(100)} " + text
    return text


def write_fixture(directory, synth: SyntheticCorpus, config_overrides=None) -> Path:
    """Write corpus, embeddings, label map, cohort list and a config file.
    Returns the config path."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    with open(d / "corpus.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for rec in synth.records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
    synth.table.save(d / "embeddings.txt")
    with open(d / "label_map.json", "w", encoding="utf-8") as fh:
        json.dump({"topics": synth.topics, "hashtag_map": synth.hashtag_map}, fh, indent=1, ensure_ascii=False)
    (d / "cohort.txt").write_text("".join(u + "\n" for u in synth.cohort_ids), encoding="utf-8")
    cfg = {
        "paths": {"corpus": "corpus.jsonl", "embeddings": "embeddings.txt", "label_map": "label_map.json",
                  "cohort": "cohort.txt", "output": "out"},
        "topics": {"k": len(synth.topics)},
        "users": {"k": 5},
        "baseline": {"enabled": True},
    }
    for section, values in (config_overrides or {}).items():
        cfg.setdefault(section, {}).update(values)
    with open(d / "config.yaml", "w", encoding="utf-8") as fh:
        yaml.safe_dump(cfg, fh, sort_keys=False)
    return d / "config.yaml"


def gaussian_blobs(n, k, d, sigma=1.0, separation=10.0, seed=0, spread=None):
    """``n`` points from ``k`` diagonal Gaussians with shared standard
    deviation ``sigma`` whose means are pairwise at least
    ``separation * sigma`` apart. Returns ``(points, labels, means)``."""
    rng = np.random.default_rng(seed)
    spread = spread if spread is not None else 2 * separation * sigma
    means = []
    while len(means) < k:
        m = rng.uniform(-spread, spread, d)
        if all(np.linalg.norm(m - o) >= separation * sigma for o in means):
            means.append(m)
    means = np.array(means)
    labels = np.arange(n) % k
    rng.shuffle(labels)
    points = means[labels] + sigma * rng.standard_normal((n, d))
    return points, labels, means


def direction_blobs(k, d=10, n_per=100, noise=0.08, min_angle=0.9, seed=0):
    """Clusters of vectors around ``k`` random directions with pairwise
    cosine distance at least ``min_angle``; lengths vary so only the
    direction carries the cluster. Returns ``(points, labels)``."""
    rng = np.random.default_rng(seed)
    dirs = []
    while len(dirs) < k:
        v = rng.standard_normal(d)
        v /= np.linalg.norm(v)
        if all(1 - v @ o >= min_angle for o in dirs):
            dirs.append(v)
    dirs = np.array(dirs)
    labels = np.repeat(np.arange(k), n_per)
    pts = dirs[labels] + noise * rng.standard_normal((len(labels), d))
    pts *= rng.uniform(0.5, 3.0, len(labels))[:, None]
    return pts, labels
