"""Word-vector table and additive tweet vectors."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DataError, DimensionMismatch, DuplicateWord, MalformedHeader

log = logging.getLogger(__name__)


class EmbeddingTable:
    """Immutable word -> vector map backed by one (V, d) float64 matrix."""

    def __init__(self, words: Sequence[str], vectors):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != len(words) or not len(words):
            raise DataError("embedding table needs a nonempty (V, d) matrix matching the word list")
        index = {}
        for i, w in enumerate(words):
            if w in index:
                raise DuplicateWord(w)
            index[w] = i
        self.words = list(words)
        self.index = index
        self.vectors = vectors
        self.vectors.setflags(write=False)

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self.index

    def __getitem__(self, word) -> np.ndarray:
        return self.vectors[self.index[word]]

    def lookup(self, token: str) -> int | None:
        """Row index for a token; hashtags fall back to their bare word."""
        i = self.index.get(token)
        if i is None and token.startswith("#"):
            i = self.index.get(token[1:])
        return i

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"{len(self.words)} {self.dimension}\n")
            for w, v in zip(self.words, self.vectors):
                fh.write(w + " " + " ".join(repr(float(x)) for x in v) + "\n")


def load_table(path) -> EmbeddingTable:
    """Parse the word2vec-style text format: a "<count> <dim>" header, then
    one "word v1 ... vd" line per word."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        try:
            count, dim = (int(x) for x in header)
        except ValueError:
            raise MalformedHeader(f"{path}: header must be '<vocab_count> <dimension>', got {header!r}") from None
        if count <= 0 or dim <= 0:
            raise MalformedHeader(f"{path}: header values must be positive")
        words = []
        vectors = np.empty((count, dim), dtype=np.float64)
        for lineno, line in enumerate(fh, 2):
            parts = line.rstrip("\n").rstrip(" ").split(" ")
            if parts == [""]:
                continue
            if len(parts) - 1 != dim:
                raise DimensionMismatch(lineno, dim, len(parts) - 1)
            if len(words) == count:
                raise MalformedHeader(f"{path}: more than the declared {count} rows")
            vectors[len(words)] = [float(x) for x in parts[1:]]
            words.append(parts[0])
    if len(words) != count:
        raise MalformedHeader(f"{path}: header declares {count} rows, found {len(words)}")
    return EmbeddingTable(words, vectors)


@dataclass(frozen=True)
class TweetVector:
    tweet_id: str
    user_id: str
    vector: np.ndarray
    in_vocab_count: int

    @property
    def excluded(self) -> bool:
        return self.in_vocab_count == 0


def compose(tweet, table: EmbeddingTable) -> TweetVector:
    """Sum the vectors of the tweet's in-vocabulary tokens."""
    vec = np.zeros(table.dimension)
    hits = 0
    for tok in tweet.tokens:
        i = table.lookup(tok)
        if i is not None:
            vec += table.vectors[i]
            hits += 1
    return TweetVector(tweet.id, tweet.user_id, vec, hits)


def compose_all(tweets, table: EmbeddingTable):
    """Vectorized ``compose`` over a corpus.

    Returns ``(matrix, in_vocab_counts)`` with one row per tweet, built as a
    sparse token-count matrix times the embedding matrix.
    """
    rows, cols = [], []
    for r, tweet in enumerate(tweets):
        for tok in tweet.tokens:
            i = table.lookup(tok)
            if i is not None:
                rows.append(r)
                cols.append(i)
    n = len(tweets)
    counts = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, len(table)))
    matrix = np.asarray(counts @ table.vectors)
    hits = np.bincount(np.asarray(rows, dtype=np.int64), minlength=n)
    return matrix, hits


@dataclass
class TweetMatrix:
    """Composed vectors of the modeled (non-excluded) tweets plus row index."""

    tweet_ids: list[str]
    user_ids: list[str]
    vectors: np.ndarray
    excluded_ids: list[str]
    excluded_users: list[str] = field(default_factory=list)

    @classmethod
    def build(cls, tweets, table: EmbeddingTable) -> "TweetMatrix":
        matrix, hits = compose_all(tweets, table)
        keep = hits > 0
        excluded = [t for t, k in zip(tweets, keep) if not k]
        if excluded:
            log.info("excluded %d tweets with no in-vocabulary token", len(excluded))
        kept = [t for t, k in zip(tweets, keep) if k]
        return cls([t.id for t in kept], [t.user_id for t in kept],
                   np.ascontiguousarray(matrix[keep]),
                   [t.id for t in excluded], [t.user_id for t in excluded])

    def save_npy(self, path) -> Path:
        """Binary matrix plus a ``<stem>_index.csv`` sidecar."""
        path = Path(path)
        np.save(path, self.vectors, allow_pickle=False)
        sidecar = path.with_name(path.stem + "_index.csv")
        with open(sidecar, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["tweet_id", "user_id", "excluded"])
            for tid, uid in zip(self.tweet_ids, self.user_ids):
                w.writerow([tid, uid, 0])
            for tid, uid in zip(self.excluded_ids, self.excluded_users):
                w.writerow([tid, uid, 1])
        return sidecar

    @classmethod
    def load_npy(cls, path) -> "TweetMatrix":
        path = Path(path)
        vectors = np.load(path, allow_pickle=False)
        ids, users, excluded, excluded_users = [], [], [], []
        with open(path.with_name(path.stem + "_index.csv"), encoding="utf-8", newline="") as fh:
            for row in csv.DictReader(fh):
                if row["excluded"] == "1":
                    excluded.append(row["tweet_id"])
                    excluded_users.append(row["user_id"])
                else:
                    ids.append(row["tweet_id"])
                    users.append(row["user_id"])
        if len(ids) != vectors.shape[0]:
            raise DataError(f"{path}: index has {len(ids)} rows, matrix has {vectors.shape[0]}")
        return cls(ids, users, vectors, excluded, excluded_users)

    def save_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            d = self.vectors.shape[1]
            w.writerow(["tweet_id", "user_id"] + [f"v{j + 1}" for j in range(d)])
            for tid, uid, v in zip(self.tweet_ids, self.user_ids, self.vectors):
                w.writerow([tid, uid] + [repr(float(x)) for x in v])

    @classmethod
    def load_csv(cls, path) -> "TweetMatrix":
        ids, users, rows = [], [], []
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            d = len(header) - 2
            for row in reader:
                ids.append(row[0])
                users.append(row[1])
                rows.append([float(x) for x in row[2:]])
        vectors = np.array(rows, dtype=np.float64).reshape(len(rows), d)
        return cls(ids, users, vectors, [])
