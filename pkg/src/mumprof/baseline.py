"""Supervised comparison track: tf-idf features, a probabilistic multiclass
classifier trained on hashtag-labeled tweets, multiclass metrics and the
per-user keyword precision/recall probe.

The classifier is multinomial logistic regression. Anything exposing
``predict_proba(features) -> (n, K)`` rows on the simplex can stand in for it.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from typing import Protocol

import numpy as np
import scipy.sparse as sp
import yaml

from .corpus import tokenize
from .errors import EmptyCorpus, LengthMismatch, SingleClass

log = logging.getLogger(__name__)


def load_keywords(path=None) -> list[str]:
    """Keyword list from a YAML file of ``{es, en}`` entries; the packaged
    politics list by default. Returns the Spanish forms."""
    if path is None:
        text = resources.files("mumprof.data").joinpath("politics_keywords.yaml").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    entries = yaml.safe_load(text)["keywords"]
    return [e["es"] if isinstance(e, dict) else str(e) for e in entries]


def load_stopwords(path=None) -> list[str]:
    if path is None:
        text = resources.files("mumprof.data").joinpath("stopwords_es.txt").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return [w for w in text.split() if w]


# tf-idf

@dataclass
class TfIdfModel:
    vocabulary: dict[str, int]
    document_frequency: dict[str, int]
    n_docs: int
    stopwords: frozenset = frozenset()

    @property
    def terms(self) -> list[str]:
        return sorted(self.vocabulary, key=self.vocabulary.get)

    def idf(self, term: str) -> float:
        return float(np.log(self.n_docs / self.document_frequency[term]))

    def to_dict(self) -> dict:
        return {"terms": self.terms, "df": [self.document_frequency[t] for t in self.terms],
                "n_docs": self.n_docs, "stopwords": sorted(self.stopwords)}


def tfidf_fit(documents, stopwords=()) -> TfIdfModel:
    """Vocabulary and document frequencies; columns in first-seen order."""
    documents = list(documents)
    if not documents:
        raise EmptyCorpus("tf-idf needs at least one document")
    stop = frozenset(stopwords)
    vocab: dict[str, int] = {}
    df: Counter = Counter()
    for doc in documents:
        terms = [t for t in doc if t not in stop]
        for t in terms:
            vocab.setdefault(t, len(vocab))
        df.update(set(terms))
    return TfIdfModel(vocab, dict(df), len(documents), stop)


def tfidf_transform(model: TfIdfModel, document) -> dict[int, float]:
    """Sparse vector {column: raw tf * ln(N_docs / df)}; unknown terms skipped."""
    counts = Counter(t for t in document if t in model.vocabulary)
    return {model.vocabulary[t]: c * model.idf(t) for t, c in counts.items()}


def tfidf_matrix(model: TfIdfModel, documents) -> sp.csr_matrix:
    idf = np.array([model.idf(t) for t in model.terms]) if model.vocabulary else np.zeros(0)
    rows, cols, vals = [], [], []
    for r, doc in enumerate(documents):
        counts = Counter(t for t in doc if t in model.vocabulary)
        for t, c in counts.items():
            rows.append(r)
            cols.append(model.vocabulary[t])
            vals.append(float(c))
    tf = sp.csr_matrix((vals, (rows, cols)), shape=(len(documents), len(model.vocabulary)))
    return sp.csr_matrix(tf @ sp.diags(idf))


def top_terms(model: TfIdfModel, document, n: int) -> list[tuple[str, float]]:
    """The ``n`` highest-weighted terms of a document, ties broken by term."""
    terms = model.terms
    weights = [(terms[c], w) for c, w in tfidf_transform(model, document).items()]
    weights.sort(key=lambda tw: (-tw[1], tw[0]))
    return weights[:n]


# classifier

class Classifier(Protocol):
    def predict_proba(self, features) -> np.ndarray: ...


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _as_2d(features):
    if sp.issparse(features):
        return sp.csr_matrix(features)
    x = np.asarray(features, dtype=np.float64)
    return x[None, :] if x.ndim == 1 else x


@dataclass
class SoftmaxClassifier:
    weights: np.ndarray  # (K, F)
    bias: np.ndarray     # (K,)
    loss_trace: list | None = None

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]

    def predict_proba(self, features) -> np.ndarray:
        x = _as_2d(features)
        return softmax(np.asarray(x @ self.weights.T) + self.bias)

    def to_dict(self) -> dict:
        return {"weights": self.weights.tolist(), "bias": self.bias.tolist()}

    @classmethod
    def from_dict(cls, obj) -> "SoftmaxClassifier":
        return cls(np.asarray(obj["weights"], dtype=np.float64), np.asarray(obj["bias"], dtype=np.float64))


def loss_and_grad(weights, bias, features, labels, l2: float):
    """Mean cross-entropy plus (l2/2)||W||^2, and its gradient in W and b."""
    x = _as_2d(features)
    labels = np.asarray(labels)
    n = x.shape[0]
    logits = np.asarray(x @ weights.T) + bias
    top = logits.max(axis=1, keepdims=True)
    lse = top[:, 0] + np.log(np.exp(logits - top).sum(axis=1))
    loss = float(np.mean(lse - logits[np.arange(n), labels]) + 0.5 * l2 * np.sum(weights * weights))
    delta = np.exp(logits - lse[:, None])
    delta[np.arange(n), labels] -= 1.0
    delta /= n
    grad_w = np.asarray((x.T @ delta).T) + l2 * weights
    grad_b = delta.sum(axis=0)
    return loss, grad_w, grad_b


def classifier_train(features, labels, n_classes: int | None = None, l2: float = 1e-4,
                     max_iter: int = 300, tol: float = 1e-6, step: float = 1.0) -> SoftmaxClassifier:
    """Full-batch gradient descent from zero weights with Armijo backtracking.

    Every accepted step lowers the loss, so the loss trace is non-increasing.
    """
    x = _as_2d(features)
    labels = np.asarray(labels, dtype=np.int64)
    if x.shape[0] != labels.shape[0]:
        raise LengthMismatch(f"{x.shape[0]} feature rows but {labels.shape[0]} labels")
    if len(np.unique(labels)) < 2:
        raise SingleClass("need at least two classes to train a classifier")
    k = int(n_classes if n_classes is not None else labels.max() + 1)
    w = np.zeros((k, x.shape[1]))
    b = np.zeros(k)
    loss, gw, gb = loss_and_grad(w, b, x, labels, l2)
    trace = [loss]
    for _ in range(max_iter):
        gnorm2 = float(np.sum(gw * gw) + np.sum(gb * gb))
        if gnorm2 ** 0.5 < tol:
            break
        t = step
        while True:
            w_new, b_new = w - t * gw, b - t * gb
            new_loss, ngw, ngb = loss_and_grad(w_new, b_new, x, labels, l2)
            if new_loss <= loss - 0.5 * t * gnorm2:
                break
            t *= 0.5
            if t < 1e-12:
                break
        if new_loss > loss:
            break
        w, b, loss, gw, gb = w_new, b_new, new_loss, ngw, ngb
        trace.append(loss)
        step = min(t * 2.0, 1e3)
    return SoftmaxClassifier(w, b, trace)


def classify(model: Classifier, features):
    """Argmax class (lowest index on ties) and the full probability rows."""
    proba = model.predict_proba(features)
    return np.argmax(proba, axis=1), proba


def stratified_split(labels, test_fraction: float = 0.2, seed: int = 0):
    """Index arrays ``(train, test)`` holding out ``test_fraction`` of each class."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        idx = idx[rng.permutation(len(idx))]
        n_test = int(round(test_fraction * len(idx)))
        if n_test == len(idx) and len(idx) > 1:
            n_test -= 1
        test.extend(idx[:n_test].tolist())
        train.extend(idx[n_test:].tolist())
    return np.array(sorted(train), dtype=np.int64), np.array(sorted(test), dtype=np.int64)


# evaluation

def evaluate_multiclass(predictions, truth) -> dict:
    """Accuracy with micro (pooled) and macro (per-class mean) precision/recall.

    Macro averages run over classes present in the truth plus classes only
    predicted; the latter count as precision 0 and are left out of the
    recall mean. A class that is never predicted has precision 0.
    """
    pred = np.asarray(predictions)
    true = np.asarray(truth)
    if pred.shape != true.shape:
        raise LengthMismatch(f"{pred.size} predictions vs {true.size} labels")
    if pred.size == 0:
        raise LengthMismatch("no predictions to evaluate")
    classes = np.union1d(pred, true)
    tp_all = fp_all = fn_all = 0
    precisions, recalls = [], []
    for c in classes:
        tp = int(np.sum((pred == c) & (true == c)))
        fp = int(np.sum((pred == c) & (true != c)))
        fn = int(np.sum((pred != c) & (true == c)))
        tp_all, fp_all, fn_all = tp_all + tp, fp_all + fp, fn_all + fn
        precisions.append(tp / (tp + fp) if tp + fp else 0.0)
        if tp + fn:
            recalls.append(tp / (tp + fn))
    micro_p = tp_all / (tp_all + fp_all)
    micro_r = tp_all / (tp_all + fn_all)
    accuracy = float(np.mean(pred == true))
    assert abs(micro_p - accuracy) < 1e-12 and abs(micro_r - accuracy) < 1e-12
    return {
        "accuracy": accuracy,
        "micro_precision": micro_p,
        "micro_recall": micro_r,
        "macro_precision": float(np.mean(precisions)),
        "macro_recall": float(np.mean(recalls)),
    }


def keyword_pr(top_words, keyword_list=None) -> tuple[float, float]:
    """Precision and recall of ``top_words`` against a keyword list, after
    both sides go through the tweet tokenizer."""
    if keyword_list is None:
        keyword_list = load_keywords()
    top_words, keyword_list = list(top_words), list(keyword_list)
    if not top_words or not keyword_list:
        raise ValueError("top_words and keyword_list must be nonempty")

    def norm(w):
        return " ".join(tokenize(w))

    overlap = {norm(w) for w in top_words} & {norm(w) for w in keyword_list}
    overlap.discard("")
    return len(overlap) / len(top_words), len(overlap) / len(keyword_list)


def write_metrics(metrics: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(metrics, fh, indent=2, sort_keys=True)
