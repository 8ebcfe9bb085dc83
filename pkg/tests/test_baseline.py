import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from mumprof import baseline
from mumprof.errors import EmptyCorpus, LengthMismatch, SingleClass


def test_packaged_lists():
    kw = baseline.load_keywords()
    assert len(kw) == 16 and "gobierno" in kw and "asamblea" in kw
    stop = baseline.load_stopwords()
    assert "de" in stop and "gobierno" not in stop


def test_tfidf_fit_counts_documents():
    m = baseline.tfidf_fit([["a", "b", "b"], ["a"]])
    assert m.document_frequency == {"a": 2, "b": 1} and m.n_docs == 2
    assert m.terms == ["a", "b"]
    with pytest.raises(EmptyCorpus):
        baseline.tfidf_fit([])


def test_tfidf_stopwords_removed():
    m = baseline.tfidf_fit([["de", "casa"], ["la"]], stopwords={"de", "la"})
    assert m.terms == ["casa"]


def test_tfidf_transform_values():
    docs = [["a", "b", "b", "b"], ["a", "c"], ["a", "c", "d"]]
    m = baseline.tfidf_fit(docs)
    v = baseline.tfidf_transform(m, docs[0])
    assert v[m.vocabulary["a"]] == 0.0
    assert v[m.vocabulary["b"]] == pytest.approx(3 * math.log(3), abs=1e-12)
    v2 = baseline.tfidf_transform(m, docs[2])
    assert v2[m.vocabulary["c"]] == pytest.approx(math.log(3 / 2), abs=1e-12)
    assert v2[m.vocabulary["d"]] == pytest.approx(math.log(3), abs=1e-12)
    assert baseline.tfidf_transform(m, []) == {}
    assert baseline.tfidf_transform(m, ["zz"]) == {}

    two = baseline.tfidf_fit([["a", "b", "b", "b"], ["a"]])
    assert baseline.tfidf_transform(two, ["b", "b", "b"])[1] == pytest.approx(2.0794, abs=1e-4)


def test_tfidf_matrix_matches_transform():
    docs = [["a", "b", "b"], ["b", "c"], ["c", "c", "a", "e"], []]
    m = baseline.tfidf_fit(docs)
    mat = baseline.tfidf_matrix(m, docs).toarray()
    for r, d in enumerate(docs):
        row = np.zeros(len(m.vocabulary))
        for c, w in baseline.tfidf_transform(m, d).items():
            row[c] = w
        np.testing.assert_allclose(mat[r], row, atol=1e-15)
    top = baseline.top_terms(m, docs[2], 2)
    assert top[0][0] == "c" and len(top) == 2


def test_softmax_stability():
    p = baseline.softmax(np.array([[1000.0, 1000.0, -1000.0]]))
    np.testing.assert_allclose(p, [[0.5, 0.5, 0.0]])


def _toy(n_per=20, k=5, f=6, seed=0):
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((k, f)) * 3
    y = np.repeat(np.arange(k), n_per)
    return centers[y] + rng.standard_normal((len(y), f)), y


def test_uniform_at_zero_weights():
    clf = baseline.SoftmaxClassifier(np.zeros((4, 3)), np.zeros(4))
    np.testing.assert_allclose(clf.predict_proba(np.ones((2, 3))), 0.25)


def test_gradient_matches_finite_differences():
    x, y = _toy()
    rng = np.random.default_rng(1)
    w, b = rng.standard_normal((5, 6)) * 0.1, rng.standard_normal(5) * 0.1
    _, gw, gb = baseline.loss_and_grad(w, b, x, y, l2=0.01)
    h = 1e-5
    num_w = np.zeros_like(w)
    for idx in np.ndindex(*w.shape):
        e = np.zeros_like(w)
        e[idx] = h
        num_w[idx] = (baseline.loss_and_grad(w + e, b, x, y, 0.01)[0]
                      - baseline.loss_and_grad(w - e, b, x, y, 0.01)[0]) / (2 * h)
    num_b = np.array([(baseline.loss_and_grad(w, b + h * np.eye(5)[i], x, y, 0.01)[0]
                       - baseline.loss_and_grad(w, b - h * np.eye(5)[i], x, y, 0.01)[0]) / (2 * h)
                      for i in range(5)])
    assert np.max(np.abs(gw - num_w)) < 1e-6
    assert np.max(np.abs(gb - num_b)) < 1e-6


def test_sparse_and_dense_agree():
    x, y = _toy(k=3, seed=2)
    w, b = np.ones((3, 6)) * 0.01, np.zeros(3)
    dense = baseline.loss_and_grad(w, b, x, y, 0.1)
    sparse = baseline.loss_and_grad(w, b, sp.csr_matrix(x), y, 0.1)
    assert dense[0] == pytest.approx(sparse[0], rel=1e-13)
    np.testing.assert_allclose(dense[1], sparse[1], rtol=1e-12)


def test_train_separable_and_monotone():
    x = np.array([[0.0, 1.0], [0.2, 1.1], [1.0, 0.0], [1.1, 0.3]])
    y = np.array([0, 0, 1, 1])
    clf = baseline.classifier_train(x, y, l2=0.0, max_iter=200)
    pred, proba = baseline.classify(clf, x)
    assert pred.tolist() == y.tolist()
    np.testing.assert_allclose(proba.sum(axis=1), 1.0, atol=1e-12)
    assert all(b <= a for a, b in zip(clf.loss_trace, clf.loss_trace[1:]))


def test_train_multiclass_deterministic():
    x, y = _toy(seed=3)
    a = baseline.classifier_train(x, y, max_iter=50)
    b = baseline.classifier_train(x, y, max_iter=50)
    assert a.weights.tobytes() == b.weights.tobytes()
    assert np.mean(baseline.classify(a, x)[0] == y) > 0.9


def test_train_errors():
    with pytest.raises(SingleClass):
        baseline.classifier_train(np.ones((3, 2)), [1, 1, 1])
    with pytest.raises(LengthMismatch):
        baseline.classifier_train(np.ones((3, 2)), [0, 1])


def test_classify_tie_goes_to_lower_index():
    clf = baseline.SoftmaxClassifier(np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 0.0]]), np.zeros(3))
    pred, proba = baseline.classify(clf, np.array([[2.0, 5.0]]))
    assert pred.tolist() == [0]
    e = math.exp(2.0)
    np.testing.assert_allclose(proba[0], [e / (2 * e + 1), e / (2 * e + 1), 1 / (2 * e + 1)], rtol=1e-14)


def test_stratified_split():
    labels = np.array([0] * 10 + [1] * 5 + [2])
    train, test = baseline.stratified_split(labels, 0.2, seed=0)
    assert sorted(train.tolist() + test.tolist()) == list(range(16))
    assert np.sum(labels[test] == 0) == 2 and np.sum(labels[test] == 1) == 1
    assert 15 in train
    again = baseline.stratified_split(labels, 0.2, seed=0)
    assert again[1].tolist() == test.tolist()


def test_metrics_two_class():
    m = baseline.evaluate_multiclass([0, 1, 1, 1], [0, 0, 1, 1])
    assert m["accuracy"] == 0.75
    assert m["micro_precision"] == 0.75 and m["micro_recall"] == 0.75
    assert m["macro_precision"] == (1 + 2 / 3) / 2
    assert m["macro_recall"] == 0.75


def test_metrics_three_class():
    truth = [0, 0, 0, 1, 1, 2, 2, 2, 2]
    pred = [0, 1, 2, 1, 1, 2, 2, 0, 2]
    m = baseline.evaluate_multiclass(pred, truth)
    assert m["accuracy"] == 6 / 9
    # per-class precision 1/2, 2/3, 3/4; recall 1/3, 1, 3/4
    assert m["macro_precision"] == pytest.approx((1 / 2 + 2 / 3 + 3 / 4) / 3, abs=1e-15)
    assert m["macro_recall"] == pytest.approx((1 / 3 + 1 + 3 / 4) / 3, abs=1e-15)


def test_metrics_absent_and_trivial_classes():
    m = baseline.evaluate_multiclass([0, 2], [0, 0])
    assert m["macro_precision"] == 0.5 and m["macro_recall"] == 0.5
    one = baseline.evaluate_multiclass([1, 1], [1, 1])
    assert all(v == 1.0 for v in one.values())
    with pytest.raises(LengthMismatch):
        baseline.evaluate_multiclass([0], [0, 1])


@settings(max_examples=50)
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=40))
def test_metrics_bounds(pairs):
    pred, truth = zip(*pairs)
    m = baseline.evaluate_multiclass(pred, truth)
    assert all(0 <= v <= 1 for v in m.values())
    assert m["micro_precision"] == pytest.approx(m["accuracy"])


def test_keyword_pr():
    kw = baseline.load_keywords()
    top = kw[:8] + [f"otra{i}" for i in range(22)]
    assert baseline.keyword_pr(top) == (8 / 30, 8 / 16)
    assert baseline.keyword_pr(["x", "y"]) == (0.0, 0.0)
    assert baseline.keyword_pr(kw) == (1.0, 1.0)
    assert baseline.keyword_pr(["Gobierno,", "PAÍS"], ["gobierno", "país"]) == (1.0, 1.0)
