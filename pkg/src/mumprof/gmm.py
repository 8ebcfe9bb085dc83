"""Diagonal-covariance Gaussian mixture fitted by EM.

The mixture is started from a K-means solution: component means are the
clusters' arithmetic means, weights their size fractions and variances the
per-dimension within-cluster mean squared deviations.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, NonFiniteLikelihood
from .kmeans import ClusteringResult, unit_rows

log = logging.getLogger(__name__)

VARIANCE_FLOOR = 1e-8
DEGENERATE_MASS = 1e-10
_CHUNK = 8192
_LOG_2PI = np.log(2 * np.pi)


@dataclass
class GmmModel:
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    loglik_trace: list[float] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return self.means.shape[0]

    @property
    def d(self) -> int:
        return self.means.shape[1]

    @property
    def n_iter(self) -> int:
        return max(len(self.loglik_trace) - 1, 0)

    def to_dict(self) -> dict:
        return {
            "K": self.k,
            "d": self.d,
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
            "loglik_trace": [float(x) for x in self.loglik_trace],
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, obj) -> "GmmModel":
        return cls(np.asarray(obj["weights"], dtype=np.float64),
                   np.asarray(obj["means"], dtype=np.float64),
                   np.asarray(obj["variances"], dtype=np.float64),
                   list(obj.get("loglik_trace", [])), dict(obj.get("metadata", {})))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "GmmModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class ResponsibilityMatrix:
    tweet_ids: list[str]
    values: np.ndarray

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[0] != len(self.tweet_ids):
            raise DataError("responsibility rows must align one-to-one with tweet ids")

    def write_csv(self, path) -> None:
        k = self.values.shape[1]
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["tweet_id"] + [f"r{j}" for j in range(k)])
            for tid, row in zip(self.tweet_ids, self.values):
                w.writerow([tid] + ["%.12g" % x for x in row])

    @classmethod
    def read_csv(cls, path) -> "ResponsibilityMatrix":
        ids, rows = [], []
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            k = len(next(reader)) - 1
            for row in reader:
                ids.append(row[0])
                rows.append([float(x) for x in row[1:]])
        return cls(ids, np.array(rows, dtype=np.float64).reshape(len(rows), k))


def _sq_dev(points, means, inv_var, weights=None):
    """Per-component sums of (x - mu)^2 / var, computed without expanding the
    square so constant dimensions under the variance floor stay exact."""
    n = points.shape[0]
    out = np.empty((n, means.shape[0]))
    for s in range(0, n, _CHUNK):
        xc = points[s:s + _CHUNK]
        for k in range(means.shape[0]):
            diff = xc - means[k]
            diff *= diff
            out[s:s + _CHUNK, k] = diff @ inv_var[k]
    return out


def _weighted_sq_dev(points, resp, means):
    """Sum_i r_ik (x_ij - mu_kj)^2 as a (K, d) array."""
    k_, d = means.shape
    out = np.zeros((k_, d))
    for s in range(0, points.shape[0], _CHUNK):
        xc = points[s:s + _CHUNK]
        rc = resp[s:s + _CHUNK]
        for k in range(k_):
            diff = xc - means[k]
            diff *= diff
            out[k] += rc[:, k] @ diff
    return out


def log_densities(points, model: GmmModel) -> np.ndarray:
    """log pi_k + log N(x_i | mu_k, diag var_k) as an (N, K) array."""
    inv_var = 1.0 / model.variances
    quad = _sq_dev(points, model.means, inv_var)
    log_norm = -0.5 * (model.d * _LOG_2PI + np.log(model.variances).sum(axis=1))
    with np.errstate(divide="ignore"):
        log_w = np.log(model.weights)
    return quad * -0.5 + (log_norm + log_w)


def e_step(points, model: GmmModel):
    """Responsibilities and total log-likelihood.

    Each row is shifted by its maximum before exponentiating, so the
    normalizer is the log-sum-exp of the row.
    """
    points = np.asarray(points, dtype=np.float64)
    a = log_densities(points, model)
    top = a.max(axis=1, keepdims=True)
    if not np.all(np.isfinite(top)):
        bad = int(np.flatnonzero(~np.isfinite(top[:, 0]))[0])
        raise NonFiniteLikelihood(f"row {bad} has no finite component log-density")
    resp = np.exp(a - top)
    total = resp.sum(axis=1, keepdims=True)
    resp /= total
    row_ll = top[:, 0] + np.log(total[:, 0])
    ll = float(row_ll.sum())
    if not np.isfinite(ll):
        raise NonFiniteLikelihood("log-likelihood is not finite")
    return resp, ll


def _farthest(points, means, owner) -> int:
    dist = np.einsum("ij,ij->i", points - means[owner], points - means[owner])
    return int(np.argmax(dist))


def m_step(points, resp, floor: float = VARIANCE_FLOOR) -> GmmModel:
    """Weights, means and floored diagonal variances from responsibilities.

    A component with (almost) no mass is re-seeded: weight 1/N, mean at the
    point farthest from its most responsible component, global variance.
    """
    points = np.asarray(points, dtype=np.float64)
    resp = np.asarray(resp, dtype=np.float64)
    n = points.shape[0]
    nk = resp.sum(axis=0)
    dead = nk < DEGENERATE_MASS
    safe_nk = np.where(dead, 1.0, nk)
    means = (resp.T @ points) / safe_nk[:, None]
    variances = _weighted_sq_dev(points, resp, means) / safe_nk[:, None]
    weights = nk / n
    if dead.any():
        log.warning("re-seeding degenerate components %s", np.flatnonzero(dead).tolist())
        owner = np.argmax(resp, axis=1)
        gvar = points.var(axis=0)
        for k in np.flatnonzero(dead):
            means[k] = points[_farthest(points, means, owner)]
            variances[k] = gvar
            weights[k] = 1.0 / n
        weights = weights / weights.sum()
    np.maximum(variances, floor, out=variances)
    return GmmModel(weights, means, variances)


def init_from_kmeans(points, clustering: ClusteringResult, floor: float = VARIANCE_FLOOR) -> GmmModel:
    points = np.asarray(points, dtype=np.float64)
    n, d = points.shape
    assign = np.asarray(clustering.assignments)
    if assign.shape[0] != n:
        raise DataError(f"clustering covers {assign.shape[0]} points, got {n}")
    k_ = clustering.k
    weights = np.empty(k_)
    means = np.empty((k_, d))
    variances = np.empty((k_, d))
    empty = []
    for k in range(k_):
        members = points[assign == k]
        if len(members) == 0:
            empty.append(k)
            continue
        weights[k] = len(members) / n
        means[k] = members.mean(axis=0)
        diff = members - means[k]
        variances[k] = (diff * diff).sum(axis=0) / len(members)
    if empty:
        log.warning("k-means clusters %s are empty; re-seeding their components", empty)
        # empty clusters may carry a zero centroid, so only normalize the ones in use
        used = np.unique(assign)
        unit_c = np.zeros_like(np.asarray(clustering.centroids, dtype=np.float64))
        unit_c[used] = unit_rows(np.asarray(clustering.centroids, dtype=np.float64)[used])
        cos = np.einsum("ij,ij->i", unit_rows(points), unit_c[assign])
        far = points[int(np.argmin(cos))]
        gvar = points.var(axis=0)
        for k in empty:
            weights[k] = 1.0 / n
            means[k] = far
            variances[k] = gvar
        weights /= weights.sum()
    np.maximum(variances, floor, out=variances)
    meta = {"init": "kmeans", "kmeans_seed": clustering.seed,
            "init_variance": "per-cluster sum of squared deviations divided by cluster size",
            "variance_floor": floor}
    return GmmModel(weights, means, variances, metadata=meta)


def fit_em(points, init: GmmModel, max_iter: int = 200, tol: float = 1e-4, floor: float = VARIANCE_FLOOR):
    """Alternate E and M steps until the relative log-likelihood gain drops
    below ``tol`` or ``max_iter`` M-steps have run.

    Returns ``(model, responsibilities)``; ``model.loglik_trace`` holds the
    log-likelihood of the initial model followed by one value per iteration.
    """
    points = np.asarray(points, dtype=np.float64)
    model = init
    resp, ll = e_step(points, model)
    trace = [ll]
    for it in range(1, max_iter + 1):
        model = m_step(points, resp, floor)
        resp, new_ll = e_step(points, model)
        trace.append(new_ll)
        gain = (new_ll - ll) / abs(ll) if ll != 0 else new_ll - ll
        log.debug("EM iteration %d log-likelihood %.10g", it, new_ll)
        ll = new_ll
        if gain < tol:
            break
    model.loglik_trace = trace
    model.metadata = {**init.metadata, "tol": tol, "max_iter": max_iter, "n_iter": len(trace) - 1}
    return model, resp


def top_tweets_per_topic(responsibilities, k: int, threshold: float = 0.90, tweet_ids=None) -> list:
    """Rows whose responsibility for topic ``k`` is at least ``threshold``,
    strongest first. Returns tweet ids when given, else row indices."""
    if not 0 < threshold <= 1:
        raise ValueError("threshold must be in (0, 1]")
    values = responsibilities.values if isinstance(responsibilities, ResponsibilityMatrix) else responsibilities
    if tweet_ids is None and isinstance(responsibilities, ResponsibilityMatrix):
        tweet_ids = responsibilities.tweet_ids
    col = np.asarray(values)[:, k]
    rows = np.flatnonzero(col >= threshold)
    rows = rows[np.argsort(-col[rows], kind="stable")]
    if tweet_ids is None:
        return rows.tolist()
    return [tweet_ids[i] for i in rows]
