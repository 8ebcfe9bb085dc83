"""Grouping users by profile and scoring how well a known cohort stays together."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp

from .. import kmeans
from ..errors import TooFewUsers, UnknownUser
from ..kmeans import ClusteringResult, ElbowScan

log = logging.getLogger(__name__)


def _sq_euclidean(points, centroids):
    d = (points * points).sum(1)[:, None] - 2 * points @ centroids.T + (centroids * centroids).sum(1)[None, :]
    return np.maximum(d, 0.0)


def fit_euclidean(points, k: int, rng_seed: int = 0, max_iter: int = 100, tol: float = 1e-4) -> ClusteringResult:
    """K-means++ and Lloyd iterations under squared Euclidean distance.

    Duplicate points are fine: seeding stops spreading once every point
    coincides with a chosen centroid, and clusters that stay empty are
    reported in ``degenerate``.
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if k < 1 or k > n:
        raise TooFewUsers(f"cannot form {k} clusters from {n} users")
    rng = np.random.default_rng(rng_seed)
    chosen = [int(rng.integers(n))]
    nearest = _sq_euclidean(points, points[chosen])[:, 0]
    for _ in range(1, k):
        if nearest.sum() <= 0:
            chosen.append(chosen[0])
            continue
        cum = np.cumsum(nearest)
        i = min(int(np.searchsorted(cum, rng.random() * cum[-1], side="right")), n - 1)
        chosen.append(i)
        nearest = np.minimum(nearest, _sq_euclidean(points, points[[i]])[:, 0])
    centroids = points[chosen].copy()

    dist = _sq_euclidean(points, centroids)
    assign = np.argmin(dist, axis=1)
    het = float(dist[np.arange(n), assign].sum())
    trace = [het]
    it = 0
    for it in range(1, max_iter + 1):
        onehot = sp.csr_matrix((np.ones(n), (assign, np.arange(n))), shape=(k, n))
        counts = np.bincount(assign, minlength=k)
        sums = np.asarray(onehot @ points)
        nonempty = counts > 0
        centroids[nonempty] = sums[nonempty] / counts[nonempty, None]
        for e in np.flatnonzero(counts == 0):
            own = ((points - centroids[assign]) ** 2).sum(1)
            own[counts[assign] < 2] = -1.0
            far = int(np.argmax(own))
            if own[far] <= 0:
                continue
            counts[assign[far]] -= 1
            centroids[e] = points[far]
            assign[far] = e
            counts[e] = 1
        dist = _sq_euclidean(points, centroids)
        new_assign = np.argmin(dist, axis=1)
        keep = dist[np.arange(n), new_assign] >= dist[np.arange(n), assign]
        new_assign[keep] = assign[keep]
        changed = int(np.count_nonzero(new_assign != assign))
        assign = new_assign
        new_het = float(dist[np.arange(n), assign].sum())
        rel = (het - new_het) / het if het > 0 else 0.0
        het = new_het
        trace.append(het)
        if changed == 0 or rel < tol:
            break
    d = dist[np.arange(n), assign]
    distortions = np.bincount(assign, weights=d, minlength=k)
    empty = np.flatnonzero(np.bincount(assign, minlength=k) == 0).tolist()
    return ClusteringResult(k, centroids, assign, distortions, float(distortions.sum()),
                            rng_seed, it, trace, empty)


@dataclass
class UserClusters:
    user_ids: list[str]
    result: ClusteringResult
    metric: str = "euclidean"
    scan: ElbowScan | None = None

    def cluster_of(self) -> dict[str, int]:
        return dict(zip(self.user_ids, self.result.assignments.tolist()))

    def to_dict(self) -> dict:
        d = self.result.to_dict()
        d.update({"metric": self.metric, "user_ids": self.user_ids})
        if self.scan is not None:
            d["scan"] = {"ks": self.scan.ks, "heterogeneity": self.scan.heterogeneity,
                         "seeds": self.scan.seeds, "suggested_k": self.scan.suggested_k}
        return d

    @classmethod
    def from_dict(cls, obj) -> "UserClusters":
        scan = None
        if "scan" in obj:
            s = obj["scan"]
            scan = ElbowScan(s["ks"], s["heterogeneity"], s["seeds"], s["suggested_k"])
        return cls(list(obj["user_ids"]), ClusteringResult.from_dict(obj), obj.get("metric", "euclidean"), scan)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "UserClusters":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def cluster_users(profiles, k_users: int | None, seed_list, metric: str = "euclidean",
                  k_list=None, max_iter: int = 100, tol: float = 1e-4) -> UserClusters:
    """Best-of-seeds K-means over profile vectors.

    With ``k_users`` unset, K comes from the elbow rule over ``k_list``.
    """
    user_ids = [p.user_id for p in profiles]
    points = np.vstack([p.values for p in profiles]) if profiles else np.zeros((0, 0))
    n = len(user_ids)
    if metric == "euclidean":
        def fit_fn(p, k, s):
            return fit_euclidean(p, k, s, max_iter, tol)
    elif metric == "cosine":
        def fit_fn(p, k, s):
            return kmeans.fit(p, k, s, max_iter, tol)
    else:
        raise ValueError(f"unknown metric {metric!r}")
    scan = None
    if k_users is None:
        ks = [k for k in (k_list or range(1, 11)) if k <= n]
        if not ks:
            raise TooFewUsers(f"no candidate K fits {n} users")
        scan = kmeans.scan_k(points, ks, seed_list, fit_fn=fit_fn)
        k_users = scan.suggested_k
        best = scan.results[k_users]
    else:
        if n < k_users:
            raise TooFewUsers(f"{n} profiles for {k_users} clusters")
        best = None
        for s in seed_list:
            r = fit_fn(points, k_users, s)
            if best is None or r.heterogeneity < best.heterogeneity:
                best = r
    return UserClusters(user_ids, best, metric, scan)


@dataclass
class CohortEvaluation:
    cluster_sizes: list[int]
    distribution: list[int]
    majority_cluster: int | None
    precision: float | None
    outliers: list[str] = field(default_factory=list)

    @property
    def cohort_size(self) -> int:
        return sum(self.distribution)

    def to_dict(self) -> dict:
        return asdict(self)


def cohort_purity(clusters: UserClusters, cohort_ids) -> CohortEvaluation:
    """Share of a labeled cohort that lands in its most common cluster."""
    where = clusters.cluster_of()
    k = clusters.result.k
    sizes = np.bincount(clusters.result.assignments, minlength=k).tolist()
    cohort_ids = list(cohort_ids)
    for u in cohort_ids:
        if u not in where:
            raise UnknownUser(u)
    dist = [0] * k
    for u in cohort_ids:
        dist[where[u]] += 1
    if not cohort_ids:
        return CohortEvaluation(sizes, dist, None, None, [])
    major = int(np.argmax(dist))
    outliers = [u for u in cohort_ids if where[u] != major]
    return CohortEvaluation(sizes, dist, major, dist[major] / len(cohort_ids), outliers)


def read_cohort(path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip() and not line.startswith("#")]
