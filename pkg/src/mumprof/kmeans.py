"""Spherical K-means under cosine distance, K-means++ seeding and the
heterogeneity elbow scan used to pick the number of topics.

Random streams come from numpy's PCG64 bit generator
(``np.random.default_rng(seed)``), whose output is specified and stable
across platforms.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import TooFewPoints, ZeroVector

log = logging.getLogger(__name__)

DEGENERATE_DISTANCE = 2.0


@dataclass
class ClusteringResult:
    k: int
    centroids: np.ndarray
    assignments: np.ndarray
    distortions: np.ndarray
    heterogeneity: float
    seed: int | None = None
    n_iter: int = 0
    trace: list[float] = field(default_factory=list)
    degenerate: list[int] = field(default_factory=list)

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.k)

    def to_dict(self) -> dict:
        return {
            "K": self.k,
            "seed": self.seed,
            "centroids": self.centroids.tolist(),
            "distortions": self.distortions.tolist(),
            "heterogeneity": float(self.heterogeneity),
            "assignments": self.assignments.tolist(),
            "n_iter": self.n_iter,
            "trace": [float(h) for h in self.trace],
        }

    @classmethod
    def from_dict(cls, obj) -> "ClusteringResult":
        return cls(
            k=int(obj["K"]),
            centroids=np.asarray(obj["centroids"], dtype=np.float64),
            assignments=np.asarray(obj["assignments"], dtype=np.int64),
            distortions=np.asarray(obj["distortions"], dtype=np.float64),
            heterogeneity=float(obj["heterogeneity"]),
            seed=obj.get("seed"),
            n_iter=int(obj.get("n_iter", 0)),
            trace=list(obj.get("trace", [])),
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "ClusteringResult":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def cosine_distance(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ZeroVector("cosine distance is undefined for a zero vector")
    return float(np.clip(1.0 - np.dot(a, b) / (na * nb), 0.0, 2.0))


def unit_rows(points) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64)
    norms = np.linalg.norm(points, axis=1)
    if np.any(norms == 0):
        raise ZeroVector(f"{int(np.sum(norms == 0))} zero vectors among the points")
    return points / norms[:, None]


def _distances(unit_points, unit_centroids) -> np.ndarray:
    return np.clip(1.0 - unit_points @ unit_centroids.T, 0.0, 2.0)


def _pick(rng, weights) -> int:
    cum = np.cumsum(weights)
    i = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
    return min(i, len(weights) - 1)


def _seed_indices(unit_points, k, rng) -> list[int]:
    n = unit_points.shape[0]
    if k < 1 or k > n:
        raise TooFewPoints(f"cannot seed {k} centroids from {n} points")
    chosen = [int(rng.integers(n))]
    nearest = _distances(unit_points, unit_points[chosen])[:, 0] ** 2
    for _ in range(1, k):
        if nearest.sum() <= 0:
            raise TooFewPoints(f"fewer than {k} distinct point directions")
        i = _pick(rng, nearest)
        chosen.append(i)
        nearest = np.minimum(nearest, _distances(unit_points, unit_points[[i]])[:, 0] ** 2)
    return chosen


def seed_plus_plus(points, k: int, rng_seed: int) -> np.ndarray:
    """K-means++ initial centroids (rows of ``points``).

    The first centroid is drawn uniformly; each next one with probability
    proportional to the squared cosine distance to its nearest chosen
    centroid.
    """
    points = np.asarray(points, dtype=np.float64)
    idx = _seed_indices(unit_rows(points), k, np.random.default_rng(rng_seed))
    return points[idx].copy()


def _one_hot(assignments, k) -> sp.csr_matrix:
    n = len(assignments)
    return sp.csr_matrix((np.ones(n), (assignments, np.arange(n))), shape=(k, n))


def _member_distortions(unit_points, centroids, assignments, k):
    d = np.clip(1.0 - np.einsum("ij,ij->i", unit_points, centroids[assignments]), 0.0, 2.0)
    return np.bincount(assignments, weights=d * d, minlength=k)


def fit(points, k: int, rng_seed: int = 0, max_iter: int = 100, tol: float = 1e-4) -> ClusteringResult:
    """Lloyd iterations with cosine distance from K-means++ seeds.

    A cluster's new centroid is the normalized mean of its members; it is
    only accepted when it does not raise that cluster's squared-distance
    sum, which keeps the heterogeneity trace non-increasing. Empty clusters
    are re-seeded at the point farthest from its current centroid.
    """
    points = np.asarray(points, dtype=np.float64)
    if k < 1:
        raise TooFewPoints("K must be at least 1")
    xu = unit_rows(points)
    n = xu.shape[0]
    rng = np.random.default_rng(rng_seed)
    centroids = xu[_seed_indices(xu, k, rng)].copy()

    dist = _distances(xu, centroids)
    assign = np.argmin(dist, axis=1)
    distortions = _member_distortions(xu, centroids, assign, k)
    het = float(distortions.sum())
    trace = [het]
    it = 0
    for it in range(1, max_iter + 1):
        sums = np.asarray(_one_hot(assign, k) @ points)
        counts = np.bincount(assign, minlength=k)
        norms = np.linalg.norm(sums, axis=1)
        cand = centroids.copy()
        ok = norms > 0
        cand[ok] = sums[ok] / norms[ok, None]
        cand_d = _member_distortions(xu, cand, assign, k)
        better = ok & (cand_d <= distortions)
        centroids = np.where(better[:, None], cand, centroids)

        for e in np.flatnonzero(counts == 0):
            d_own = _distances(xu, centroids)[np.arange(n), assign]
            d_own[counts[assign] < 2] = -1.0
            far = int(np.argmax(d_own))
            if d_own[far] <= 0:
                log.warning("cluster %d left empty: no point to re-seed from", e)
                continue
            counts[assign[far]] -= 1
            centroids[e] = xu[far]
            assign[far] = e
            counts[e] = 1

        dist = _distances(xu, centroids)
        new_assign = np.argmin(dist, axis=1)
        # keep the current cluster on exact ties so assignments cannot cycle
        cur = dist[np.arange(n), assign]
        tie = dist[np.arange(n), new_assign] >= cur
        new_assign[tie] = assign[tie]
        changed = int(np.count_nonzero(new_assign != assign))
        assign = new_assign
        distortions = _member_distortions(xu, centroids, assign, k)
        new_het = float(distortions.sum())
        rel = (het - new_het) / het if het > 0 else 0.0
        het = new_het
        trace.append(het)
        if changed == 0 or rel < tol:
            break

    return ClusteringResult(k, centroids, assign, distortions, het, rng_seed, it, trace)


def from_assignments(points, assignments, k: int) -> ClusteringResult:
    """Clustering whose centroids are the mean directions of the given
    assignments. Clusters whose mean is the zero vector get a zero centroid
    and are listed as degenerate."""
    points = np.asarray(points, dtype=np.float64)
    assignments = np.asarray(assignments, dtype=np.int64)
    sums = np.asarray(_one_hot(assignments, k) @ points)
    norms = np.linalg.norm(sums, axis=1)
    centroids = np.zeros_like(sums)
    ok = norms > 0
    centroids[ok] = sums[ok] / norms[ok, None]
    result = ClusteringResult(k, centroids, assignments, np.zeros(k), 0.0)
    result.distortions, result.degenerate = cluster_distortions(points, result)
    result.heterogeneity = float(result.distortions.sum())
    return result


def cluster_distortions(points, result: ClusteringResult):
    """Per-cluster sums of squared cosine distances, and the list of
    nonempty clusters whose centroid is undefined (distance capped at 2)."""
    xu = unit_rows(points)
    k = result.k
    norms = np.linalg.norm(result.centroids, axis=1)
    safe = np.where(norms[:, None] > 0, result.centroids / np.where(norms > 0, norms, 1.0)[:, None], 0.0)
    dist = np.clip(1.0 - np.einsum("ij,ij->i", xu, safe[result.assignments]), 0.0, 2.0)
    bad = norms[result.assignments] == 0
    dist[bad] = DEGENERATE_DISTANCE
    degenerate = sorted(set(result.assignments[bad].tolist()))
    if degenerate:
        log.warning("degenerate clusters with undefined centroid: %s", degenerate)
    return np.bincount(result.assignments, weights=dist * dist, minlength=k), degenerate


def heterogeneity(points, result: ClusteringResult) -> float:
    """Sum over clusters of squared cosine distances to the centroid."""
    return float(cluster_distortions(points, result)[0].sum())


def elbow_point(ks, hets, rel_tie: float = 1e-12) -> int:
    """K with the largest discrete second difference of the curve.

    Near-ties go to the smaller K. With fewer than three values there is no
    interior point and the first K is returned.
    """
    ks = list(ks)
    h = np.asarray(hets, dtype=np.float64)
    if len(ks) < 3:
        return ks[0]
    second = h[:-2] - 2 * h[1:-1] + h[2:]
    scale = max(float(np.max(np.abs(h))), 1e-300)
    best = float(second.max())
    i = int(np.flatnonzero(second >= best - rel_tie * scale)[0])
    return ks[i + 1]


@dataclass
class ElbowScan:
    ks: list[int]
    heterogeneity: list[float]
    seeds: list[int]
    suggested_k: int
    warnings: list[str] = field(default_factory=list)
    results: dict = field(default_factory=dict, repr=False)

    def rows(self):
        return list(zip(self.ks, self.heterogeneity, self.seeds))

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("K,heterogeneity,seed\n")
            for k, h, s in self.rows():
                fh.write(f"{k},{h!r},{s}\n")


def scan_k(points, k_list, seed_list, max_iter: int = 100, tol: float = 1e-4, fit_fn=None) -> ElbowScan:
    """Best-of-seeds heterogeneity for each K, plus the elbow suggestion.

    ``fit_fn(points, k, seed)`` defaults to :func:`fit`; it lets the user
    clustering reuse the scan with a different metric.
    """
    k_list = list(k_list)
    if not k_list or any(b <= a for a, b in zip(k_list, k_list[1:])):
        raise ValueError("k_list must be nonempty and strictly increasing")
    if fit_fn is None:
        def fit_fn(p, k, s):
            return fit(p, k, s, max_iter, tol)
    hets, seeds, results, warnings = [], [], {}, []
    for k in k_list:
        best = None
        for s in seed_list:
            r = fit_fn(points, k, s)
            if best is None or r.heterogeneity < best.heterogeneity:
                best = r
        results[k] = best
        hets.append(best.heterogeneity)
        seeds.append(best.seed)
        log.info("K=%d heterogeneity=%.6g seed=%s", k, best.heterogeneity, best.seed)
    for (k0, h0), (k1, h1) in zip(zip(k_list, hets), zip(k_list[1:], hets[1:])):
        if h1 > h0:
            msg = f"heterogeneity rose from K={k0} ({h0:.6g}) to K={k1} ({h1:.6g}); more seeds may help"
            log.warning(msg)
            warnings.append(msg)
    return ElbowScan(k_list, hets, seeds, elbow_point(k_list, hets), warnings, results)
