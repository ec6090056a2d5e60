"""One-dimensional k-means and the cluster-segmented regression meta-model."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ClusterTooSmall, DimensionMismatch, InvalidConfig, TooFewDistinctValues
from .features import log_scale
from .models import EstimatorSpec, model_from_dict

MAX_ITER = 300


@dataclass
class KMeans1D:
    centroids: np.ndarray
    inertia: float
    k: int
    restarts: int
    seed: int
    n_iter: int = 0
    # per-iteration inertia of the winning restart; not persisted
    trace: list = field(default_factory=list, repr=False, compare=False)

    def predict(self, values):
        return assign_clusters(values, self.centroids)

    def to_dict(self):
        return {
            "centroids": [float(c) for c in self.centroids],
            "inertia": float(self.inertia),
            "k": int(self.k),
            "restarts": int(self.restarts),
            "seed": int(self.seed),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["centroids"], dtype=np.float64), float(d["inertia"]), int(d["k"]),
                   int(d["restarts"]), int(d["seed"]))


def assign_clusters(values, centroids):
    """Nearest-centroid index for each value; ties go to the lower index."""
    values = np.asarray(values, dtype=np.float64)
    centroids = np.asarray(centroids, dtype=np.float64)
    dist = np.abs(values[..., None] - centroids)
    return np.argmin(dist, axis=-1).astype(np.int64)


def assign_cluster(value, centroids):
    return int(assign_clusters(np.array([value]), centroids)[0])


def _inertia(values, centroids, labels):
    return float(np.sum((values - centroids[labels]) ** 2))


def _kmeans_pp(values, k, rng):
    n = values.size
    centers = [values[rng.integers(n)]]
    d2 = (values - centers[0]) ** 2
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            break
        c = values[rng.choice(n, p=d2 / total)]
        centers.append(c)
        d2 = np.minimum(d2, (values - c) ** 2)
    return np.sort(np.array(centers))


def _lloyd(values, centroids):
    labels = assign_clusters(values, centroids)
    trace = [_inertia(values, centroids, labels)]
    n_iter = 0
    while n_iter < MAX_ITER:
        n_iter += 1
        new = centroids.copy()
        for j in range(new.size):
            members = values[labels == j]
            if members.size:
                new[j] = members.mean()
        for j in range(new.size):
            if not np.any(labels == j):
                # reseed an empty cluster at the worst-served point
                far = int(np.argmax(np.abs(values - new[labels])))
                new[j] = values[far]
                labels[far] = j
        order = np.argsort(new, kind="stable")
        centroids = new[order]
        labels = np.argsort(order)[labels]
        new_labels = assign_clusters(values, centroids)
        trace.append(_inertia(values, centroids, new_labels))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return centroids, labels, n_iter, trace


def fit_kmeans_1d(values, k, restarts=10, seed=0):
    """Lloyd's algorithm with k-means++ seeding, best of ``restarts`` runs.

    Each restart draws from its own generator seeded with ``(seed, r)``,
    so the result does not depend on execution order.
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    if k < 1 or restarts < 1:
        raise InvalidConfig("k and restarts must be >= 1")
    distinct = np.unique(values).size
    if distinct < k:
        raise TooFewDistinctValues(f"{distinct} distinct values for k={k}")
    best = None
    for r in range(restarts):
        rng = np.random.default_rng([int(seed), r])
        init = _kmeans_pp(values, k, rng)
        centroids, labels, n_iter, trace = _lloyd(values, init)
        inertia = _inertia(values, centroids, labels)
        if best is None or inertia < best.inertia:
            best = KMeans1D(centroids, inertia, k, restarts, int(seed), n_iter, trace)
    if np.any(np.diff(best.centroids) <= 0):
        raise TooFewDistinctValues(f"centroids collapsed: {best.centroids}")
    return best


@dataclass
class MultiRegressionModel:
    kmeans: KMeans1D
    cluster_models: list
    followers_feature_index: int = 2
    kind: str = field(default="multi", init=False)

    def route(self, followers_raw):
        return self.kmeans.predict(log_scale(np.asarray(followers_raw, dtype=np.float64)))

    def predict(self, X, followers_raw):
        return predict_multi(self, X, followers_raw)

    def to_dict(self):
        return {
            "kind": "multi",
            "kmeans": self.kmeans.to_dict(),
            "followers_feature_index": int(self.followers_feature_index),
            "cluster_models": [m.to_dict() for m in self.cluster_models],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(KMeans1D.from_dict(d["kmeans"]), [model_from_dict(m) for m in d["cluster_models"]],
                   int(d["followers_feature_index"]))


def _min_rows(spec, d):
    if spec.kind == "forest":
        return max(d + 2, 2 * spec.forest.min_samples_leaf)
    return d + 2


def fit_multi(X, y, followers_raw, k=3, spec=EstimatorSpec(), seed=0, restarts=10,
              active_features=None, threads=1, followers_feature_index=2):
    """Segment users by k-means on log-scaled followers and fit one model per segment.

    Cluster ``c`` fits with seed ``seed + c`` so that ``k=1`` reproduces the
    unsegmented model fitted with ``seed``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    followers_raw = np.asarray(followers_raw, dtype=np.float64)
    if not (X.shape[0] == y.shape[0] == followers_raw.shape[0]):
        raise DimensionMismatch("X, y and followers_raw must have the same number of rows")
    km = fit_kmeans_1d(log_scale(followers_raw), k, restarts=restarts, seed=seed)
    labels = km.predict(log_scale(followers_raw))
    need = _min_rows(spec, X.shape[1])
    for c in range(k):
        size = int(np.sum(labels == c))
        if size < need:
            raise ClusterTooSmall(c, size, need)
    models = []
    for c in range(k):
        rows = labels == c
        models.append(spec.with_seed(seed + c).fit(X[rows], y[rows], active_features=active_features,
                                                   threads=threads))
    return MultiRegressionModel(km, models, followers_feature_index)


def predict_multi(model: MultiRegressionModel, X, followers_raw):
    X = np.asarray(X, dtype=np.float64)
    followers_raw = np.asarray(followers_raw, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != followers_raw.shape[0]:
        raise DimensionMismatch("X and followers_raw must have the same number of rows")
    labels = model.route(followers_raw)
    out = np.empty(X.shape[0])
    for c, m in enumerate(model.cluster_models):
        rows = labels == c
        if np.any(rows):
            out[rows] = m.predict(X[rows])
    return out
