"""Regression models: closed-form ridge, random forest, recursive feature elimination.

Both model types are plain dataclasses with ``predict``, ``to_dict`` and
``from_dict`` so that fitted models can be persisted as JSON and reloaded
with bit-identical predictions.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from . import _tree
from .errors import (
    DataError,
    DimensionMismatch,
    InvalidConfig,
    SingularSystem,
    TooFewSamples,
    UnfittedModel,
)
from .features import StandardizationParams, apply_standardizer, fit_standardizer

PIVOT_TOL = 1e-12


# ---------------------------------------------------------------------------
# linear / ridge
# ---------------------------------------------------------------------------


@dataclass
class LinearModel:
    weights: np.ndarray
    intercept: float
    alpha: float
    active_features: list
    standardizer: Optional[StandardizationParams] = None
    kind: str = field(default="linear", init=False)

    def predict(self, X):
        return predict_linear(self, X)

    def to_dict(self):
        return {
            "kind": "linear",
            "alpha": float(self.alpha),
            "weights": [float(w) for w in self.weights],
            "intercept": float(self.intercept),
            "active_features": [int(i) for i in self.active_features],
            "standardizer": None if self.standardizer is None else self.standardizer.to_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        std = d.get("standardizer")
        return cls(
            weights=np.array(d["weights"], dtype=np.float64),
            intercept=float(d["intercept"]),
            alpha=float(d["alpha"]),
            active_features=list(d["active_features"]),
            standardizer=None if std is None else StandardizationParams.from_dict(std),
        )


def _solve_symmetric(A, b, check_singular):
    """Gaussian elimination with partial pivoting.

    Pivots are compared against ``PIVOT_TOL`` relative to the largest
    diagonal entry of ``A``.
    """
    A = np.array(A, dtype=np.float64, copy=True)
    b = np.array(b, dtype=np.float64, copy=True)
    d = A.shape[0]
    scale = max(float(np.max(np.abs(np.diag(A)))) if d else 0.0, np.finfo(float).tiny)
    for col in range(d):
        p = col + int(np.argmax(np.abs(A[col:, col])))
        if abs(A[p, col]) < PIVOT_TOL * scale:
            if check_singular:
                raise SingularSystem(f"normal equations are singular (pivot {A[p, col]:.3g} at column {col})")
        if p != col:
            A[[col, p]] = A[[p, col]]
            b[[col, p]] = b[[p, col]]
        piv = A[col, col]
        if piv == 0.0:
            raise SingularSystem(f"zero pivot at column {col}")
        factors = A[col + 1 :, col] / piv
        A[col + 1 :, col:] -= np.outer(factors, A[col, col:])
        b[col + 1 :] -= factors * b[col]
    x = np.zeros(d)
    for row in range(d - 1, -1, -1):
        x[row] = (b[row] - A[row, row + 1 :] @ x[row + 1 :]) / A[row, row]
    return x


def fit_linear(X, y, alpha=1.0, fit_intercept=True, standardize=False, active_features=None):
    """Least squares with an l2 penalty on the weights.

    Minimizes ``||y - Xw - b||^2 + alpha * ||w||^2``; the intercept is never
    penalized (it is recovered from the column means after centering).
    ``standardize=True`` z-scores the columns first and stores the
    parameters in the returned model.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"X {X.shape} and y {y.shape} do not align")
    if alpha < 0:
        raise InvalidConfig("alpha must be non-negative")
    n, d = X.shape
    if n == 0:
        raise TooFewSamples("no training rows")
    std = fit_standardizer(X) if standardize else None
    Xs = apply_standardizer(std, X) if std is not None else X
    if fit_intercept:
        x_mean = Xs.mean(axis=0)
        y_mean = y.mean()
        Xc = Xs - x_mean
        yc = y - y_mean
    else:
        Xc, yc = Xs, y
    A = Xc.T @ Xc + alpha * np.eye(d)
    w = _solve_symmetric(A, Xc.T @ yc, check_singular=(alpha == 0))
    b = float(y_mean - x_mean @ w) if fit_intercept else 0.0
    if active_features is None:
        active_features = list(range(d))
    return LinearModel(w, b, float(alpha), list(active_features), std)


def predict_linear(model: LinearModel, X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.shape[1] != model.weights.shape[0]:
        raise DimensionMismatch(f"expected {model.weights.shape[0]} columns, got {X.shape[1]}")
    if model.standardizer is not None:
        X = apply_standardizer(model.standardizer, X)
    return X @ model.weights + model.intercept


# ---------------------------------------------------------------------------
# random forest
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    min_samples_leaf: int = 5
    max_features_per_split: Optional[int] = None  # None -> ceil(d / 3)
    bootstrap: bool = True
    seed: int = 0

    def resolve_max_features(self, d):
        m = self.max_features_per_split
        if m is None:
            m = max(1, math.ceil(d / 3))
        if not 1 <= m <= d:
            raise InvalidConfig(f"max_features_per_split={m} outside [1, {d}]")
        return m

    def validate(self):
        if self.n_trees < 1:
            raise InvalidConfig("n_trees must be >= 1")
        if self.min_samples_leaf < 1:
            raise InvalidConfig("min_samples_leaf must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidConfig("seed must fit in an unsigned 64-bit integer")


@dataclass
class RegressionTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    gain: np.ndarray

    @property
    def n_nodes(self):
        return self.feature.shape[0]

    def predict(self, X):
        return _tree.predict_tree(
            self.feature, self.threshold, self.left, self.right, self.value,
            np.ascontiguousarray(X, dtype=np.float64),
        )

    def to_dict(self):
        def node(i):
            if self.feature[i] < 0:
                return {"value": float(self.value[i])}
            return {
                "feature": int(self.feature[i]),
                "threshold": float(self.threshold[i]),
                "gain": float(self.gain[i]),
                "left": node(self.left[i]),
                "right": node(self.right[i]),
            }

        return node(0)

    @classmethod
    def from_dict(cls, d):
        feature, threshold, left, right, value, gain = [], [], [], [], [], []

        def add(nd):
            i = len(feature)
            for arr in (feature, left, right):
                arr.append(-1)
            threshold.append(0.0)
            value.append(0.0)
            gain.append(0.0)
            if "value" in nd:
                value[i] = float(nd["value"])
                return i
            feature[i] = int(nd["feature"])
            threshold[i] = float(nd["threshold"])
            gain[i] = float(nd.get("gain", 0.0))
            left[i] = add(nd["left"])
            right[i] = add(nd["right"])
            return i

        add(d)
        return cls(
            np.array(feature, np.int64), np.array(threshold, np.float64),
            np.array(left, np.int64), np.array(right, np.int64),
            np.array(value, np.float64), np.array(gain, np.float64),
        )


@dataclass
class ForestModel:
    trees: list
    config: ForestConfig
    active_features: list
    y_range: tuple
    n_features: int
    kind: str = field(default="forest", init=False)

    def predict(self, X):
        return predict_forest(self, X)

    def to_dict(self):
        return {
            "kind": "forest",
            "config": asdict(self.config),
            "active_features": [int(i) for i in self.active_features],
            "n_features": int(self.n_features),
            "y_range": [float(self.y_range[0]), float(self.y_range[1])],
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            trees=[RegressionTree.from_dict(t) for t in d["trees"]],
            config=ForestConfig(**d["config"]),
            active_features=list(d["active_features"]),
            y_range=(float(d["y_range"][0]), float(d["y_range"][1])),
            n_features=int(d["n_features"]),
        )


def _grow(X, y, config, max_features, t):
    n = X.shape[0]
    tree_seed = np.uint64(_tree.derive_seed(np.uint64(config.seed), np.uint64(t)))
    if config.bootstrap:
        rng = np.random.Generator(np.random.PCG64(int(tree_seed)))
        sample = rng.integers(0, n, size=n, dtype=np.int64)
    else:
        sample = np.arange(n, dtype=np.int64)
    arrays = _tree.build_tree(X, y, sample, config.min_samples_leaf, max_features, tree_seed)
    return RegressionTree(*arrays)


def fit_forest(X, y, config: ForestConfig = ForestConfig(), active_features=None, threads=1):
    """Fit a bagged ensemble of CART regression trees.

    Each tree sees a bootstrap resample (when enabled) and, at every node,
    only ``max_features_per_split`` candidate features drawn from a seeded
    shuffle; features without a usable split are skipped and do not count
    toward that budget.  Splits minimize the children's summed squared
    deviations at midpoints between distinct sorted values.  Results depend
    only on ``(X, y, config)``; ``threads`` changes wall time, not output.
    """
    config.validate()
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"X {X.shape} and y {y.shape} do not align")
    n, d = X.shape
    if n < 2 * config.min_samples_leaf:
        raise TooFewSamples(f"{n} rows < 2 * min_samples_leaf ({config.min_samples_leaf})")
    max_features = config.resolve_max_features(d)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            trees = list(pool.map(lambda t: _grow(X, y, config, max_features, t), range(config.n_trees)))
    else:
        trees = [_grow(X, y, config, max_features, t) for t in range(config.n_trees)]
    if active_features is None:
        active_features = list(range(d))
    return ForestModel(trees, config, list(active_features), (float(y.min()), float(y.max())), d)


def predict_forest(model: ForestModel, X):
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.shape[1] != model.n_features:
        raise DimensionMismatch(f"expected {model.n_features} columns, got {X.shape[1]}")
    total = np.zeros(X.shape[0])
    for tree in model.trees:
        total += tree.predict(X)
    # averaging can drift an ulp past the leaf range
    return np.clip(total / len(model.trees), model.y_range[0], model.y_range[1])


# ---------------------------------------------------------------------------
# importance and RFE
# ---------------------------------------------------------------------------


def feature_importance(model):
    """|w| for linear models, normalized split gain for forests."""
    if isinstance(model, LinearModel):
        return np.abs(model.weights)
    if isinstance(model, ForestModel):
        imp = np.zeros(model.n_features)
        for tree in model.trees:
            split = tree.feature >= 0
            np.add.at(imp, tree.feature[split], tree.gain[split])
        total = imp.sum()
        return imp / total if total > 0 else imp
    raise UnfittedModel(f"no importance defined for {type(model).__name__}")


@dataclass(frozen=True)
class EstimatorSpec:
    """Which base learner to fit and with what hyperparameters.

    ``kind="ridge"`` with ``alpha=0`` is ordinary least squares.
    """

    kind: str = "ridge"
    alpha: float = 1.0
    forest: ForestConfig = ForestConfig()
    standardize: bool = True

    def __post_init__(self):
        if self.kind not in ("ridge", "forest"):
            raise InvalidConfig(f"unknown model kind {self.kind!r}")

    def with_seed(self, seed):
        return replace(self, forest=replace(self.forest, seed=int(seed) % 2**64))

    def fit(self, X, y, active_features=None, threads=1):
        if self.kind == "ridge":
            return fit_linear(X, y, alpha=self.alpha, fit_intercept=True,
                              standardize=self.standardize, active_features=active_features)
        return fit_forest(X, y, self.forest, active_features=active_features, threads=threads)

    def to_dict(self):
        return {"kind": self.kind, "alpha": float(self.alpha), "forest": asdict(self.forest),
                "standardize": self.standardize}

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], float(d["alpha"]), ForestConfig(**d["forest"]), bool(d["standardize"]))


def rfe(X, y, spec: EstimatorSpec, target_count: int, threads=1, trace=None):
    """Recursive feature elimination.

    Refits ``spec`` on the active columns and drops the least important
    one (lowest index on ties) until ``target_count`` remain.  Returns the
    retained column indices in ascending order.  If ``trace`` is a list,
    each iteration's active set is appended to it.
    """
    X = np.asarray(X, dtype=np.float64)
    d = X.shape[1]
    if not 1 <= target_count <= d:
        raise InvalidConfig(f"target_count={target_count} outside [1, {d}]")
    active = list(range(d))
    while len(active) > target_count:
        if trace is not None:
            trace.append(list(active))
        model = spec.fit(X[:, active], y, active_features=active, threads=threads)
        imp = feature_importance(model)
        drop = int(np.argmin(imp))  # argmin returns the first minimum
        del active[drop]
    if trace is not None:
        trace.append(list(active))
    return active


def model_from_dict(d):
    kind = d.get("kind")
    if kind == "linear":
        return LinearModel.from_dict(d)
    if kind == "forest":
        return ForestModel.from_dict(d)
    raise DataError(f"unknown model kind {kind!r}")
