"""End-to-end influence models: feature selection, scaling, RFE and segmentation.

A :class:`ModelConfig` describes one row of the benchmark (for example
"minimal Random Forest, segmented").  ``config.fit(table)`` returns an
:class:`InfluenceModel` that predicts influence for another
:class:`~viewrank.features.FeatureTable`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import DataError
from .features import FEATURE_NAMES, FeatureTable, feature_index, inverse_log_scale, log_scale, scale_columns
from .models import EstimatorSpec, ForestConfig, model_from_dict, rfe
from .segmentation import MultiRegressionModel, fit_multi


@dataclass(frozen=True)
class ModelConfig:
    name: str = "full Ridge Regression"
    estimator: EstimatorSpec = EstimatorSpec()
    features: Optional[tuple] = None  # None -> all eight
    rfe_target: Optional[int] = None
    multi: bool = False
    k_clusters: int = 3
    transform_scales: bool = True
    log_target: bool = False
    seed: int = 42

    def columns(self):
        if self.features is None:
            return list(range(len(FEATURE_NAMES)))
        return [feature_index(f) for f in self.features]

    def design(self, table: FeatureTable):
        return scale_columns(table.X) if self.transform_scales else np.asarray(table.X, dtype=np.float64)

    def target(self, table: FeatureTable):
        y = np.asarray(table.influence, dtype=np.float64)
        if np.any(np.isnan(y)):
            raise DataError("training table has missing influence values")
        return log_scale(y) if self.log_target else y

    def select(self, table: FeatureTable, threads=1):
        """Column indices the model will use (runs RFE when configured)."""
        cols = self.columns()
        if self.rfe_target is None or self.rfe_target >= len(cols):
            return cols
        X = self.design(table)[:, cols]
        keep = rfe(X, self.target(table), self.estimator.with_seed(self.seed), self.rfe_target,
                   threads=threads)
        return [cols[i] for i in keep]

    def fit(self, table: FeatureTable, threads=1, columns=None):
        return fit_pipeline(self, table, threads=threads, columns=columns)

    def to_dict(self):
        return {
            "name": self.name,
            "estimator": self.estimator.to_dict(),
            "features": None if self.features is None else list(self.features),
            "rfe_target": self.rfe_target,
            "multi": self.multi,
            "k_clusters": self.k_clusters,
            "transform_scales": self.transform_scales,
            "log_target": self.log_target,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["estimator"] = EstimatorSpec.from_dict(d["estimator"])
        if d.get("features") is not None:
            d["features"] = tuple(d["features"])
        return cls(**d)


@dataclass
class InfluenceModel:
    config: ModelConfig
    columns: list
    model: object
    extra: dict = field(default_factory=dict)

    def predict(self, table: FeatureTable):
        X = self.config.design(table)[:, self.columns]
        if isinstance(self.model, MultiRegressionModel):
            pred = self.model.predict(X, table.followers)
        else:
            pred = self.model.predict(X)
        if self.config.log_target:
            pred = inverse_log_scale(np.maximum(pred, 0.0))
        return pred

    def to_dict(self):
        return {
            "config": self.config.to_dict(),
            "columns": [int(c) for c in self.columns],
            "feature_names": [FEATURE_NAMES[c] for c in self.columns],
            "model": self.model.to_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        m = d["model"]
        model = MultiRegressionModel.from_dict(m) if m.get("kind") == "multi" else model_from_dict(m)
        return cls(ModelConfig.from_dict(d["config"]), list(d["columns"]), model)


def fit_pipeline(config: ModelConfig, table: FeatureTable, threads=1, columns=None) -> InfluenceModel:
    """Fit ``config`` on ``table``.  Passing ``columns`` skips feature selection."""
    if columns is None:
        columns = config.select(table, threads=threads)
    X = config.design(table)[:, columns]
    y = config.target(table)
    spec = config.estimator
    if config.multi:
        model = fit_multi(X, y, table.followers, k=config.k_clusters, spec=spec, seed=config.seed,
                          active_features=columns, threads=threads)
    else:
        model = spec.with_seed(config.seed).fit(X, y, active_features=columns, threads=threads)
    return InfluenceModel(config, list(columns), model)


def benchmark_configs(alpha=1.0, forest=None, k_clusters=3, seed=42, minimal_count=4):
    """The six model rows of the benchmark table, unsegmented."""
    forest = forest or ForestConfig()
    ridge = EstimatorSpec("ridge", alpha=alpha, forest=forest)
    rf = EstimatorSpec("forest", alpha=alpha, forest=forest)
    ols = EstimatorSpec("ridge", alpha=0.0, forest=forest)
    common = dict(k_clusters=k_clusters, seed=seed)
    return [
        ModelConfig("full Ridge Regression", ridge, **common),
        ModelConfig("full Random Forest", rf, **common),
        ModelConfig("minimal Ridge Regression", ridge, rfe_target=minimal_count, **common),
        ModelConfig("minimal Random Forest", rf, rfe_target=minimal_count, **common),
        ModelConfig("Followers Baseline", ols, features=("followers",), transform_scales=False, **common),
        ModelConfig("Likes Baseline", ols, features=("likes_avg",), transform_scales=False, **common),
    ]


def segmented(config: ModelConfig) -> ModelConfig:
    return replace(config, multi=True)
