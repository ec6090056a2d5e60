"""Network-oblivious influence scoring.

Influence is a user's expected views per post.  The package ingests
per-post engagement counts, derives per-user predictors, fits ridge,
random-forest and follower-segmented regressors, and scores them with
cross-validated R^2 and Spearman rank correlation.
"""

__version__ = "0.1.0"

from .dataset import (  # noqa: E402
    Dataset,
    PostRecord,
    UserAggregate,
    build_dataset,
    compute_influence,
    group_and_filter,
    load_dataset,
    parse_posts,
    remove_outlier_posts,
)
from .features import (  # noqa: E402
    FEATURE_NAMES,
    FeatureTable,
    FeatureVector,
    apply_standardizer,
    extract_features,
    fit_standardizer,
    log_scale,
)
from .models import (  # noqa: E402
    EstimatorSpec,
    ForestConfig,
    ForestModel,
    LinearModel,
    feature_importance,
    fit_forest,
    fit_linear,
    predict_forest,
    predict_linear,
    rfe,
)
from .segmentation import KMeans1D, MultiRegressionModel, assign_cluster, fit_kmeans_1d, fit_multi, predict_multi  # noqa: E402
from .pipeline import InfluenceModel, ModelConfig, benchmark_configs, fit_pipeline  # noqa: E402
from .evaluation import (  # noqa: E402
    EngagementEdge,
    EvalReport,
    evaluate_config,
    kfold_split,
    pagerank,
    pagerank_rank_correlation,
    r_squared,
    run_benchmark,
    spearman,
)
from .synth import SynthConfig, generate  # noqa: E402

__all__ = [
    "__version__",
    "# noqa: E402",
    "Dataset",
    "PostRecord",
    "UserAggregate",
    "build_dataset",
    "compute_influence",
    "group_and_filter",
    "load_dataset",
    "parse_posts",
    "remove_outlier_posts",
    "# noqa: E402",
    "FEATURE_NAMES",
    "FeatureTable",
    "FeatureVector",
    "apply_standardizer",
    "extract_features",
    "fit_standardizer",
    "log_scale",
    "# noqa: E402",
    "EstimatorSpec",
    "ForestConfig",
    "ForestModel",
    "LinearModel",
    "feature_importance",
    "fit_forest",
    "fit_linear",
    "predict_forest",
    "predict_linear",
    "rfe",
    "KMeans1D",
    "MultiRegressionModel",
    "assign_cluster",
    "fit_kmeans_1d",
    "fit_multi",
    "predict_multi",
    "InfluenceModel",
    "ModelConfig",
    "benchmark_configs",
    "fit_pipeline",
    "# noqa: E402",
    "EngagementEdge",
    "EvalReport",
    "evaluate_config",
    "kfold_split",
    "pagerank",
    "pagerank_rank_correlation",
    "r_squared",
    "run_benchmark",
    "spearman",
    "SynthConfig",
    "generate",
]
