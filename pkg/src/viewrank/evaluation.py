"""Scoring, cross-validation, the benchmark report and a PageRank comparator."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from typing import IO, Optional

import numpy as np

from . import __version__
from .dataset import Dataset
from .errors import (
    ConstantTarget,
    DataError,
    DegenerateRanking,
    InvalidFold,
    LengthMismatch,
    MalformedLine,
    NoEdges,
    TooFewUsers,
)
from .features import FeatureTable
from .pipeline import benchmark_configs, segmented

TABLE_ROWS = (
    "full Ridge Regression",
    "full Random Forest",
    "minimal Ridge Regression",
    "minimal Random Forest",
    "Followers Baseline",
    "Likes Baseline",
)


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


def _pair(a, b):
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise LengthMismatch(f"lengths differ: {a.size} vs {b.size}")
    if a.size < 2:
        raise LengthMismatch("need at least two observations")
    return a, b


def r_squared(y_true, y_pred):
    """Coefficient of determination ``1 - SS_res / SS_tot``."""
    y_true, y_pred = _pair(y_true, y_pred)
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    if ss_tot == 0.0:
        raise ConstantTarget("R^2 is undefined for a constant target")
    ss_res = float(np.sum((y_true - y_pred) ** 2))
    return 1.0 - ss_res / ss_tot


def average_ranks(x):
    """1-based ranks; tied values share the mean of the positions they span."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    ranks = np.empty(x.size)
    # boundaries of runs of equal values in sorted order
    starts = np.flatnonzero(np.r_[True, xs[1:] != xs[:-1]])
    ends = np.r_[starts[1:], x.size]
    for s, e in zip(starts, ends):
        ranks[order[s:e]] = 0.5 * (s + e - 1) + 1.0
    return ranks


def spearman(a, b):
    """Spearman's rank correlation (Pearson correlation of average ranks)."""
    a, b = _pair(a, b)
    if np.unique(a).size < 2 or np.unique(b).size < 2:
        raise DegenerateRanking("both inputs need at least two distinct values")
    ra = average_ranks(a) - (a.size + 1) / 2.0
    rb = average_ranks(b) - (b.size + 1) / 2.0
    r = float(ra @ rb / math.sqrt(float(ra @ ra) * float(rb @ rb)))
    return max(-1.0, min(1.0, r))


# ---------------------------------------------------------------------------
# cross-validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FoldSplit:
    fold_assignments: np.ndarray
    k: int
    seed: int

    def test_indices(self, f):
        return np.flatnonzero(self.fold_assignments == f)

    def train_indices(self, f):
        return np.flatnonzero(self.fold_assignments != f)


def kfold_split(n, k=5, seed=42) -> FoldSplit:
    """Shuffle ``0..n-1`` with ``seed`` and deal the result round-robin into ``k`` folds."""
    if k < 2 or n < k:
        raise TooFewUsers(f"cannot split {n} users into {k} folds")
    perm = np.random.default_rng(seed).permutation(n)
    folds = np.empty(n, dtype=np.int64)
    folds[perm] = np.arange(n) % k
    return FoldSplit(folds, k, int(seed))


@dataclass
class EvalResult:
    r2: float
    rs: float
    fold_r2: list
    fold_rs: list
    models: Optional[list] = None


def _as_table(data):
    if isinstance(data, FeatureTable):
        return data
    if isinstance(data, Dataset):
        return FeatureTable.from_dataset(data)
    raise DataError(f"expected a Dataset or FeatureTable, got {type(data).__name__}")


def evaluate_config(data, config, folds: FoldSplit, threads=1, return_models=False, column_cache=None):
    """Cross-validated R^2 and Spearman for one model configuration.

    ``config`` is anything with ``fit(train_table, threads=..., columns=...)``
    returning an object with ``predict(test_table)``.  The fit only ever
    receives the training slice; metrics are averaged over folds.

    ``column_cache`` (a dict) lets several configs that share feature
    selection reuse the per-fold RFE result.
    """
    table = _as_table(data)
    if folds.fold_assignments.size != len(table):
        raise InvalidFold(f"fold split covers {folds.fold_assignments.size} rows, table has {len(table)}")
    fold_r2, fold_rs, models = [], [], []
    for f in range(folds.k):
        test_idx = folds.test_indices(f)
        if test_idx.size < 3:
            raise InvalidFold(f"fold {f} has {test_idx.size} test users")
        train = table.subset(folds.train_indices(f))
        test = table.subset(test_idx)
        if hasattr(config, "select"):
            columns = None
            if column_cache is not None:
                key = (f, _selection_key(config))
                if key not in column_cache:
                    column_cache[key] = config.select(train, threads=threads)
                columns = column_cache[key]
            model = config.fit(train, threads=threads, columns=columns)
        else:
            model = config.fit(train)
        pred = model.predict(test)
        fold_r2.append(r_squared(test.influence, pred))
        # a constant prediction carries no ranking; score it as no association
        fold_rs.append(spearman(test.influence, pred) if np.ptp(pred) > 0 else 0.0)
        if return_models:
            models.append(model)
    return EvalResult(
        float(np.mean(fold_r2)), float(np.mean(fold_rs)), fold_r2, fold_rs,
        models if return_models else None,
    )


def _selection_key(config):
    return (config.estimator, config.features, config.rfe_target, config.transform_scales,
            config.log_target, config.seed)


# ---------------------------------------------------------------------------
# benchmark report
# ---------------------------------------------------------------------------


@dataclass
class EvalReport:
    rows: list
    metadata: dict
    comparators: list = field(default_factory=list)

    def row(self, name):
        for r in self.rows:
            if r["model_name"] == name:
                return r
        raise KeyError(name)

    def to_dict(self):
        return {"metadata": self.metadata, "rows": self.rows, "comparators": self.comparators}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d):
        return cls(d["rows"], d["metadata"], d.get("comparators", []))

    def to_text(self):
        width = max(len(r["model_name"]) for r in self.rows)
        lines = [
            f"{'':{width}} | {'Regression':^17} | {'Multi-Regression':^17}",
            f"{'':{width}} | {'R^2':>7} {'r_s':>9} | {'R^2':>7} {'r_s':>9}",
            "-" * (width + 42),
        ]
        for r in self.rows:
            lines.append(
                f"{r['model_name']:{width}} | {r['r2_regression']:7.3f} {r['rs_regression']:9.3f}"
                f" | {r['r2_multi']:7.3f} {r['rs_multi']:9.3f}"
            )
        for c in self.comparators:
            lines.append(f"{c['name']}: r_s = {c['rs']:.3f} ({c['note']})")
        meta = self.metadata
        lines.append(
            f"# seed={meta['seed']} n_users={meta['n_users']} k_folds={meta['k_folds']}"
            f" k_clusters={meta['k_clusters']} version={meta['version']}"
        )
        return "\n".join(lines) + "\n"


def run_benchmark(data, seed=42, k_folds=5, k_clusters=3, alpha=1.0, forest=None, threads=1,
                  timestamp=None, log=None):
    """Evaluate the six model rows, each unsegmented and segmented.

    Returns an :class:`EvalReport` whose rows follow the fixed table order.
    The metadata timestamp defaults to ``SOURCE_DATE_EPOCH`` when set and is
    otherwise left empty, keeping reports reproducible byte for byte.
    """
    table = _as_table(data)
    if len(table) < 100:
        raise TooFewUsers(f"benchmark needs at least 100 users, got {len(table)}")
    folds = kfold_split(len(table), k_folds, seed)
    cache = {}
    rows = []
    for config in benchmark_configs(alpha=alpha, forest=forest, k_clusters=k_clusters, seed=seed):
        plain = evaluate_config(table, config, folds, threads=threads, column_cache=cache)
        multi = evaluate_config(table, segmented(config), folds, threads=threads, column_cache=cache)
        rows.append({
            "model_name": config.name,
            "r2_regression": plain.r2,
            "rs_regression": plain.rs,
            "r2_multi": multi.r2,
            "rs_multi": multi.rs,
        })
        if log is not None:
            log(f"{config.name}: R2={plain.r2:.3f}/{multi.r2:.3f} rs={plain.rs:.3f}/{multi.rs:.3f}")
    if timestamp is None:
        epoch = os.environ.get("SOURCE_DATE_EPOCH")
        timestamp = int(epoch) if epoch else None
    metadata = {
        "seed": int(seed),
        "n_users": len(table),
        "k_folds": k_folds,
        "k_clusters": k_clusters,
        "timestamp": timestamp,
        "version": __version__,
    }
    return EvalReport(rows, metadata)


# ---------------------------------------------------------------------------
# PageRank comparator
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EngagementEdge:
    source: str
    target: str
    weight: int

    def __post_init__(self):
        if self.weight < 1:
            raise DataError(f"edge weight must be >= 1, got {self.weight}")


def pagerank(edges, damping=0.85, tol=1e-10, max_iter=200):
    """Weighted PageRank by power iteration.

    Edges point from commenter to author with weight equal to the comment
    count.  Self-loops are dropped, parallel edges are merged, dangling
    nodes spread their mass uniformly and teleportation is uniform.  This
    is plain PageRank on the commenter graph, not any platform-specific
    variant.
    """
    merged = {}
    for e in edges:
        if e.source == e.target:
            continue
        merged[(e.source, e.target)] = merged.get((e.source, e.target), 0) + e.weight
    if not merged:
        raise NoEdges("no edges left after removing self-loops")
    nodes = sorted({u for pair in merged for u in pair})
    index = {u: i for i, u in enumerate(nodes)}
    n = len(nodes)
    src = np.array([index[s] for s, _ in merged], dtype=np.int64)
    dst = np.array([index[t] for _, t in merged], dtype=np.int64)
    w = np.array(list(merged.values()), dtype=np.float64)
    out_w = np.bincount(src, weights=w, minlength=n)
    share = w / out_w[src]
    dangling = out_w == 0

    x = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        flow = np.bincount(dst, weights=x[src] * share, minlength=n)
        new = (1.0 - damping) / n + damping * (flow + x[dangling].sum() / n)
        new /= new.sum()
        delta = float(np.abs(new - x).sum())
        x = new
        if delta < tol:
            break
    return {u: float(x[i]) for i, u in enumerate(nodes)}


def pagerank_rank_correlation(scores, influences):
    """Spearman correlation between scores and influence over shared users."""
    common = sorted(set(scores) & set(influences))
    if len(common) < 2:
        raise DegenerateRanking(f"only {len(common)} users in common")
    return spearman([scores[u] for u in common], [influences[u] for u in common])


def read_edges_csv(stream: IO[str]):
    reader = csv.DictReader(stream)
    if reader.fieldnames is None or not {"source", "target", "weight"} <= set(reader.fieldnames):
        raise MalformedLine(1, "header must contain source,target,weight")
    edges = []
    for row in reader:
        try:
            weight = int(row["weight"])
        except (TypeError, ValueError):
            raise MalformedLine(reader.line_num, f"weight must be an integer, got {row['weight']!r}") from None
        if not row["source"] or not row["target"]:
            raise MalformedLine(reader.line_num, "missing source or target")
        if weight < 1:
            raise MalformedLine(reader.line_num, f"weight must be >= 1, got {weight}")
        edges.append(EngagementEdge(row["source"], row["target"], weight))
    return edges


def write_edges_csv(edges, stream: IO[str]):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["source", "target", "weight"])
    for e in edges:
        writer.writerow([e.source, e.target, e.weight])
